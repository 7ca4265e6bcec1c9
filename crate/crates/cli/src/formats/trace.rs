//! Fixation trace CSV: `t,x_px,y_px,x_mm,y_mm,truth_action` with -1 in
//! the truth column for transition samples.

use std::path::Path;

use anyhow::Context;
use symground_core::scene::{Assignment, FixationSample, FixationTrace, SegmentTruth};

pub fn write_file(trace: &FixationTrace, path: &Path) -> anyhow::Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    writer.write_record(["t", "x_px", "y_px", "x_mm", "y_mm", "truth_action"])?;
    let truth = trace.truth.as_ref();
    for (i, sample) in trace.samples.iter().enumerate() {
        let (x_mm, y_mm) = match sample.gaze_mm {
            Some(mm) => (mm[0], mm[1]),
            None => (f64::NAN, f64::NAN),
        };
        let action = match truth.map(|t| t.assignment[i]) {
            Some(Assignment::Action(step)) => step as i64,
            Some(Assignment::Transition) => -1,
            None => -1,
        };
        writer.write_record([
            sample.t.to_string(),
            sample.gaze_px.0.to_string(),
            sample.gaze_px.1.to_string(),
            x_mm.to_string(),
            y_mm.to_string(),
            action.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_file(path: &Path) -> anyhow::Result<FixationTrace> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut samples = Vec::new();
    let mut assignment = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("trace row {line}"))?;
        let field = |i: usize| -> anyhow::Result<&str> {
            record.get(i).ok_or_else(|| anyhow::anyhow!("trace row {line}: missing column {i}"))
        };
        let t: usize = field(0)?.parse().with_context(|| format!("trace row {line}: t"))?;
        let x_px: f64 = field(1)?.parse().with_context(|| format!("trace row {line}: x_px"))?;
        let y_px: f64 = field(2)?.parse().with_context(|| format!("trace row {line}: y_px"))?;
        let x_mm: f64 = field(3)?.parse().with_context(|| format!("trace row {line}: x_mm"))?;
        let y_mm: f64 = field(4)?.parse().with_context(|| format!("trace row {line}: y_mm"))?;
        let action: i64 =
            field(5)?.parse().with_context(|| format!("trace row {line}: truth_action"))?;
        let gaze_mm =
            if x_mm.is_nan() || y_mm.is_nan() { None } else { Some([x_mm, y_mm, 0.0]) };
        samples.push(FixationSample { t, gaze_px: (x_px, y_px), gaze_mm });
        assignment.push(if action < 0 {
            Assignment::Transition
        } else {
            Assignment::Action(action as usize)
        });
    }
    // Rebuild changepoints from the assignment column.
    let mut changepoints = Vec::new();
    for i in 1..assignment.len() {
        if assignment[i] != assignment[i - 1] {
            changepoints.push(i);
        }
    }
    let truth = if samples.is_empty() {
        None
    } else {
        Some(SegmentTruth { changepoints, assignment })
    };
    Ok(FixationTrace { samples, truth })
}
