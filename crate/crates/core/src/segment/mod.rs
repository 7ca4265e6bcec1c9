//! Fixation segmentation: MAP assignment of gaze samples to plan actions.
//!
//! A trace of an L-step plan decomposes into L action segments separated
//! by L-1 transition segments. Action samples are scored under an
//! isotropic Normal around the segment's own sample mean, transition
//! samples under a Uniform over the table, and segment-length
//! proportions under a symmetric Dirichlet prior. Since every term is
//! additive over segments, the exact MAP partition comes from dynamic
//! programming over changepoints.

mod patches;

pub use patches::{
    extract_labeled_patches, inject_label_noise, LabeledPatch, PatchExtraction, PatchSource,
};

pub use crate::scene::MIN_SEGMENT_LEN;

use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use crate::scene::{Assignment, FixationTrace};
use crate::stats;

/// Scoring parameters: fixation spread, Dirichlet concentration, and the
/// table extent (in pixels) for the transition term.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SegmentParams {
    pub sigma_fix: f64,
    pub alpha: f64,
    pub image_width: usize,
    pub image_height: usize,
}

impl SegmentParams {
    pub fn new(sigma_fix: f64, alpha: f64, image_width: usize, image_height: usize) -> Self {
        Self { sigma_fix, alpha, image_width, image_height }
    }
}

/// Alternating action/transition segmentation of a trace: L action
/// segments, L-1 interior transitions.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Partition {
    num_actions: usize,
    len: usize,
    /// Start index of every segment after the first; strictly
    /// increasing, length `2L - 2`.
    changepoints: Vec<usize>,
}

impl Partition {
    /// Validates and builds a partition of `len` samples for
    /// `num_actions` plan steps.
    pub fn new(num_actions: usize, len: usize, changepoints: Vec<usize>) -> Result<Self, SegmentError> {
        if num_actions == 0 {
            return Err(SegmentError::InvalidPartition("a partition needs at least one action"));
        }
        if len == 0 {
            return Err(SegmentError::InvalidPartition("empty trace"));
        }
        if changepoints.len() != 2 * num_actions - 2 {
            return Err(SegmentError::InvalidPartition("changepoint count must be 2L - 2"));
        }
        let mut previous = 0usize;
        for &c in &changepoints {
            if c <= previous {
                return Err(SegmentError::InvalidPartition("empty or out-of-order segment"));
            }
            if c >= len {
                return Err(SegmentError::InvalidPartition("changepoint beyond the trace"));
            }
            previous = c;
        }
        Ok(Self { num_actions, len, changepoints })
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_segments(&self) -> usize {
        2 * self.num_actions - 1
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn changepoints(&self) -> &[usize] {
        &self.changepoints
    }

    /// Segment ranges with their kinds, in order. Even segments are
    /// actions, odd ones transitions.
    pub fn segments(&self) -> Vec<(Range<usize>, Assignment)> {
        let mut out = Vec::with_capacity(self.num_segments());
        let mut start = 0usize;
        for seg in 0..self.num_segments() {
            let end = self.changepoints.get(seg).copied().unwrap_or(self.len);
            let kind =
                if seg % 2 == 0 { Assignment::Action(seg / 2) } else { Assignment::Transition };
            out.push((start..end, kind));
            start = end;
        }
        out
    }

    /// Per-sample assignment.
    pub fn assignment(&self) -> Vec<Assignment> {
        let mut out = Vec::with_capacity(self.len);
        for (range, kind) in self.segments() {
            for _ in range {
                out.push(kind);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SegmentError {
    InvalidPartition(&'static str),
    /// The trace cannot hold the required number of segments at the
    /// minimum segment length.
    TraceTooShort { needed: usize, got: usize },
    /// Partition and trace/plan disagree.
    Mismatch(&'static str),
}

impl fmt::Display for SegmentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SegmentError::InvalidPartition(why) => write!(f, "invalid partition: {why}"),
            SegmentError::TraceTooShort { needed, got } => {
                write!(f, "trace too short: need {needed} samples, got {got}")
            }
            SegmentError::Mismatch(why) => write!(f, "partition mismatch: {why}"),
        }
    }
}

impl core::error::Error for SegmentError {}

/// Prefix sums over gaze coordinates enabling O(1) segment scores. Both
/// the direct scorer and the DP share this, so their segment terms are
/// bitwise identical.
struct TraceScorer {
    sx: Vec<f64>,
    sy: Vec<f64>,
    sxx: Vec<f64>,
    syy: Vec<f64>,
    len: usize,
    log_norm_const: f64,
    inv_two_var: f64,
    log_uniform: f64,
    alpha_minus_one: f64,
}

impl TraceScorer {
    fn new(trace: &FixationTrace, params: &SegmentParams) -> Self {
        assert!(params.sigma_fix > 0.0, "sigma_fix must be positive");
        let len = trace.len();
        let mut sx = Vec::with_capacity(len + 1);
        let mut sy = Vec::with_capacity(len + 1);
        let mut sxx = Vec::with_capacity(len + 1);
        let mut syy = Vec::with_capacity(len + 1);
        sx.push(0.0);
        sy.push(0.0);
        sxx.push(0.0);
        syy.push(0.0);
        for (x, y) in trace.positions() {
            sx.push(sx.last().unwrap() + x);
            sy.push(sy.last().unwrap() + y);
            sxx.push(sxx.last().unwrap() + x * x);
            syy.push(syy.last().unwrap() + y * y);
        }
        let var = params.sigma_fix * params.sigma_fix;
        const TWO_PI: f64 = core::f64::consts::TAU;
        Self {
            sx,
            sy,
            sxx,
            syy,
            len,
            log_norm_const: -libm::log(TWO_PI * var),
            inv_two_var: 1.0 / (2.0 * var),
            log_uniform: -libm::log((params.image_width * params.image_height) as f64),
            alpha_minus_one: params.alpha - 1.0,
        }
    }

    /// Log score of one segment `[a, b)` of the given kind, including
    /// its share of the Dirichlet length prior.
    fn segment_score(&self, a: usize, b: usize, action: bool) -> f64 {
        debug_assert!(a < b && b <= self.len);
        let n = (b - a) as f64;
        let data_term = if action {
            // Sum of squared deviations from the segment's own mean,
            // via prefix sums.
            let dx = self.sx[b] - self.sx[a];
            let dy = self.sy[b] - self.sy[a];
            let ssd = (self.sxx[b] - self.sxx[a] - dx * dx / n)
                + (self.syy[b] - self.syy[a] - dy * dy / n);
            n * self.log_norm_const - ssd.max(0.0) * self.inv_two_var
        } else {
            n * self.log_uniform
        };
        data_term + self.alpha_minus_one * libm::log(n / self.len as f64)
    }

    /// Dirichlet normalizer for `k` symmetric proportions.
    fn dirichlet_constant(&self, k: usize, alpha: f64) -> f64 {
        libm::lgamma(k as f64 * alpha) - k as f64 * libm::lgamma(alpha)
    }
}

/// Log score of a partition: Normal likelihood of action segments around
/// their sample means, Uniform likelihood of transition segments, plus
/// the Dirichlet log density of the segment-length proportions.
pub fn score_partition(
    trace: &FixationTrace,
    num_actions: usize,
    partition: &Partition,
    params: &SegmentParams,
) -> Result<f64, SegmentError> {
    if partition.num_actions() != num_actions {
        return Err(SegmentError::Mismatch("partition step count differs from the plan"));
    }
    if partition.len() != trace.len() {
        return Err(SegmentError::Mismatch("partition length differs from the trace"));
    }
    let scorer = TraceScorer::new(trace, params);
    // Accumulate back to front; the DP composes suffix scores the same
    // way, which keeps both routes bitwise identical.
    let mut total = 0.0;
    for (range, kind) in partition.segments().into_iter().rev() {
        total = scorer.segment_score(range.start, range.end, matches!(kind, Assignment::Action(_)))
            + total;
    }
    Ok(total + scorer.dirichlet_constant(partition.num_segments(), params.alpha))
}

/// Exact MAP partition via dynamic programming over changepoints.
/// Ties break toward earlier changepoints. Requires
/// [`MIN_SEGMENT_LEN`] samples per segment.
pub fn infer_segmentation(
    trace: &FixationTrace,
    num_actions: usize,
    params: &SegmentParams,
) -> Result<Partition, SegmentError> {
    if num_actions == 0 {
        return Err(SegmentError::InvalidPartition("a partition needs at least one action"));
    }
    let segments = 2 * num_actions - 1;
    let len = trace.len();
    if len < segments * MIN_SEGMENT_LEN {
        return Err(SegmentError::TraceTooShort { needed: segments * MIN_SEGMENT_LEN, got: len });
    }

    let scorer = TraceScorer::new(trace, params);

    // suffix[k][t]: best score of segments k.. covering samples [t, len).
    // next[k][t]: end of segment k in that optimum (earliest on ties).
    let mut suffix = alloc::vec![alloc::vec![f64::NEG_INFINITY; len + 1]; segments];
    let mut next = alloc::vec![alloc::vec![0usize; len + 1]; segments];
    for k in (0..segments).rev() {
        let action = k % 2 == 0;
        let remaining = segments - 1 - k;
        // Segment k may start anywhere that leaves room on both sides.
        let t_min = k * MIN_SEGMENT_LEN;
        let t_max = len - (remaining + 1) * MIN_SEGMENT_LEN;
        for t in t_min..=t_max {
            if k == segments - 1 {
                suffix[k][t] = scorer.segment_score(t, len, action);
                next[k][t] = len;
                continue;
            }
            let e_min = t + MIN_SEGMENT_LEN;
            let e_max = len - remaining * MIN_SEGMENT_LEN;
            let mut best = f64::NEG_INFINITY;
            let mut best_end = e_min;
            for e in e_min..=e_max {
                let candidate = scorer.segment_score(t, e, action) + suffix[k + 1][e];
                if candidate > best {
                    best = candidate;
                    best_end = e;
                }
            }
            suffix[k][t] = best;
            next[k][t] = best_end;
        }
    }

    let mut changepoints = Vec::with_capacity(segments - 1);
    let mut t = 0usize;
    for row in next.iter().take(segments - 1) {
        t = row[t];
        changepoints.push(t);
    }
    Partition::new(num_actions, len, changepoints)
}

/// Per-action locations: the coordinate-wise median of the samples
/// assigned to each action segment, robust to stray fixations.
pub fn infer_locations(trace: &FixationTrace, partition: &Partition) -> Vec<(f64, f64)> {
    let mut locations = Vec::with_capacity(partition.num_actions());
    for (range, kind) in partition.segments() {
        if matches!(kind, Assignment::Action(_)) {
            let xs: Vec<f64> = trace.samples[range.clone()].iter().map(|s| s.gaze_px.0).collect();
            let ys: Vec<f64> = trace.samples[range].iter().map(|s| s.gaze_px.1).collect();
            locations.push((stats::median(&xs), stats::median(&ys)));
        }
    }
    locations
}
