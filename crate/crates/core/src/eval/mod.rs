//! Evaluation: three-category test sets and confusion matrices.

mod pipeline;

pub use pipeline::{
    generate_demo, run_pipeline, DatasetStats, DemoArtifacts, DemoStats, EvalReport,
    GroupEvalReport, ModelReport, ModelSummary, ParseStats, PatchStats, PipelineConfig,
    PipelineError, Report, SymbolCount,
};

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::learner::{ConceptGroup, KnowledgeBase};
use crate::rng::rng_for;
use crate::scene::{draw_object, ColourClass, Raster, Rgb, ShapeClass};

/// Test-set category: how far a case sits from the training data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TestCategory {
    /// Training colours and footprints with training jitter.
    Seen,
    /// Unseen but close: new hues and similar areas; the gold label is
    /// the nearest trained class.
    NearUnseen,
    /// Unseen and far: novel colours and extreme areas; gold is Unknown.
    FarUnseen,
}

/// One test object: a rendered patch plus gold labels per modality.
/// `None` stands for Unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct TestCase {
    pub raster: Raster,
    pub gold_colour: Option<String>,
    pub gold_shape: Option<String>,
    pub category: TestCategory,
}

impl TestCase {
    /// Gold label for one concept group: the case's colour or shape gold
    /// when that symbol belongs to the group, otherwise Unknown.
    pub fn gold_for(&self, group: &ConceptGroup) -> Option<&str> {
        if let Some(colour) = &self.gold_colour {
            if group.symbols.iter().any(|s| s == colour) {
                return Some(colour);
            }
        }
        if let Some(shape) = &self.gold_shape {
            if group.symbols.iter().any(|s| s == shape) {
                return Some(shape);
            }
        }
        None
    }
}

/// Cases per category.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct TestCounts {
    pub seen: usize,
    pub near_unseen: usize,
    pub far_unseen: usize,
}

impl Default for TestCounts {
    /// 48 objects, mirroring the original test size.
    fn default() -> Self {
        Self { seen: 16, near_unseen: 16, far_unseen: 16 }
    }
}

impl TestCounts {
    pub fn total(&self) -> usize {
        self.seen + self.near_unseen + self.far_unseen
    }
}

/// Rendering parameters for test patches; should match the training
/// scenes.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct TestSetParams {
    pub patch_size: usize,
    pub colour_jitter_sigma: f64,
    pub pixel_noise_sigma: f64,
    pub background_rgb: Rgb,
}

impl Default for TestSetParams {
    fn default() -> Self {
        Self {
            patch_size: 48,
            colour_jitter_sigma: 8.0,
            pixel_noise_sigma: 3.0,
            background_rgb: [10, 10, 10],
        }
    }
}

/// Novel colours for far-unseen cases.
const FAR_COLOURS: [Rgb; 3] = [[26, 204, 26], [140, 26, 204], [170, 170, 170]];
/// Novel footprints (extreme areas) for far-unseen cases.
const FAR_FOOTPRINTS: [(u32, u32); 3] = [(8, 8), (40, 40), (36, 10)];

/// Builds the three-category test set.
///
/// Seen cases re-draw training classes with training jitter. Near-unseen
/// cases shift one colour channel by 1.5x the training jitter (a new
/// hue) and scale footprints by 7/6 (a similar area); their gold labels
/// stay with the nearest trained class. Far-unseen cases use novel
/// colours and extreme areas and are gold-labelled Unknown.
pub fn build_test_set(params: &TestSetParams, counts: &TestCounts, seed: u64) -> Vec<TestCase> {
    let mut rng = rng_for(seed, 0, 0);
    let jitter = Normal::new(0.0, params.colour_jitter_sigma).expect("valid jitter sigma");
    let mut cases = Vec::with_capacity(counts.total());

    for i in 0..counts.seen {
        let colour = ColourClass::TRAINED[i % 3];
        let shape = ShapeClass::TRAINED[(i / 3) % 3];
        let mut rgb = colour.prototype();
        for channel in &mut rgb {
            let v = *channel as f64 + jitter.sample(&mut rng);
            *channel = libm::round(v.clamp(0.0, 255.0)) as u8;
        }
        cases.push(TestCase {
            raster: render_test_patch(params, rgb, shape.footprint(), shape.rounded(), &mut rng),
            gold_colour: Some(colour.symbol().to_string()),
            gold_shape: Some(shape.symbol().to_string()),
            category: TestCategory::Seen,
        });
    }

    for i in 0..counts.near_unseen {
        let colour = ColourClass::TRAINED[i % 3];
        let shape = ShapeClass::TRAINED[(i / 3) % 3];
        let channel = (i / 9) % 3;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let mut rgb = colour.prototype();
        let v = rgb[channel] as f64 + sign * 1.5 * params.colour_jitter_sigma;
        rgb[channel] = libm::round(v.clamp(0.0, 255.0)) as u8;
        let (w, h) = shape.footprint();
        let footprint = (w * 7 / 6, h * 7 / 6);
        cases.push(TestCase {
            raster: render_test_patch(params, rgb, footprint, shape.rounded(), &mut rng),
            gold_colour: Some(colour.symbol().to_string()),
            gold_shape: Some(shape.symbol().to_string()),
            category: TestCategory::NearUnseen,
        });
    }

    for i in 0..counts.far_unseen {
        let rgb = FAR_COLOURS[i % 3];
        let footprint = FAR_FOOTPRINTS[(i / 3) % 3];
        cases.push(TestCase {
            raster: render_test_patch(params, rgb, footprint, false, &mut rng),
            gold_colour: None,
            gold_shape: None,
            category: TestCategory::FarUnseen,
        });
    }

    cases
}

fn render_test_patch(
    params: &TestSetParams,
    rgb: Rgb,
    footprint: (u32, u32),
    rounded: bool,
    rng: &mut ChaCha8Rng,
) -> Raster {
    let mut raster = Raster::filled(params.patch_size, params.patch_size, params.background_rgb);
    let size = params.patch_size as i64;
    let x0 = size / 2 - footprint.0 as i64 / 2;
    let y0 = size / 2 - footprint.1 as i64 / 2;
    let rect = (x0, y0, x0 + footprint.0 as i64, y0 + footprint.1 as i64);
    draw_object(&mut raster, rect, rounded, rgb, params.pixel_noise_sigma, rng);
    raster
}

/// Count table over a concept group's symbols plus Unknown. Rows are
/// gold labels, columns predictions; Unknown is the last index.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfusionMatrix {
    /// Symbol labels; Unknown is implicit at index `labels.len()`.
    pub labels: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(labels: Vec<String>) -> Self {
        let n = labels.len() + 1;
        Self { labels, counts: alloc::vec![alloc::vec![0; n]; n] }
    }

    fn index(&self, symbol: Option<&str>) -> usize {
        match symbol {
            Some(name) => self
                .labels
                .iter()
                .position(|l| l == name)
                .expect("symbol must be one of the matrix labels"),
            None => self.labels.len(),
        }
    }

    pub fn add(&mut self, gold: Option<&str>, predicted: Option<&str>) {
        let row = self.index(gold);
        let col = self.index(predicted);
        self.counts[row][col] += 1;
    }

    pub fn total(&self) -> usize {
        self.counts.iter().map(|row| row.iter().sum::<usize>()).sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    /// Accuracy: trace over total.
    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        self.trace() as f64 / total as f64
    }

    pub fn row_sums(&self) -> Vec<usize> {
        self.counts.iter().map(|row| row.iter().sum()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    /// Predictions and test cases are not aligned.
    LengthMismatch { cases: usize, predictions: usize },
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::LengthMismatch { cases, predictions } => {
                write!(f, "{cases} test cases but {predictions} prediction rows")
            }
        }
    }
}

impl core::error::Error for EvalError {}

/// Builds one confusion matrix per concept group from aligned
/// predictions (each row aligned with `kb.groups`).
pub fn confusion_matrices(
    cases: &[TestCase],
    predictions: &[Vec<Option<String>>],
    kb: &KnowledgeBase,
) -> Result<Vec<(ConceptGroup, ConfusionMatrix)>, EvalError> {
    if cases.len() != predictions.len() {
        return Err(EvalError::LengthMismatch { cases: cases.len(), predictions: predictions.len() });
    }
    let mut out = Vec::with_capacity(kb.groups.len());
    for (group_index, group) in kb.groups.iter().enumerate() {
        let mut matrix = ConfusionMatrix::new(group.symbols.clone());
        for (case, row) in cases.iter().zip(predictions) {
            let gold = case.gold_for(group);
            let predicted = row[group_index].as_deref();
            matrix.add(gold, predicted);
        }
        out.push((group.clone(), matrix));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::featurize;
    use crate::features::BackgroundParams;

    #[test]
    fn seen_only_counts_rotate_colours() {
        let counts = TestCounts { seen: 36, near_unseen: 0, far_unseen: 0 };
        let cases = build_test_set(&TestSetParams::default(), &counts, 1);
        assert_eq!(cases.len(), 36);
        let blues = cases.iter().filter(|c| c.gold_colour.as_deref() == Some("blue")).count();
        assert_eq!(blues, 12);
        assert!(cases.iter().all(|c| c.gold_colour.is_some()));
    }

    #[test]
    fn far_unseen_is_gold_unknown() {
        let counts = TestCounts { seen: 0, near_unseen: 0, far_unseen: 6 };
        let cases = build_test_set(&TestSetParams::default(), &counts, 2);
        assert!(cases
            .iter()
            .all(|c| c.gold_colour.is_none() && c.gold_shape.is_none()));
    }

    #[test]
    fn default_counts_total_48() {
        assert_eq!(TestCounts::default().total(), 48);
    }

    #[test]
    fn test_patches_are_featurizable() {
        let cases = build_test_set(&TestSetParams::default(), &TestCounts::default(), 3);
        for case in &cases {
            let features = featurize(&case.raster, 48, &BackgroundParams::default());
            assert!(features.is_some(), "{:?} patch lost its object", case.category);
        }
    }

    #[test]
    fn near_unseen_area_is_similar_but_distinct() {
        let counts = TestCounts { seen: 0, near_unseen: 9, far_unseen: 0 };
        let cases = build_test_set(&TestSetParams::default(), &counts, 4);
        for case in cases {
            let features =
                featurize(&case.raster, 48, &BackgroundParams::default()).unwrap();
            let area = features.get(crate::features::Feature::Area);
            // Scaled by 7/6 in each dimension: within 2x of a training
            // area but equal to none of them.
            for trained in [140.0, 288.0, 576.0] {
                assert!((area * 2304.0 - trained).abs() > 1.0);
            }
        }
    }

    #[test]
    fn paper_colour_matrix_accuracy() {
        // Colour confusion fixture with rows red, yellow, blue, unknown.
        let mut matrix = ConfusionMatrix::new(alloc::vec![
            "red".to_string(),
            "yellow".to_string(),
            "blue".to_string(),
        ]);
        let rows: [[usize; 4]; 4] =
            [[12, 1, 0, 0], [0, 12, 0, 0], [0, 0, 13, 1], [0, 1, 0, 13]];
        let labels = ["red", "yellow", "blue"];
        for (r, row) in rows.iter().enumerate() {
            for (c, &count) in row.iter().enumerate() {
                let gold = labels.get(r).copied();
                let predicted = labels.get(c).copied();
                for _ in 0..count {
                    matrix.add(gold, predicted);
                }
            }
        }
        assert_eq!(matrix.trace(), 50);
        assert_eq!(matrix.total(), 53);
        assert!((matrix.accuracy() - 50.0 / 53.0).abs() < 1e-12);
        assert_eq!(matrix.row_sums(), alloc::vec![13, 12, 14, 14]);
    }

    #[test]
    fn perfect_predictions_are_diagonal() {
        let mut matrix = ConfusionMatrix::new(alloc::vec!["a".to_string(), "b".to_string()]);
        matrix.add(Some("a"), Some("a"));
        matrix.add(Some("b"), Some("b"));
        matrix.add(None, None);
        assert_eq!(matrix.trace(), 3);
        assert_eq!(matrix.accuracy(), 1.0);
    }

    #[test]
    fn all_unknown_predictions_fill_the_last_column() {
        let mut matrix = ConfusionMatrix::new(alloc::vec!["a".to_string(), "b".to_string()]);
        matrix.add(Some("a"), None);
        matrix.add(Some("b"), None);
        matrix.add(None, None);
        for (i, row) in matrix.counts.iter().enumerate() {
            for (j, &count) in row.iter().enumerate() {
                if j != 2 {
                    assert_eq!(count, 0, "row {i} col {j}");
                }
            }
        }
        assert_eq!(matrix.accuracy(), 1.0 / 3.0);
    }
}
