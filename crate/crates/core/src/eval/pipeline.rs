//! End-to-end pipeline: parse, demonstrate, segment, extract, learn,
//! and evaluate, all from one root seed.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::features::{featurize, group_by_symbol, BackgroundParams, Feature};
use crate::learner::{
    classify, learn, KbConfig, KnowledgeBase, LearnConfig, LearnError, LearnOutcome, LearnWarning,
};
use crate::plan::{parse_plan, Lexicon, VerbFilter};
use crate::rng::rng_for;
use crate::scene::{
    generate_scene, render_frame, simulate_demo, Assignment, DemoScript, DemoStep, FixationParams,
    FixationTrace, Scene, SceneObject, SceneParams, MIN_SEGMENT_LEN,
};
use crate::segment::{
    extract_labeled_patches, infer_locations, infer_segmentation, inject_label_noise,
    LabeledPatch, SegmentParams,
};

use super::{build_test_set, confusion_matrices, ConfusionMatrix, TestCategory, TestCounts, TestSetParams};

mod stage {
    pub const SCENE: u64 = 1;
    pub const SCRIPT: u64 = 2;
    pub const SIMULATE: u64 = 3;
    pub const NOISE: u64 = 4;
    pub const TEST_SET: u64 = 5;
}

/// Full pipeline configuration; every knob the stages use.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct PipelineConfig {
    pub seed: u64,
    pub scene: SceneParams,
    pub fixation: FixationParams,
    pub patch_size: usize,
    pub background: BackgroundParams,
    pub learn: LearnConfig,
    pub d_max: f64,
    /// Fraction of patches whose labels get corrupted.
    pub noise_rate: f64,
    pub n_demos: usize,
    pub steps_per_demo: usize,
    pub test_counts: TestCounts,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            scene: SceneParams::default(),
            fixation: FixationParams::default(),
            patch_size: 48,
            background: BackgroundParams::default(),
            learn: LearnConfig::default(),
            d_max: 3.0,
            noise_rate: 0.25,
            n_demos: 250,
            steps_per_demo: 8,
            test_counts: TestCounts::default(),
        }
    }
}

/// A stage failure, with the stage named.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineError {
    pub stage: &'static str,
    pub message: String,
}

impl PipelineError {
    fn new(stage: &'static str, error: impl fmt::Display) -> Self {
        Self { stage, message: error.to_string() }
    }
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pipeline stage `{}` failed: {}", self.stage, self.message)
    }
}

impl core::error::Error for PipelineError {}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParseStats {
    pub sentences: usize,
    pub steps: usize,
    pub symbols: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DemoStats {
    pub demos: usize,
    pub trace_samples: usize,
    /// Fraction of samples whose inferred action matches the truth.
    pub mean_assignment_accuracy: f64,
    pub observed_transition_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PatchStats {
    pub extracted: usize,
    pub dropped: usize,
    pub corrupted: usize,
    /// Fraction of emitted patches whose labels match the true object.
    pub true_label_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SymbolCount {
    pub symbol: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DatasetStats {
    pub per_symbol: Vec<SymbolCount>,
    pub skipped_background: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelSummary {
    pub symbol: String,
    pub invariant: Vec<Feature>,
    pub mean: Vec<f64>,
    pub sigma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelReport {
    pub models: Vec<ModelSummary>,
    pub groups: Vec<crate::learner::ConceptGroup>,
    pub unlearnable: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroupEvalReport {
    pub features: Vec<Feature>,
    pub matrix: ConfusionMatrix,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub groups: Vec<GroupEvalReport>,
    /// Accuracy of the group holding the colour symbols, when learned.
    pub colour_accuracy: Option<f64>,
    /// Accuracy of the group holding the shape symbols, when learned.
    pub shape_accuracy: Option<f64>,
    /// How often far-unseen cases come back Unknown in the colour group.
    pub far_unseen_colour_unknown_rate: Option<f64>,
}

/// Everything a pipeline run produces, deterministic given the config.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Report {
    pub config: PipelineConfig,
    pub parse: ParseStats,
    pub demos: DemoStats,
    pub patches: PatchStats,
    pub dataset: DatasetStats,
    pub model: ModelReport,
    pub eval: EvalReport,
}

const PICK_SYNONYMS: [&str; 4] = ["pick", "grab", "take", "get"];
const PLACE_SYNONYMS: [&str; 4] = ["place", "put", "move", "drop"];

fn capitalize(sentence: &str) -> String {
    let mut chars = sentence.chars();
    match chars.next() {
        Some(first) => first.to_ascii_uppercase().to_string() + chars.as_str(),
        None => String::new(),
    }
}

fn noun_phrase(object: &SceneObject) -> String {
    format!("the {} {}", object.colour_class.symbol(), object.shape_class.symbol())
}

/// Renders one instruction sentence for a step. Verbs rotate through the
/// synonym sets and place steps rotate through location templates, so a
/// long run exercises the whole grammar.
fn instruction(step: usize, variant: usize, target: &SceneObject, reference: &SceneObject) -> String {
    let np = noun_phrase(target);
    let body = if step % 2 == 0 {
        let verb = PICK_SYNONYMS[variant % 4];
        if verb == "pick" {
            format!("{verb} up {np}")
        } else {
            format!("{verb} {np}")
        }
    } else {
        let verb = PLACE_SYNONYMS[variant % 4];
        match variant % 3 {
            0 => format!("{verb} {np} on {}", noun_phrase(reference)),
            1 => format!("{verb} {np} on the left of {}", noun_phrase(reference)),
            _ => {
                if verb == "put" {
                    format!("{verb} down {np}")
                } else {
                    format!("{verb} {np}")
                }
            }
        }
    };
    capitalize(&body) + "."
}

/// Picks demonstration targets: consecutive steps always work on
/// different objects (when the scene has more than one).
fn pick_targets(scene: &Scene, steps: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = scene.objects.len();
    let mut targets = Vec::with_capacity(steps);
    for i in 0..steps {
        let t = if n == 1 {
            0
        } else {
            let mut t = rng.random_range(0..n);
            while i > 0 && t == targets[i - 1] {
                t = rng.random_range(0..n);
            }
            t
        };
        targets.push(t);
    }
    targets
}

/// One demonstration's artifacts: everything the wire formats carry.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoArtifacts {
    pub scene: Scene,
    pub sentences: Vec<String>,
    pub script: DemoScript,
    pub trace: FixationTrace,
}

/// Builds demonstration `demo` under the config's root seed: scene,
/// narrated instructions, script, and simulated fixation trace. The
/// pipeline consumes the same artifacts, so files written by `gen-demo`
/// match pipeline-internal demos exactly.
pub fn generate_demo(config: &PipelineConfig, demo: usize) -> Result<DemoArtifacts, PipelineError> {
    let lexicon = Lexicon::builtin();
    let filter = VerbFilter::default();
    let seed = config.seed;
    let scene = generate_scene(&config.scene, crate::rng::derive_seed(seed, stage::SCENE, demo as u64))
        .map_err(|e| PipelineError::new("gen-demo", e))?;

    let mut script_rng = rng_for(seed, stage::SCRIPT, demo as u64);
    let targets = pick_targets(&scene, config.steps_per_demo, &mut script_rng);
    let sentences: Vec<String> = targets
        .iter()
        .enumerate()
        .map(|(step, &target)| {
            let reference = if scene.objects.len() > 1 {
                let mut r = script_rng.random_range(0..scene.objects.len());
                if r == target {
                    r = (r + 1) % scene.objects.len();
                }
                r
            } else {
                target
            };
            instruction(step, demo + step, &scene.objects[target], &scene.objects[reference])
        })
        .collect();

    let plan = parse_plan(&sentences, &lexicon, &filter).map_err(|e| PipelineError::new("parse", e))?;

    let nominal = (config.fixation.total_samples / (2 * config.steps_per_demo - 1))
        .max(MIN_SEGMENT_LEN);
    let script = DemoScript {
        plan,
        steps: targets
            .iter()
            .map(|&target_object| DemoStep {
                target_object,
                true_location_mm: scene.objects[target_object].center_mm,
                nominal_duration: nominal,
            })
            .collect(),
    };

    let trace = simulate_demo(
        &scene,
        &script,
        &config.fixation,
        crate::rng::derive_seed(seed, stage::SIMULATE, demo as u64),
    );

    Ok(DemoArtifacts { scene, sentences, script, trace })
}

struct DemoOutcome {
    patches: Vec<LabeledPatch>,
    dropped: usize,
    truth_symbols: Vec<Vec<String>>,
    correct_samples: usize,
    transition_samples: usize,
    samples: usize,
    symbols: Vec<String>,
    sentences: usize,
}

fn run_demo(config: &PipelineConfig, demo: usize) -> Result<DemoOutcome, PipelineError> {
    let DemoArtifacts { scene, sentences, script, trace } = generate_demo(config, demo)?;
    let plan = &script.plan;

    let seg_params = SegmentParams::new(
        config.fixation.sigma_fix,
        config.fixation.alpha,
        scene.camera.image_width,
        scene.camera.image_height,
    );
    let partition = infer_segmentation(&trace, plan.len(), &seg_params)
        .map_err(|e| PipelineError::new("segment", e))?;
    let locations = infer_locations(&trace, &partition);

    let truth = trace.truth.as_ref().expect("simulated traces carry truth");
    let inferred = partition.assignment();
    let correct_samples =
        inferred.iter().zip(&truth.assignment).filter(|(a, b)| a == b).count();
    let transition_samples =
        truth.assignment.iter().filter(|a| matches!(a, Assignment::Transition)).count();

    let frame = render_frame(&scene);
    let extraction = extract_labeled_patches(
        &frame,
        &scene,
        plan,
        &locations,
        config.patch_size,
        &config.background,
        demo,
    );

    Ok(DemoOutcome {
        truth_symbols: script
            .steps
            .iter()
            .map(|s| scene.objects[s.target_object].symbols())
            .collect(),
        patches: extraction.patches,
        dropped: extraction.dropped,
        correct_samples,
        transition_samples,
        samples: trace.len(),
        symbols: plan.symbol_set.iter().cloned().collect(),
        sentences: sentences.len(),
    })
}

/// Runs the whole pipeline. Any stage failure aborts with the stage
/// name attached; identical configs produce identical reports.
pub fn run_pipeline(config: &PipelineConfig) -> Result<Report, PipelineError> {
    let mut patches: Vec<LabeledPatch> = Vec::new();
    let mut truth_symbols: Vec<Vec<Vec<String>>> = Vec::new();
    let mut sentences = 0usize;
    let mut dropped = 0usize;
    let mut correct_samples = 0usize;
    let mut transition_samples = 0usize;
    let mut samples = 0usize;
    let mut symbols: alloc::collections::BTreeSet<String> = Default::default();

    for demo in 0..config.n_demos {
        let outcome = run_demo(config, demo)?;
        sentences += outcome.sentences;
        dropped += outcome.dropped;
        correct_samples += outcome.correct_samples;
        transition_samples += outcome.transition_samples;
        samples += outcome.samples;
        symbols.extend(outcome.symbols);
        truth_symbols.push(outcome.truth_symbols);
        patches.extend(outcome.patches);
    }

    let classes: Vec<Vec<String>> = config
        .scene
        .mix
        .classes()
        .iter()
        .map(|(c, s)| alloc::vec![c.symbol().to_string(), s.symbol().to_string()])
        .collect();
    let patches = inject_label_noise(
        patches,
        &classes,
        config.noise_rate,
        crate::rng::derive_seed(config.seed, stage::NOISE, 0),
    );
    let corrupted = patches.iter().filter(|p| p.corrupted).count();
    let true_labels = patches
        .iter()
        .filter(|p| p.symbols == truth_symbols[p.source.demo][p.source.step])
        .count();
    let true_label_fraction =
        if patches.is_empty() { 0.0 } else { true_labels as f64 / patches.len() as f64 };

    let (dataset, skipped_background) =
        group_by_symbol(&patches, config.patch_size, &config.background);

    // A dataset where nothing is learnable (extreme label noise) still
    // produces a complete, visibly degraded report.
    let outcome = match learn(&dataset, &config.learn, config.d_max) {
        Ok(outcome) => outcome,
        Err(LearnError::NoLearnableSymbols) => LearnOutcome {
            kb: KnowledgeBase {
                models: Vec::new(),
                groups: Vec::new(),
                config: KbConfig { sigma_thresh: config.learn.sigma_thresh, d_max: config.d_max },
            },
            warnings: dataset
                .symbols()
                .map(|symbol| LearnWarning {
                    symbol: symbol.to_string(),
                    reason: LearnError::Unlearnable,
                })
                .collect(),
        },
        Err(e) => return Err(PipelineError::new("train", e)),
    };
    let kb = outcome.kb;

    let test_params = TestSetParams {
        patch_size: config.patch_size,
        colour_jitter_sigma: config.scene.colour_jitter_sigma,
        pixel_noise_sigma: config.scene.pixel_noise_sigma,
        background_rgb: config.scene.background_rgb,
    };
    let cases = build_test_set(
        &test_params,
        &config.test_counts,
        crate::rng::derive_seed(config.seed, stage::TEST_SET, 0),
    );
    let predictions: Vec<Vec<Option<String>>> = cases
        .iter()
        .map(|case| match featurize(&case.raster, config.patch_size, &config.background) {
            Some(vector) => classify(&vector, &kb, config.d_max),
            None => alloc::vec![None; kb.groups.len()],
        })
        .collect();
    let matrices =
        confusion_matrices(&cases, &predictions, &kb).map_err(|e| PipelineError::new("eval", e))?;

    // Identify the colour and shape groups by their symbol sets.
    let colour_symbols: alloc::collections::BTreeSet<String> =
        classes.iter().map(|c| c[0].clone()).collect();
    let shape_symbols: alloc::collections::BTreeSet<String> =
        classes.iter().map(|c| c[1].clone()).collect();
    let group_symbols = |group: &crate::learner::ConceptGroup| {
        group.symbols.iter().cloned().collect::<alloc::collections::BTreeSet<String>>()
    };
    let colour_group = kb.groups.iter().position(|g| group_symbols(g) == colour_symbols);
    let shape_group = kb.groups.iter().position(|g| group_symbols(g) == shape_symbols);

    let far_unseen_colour_unknown_rate = colour_group.map(|idx| {
        let far: Vec<&Vec<Option<String>>> = cases
            .iter()
            .zip(&predictions)
            .filter(|(case, _)| case.category == TestCategory::FarUnseen)
            .map(|(_, row)| row)
            .collect();
        if far.is_empty() {
            return 1.0;
        }
        far.iter().filter(|row| row[idx].is_none()).count() as f64 / far.len() as f64
    });

    let report = Report {
        config: config.clone(),
        parse: ParseStats {
            sentences,
            steps: sentences,
            symbols: symbols.into_iter().collect(),
        },
        demos: DemoStats {
            demos: config.n_demos,
            trace_samples: samples,
            mean_assignment_accuracy: if samples == 0 {
                0.0
            } else {
                correct_samples as f64 / samples as f64
            },
            observed_transition_fraction: if samples == 0 {
                0.0
            } else {
                transition_samples as f64 / samples as f64
            },
        },
        patches: PatchStats {
            extracted: patches.len(),
            dropped,
            corrupted,
            true_label_fraction,
        },
        dataset: DatasetStats {
            per_symbol: dataset
                .iter()
                .map(|(symbol, vectors)| SymbolCount { symbol: symbol.to_string(), count: vectors.len() })
                .collect(),
            skipped_background,
        },
        model: ModelReport {
            models: kb
                .models
                .iter()
                .map(|m| ModelSummary {
                    symbol: m.symbol.clone(),
                    invariant: m.invariant.clone(),
                    mean: m.mean.clone(),
                    sigma: m.variance.iter().map(|v| libm::sqrt(*v)).collect(),
                })
                .collect(),
            groups: kb.groups.clone(),
            unlearnable: outcome.warnings.iter().map(|w| w.symbol.clone()).collect(),
            warnings: outcome.warnings.iter().map(|w| w.to_string()).collect(),
        },
        eval: EvalReport {
            colour_accuracy: colour_group.map(|idx| matrices[idx].1.accuracy()),
            shape_accuracy: shape_group.map(|idx| matrices[idx].1.accuracy()),
            far_unseen_colour_unknown_rate,
            groups: matrices
                .into_iter()
                .map(|(group, matrix)| GroupEvalReport {
                    features: group.features,
                    accuracy: matrix.accuracy(),
                    matrix,
                })
                .collect(),
        },
    };
    Ok(report)
}
