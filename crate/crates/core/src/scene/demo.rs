//! Demonstration simulation: fixation traces from the generative model.
//!
//! A demonstration of an L-step plan produces L action segments separated
//! by L-1 transition segments. Segment durations are Dirichlet
//! proportions of the available time; gaze clusters isotropically around
//! the step target during actions and scatters uniformly over the table
//! during transitions.

use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::plan::Plan;
use crate::rng::rng_for;

use super::{raycast_fixation, Camera, Scene, SceneError};

/// Shortest admissible segment, samples.
pub const MIN_SEGMENT_LEN: usize = 5;

/// Per-sample cause: a plan step index or a transition between steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Assignment {
    Action(usize),
    Transition,
}

/// One step of a demonstration script: which object the demonstrator
/// works on and for roughly how long.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DemoStep {
    /// Id of the target object in the scene.
    pub target_object: usize,
    /// True action location on the table, millimetres.
    pub true_location_mm: (f64, f64),
    /// Nominal duration in samples, at least [`MIN_SEGMENT_LEN`].
    pub nominal_duration: usize,
}

/// A plan paired with its ground-truth execution targets.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DemoScript {
    pub plan: Plan,
    pub steps: Vec<DemoStep>,
}

impl DemoScript {
    /// Checks the script against a scene: step/plan lengths agree,
    /// targets exist, durations are long enough.
    pub fn validate(&self, scene: &Scene) -> Result<(), SceneError> {
        if self.steps.len() != self.plan.steps.len() {
            return Err(SceneError::InvalidParams("script and plan lengths differ"));
        }
        if self.steps.is_empty() {
            return Err(SceneError::InvalidParams("script has no steps"));
        }
        for step in &self.steps {
            if step.target_object >= scene.objects.len() {
                return Err(SceneError::InvalidParams("script target missing from scene"));
            }
            if step.nominal_duration < MIN_SEGMENT_LEN {
                return Err(SceneError::InvalidParams("step duration below minimum"));
            }
        }
        Ok(())
    }
}

/// One gaze sample.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FixationSample {
    /// Sample index.
    pub t: usize,
    /// Gaze position in the overhead frame, pixels.
    pub gaze_px: (f64, f64),
    /// Gaze projected onto the table plane, millimetres.
    pub gaze_mm: Option<[f64; 3]>,
}

/// Ground-truth segmentation recorded by the simulator.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SegmentTruth {
    /// Start indices of segments after the first; strictly increasing.
    pub changepoints: Vec<usize>,
    pub assignment: Vec<Assignment>,
}

/// Timestamped gaze samples from one demonstration, with optional ground
/// truth.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FixationTrace {
    pub samples: Vec<FixationSample>,
    pub truth: Option<SegmentTruth>,
}

impl FixationTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.samples.iter().map(|s| s.gaze_px)
    }
}

/// Generative fixation model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct FixationParams {
    /// Isotropic gaze std around the action target, pixels.
    pub sigma_fix: f64,
    /// Symmetric Dirichlet concentration for segment durations.
    pub alpha: f64,
    /// Fraction of the trace spent in transition segments.
    pub transition_fraction: f64,
    /// Trace length T, samples.
    pub total_samples: usize,
}

impl Default for FixationParams {
    fn default() -> Self {
        Self { sigma_fix: 5.0, alpha: 10.0, transition_fraction: 0.2, total_samples: 600 }
    }
}

/// Draws a symmetric Dirichlet(alpha) sample of length `k` by
/// normalizing Gamma draws.
pub(crate) fn dirichlet_symmetric(alpha: f64, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    assert!(alpha > 0.0, "dirichlet alpha must be positive");
    match k {
        0 => Vec::new(),
        1 => alloc::vec![1.0],
        _ => {
            let gamma = Gamma::new(alpha, 1.0).expect("valid gamma");
            let draws: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
            let sum: f64 = draws.iter().sum();
            if !sum.is_finite() || sum <= f64::MIN_POSITIVE {
                // Degenerate draw; fall back to equal proportions.
                return alloc::vec![1.0 / k as f64; k];
            }
            draws.into_iter().map(|d| d / sum).collect()
        }
    }
}

/// Splits `total` samples into `k` segments of at least
/// [`MIN_SEGMENT_LEN`], proportioned by a Dirichlet(alpha) draw. The
/// rounding residue goes to the largest fractional parts.
fn allocate_durations(total: usize, k: usize, alpha: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    assert!(total >= k * MIN_SEGMENT_LEN, "not enough samples for {k} segments");
    if k == 0 {
        return Vec::new();
    }
    let spare = total - k * MIN_SEGMENT_LEN;
    let proportions = dirichlet_symmetric(alpha, k, rng);
    let mut durations: Vec<usize> = Vec::with_capacity(k);
    let mut fractions: Vec<(usize, f64)> = Vec::with_capacity(k);
    let mut used = 0usize;
    for (i, p) in proportions.iter().enumerate() {
        let exact = p * spare as f64;
        let whole = libm::floor(exact) as usize;
        durations.push(MIN_SEGMENT_LEN + whole);
        fractions.push((i, exact - whole as f64));
        used += whole;
    }
    // Largest fractional parts first; ties to the earlier segment.
    fractions.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    for (i, _) in fractions.iter().take(spare - used) {
        durations[*i] += 1;
    }
    durations
}

/// Simulates one demonstration: segment durations from the Dirichlet
/// prior, Normal gaze around the target during actions, uniform gaze
/// over the table during transitions. The returned trace carries full
/// ground truth.
pub fn simulate_demo(
    scene: &Scene,
    script: &DemoScript,
    params: &FixationParams,
    seed: u64,
) -> FixationTrace {
    script.validate(scene).expect("script must be consistent with the scene");
    let steps = script.steps.len();
    let segments = 2 * steps - 1;
    let total = params.total_samples;
    assert!(
        total >= segments * MIN_SEGMENT_LEN,
        "trace of {total} samples cannot hold {segments} segments"
    );

    let mut rng = rng_for(seed, 0, 0);
    let transition_total = if steps == 1 {
        0
    } else {
        let raw = libm::round(params.transition_fraction * total as f64) as usize;
        raw.clamp(MIN_SEGMENT_LEN * (steps - 1), total - MIN_SEGMENT_LEN * steps)
    };
    let action_durs = allocate_durations(total - transition_total, steps, params.alpha, &mut rng);
    let transition_durs = if steps == 1 {
        Vec::new()
    } else {
        allocate_durations(transition_total, steps - 1, params.alpha, &mut rng)
    };

    let camera = Camera::Orthographic(scene.camera);
    let (width, height) = (scene.camera.image_width as f64, scene.camera.image_height as f64);
    let gaze_noise = if params.sigma_fix > 0.0 {
        Some(Normal::new(0.0, params.sigma_fix).expect("valid fixation sigma"))
    } else {
        None
    };

    let mut samples = Vec::with_capacity(total);
    let mut assignment = Vec::with_capacity(total);
    let mut changepoints = Vec::with_capacity(segments - 1);
    let mut t = 0usize;
    for seg in 0..segments {
        if seg > 0 {
            changepoints.push(t);
        }
        let action = seg % 2 == 0;
        let step = seg / 2;
        let duration = if action { action_durs[step] } else { transition_durs[step] };
        for _ in 0..duration {
            let gaze_px = if action {
                let center =
                    scene.camera.mm_to_px(script.steps[step].true_location_mm);
                let (dx, dy) = match &gaze_noise {
                    Some(noise) => (noise.sample(&mut rng), noise.sample(&mut rng)),
                    None => (0.0, 0.0),
                };
                (
                    (center.0 + dx).clamp(0.0, width - 1e-9),
                    (center.1 + dy).clamp(0.0, height - 1e-9),
                )
            } else {
                (rng.random::<f64>() * width, rng.random::<f64>() * height)
            };
            let gaze_mm = raycast_fixation(gaze_px, &camera).ok();
            samples.push(FixationSample { t, gaze_px, gaze_mm });
            assignment.push(if action { Assignment::Action(step) } else { Assignment::Transition });
            t += 1;
        }
    }
    debug_assert_eq!(t, total);

    FixationTrace { samples, truth: Some(SegmentTruth { changepoints, assignment }) }
}
