//! Labelled patch extraction and label-noise injection.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::features::{is_background_dominated, subtract_background, BackgroundParams};
use crate::plan::Plan;
use crate::rng::rng_for;
use crate::scene::{crop_patch, Raster, Scene};

/// Where a patch came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PatchSource {
    pub demo: usize,
    pub step: usize,
}

/// A small crop of one object with the symbols attached to it.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPatch {
    pub raster: Raster,
    /// The step's target symbols; non-empty.
    pub symbols: Vec<String>,
    pub source: PatchSource,
    /// Set by noise injection; bookkeeping hidden from the learner.
    pub corrupted: bool,
    /// Scene object the location snapped to, when one was close enough.
    pub snapped_object: Option<usize>,
}

/// Result of patch extraction; background-dominated crops are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchExtraction {
    pub patches: Vec<LabeledPatch>,
    pub dropped: usize,
}

/// Cuts one labelled patch per plan step at the inferred location.
///
/// The location snaps to the nearest object centre (ties to the lower
/// object id) when one lies within `patch_size` pixels; otherwise the
/// crop is taken at the raw location and usually discarded as
/// background. Each patch carries its step's target symbols.
pub fn extract_labeled_patches(
    frame: &Raster,
    scene: &Scene,
    plan: &Plan,
    locations_px: &[(f64, f64)],
    patch_size: usize,
    background: &BackgroundParams,
    demo: usize,
) -> PatchExtraction {
    assert_eq!(
        locations_px.len(),
        plan.steps.len(),
        "one location per plan step expected"
    );
    let mut patches = Vec::with_capacity(locations_px.len());
    let mut dropped = 0usize;
    for (step, &location) in locations_px.iter().enumerate() {
        let mut nearest: Option<(usize, f64, (f64, f64))> = None;
        for object in &scene.objects {
            let center = scene.camera.mm_to_px(object.center_mm);
            let (dx, dy) = (center.0 - location.0, center.1 - location.1);
            let dist = libm::sqrt(dx * dx + dy * dy);
            // Strict comparison keeps the lower id on exact ties.
            if nearest.map_or(true, |(_, best, _)| dist < best) {
                nearest = Some((object.id, dist, center));
            }
        }
        let (center, snapped_object) = match nearest {
            Some((id, dist, center)) if dist <= patch_size as f64 => (center, Some(id)),
            _ => (location, None),
        };
        let raster = crop_patch(frame, center, patch_size, scene.background_rgb);
        let mask = subtract_background(&raster, background.theta_bg);
        if is_background_dominated(&mask, background.theta_noise) {
            dropped += 1;
            continue;
        }
        patches.push(LabeledPatch {
            raster,
            symbols: plan.steps[step].target.clone(),
            source: PatchSource { demo, step },
            corrupted: false,
            snapped_object,
        });
    }
    PatchExtraction { patches, dropped }
}

/// Replaces each patch's symbols, independently with probability `rate`,
/// by the target symbols of a uniformly random different object class
/// from `classes`, and marks the patch corrupted.
pub fn inject_label_noise(
    mut patches: Vec<LabeledPatch>,
    classes: &[Vec<String>],
    rate: f64,
    seed: u64,
) -> Vec<LabeledPatch> {
    assert!((0.0..1.0).contains(&rate), "noise rate must lie in [0, 1)");
    if rate == 0.0 {
        return patches;
    }
    let mut rng = rng_for(seed, 0, 0);
    for patch in &mut patches {
        if rng.random::<f64>() >= rate {
            continue;
        }
        let candidates: Vec<&Vec<String>> =
            classes.iter().filter(|c| **c != patch.symbols).collect();
        if candidates.is_empty() {
            continue;
        }
        let choice = candidates[rng.random_range(0..candidates.len())];
        patch.symbols = choice.clone();
        patch.corrupted = true;
    }
    patches
}
