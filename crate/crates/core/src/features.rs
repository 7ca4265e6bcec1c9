//! Feature extraction: background subtraction, normalized
//! `[R, G, B, area]` vectors, and per-symbol grouping.
//!
//! An image patch holds one solid coloured object on a dark background.
//! Foreground pixels are found by thresholding the maximum channel and
//! keeping the largest 4-connected component; patches that are only or
//! predominantly background are noise and get discarded.

use alloc::collections::BTreeMap;
use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::scene::Raster;
use crate::segment::LabeledPatch;

/// Background separation thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct BackgroundParams {
    /// A pixel is foreground iff its maximum channel exceeds this.
    pub theta_bg: u8,
    /// A mask is background dominated iff its foreground fraction is
    /// below this.
    pub theta_noise: f64,
}

impl Default for BackgroundParams {
    fn default() -> Self {
        Self { theta_bg: 60, theta_noise: 0.02 }
    }
}

/// The fixed feature set F, in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Feature {
    R,
    G,
    B,
    #[cfg_attr(feature = "serde", serde(rename = "area"))]
    Area,
}

impl Feature {
    pub const ALL: [Feature; 4] = [Feature::R, Feature::G, Feature::B, Feature::Area];
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        match self {
            Feature::R => 0,
            Feature::G => 1,
            Feature::B => 2,
            Feature::Area => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Feature::R => "R",
            Feature::G => "G",
            Feature::B => "B",
            Feature::Area => "area",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "R" => Feature::R,
            "G" => Feature::G,
            "B" => Feature::B,
            "area" => Feature::Area,
            _ => return None,
        })
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Normalized feature vector; every entry lies in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureVector([f64; 4]);

impl FeatureVector {
    pub fn new(values: [f64; 4]) -> Self {
        for (i, v) in values.iter().enumerate() {
            assert!(
                (0.0..=1.0).contains(v),
                "feature {} = {v} outside [0, 1]",
                Feature::ALL[i]
            );
        }
        Self(values)
    }

    pub fn values(&self) -> [f64; 4] {
        self.0
    }

    pub fn get(&self, feature: Feature) -> f64 {
        self.0[feature.index()]
    }
}

/// Boolean foreground mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn foreground_count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn foreground_fraction(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.foreground_count() as f64 / self.data.len() as f64
    }
}

/// Raw (pre-normalization) features of a masked patch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawFeatures {
    /// Mean R, G, B over foreground pixels, in 0..=255.
    pub mean_rgb: [f64; 3],
    /// Foreground pixel count.
    pub area_px: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureError {
    /// The mask has no foreground pixels.
    EmptyForeground,
}

impl fmt::Display for FeatureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureError::EmptyForeground => write!(f, "mask has no foreground pixels"),
        }
    }
}

impl core::error::Error for FeatureError {}

/// Thresholds the maximum channel against `theta_bg` and keeps only the
/// largest 4-connected foreground component (ties go to the component
/// found first in scan order).
pub fn subtract_background(raster: &Raster, theta_bg: u8) -> Mask {
    let (width, height) = (raster.width(), raster.height());
    let mut fg = alloc::vec![false; width * height];
    for (x, y, rgb) in raster.pixels() {
        fg[y * width + x] = rgb.iter().copied().max().unwrap_or(0) > theta_bg;
    }

    // Label components, remember the largest.
    let mut label = alloc::vec![0u32; width * height];
    let mut next_label = 0u32;
    let mut best: Option<(u32, usize)> = None;
    let mut queue = VecDeque::new();
    for start in 0..fg.len() {
        if !fg[start] || label[start] != 0 {
            continue;
        }
        next_label += 1;
        let mut size = 0usize;
        label[start] = next_label;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            size += 1;
            let (x, y) = (i % width, i / width);
            let mut push = |nx: usize, ny: usize| {
                let j = ny * width + nx;
                if fg[j] && label[j] == 0 {
                    label[j] = next_label;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                push(x - 1, y);
            }
            if x + 1 < width {
                push(x + 1, y);
            }
            if y > 0 {
                push(x, y - 1);
            }
            if y + 1 < height {
                push(x, y + 1);
            }
        }
        if best.map_or(true, |(_, best_size)| size > best_size) {
            best = Some((next_label, size));
        }
    }

    let data = match best {
        Some((keep, _)) => label.iter().map(|&l| l == keep).collect(),
        None => alloc::vec![false; width * height],
    };
    Mask { width, height, data }
}

/// True when the foreground fraction falls below `theta_noise`.
pub fn is_background_dominated(mask: &Mask, theta_noise: f64) -> bool {
    mask.foreground_fraction() < theta_noise
}

/// Mean channel values and pixel count over the foreground.
pub fn extract_features(raster: &Raster, mask: &Mask) -> Result<RawFeatures, FeatureError> {
    debug_assert_eq!((raster.width(), raster.height()), (mask.width(), mask.height()));
    let mut sums = [0.0f64; 3];
    let mut count = 0usize;
    for (x, y, rgb) in raster.pixels() {
        if mask.get(x, y) {
            for (sum, v) in sums.iter_mut().zip(rgb.iter()) {
                *sum += *v as f64;
            }
            count += 1;
        }
    }
    if count == 0 {
        return Err(FeatureError::EmptyForeground);
    }
    Ok(RawFeatures {
        mean_rgb: [sums[0] / count as f64, sums[1] / count as f64, sums[2] / count as f64],
        area_px: count,
    })
}

/// Fixed physical normalization: channels over 255, area over the patch
/// pixel count; clamped to [0, 1].
pub fn normalize(raw: &RawFeatures, patch_size: usize) -> FeatureVector {
    let denom = (patch_size * patch_size) as f64;
    FeatureVector::new([
        (raw.mean_rgb[0] / 255.0).clamp(0.0, 1.0),
        (raw.mean_rgb[1] / 255.0).clamp(0.0, 1.0),
        (raw.mean_rgb[2] / 255.0).clamp(0.0, 1.0),
        (raw.area_px as f64 / denom).clamp(0.0, 1.0),
    ])
}

/// Full per-patch pipeline; `None` when the patch is background
/// dominated (noise) or has no foreground at all.
pub fn featurize(raster: &Raster, patch_size: usize, params: &BackgroundParams) -> Option<FeatureVector> {
    let mask = subtract_background(raster, params.theta_bg);
    if is_background_dominated(&mask, params.theta_noise) {
        return None;
    }
    let raw = extract_features(raster, &mask).ok()?;
    Some(normalize(&raw, patch_size))
}

/// Per-symbol lists of feature vectors: `Data[s]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureDataset {
    data: BTreeMap<String, Vec<FeatureVector>>,
}

impl FeatureDataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, symbol: &str, vector: FeatureVector) {
        self.data.entry(String::from(symbol)).or_default().push(vector);
    }

    pub fn get(&self, symbol: &str) -> &[FeatureVector] {
        self.data.get(symbol).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Symbols in lexicographic order.
    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.data.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[FeatureVector])> {
        self.data.iter().map(|(s, v)| (s.as_str(), v.as_slice()))
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Total vector count over all symbols (multi-labelled patches count
    /// once per symbol).
    pub fn total_vectors(&self) -> usize {
        self.data.values().map(Vec::len).sum()
    }
}

/// Featurizes each patch and appends the vector to `Data[s]` for every
/// symbol the patch is labelled with. Background-dominated patches are
/// skipped; the skip count is returned alongside the dataset.
pub fn group_by_symbol(
    patches: &[LabeledPatch],
    patch_size: usize,
    params: &BackgroundParams,
) -> (FeatureDataset, usize) {
    let mut dataset = FeatureDataset::new();
    let mut skipped = 0usize;
    for patch in patches {
        match featurize(&patch.raster, patch_size, params) {
            Some(vector) => {
                for symbol in &patch.symbols {
                    dataset.push(symbol, vector);
                }
            }
            None => skipped += 1,
        }
    }
    (dataset, skipped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Raster;

    fn patch_with_rect(size: usize, rect: (usize, usize, usize, usize), rgb: [u8; 3]) -> Raster {
        let mut raster = Raster::filled(size, size, [10, 10, 10]);
        for y in rect.1..rect.3 {
            for x in rect.0..rect.2 {
                raster.set(x, y, rgb);
            }
        }
        raster
    }

    #[test]
    fn uniform_background_gives_empty_mask() {
        let raster = Raster::filled(32, 32, [10, 10, 10]);
        let mask = subtract_background(&raster, 60);
        assert_eq!(mask.foreground_count(), 0);
        assert!(is_background_dominated(&mask, 0.02));
    }

    #[test]
    fn centered_object_mask_is_exact() {
        let raster = patch_with_rect(64, (20, 20, 44, 44), [200, 30, 30]);
        let mask = subtract_background(&raster, 60);
        assert_eq!(mask.foreground_count(), 24 * 24);
    }

    #[test]
    fn only_largest_component_is_kept() {
        let mut raster = patch_with_rect(64, (10, 10, 30, 30), [200, 30, 30]);
        // A stray sliver elsewhere.
        for x in 50..56 {
            raster.set(x, 50, [200, 30, 30]);
        }
        let mask = subtract_background(&raster, 60);
        assert_eq!(mask.foreground_count(), 20 * 20);
        assert!(!mask.get(52, 50));
    }

    #[test]
    fn domination_thresholds() {
        let raster = patch_with_rect(64, (0, 0, 45, 46), [200, 30, 30]);
        let mask = subtract_background(&raster, 60);
        // 2070 of 4096 pixels: about half foreground.
        assert!(!is_background_dominated(&mask, 0.02));

        let raster = patch_with_rect(64, (0, 0, 41, 1), [200, 30, 30]);
        let mask = subtract_background(&raster, 60);
        // 41/4096 = 1.0%: dominated at the 2% threshold.
        assert!(is_background_dominated(&mask, 0.02));
    }

    #[test]
    fn raw_features_match_exact_synthetic_patch() {
        let raster = patch_with_rect(64, (20, 20, 32, 32), [200, 30, 30]);
        let mask = subtract_background(&raster, 60);
        let raw = extract_features(&raster, &mask).unwrap();
        assert_eq!(raw.mean_rgb, [200.0, 30.0, 30.0]);
        assert_eq!(raw.area_px, 144);
    }

    #[test]
    fn background_pixels_do_not_affect_features() {
        let small = patch_with_rect(48, (10, 10, 22, 22), [200, 30, 30]);
        let big = patch_with_rect(64, (20, 20, 32, 32), [200, 30, 30]);
        let raw_small =
            extract_features(&small, &subtract_background(&small, 60)).unwrap();
        let raw_big = extract_features(&big, &subtract_background(&big, 60)).unwrap();
        assert_eq!(raw_small.mean_rgb, raw_big.mean_rgb);
        assert_eq!(raw_small.area_px, raw_big.area_px);
    }

    #[test]
    fn empty_foreground_is_an_error() {
        let raster = Raster::filled(32, 32, [10, 10, 10]);
        let mask = subtract_background(&raster, 60);
        assert_eq!(extract_features(&raster, &mask).unwrap_err(), FeatureError::EmptyForeground);
    }

    #[test]
    fn normalize_hits_endpoints() {
        let raw = RawFeatures { mean_rgb: [255.0, 0.0, 0.0], area_px: 64 * 64 };
        assert_eq!(normalize(&raw, 64).values(), [1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn normalize_matches_hand_arithmetic() {
        let raw = RawFeatures { mean_rgb: [200.0, 30.0, 30.0], area_px: 144 };
        let v = normalize(&raw, 64).values();
        let expected = [0.784, 0.118, 0.118, 0.0352];
        for (got, want) in v.iter().zip(expected.iter()) {
            assert!((got - want).abs() < 1e-3, "{got} vs {want}");
        }
    }

    #[test]
    fn feature_vector_rejects_out_of_range() {
        let result = std::panic::catch_unwind(|| FeatureVector::new([0.0, 0.0, 0.0, 1.5]));
        assert!(result.is_err());
    }
}
