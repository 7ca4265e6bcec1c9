//! Seeded scene generation by rejection sampling.

use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{
    luminance, rects_overlap, ColourClass, OrthoCamera, Scene, SceneError, SceneObject, ShapeClass,
};

/// Weighted colour/shape mix for generated objects.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassMix {
    pub colours: Vec<(ColourClass, f64)>,
    pub shapes: Vec<(ShapeClass, f64)>,
}

impl Default for ClassMix {
    /// Uniform over the three trained colours and three trained shapes.
    fn default() -> Self {
        let w = 1.0 / 3.0;
        Self {
            colours: ColourClass::TRAINED.iter().map(|c| (*c, w)).collect(),
            shapes: ShapeClass::TRAINED.iter().map(|s| (*s, w)).collect(),
        }
    }
}

impl ClassMix {
    fn validate(&self) -> Result<(), SceneError> {
        let colour_sum: f64 = self.colours.iter().map(|(_, w)| w).sum();
        let shape_sum: f64 = self.shapes.iter().map(|(_, w)| w).sum();
        if !(0.99..=1.01).contains(&colour_sum) || !(0.99..=1.01).contains(&shape_sum) {
            return Err(SceneError::InvalidParams("mix weights must sum to 1"));
        }
        let negative = self.colours.iter().any(|(_, w)| *w < 0.0)
            || self.shapes.iter().any(|(_, w)| *w < 0.0);
        if negative {
            return Err(SceneError::InvalidParams("mix weights must be non-negative"));
        }
        Ok(())
    }

    /// All `(colour, shape)` pairs with non-zero weight, in declaration
    /// order.
    pub fn classes(&self) -> Vec<(ColourClass, ShapeClass)> {
        let mut out = Vec::new();
        for (colour, wc) in &self.colours {
            for (shape, ws) in &self.shapes {
                if wc * ws > 0.0 {
                    out.push((*colour, *shape));
                }
            }
        }
        out
    }
}

/// Parameters for [`generate_scene`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SceneParams {
    pub n_objects: usize,
    pub mix: ClassMix,
    /// Sample classes without replacement while possible, so class
    /// symbols identify objects unambiguously.
    pub distinct_classes: bool,
    /// Minimum distance between object centres, pixels. The default
    /// keeps demonstration targets well separated.
    pub min_center_dist_px: f64,
    /// Minimum distance of object centres from the image border, pixels.
    pub border_margin_px: f64,
    pub image_width: usize,
    pub image_height: usize,
    pub px_per_mm: f64,
    pub background_rgb: [u8; 3],
    /// Per-channel std of the per-object colour jitter.
    pub colour_jitter_sigma: f64,
    /// Per-pixel rendering noise std.
    pub pixel_noise_sigma: f64,
    /// Total rejection budget before giving up.
    pub max_rejections: usize,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            n_objects: 6,
            mix: ClassMix::default(),
            distinct_classes: true,
            min_center_dist_px: 150.0,
            border_margin_px: 40.0,
            image_width: 640,
            image_height: 480,
            px_per_mm: 1.0,
            background_rgb: [10, 10, 10],
            colour_jitter_sigma: 8.0,
            pixel_noise_sigma: 3.0,
            max_rejections: 10_000,
        }
    }
}

fn weighted_choice<T: Copy>(items: &[(T, f64)], rng: &mut ChaCha8Rng) -> T {
    let total: f64 = items.iter().map(|(_, w)| w).sum();
    let mut draw = rng.random::<f64>() * total;
    for (item, w) in items {
        draw -= w;
        if draw <= 0.0 {
            return *item;
        }
    }
    items.last().expect("non-empty weighted items").0
}

/// Generates a scene deterministically from `seed`.
///
/// Object classes follow the mix (without replacement while
/// `distinct_classes` holds and unused classes remain); positions come
/// from rejection sampling under the centre-distance and border-margin
/// constraints. Fails with [`SceneError::PlacementFailure`] once the
/// rejection budget is spent.
pub fn generate_scene(params: &SceneParams, seed: u64) -> Result<Scene, SceneError> {
    if params.n_objects == 0 {
        return Err(SceneError::InvalidParams("n_objects must be at least 1"));
    }
    params.mix.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Classes first so placement retries cannot disturb class draws.
    let mut classes: Vec<(ColourClass, ShapeClass)> = Vec::with_capacity(params.n_objects);
    let mut unused = params.mix.classes();
    for _ in 0..params.n_objects {
        if params.distinct_classes && !unused.is_empty() {
            // Weight of a pair is the product of its marginal weights.
            let weights: Vec<((ColourClass, ShapeClass), f64)> = unused
                .iter()
                .map(|&(c, s)| {
                    let wc = params.mix.colours.iter().find(|(cc, _)| *cc == c).map_or(0.0, |(_, w)| *w);
                    let ws = params.mix.shapes.iter().find(|(ss, _)| *ss == s).map_or(0.0, |(_, w)| *w);
                    ((c, s), wc * ws)
                })
                .collect();
            let chosen = weighted_choice(&weights, &mut rng);
            unused.retain(|&pair| pair != chosen);
            classes.push(chosen);
        } else {
            let colour = weighted_choice(&params.mix.colours, &mut rng);
            let shape = weighted_choice(&params.mix.shapes, &mut rng);
            classes.push((colour, shape));
        }
    }

    let jitter = Normal::new(0.0, params.colour_jitter_sigma)
        .map_err(|_| SceneError::InvalidParams("colour jitter sigma must be finite and >= 0"))?;
    let bg_lum = luminance(params.background_rgb);

    let x_range = params.border_margin_px..=(params.image_width as f64 - params.border_margin_px);
    let y_range = params.border_margin_px..=(params.image_height as f64 - params.border_margin_px);
    if x_range.is_empty() || y_range.is_empty() {
        return Err(SceneError::InvalidParams("margins leave no room for objects"));
    }

    // Rejection sampling with full restarts; a greedy sequence can paint
    // itself into a corner even when valid layouts exist.
    let mut attempts = 0usize;
    let mut centers: Vec<(f64, f64)> = Vec::with_capacity(params.n_objects);
    let mut rects: Vec<(i64, i64, i64, i64)> = Vec::with_capacity(params.n_objects);
    const RESTART_AFTER: usize = 300;
    let mut consecutive_failures = 0usize;
    while centers.len() < params.n_objects {
        if attempts >= params.max_rejections {
            return Err(SceneError::PlacementFailure { placed: centers.len(), attempts });
        }
        attempts += 1;
        let cx = rng.random_range(x_range.clone());
        let cy = rng.random_range(y_range.clone());
        let (w, h) = classes[centers.len()].1.footprint();
        let x0 = libm::round(cx) as i64 - (w as i64) / 2;
        let y0 = libm::round(cy) as i64 - (h as i64) / 2;
        let rect = (x0, y0, x0 + w as i64, y0 + h as i64);
        let ok = centers.iter().all(|&(ox, oy)| {
            let (dx, dy) = (cx - ox, cy - oy);
            libm::sqrt(dx * dx + dy * dy) >= params.min_center_dist_px
        }) && rects.iter().all(|&other| !rects_overlap(grow(rect, 2), other))
            && rect.0 >= 0
            && rect.1 >= 0
            && rect.2 <= params.image_width as i64
            && rect.3 <= params.image_height as i64;
        if ok {
            centers.push((cx, cy));
            rects.push(rect);
            consecutive_failures = 0;
        } else {
            consecutive_failures += 1;
            if consecutive_failures >= RESTART_AFTER {
                centers.clear();
                rects.clear();
                consecutive_failures = 0;
            }
        }
    }

    let mut objects = Vec::with_capacity(params.n_objects);
    for (id, (&(colour, shape), &(cx, cy))) in classes.iter().zip(centers.iter()).enumerate() {
        let proto = colour.prototype();
        let mut base = [0u8; 3];
        for (b, p) in base.iter_mut().zip(proto.iter()) {
            let v = *p as f64 + jitter.sample(&mut rng);
            *b = libm::round(v.clamp(0.0, 255.0)) as u8;
        }
        if luminance(base) * 0.25 <= bg_lum {
            // Jitter drove the object implausibly dark; clamp it back up.
            base = proto;
        }
        objects.push(SceneObject {
            id,
            colour_class: colour,
            shape_class: shape,
            base_rgb: base,
            footprint: shape.footprint(),
            center_mm: (cx / params.px_per_mm, cy / params.px_per_mm),
        });
    }

    let scene = Scene {
        table_mm: (
            params.image_width as f64 / params.px_per_mm,
            params.image_height as f64 / params.px_per_mm,
        ),
        objects,
        background_rgb: params.background_rgb,
        camera: OrthoCamera {
            px_per_mm: params.px_per_mm,
            image_width: params.image_width,
            image_height: params.image_height,
        },
        pixel_noise_sigma: params.pixel_noise_sigma,
        noise_seed: rng.random(),
    };
    scene.validate()?;
    Ok(scene)
}

fn grow(rect: (i64, i64, i64, i64), by: i64) -> (i64, i64, i64, i64) {
    (rect.0 - by, rect.1 - by, rect.2 + by, rect.3 + by)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_generation_is_deterministic() {
        let params = SceneParams::default();
        let a = generate_scene(&params, 7).unwrap();
        let b = generate_scene(&params, 7).unwrap();
        assert_eq!(a, b);
        let c = generate_scene(&params, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn forced_mix_produces_one_blue_cube() {
        let params = SceneParams {
            n_objects: 1,
            mix: ClassMix {
                colours: alloc::vec![(ColourClass::Blue, 1.0)],
                shapes: alloc::vec![(ShapeClass::Cube, 1.0)],
            },
            ..SceneParams::default()
        };
        for seed in 0..5 {
            let scene = generate_scene(&params, seed).unwrap();
            assert_eq!(scene.objects.len(), 1);
            assert_eq!(scene.objects[0].colour_class, ColourClass::Blue);
            assert_eq!(scene.objects[0].shape_class, ShapeClass::Cube);
        }
    }

    #[test]
    fn impossible_packing_fails() {
        let params = SceneParams {
            n_objects: 500,
            distinct_classes: false,
            image_width: 100,
            image_height: 100,
            border_margin_px: 15.0,
            min_center_dist_px: 30.0,
            ..SceneParams::default()
        };
        assert!(matches!(
            generate_scene(&params, 1),
            Err(SceneError::PlacementFailure { .. })
        ));
    }

    #[test]
    fn objects_respect_distance_and_bounds() {
        let scene = generate_scene(&SceneParams::default(), 42).unwrap();
        scene.validate().unwrap();
        for a in &scene.objects {
            for b in &scene.objects {
                if a.id < b.id {
                    let (ax, ay) = scene.camera.mm_to_px(a.center_mm);
                    let (bx, by) = scene.camera.mm_to_px(b.center_mm);
                    let dist = libm::sqrt((ax - bx) * (ax - bx) + (ay - by) * (ay - by));
                    assert!(dist >= 150.0, "objects {} and {} too close: {dist}", a.id, b.id);
                }
            }
        }
    }

    #[test]
    fn distinct_classes_do_not_repeat() {
        let scene = generate_scene(&SceneParams::default(), 3).unwrap();
        for a in &scene.objects {
            for b in &scene.objects {
                if a.id < b.id {
                    assert!(
                        (a.colour_class, a.shape_class) != (b.colour_class, b.shape_class),
                        "classes repeat"
                    );
                }
            }
        }
    }

    #[test]
    fn zero_objects_is_invalid() {
        let params = SceneParams { n_objects: 0, ..SceneParams::default() };
        assert_eq!(
            generate_scene(&params, 0).unwrap_err(),
            SceneError::InvalidParams("n_objects must be at least 1")
        );
    }
}
