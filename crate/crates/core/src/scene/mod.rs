//! Synthetic tabletop scenes and overhead rendering.
//!
//! Scenes hold non-overlapping coloured construction blocks on a dark
//! table, viewed by an overhead orthographic camera. Rendering is exact
//! (no anti-aliasing), so foreground pixel counts are deterministic;
//! per-pixel noise is applied to object pixels only.

mod demo;
mod generate;

pub use demo::{
    simulate_demo, Assignment, DemoScript, DemoStep, FixationParams, FixationSample,
    FixationTrace, SegmentTruth, MIN_SEGMENT_LEN,
};
pub use generate::{generate_scene, ClassMix, SceneParams};

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub type Rgb = [u8; 3];

/// 8-bit RGB raster, row major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Raster {
    pub fn filled(width: usize, height: usize, fill: Rgb) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            data.extend_from_slice(&fill);
        }
        Self { width, height, data }
    }

    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Self {
        assert_eq!(data.len(), width * height * 3, "raster byte length mismatch");
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set(&mut self, x: usize, y: usize, rgb: Rgb) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn raw(&self) -> &[u8] {
        &self.data
    }

    /// Iterates pixels row major as `(x, y, rgb)`.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize, Rgb)> + '_ {
        (0..self.height).flat_map(move |y| (0..self.width).map(move |x| (x, y, self.get(x, y))))
    }
}

/// Colour class of an object. `Other` covers novel colours outside the
/// training vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ColourClass {
    Red,
    Blue,
    Yellow,
    Other,
}

impl ColourClass {
    pub const TRAINED: [ColourClass; 3] = [ColourClass::Red, ColourClass::Blue, ColourClass::Yellow];

    /// Base RGB prototype. The three trained colours are placed so that,
    /// in every channel, no class sees the other two at near-equal far
    /// distances; 2σ cleaning then separates mislabelled data reliably.
    pub fn prototype(self) -> Rgb {
        match self {
            ColourClass::Red => [153, 26, 26],
            ColourClass::Blue => [26, 89, 204],
            ColourClass::Yellow => [230, 204, 89],
            ColourClass::Other => [26, 204, 26],
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            ColourClass::Red => "red",
            ColourClass::Blue => "blue",
            ColourClass::Yellow => "yellow",
            ColourClass::Other => "other",
        }
    }
}

/// Shape class of an object; the footprint alone carries the shape
/// signal, matching the single pixel-area feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ShapeClass {
    Cell,
    Block,
    Cube,
    Other,
}

impl ShapeClass {
    pub const TRAINED: [ShapeClass; 3] = [ShapeClass::Cell, ShapeClass::Block, ShapeClass::Cube];

    /// Footprint in pixels (width, height).
    pub fn footprint(self) -> (u32, u32) {
        match self {
            ShapeClass::Cell => (12, 12),
            ShapeClass::Block => (24, 12),
            ShapeClass::Cube => (24, 24),
            ShapeClass::Other => (32, 16),
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            ShapeClass::Cell => "cell",
            ShapeClass::Block => "block",
            ShapeClass::Cube => "cube",
            ShapeClass::Other => "other",
        }
    }

    /// Cells render as rounded squares (the four corner pixels are cut);
    /// everything else is a plain rectangle.
    pub fn rounded(self) -> bool {
        matches!(self, ShapeClass::Cell)
    }
}

/// One object on the table.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SceneObject {
    pub id: usize,
    pub colour_class: ColourClass,
    pub shape_class: ShapeClass,
    pub base_rgb: Rgb,
    /// Footprint in pixels (width, height).
    pub footprint: (u32, u32),
    /// Centre position on the table, millimetres.
    pub center_mm: (f64, f64),
}

impl SceneObject {
    /// Target symbols describing this object: adjective then noun.
    pub fn symbols(&self) -> Vec<String> {
        alloc::vec![String::from(self.colour_class.symbol()), String::from(self.shape_class.symbol())]
    }

    /// Exact rendered foreground pixel count.
    pub fn pixel_area(&self) -> u32 {
        let (w, h) = self.footprint;
        if self.shape_class.rounded() {
            w * h - 4
        } else {
            w * h
        }
    }
}

/// Overhead orthographic camera: uniform scale, pixel (0,0) at table
/// origin.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OrthoCamera {
    pub px_per_mm: f64,
    pub image_width: usize,
    pub image_height: usize,
}

impl OrthoCamera {
    pub fn mm_to_px(&self, mm: (f64, f64)) -> (f64, f64) {
        (mm.0 * self.px_per_mm, mm.1 * self.px_per_mm)
    }

    pub fn px_to_mm(&self, px: (f64, f64)) -> (f64, f64) {
        (px.0 / self.px_per_mm, px.1 / self.px_per_mm)
    }
}

/// Camera models accepted by [`raycast_fixation`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Camera {
    Orthographic(OrthoCamera),
    /// Pinhole camera with explicit pose; used when gaze comes from a
    /// head-mounted view rather than the overhead frame.
    Pinhole {
        /// Optical centre in world coordinates (mm); the table is z = 0.
        origin: [f64; 3],
        /// Viewing direction.
        forward: [f64; 3],
        /// Up reference, not collinear with `forward`.
        up: [f64; 3],
        focal_px: f64,
        principal_px: [f64; 2],
    },
}

/// A full scene: table extent, objects, background, and camera.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scene {
    /// Table extent in millimetres.
    pub table_mm: (f64, f64),
    pub objects: Vec<SceneObject>,
    /// Near-black background; much darker than any object.
    pub background_rgb: Rgb,
    pub camera: OrthoCamera,
    /// Std of the per-pixel noise applied to object pixels.
    pub pixel_noise_sigma: f64,
    /// Seed for the rendering noise, fixed at generation time so
    /// rendering stays pure.
    pub noise_seed: u64,
}

impl Scene {
    /// Integer pixel rectangle `(x0, y0, x1, y1)` covered by an object;
    /// end-exclusive.
    pub fn object_rect_px(&self, object: &SceneObject) -> (i64, i64, i64, i64) {
        let (cx, cy) = self.camera.mm_to_px(object.center_mm);
        let (w, h) = object.footprint;
        let x0 = libm::round(cx) as i64 - (w as i64) / 2;
        let y0 = libm::round(cy) as i64 - (h as i64) / 2;
        (x0, y0, x0 + w as i64, y0 + h as i64)
    }

    /// Checks scene invariants: objects fully inside the image, pairwise
    /// disjoint, and background clearly darker than every object.
    pub fn validate(&self) -> Result<(), SceneError> {
        let (iw, ih) = (self.camera.image_width as i64, self.camera.image_height as i64);
        let bg_lum = luminance(self.background_rgb);
        let mut rects = Vec::with_capacity(self.objects.len());
        for object in &self.objects {
            let rect = self.object_rect_px(object);
            if rect.0 < 0 || rect.1 < 0 || rect.2 > iw || rect.3 > ih {
                return Err(SceneError::InvalidScene("object outside the image"));
            }
            if luminance(object.base_rgb) * 0.25 <= bg_lum {
                return Err(SceneError::InvalidScene("background too bright for an object"));
            }
            for other in &rects {
                if rects_overlap(rect, *other) {
                    return Err(SceneError::InvalidScene("objects overlap"));
                }
            }
            rects.push(rect);
        }
        Ok(())
    }
}

pub(crate) fn luminance(rgb: Rgb) -> f64 {
    (rgb[0] as f64 + rgb[1] as f64 + rgb[2] as f64) / 3.0
}

pub(crate) fn rects_overlap(a: (i64, i64, i64, i64), b: (i64, i64, i64, i64)) -> bool {
    a.0 < b.2 && b.0 < a.2 && a.1 < b.3 && b.1 < a.3
}

/// Scene construction and projection failures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SceneError {
    /// Rejection sampling could not place all objects.
    PlacementFailure { placed: usize, attempts: usize },
    /// Parameters violate a precondition.
    InvalidParams(&'static str),
    /// A constructed scene violates an invariant.
    InvalidScene(&'static str),
    /// Ray parallel to the table plane (or pointing away from it).
    NoIntersection,
}

impl fmt::Display for SceneError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SceneError::PlacementFailure { placed, attempts } => {
                write!(f, "placed only {placed} objects after {attempts} rejection attempts")
            }
            SceneError::InvalidParams(why) => write!(f, "invalid scene parameters: {why}"),
            SceneError::InvalidScene(why) => write!(f, "invalid scene: {why}"),
            SceneError::NoIntersection => write!(f, "ray does not intersect the table plane"),
        }
    }
}

impl core::error::Error for SceneError {}

/// Renders the overhead frame: background fill, then each object as its
/// footprint rectangle (rounded square for cells) in its jittered colour
/// with per-pixel noise on object pixels. Deterministic for a given
/// scene.
pub fn render_frame(scene: &Scene) -> Raster {
    let mut frame =
        Raster::filled(scene.camera.image_width, scene.camera.image_height, scene.background_rgb);
    let mut rng = ChaCha8Rng::seed_from_u64(scene.noise_seed);
    for object in &scene.objects {
        let rect = scene.object_rect_px(object);
        draw_object(&mut frame, rect, object.shape_class.rounded(), object.base_rgb, scene.pixel_noise_sigma, &mut rng);
    }
    frame
}

/// Draws one object footprint into `raster`, clipping to bounds.
/// Exposed within the crate so test-set patches render through the same
/// code path as scene frames.
pub(crate) fn draw_object(
    raster: &mut Raster,
    rect: (i64, i64, i64, i64),
    rounded: bool,
    rgb: Rgb,
    noise_sigma: f64,
    rng: &mut ChaCha8Rng,
) {
    let (x0, y0, x1, y1) = rect;
    let noise = if noise_sigma > 0.0 { Some(Normal::new(0.0, noise_sigma).unwrap()) } else { None };
    for y in y0..y1 {
        for x in x0..x1 {
            let corner = rounded
                && (x == x0 || x == x1 - 1)
                && (y == y0 || y == y1 - 1);
            if corner {
                continue;
            }
            if x < 0 || y < 0 || x >= raster.width() as i64 || y >= raster.height() as i64 {
                continue;
            }
            let mut px = rgb;
            if let Some(noise) = &noise {
                for channel in &mut px {
                    let v = *channel as f64 + noise.sample(rng);
                    *channel = libm::round(v.clamp(0.0, 255.0)) as u8;
                }
            }
            raster.set(x as usize, y as usize, px);
        }
    }
}

/// Cuts a `patch_size`-square crop centred on `center_px`, padding with
/// `pad` where the crop leaves the frame.
pub fn crop_patch(frame: &Raster, center_px: (f64, f64), patch_size: usize, pad: Rgb) -> Raster {
    let half = (patch_size / 2) as i64;
    let left = libm::round(center_px.0) as i64 - half;
    let top = libm::round(center_px.1) as i64 - half;
    let mut patch = Raster::filled(patch_size, patch_size, pad);
    for py in 0..patch_size as i64 {
        for px in 0..patch_size as i64 {
            let fx = left + px;
            let fy = top + py;
            if fx >= 0 && fy >= 0 && fx < frame.width() as i64 && fy < frame.height() as i64 {
                patch.set(px as usize, py as usize, frame.get(fx as usize, fy as usize));
            }
        }
    }
    patch
}

/// Projects a gaze pixel onto the table plane (z = 0), in millimetres.
///
/// For the overhead orthographic camera this is the inverse scale map;
/// for a pinhole camera the pixel ray is intersected with the plane.
pub fn raycast_fixation(gaze_px: (f64, f64), camera: &Camera) -> Result<[f64; 3], SceneError> {
    match camera {
        Camera::Orthographic(ortho) => {
            let (x, y) = ortho.px_to_mm(gaze_px);
            Ok([x, y, 0.0])
        }
        Camera::Pinhole { origin, forward, up, focal_px, principal_px } => {
            let right = cross(*forward, *up);
            let image_down = cross(*forward, right);
            let du = gaze_px.0 - principal_px[0];
            let dv = gaze_px.1 - principal_px[1];
            let dir = [
                forward[0] * focal_px + right[0] * du + image_down[0] * dv,
                forward[1] * focal_px + right[1] * du + image_down[1] * dv,
                forward[2] * focal_px + right[2] * du + image_down[2] * dv,
            ];
            if libm::fabs(dir[2]) < 1e-12 {
                return Err(SceneError::NoIntersection);
            }
            let t = -origin[2] / dir[2];
            if t <= 0.0 {
                return Err(SceneError::NoIntersection);
            }
            Ok([origin[0] + t * dir[0], origin[1] + t * dir[1], 0.0])
        }
    }
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_object_scene(shape: ShapeClass) -> Scene {
        Scene {
            table_mm: (200.0, 200.0),
            objects: alloc::vec![SceneObject {
                id: 0,
                colour_class: ColourClass::Red,
                shape_class: shape,
                base_rgb: ColourClass::Red.prototype(),
                footprint: shape.footprint(),
                center_mm: (100.0, 100.0),
            }],
            background_rgb: [10, 10, 10],
            camera: OrthoCamera { px_per_mm: 1.0, image_width: 200, image_height: 200 },
            pixel_noise_sigma: 3.0,
            noise_seed: 11,
        }
    }

    fn foreground_count(frame: &Raster) -> usize {
        frame.pixels().filter(|(_, _, rgb)| rgb.iter().copied().max().unwrap() > 60).count()
    }

    #[test]
    fn empty_scene_renders_uniform_background() {
        let mut scene = one_object_scene(ShapeClass::Cube);
        scene.objects.clear();
        let frame = render_frame(&scene);
        assert!(frame.pixels().all(|(_, _, rgb)| rgb == [10, 10, 10]));
    }

    #[test]
    fn foreground_pixel_count_is_exact() {
        let scene = one_object_scene(ShapeClass::Cube);
        let frame = render_frame(&scene);
        assert_eq!(foreground_count(&frame), 24 * 24);

        let scene = one_object_scene(ShapeClass::Cell);
        let frame = render_frame(&scene);
        // Rounded square: the four corner pixels are cut.
        assert_eq!(foreground_count(&frame), 12 * 12 - 4);
    }

    #[test]
    fn foreground_histogram_peaks_near_base_colour() {
        let scene = one_object_scene(ShapeClass::Cube);
        let frame = render_frame(&scene);
        let mut histogram = [0usize; 256];
        for (_, _, rgb) in frame.pixels() {
            if rgb.iter().copied().max().unwrap() > 60 {
                histogram[rgb[0] as usize] += 1;
            }
        }
        let peak = histogram.iter().enumerate().max_by_key(|(_, c)| **c).unwrap().0 as f64;
        let base = ColourClass::Red.prototype()[0] as f64;
        assert!((peak - base).abs() <= 2.0 * scene.pixel_noise_sigma);
    }

    #[test]
    fn rendering_is_deterministic() {
        let scene = one_object_scene(ShapeClass::Block);
        assert_eq!(render_frame(&scene), render_frame(&scene));
    }

    #[test]
    fn crop_centred_on_object_contains_it() {
        let scene = one_object_scene(ShapeClass::Cube);
        let frame = render_frame(&scene);
        let patch = crop_patch(&frame, (100.0, 100.0), 48, scene.background_rgb);
        assert_eq!(patch.width(), 48);
        assert_eq!(foreground_count(&patch), 24 * 24);
    }

    #[test]
    fn crop_at_corner_pads_to_size() {
        let scene = one_object_scene(ShapeClass::Cube);
        let frame = render_frame(&scene);
        let patch = crop_patch(&frame, (0.0, 0.0), 48, [10, 10, 10]);
        assert_eq!((patch.width(), patch.height()), (48, 48));
        assert_eq!(patch.get(0, 0), [10, 10, 10]);
    }

    #[test]
    fn crop_on_empty_table_is_background() {
        let scene = one_object_scene(ShapeClass::Cube);
        let frame = render_frame(&scene);
        let patch = crop_patch(&frame, (30.0, 30.0), 48, scene.background_rgb);
        let bg = patch.pixels().filter(|(_, _, rgb)| rgb.iter().copied().max().unwrap() <= 60).count();
        assert!(bg as f64 >= 0.95 * (48.0 * 48.0));
    }

    #[test]
    fn orthographic_raycast_inverts_the_scale() {
        let camera = Camera::Orthographic(OrthoCamera {
            px_per_mm: 2.0,
            image_width: 400,
            image_height: 400,
        });
        assert_eq!(raycast_fixation((100.0, 50.0), &camera).unwrap(), [50.0, 25.0, 0.0]);
    }

    #[test]
    fn pinhole_above_center_maps_principal_point_to_center() {
        let camera = Camera::Pinhole {
            origin: [100.0, 100.0, 500.0],
            forward: [0.0, 0.0, -1.0],
            up: [0.0, 1.0, 0.0],
            focal_px: 300.0,
            principal_px: [320.0, 240.0],
        };
        let point = raycast_fixation((320.0, 240.0), &camera).unwrap();
        assert!((point[0] - 100.0).abs() < 1e-9);
        assert!((point[1] - 100.0).abs() < 1e-9);
        assert_eq!(point[2], 0.0);
    }

    #[test]
    fn parallel_ray_has_no_intersection() {
        let camera = Camera::Pinhole {
            origin: [0.0, 0.0, 500.0],
            forward: [1.0, 0.0, 0.0],
            up: [0.0, 0.0, 1.0],
            focal_px: 300.0,
            principal_px: [320.0, 240.0],
        };
        assert_eq!(
            raycast_fixation((320.0, 240.0), &camera).unwrap_err(),
            SceneError::NoIntersection
        );
    }

    #[test]
    fn validate_accepts_the_test_scene() {
        one_object_scene(ShapeClass::Cube).validate().unwrap();
    }

    #[test]
    fn validate_rejects_out_of_image_objects() {
        let mut scene = one_object_scene(ShapeClass::Cube);
        scene.objects[0].center_mm = (5.0, 5.0);
        assert!(scene.validate().is_err());
    }
}
