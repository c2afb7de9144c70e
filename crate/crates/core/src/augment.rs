//! Image augmentations for observation stacks: additive Gaussian noise,
//! mirror-padded translation and rotation, and CIELab colour jitter.
//!
//! Operators work on `[0, 1]` floats internally and quantize back to RGB8 at
//! the boundary. `augment_stack` composes them in the fixed order
//! translate → rotate → colour jitter → noise and quantizes once.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::hash::{hash64, rng_from};
use crate::render::{Frame, Observation, FRAME_BYTES, FRAME_SIZE, STACK_DEPTH};

const NOISE_TAG: u64 = 0x6E6F_6973_65;
const STACK_TAG: u64 = 0x6175_676D;

/// Largest shift accepted by [`translate`], in pixels (5% of 96).
pub const MAX_TRANSLATE_PX: f64 = 0.05 * FRAME_SIZE as f64;
pub const MAX_ROTATE_DEG: f64 = 5.0;
pub const LUM_SCALE_BOUNDS: (f64, f64) = (0.99, 1.01);
pub const MAX_AB_ANGLE: f64 = 0.15;
pub const DEFAULT_NOISE_STD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentationParams {
    /// Standard deviation on the `[0, 1]` intensity scale.
    pub noise_std: f64,
    /// Maximum shift as a fraction of the frame side.
    pub max_translate_frac: f64,
    pub max_rotate_deg: f64,
    pub lum_scale_range: (f64, f64),
    /// Maximum absolute rotation of the (a, b) plane, radians.
    pub ab_rotate_range: f64,
}

impl Default for AugmentationParams {
    fn default() -> Self {
        Self {
            noise_std: DEFAULT_NOISE_STD,
            max_translate_frac: 0.05,
            max_rotate_deg: MAX_ROTATE_DEG,
            lum_scale_range: LUM_SCALE_BOUNDS,
            ab_rotate_range: MAX_AB_ANGLE,
        }
    }
}

impl AugmentationParams {
    /// Parameters under which `augment_stack` leaves its input unchanged.
    pub fn identity() -> Self {
        Self {
            noise_std: 0.0,
            max_translate_frac: 0.0,
            max_rotate_deg: 0.0,
            lum_scale_range: (1.0, 1.0),
            ab_rotate_range: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("augmentation {what} out of range")));
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return bad("noise_std");
        }
        if !(0.0..=0.05).contains(&self.max_translate_frac) {
            return bad("max_translate_frac");
        }
        if !(0.0..=MAX_ROTATE_DEG).contains(&self.max_rotate_deg) {
            return bad("max_rotate_deg");
        }
        let (lo, hi) = self.lum_scale_range;
        if !(LUM_SCALE_BOUNDS.0 <= lo && lo <= hi && hi <= LUM_SCALE_BOUNDS.1) {
            return bad("lum_scale_range");
        }
        if !(0.0..=MAX_AB_ANGLE).contains(&self.ab_rotate_range) {
            return bad("ab_rotate_range");
        }
        Ok(())
    }
}

/// One draw of the per-stack transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledAugmentation {
    pub dx: f64,
    pub dy: f64,
    pub angle_deg: f64,
    pub lum_scale: f64,
    pub ab_angle: f64,
    pub noise_std: f64,
    /// Independent noise field per frame.
    pub noise_seeds: [u64; STACK_DEPTH],
}

/// Draws the transform that `augment_stack(_, seed, params)` applies.
pub fn sample_augmentation(seed: u64, params: &AugmentationParams) -> Result<SampledAugmentation> {
    params.validate()?;
    let mut rng = rng_from(&[STACK_TAG, seed]);
    let mut sym = |m: f64| if m > 0.0 { rng.random_range(-m..=m) } else { 0.0 };
    let max_shift = params.max_translate_frac * FRAME_SIZE as f64;
    let dx = sym(max_shift);
    let dy = sym(max_shift);
    let angle_deg = sym(params.max_rotate_deg);
    let ab_angle = sym(params.ab_rotate_range);
    let (lo, hi) = params.lum_scale_range;
    let lum_scale = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    Ok(SampledAugmentation {
        dx,
        dy,
        angle_deg,
        lum_scale,
        ab_angle,
        noise_std: params.noise_std,
        noise_seeds: std::array::from_fn(|i| hash64(&[NOISE_TAG, seed, i as u64])),
    })
}

/// Applies one sampled transform to every frame of a stack.
pub fn apply_augmentation(obs: &Observation, aug: &SampledAugmentation) -> Result<Observation> {
    let mut frames = obs.frames.clone();
    for (f, noise_seed) in frames.iter_mut().zip(aug.noise_seeds) {
        let mut img = Image::from_frame(f);
        img = img.translate(aug.dx, aug.dy)?;
        img = img.rotate(aug.angle_deg)?;
        img.colour_jitter(aug.lum_scale, aug.ab_angle)?;
        img.add_noise(noise_seed, aug.noise_std);
        *f = img.to_frame();
    }
    Ok(Observation { frames, view: obs.view })
}

/// Samples one transform from `seed` and applies it to all four frames.
pub fn augment_stack(obs: &Observation, seed: u64, params: &AugmentationParams) -> Result<Observation> {
    apply_augmentation(obs, &sample_augmentation(seed, params)?)
}

/// Adds `N(0, 0.01²)` noise independently to every channel.
pub fn gaussian_noise(frame: &Frame, seed: u64) -> Frame {
    gaussian_noise_with_std(frame, seed, DEFAULT_NOISE_STD)
}

pub fn gaussian_noise_with_std(frame: &Frame, seed: u64, std: f64) -> Frame {
    let mut img = Image::from_frame(frame);
    img.add_noise(seed, std);
    img.to_frame()
}

/// Shifts content right by `dx` and down by `dy` pixels, mirror-padding the exposed border.
pub fn translate(frame: &Frame, dx: f64, dy: f64) -> Result<Frame> {
    Ok(Image::from_frame(frame).translate(dx, dy)?.to_frame())
}

/// Rotates counter-clockwise about the frame centre, mirror-padding corners.
pub fn rotate(frame: &Frame, angle_deg: f64) -> Result<Frame> {
    Ok(Image::from_frame(frame).rotate(angle_deg)?.to_frame())
}

/// Scales CIELab lightness and rotates the (a, b) plane.
pub fn colour_jitter(frame: &Frame, lum_scale: f64, ab_angle: f64) -> Result<Frame> {
    let mut img = Image::from_frame(frame);
    img.colour_jitter(lum_scale, ab_angle)?;
    Ok(img.to_frame())
}

/// A 96×96×3 image of `[0, 1]` floats.
#[derive(Clone)]
struct Image {
    data: Vec<f64>,
}

fn reflect101(i: i64, n: i64) -> usize {
    let period = 2 * n - 2;
    let m = i.rem_euclid(period);
    (if m >= n { period - m } else { m }) as usize
}

impl Image {
    fn from_frame(f: &Frame) -> Self {
        Self {
            data: f.as_bytes().iter().map(|&b| f64::from(b) / 255.0).collect(),
        }
    }

    fn to_frame(&self) -> Frame {
        let bytes = self.data.iter().map(|&v| quantize(v)).collect();
        Frame::from_raw(bytes).expect("image has frame size")
    }

    fn get(&self, x: i64, y: i64, c: usize) -> f64 {
        let n = FRAME_SIZE as i64;
        self.data[(reflect101(y, n) * FRAME_SIZE + reflect101(x, n)) * 3 + c]
    }

    fn bilinear(&self, x: f64, y: f64, out: &mut [f64]) {
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let (xi, yi) = (x0 as i64, y0 as i64);
        for (c, o) in out.iter_mut().enumerate() {
            let top = self.get(xi, yi, c) * (1.0 - fx) + self.get(xi + 1, yi, c) * fx;
            let bottom = self.get(xi, yi + 1, c) * (1.0 - fx) + self.get(xi + 1, yi + 1, c) * fx;
            *o = top * (1.0 - fy) + bottom * fy;
        }
    }

    /// Builds an image whose pixel (x, y) samples `self` at `src(x, y)`.
    fn resample(&self, src: impl Fn(f64, f64) -> (f64, f64)) -> Image {
        let mut data = vec![0.0; FRAME_BYTES];
        for y in 0..FRAME_SIZE {
            for x in 0..FRAME_SIZE {
                let (sx, sy) = src(x as f64, y as f64);
                let i = (y * FRAME_SIZE + x) * 3;
                self.bilinear(sx, sy, &mut data[i..i + 3]);
            }
        }
        Image { data }
    }

    fn translate(&self, dx: f64, dy: f64) -> Result<Image> {
        if !(dx.abs() <= MAX_TRANSLATE_PX && dy.abs() <= MAX_TRANSLATE_PX) {
            return Err(Error::InvalidParameter(format!(
                "shift ({dx}, {dy}) exceeds {MAX_TRANSLATE_PX} px"
            )));
        }
        if dx == 0.0 && dy == 0.0 {
            return Ok(self.clone());
        }
        Ok(self.resample(|x, y| (x - dx, y - dy)))
    }

    fn rotate(&self, angle_deg: f64) -> Result<Image> {
        if !(angle_deg.abs() <= MAX_ROTATE_DEG) {
            return Err(Error::InvalidParameter(format!("rotation {angle_deg}° exceeds {MAX_ROTATE_DEG}°")));
        }
        if angle_deg == 0.0 {
            return Ok(self.clone());
        }
        let a = angle_deg.to_radians();
        let (s, c) = (libm::sin(a), libm::cos(a));
        let centre = (FRAME_SIZE as f64 - 1.0) / 2.0;
        // Image y points down, so a counter-clockwise turn on screen uses the
        // transposed rotation in pixel coordinates.
        Ok(self.resample(|x, y| {
            let (u, v) = (x - centre, y - centre);
            (centre + c * u - s * v, centre + s * u + c * v)
        }))
    }

    fn colour_jitter(&mut self, lum_scale: f64, ab_angle: f64) -> Result<()> {
        if !(LUM_SCALE_BOUNDS.0..=LUM_SCALE_BOUNDS.1).contains(&lum_scale) || !(ab_angle.abs() <= MAX_AB_ANGLE) {
            return Err(Error::InvalidParameter(format!(
                "colour jitter ({lum_scale}, {ab_angle}) out of range"
            )));
        }
        if lum_scale == 1.0 && ab_angle == 0.0 {
            return Ok(());
        }
        let (s, c) = (libm::sin(ab_angle), libm::cos(ab_angle));
        for px in self.data.chunks_exact_mut(3) {
            let [l, a, b] = lab::from_rgb([px[0], px[1], px[2]]);
            let lab2 = [l * lum_scale, c * a - s * b, s * a + c * b];
            px.copy_from_slice(&lab::to_rgb(lab2).map(|v| v.clamp(0.0, 1.0)));
        }
        Ok(())
    }

    fn add_noise(&mut self, seed: u64, std: f64) {
        if std <= 0.0 {
            return;
        }
        let normal = Normal::new(0.0, std).expect("finite std");
        let mut rng = rng_from(&[NOISE_TAG, seed]);
        for v in &mut self.data {
            *v = (*v + normal.sample(&mut rng)).clamp(0.0, 1.0);
        }
    }
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// sRGB ↔ CIELab under the D65 white point and the 2° standard observer.
pub mod lab {
    /// Linear sRGB → XYZ.
    pub const RGB_TO_XYZ: [[f64; 3]; 3] = [
        [0.412_456_4, 0.357_576_1, 0.180_437_5],
        [0.212_672_9, 0.715_152_2, 0.072_175_0],
        [0.019_333_9, 0.119_192_0, 0.950_304_1],
    ];
    /// XYZ → linear sRGB.
    pub const XYZ_TO_RGB: [[f64; 3]; 3] = [
        [3.240_454_2, -1.537_138_5, -0.498_531_4],
        [-0.969_266_0, 1.876_010_8, 0.041_556_0],
        [0.055_643_4, -0.204_025_9, 1.057_225_2],
    ];
    pub const WHITE_D65: [f64; 3] = [0.950_47, 1.0, 1.088_83];
    const DELTA: f64 = 6.0 / 29.0;

    fn mul(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|r| m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2])
    }

    pub fn srgb_to_linear(c: f64) -> f64 {
        if c <= 0.040_45 {
            c / 12.92
        } else {
            libm::pow((c + 0.055) / 1.055, 2.4)
        }
    }

    pub fn linear_to_srgb(c: f64) -> f64 {
        if c <= 0.003_130_8 {
            c * 12.92
        } else {
            1.055 * libm::pow(c, 1.0 / 2.4) - 0.055
        }
    }

    fn f(t: f64) -> f64 {
        if t > DELTA * DELTA * DELTA {
            libm::cbrt(t)
        } else {
            t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
        }
    }

    fn f_inv(t: f64) -> f64 {
        if t > DELTA {
            t * t * t
        } else {
            3.0 * DELTA * DELTA * (t - 4.0 / 29.0)
        }
    }

    /// `[0, 1]` sRGB → (L*, a*, b*).
    pub fn from_rgb(rgb: [f64; 3]) -> [f64; 3] {
        let xyz = mul(&RGB_TO_XYZ, rgb.map(srgb_to_linear));
        let [fx, fy, fz] = std::array::from_fn(|i| f(xyz[i] / WHITE_D65[i]));
        [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
    }

    /// (L*, a*, b*) → `[0, 1]` sRGB, unclamped.
    pub fn to_rgb(lab: [f64; 3]) -> [f64; 3] {
        let fy = (lab[0] + 16.0) / 116.0;
        let fx = fy + lab[1] / 500.0;
        let fz = fy - lab[2] / 200.0;
        let xyz = [
            WHITE_D65[0] * f_inv(fx),
            WHITE_D65[1] * f_inv(fy),
            WHITE_D65[2] * f_inv(fz),
        ];
        mul(&XYZ_TO_RGB, xyz).map(|c| linear_to_srgb(c.max(0.0)))
    }
}
