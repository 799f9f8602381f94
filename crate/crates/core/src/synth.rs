//! Seeded synthetic equirectangular test patterns.
//!
//! Used to exercise the pipeline without real captures: identity checks,
//! degradation ranking, seam and pole behavior. All generators are
//! deterministic in `(width, seed)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::resample::{erp_pixel_to_sphere, gaussian_blur, ErpImage};

/// Built-in test pattern families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestPattern {
    /// Smooth gradient: vertical ramp plus a horizontal triangle wave that
    /// stays continuous across the longitude seam.
    Gradient,
    /// Checkerboard with a tile size coprime to common scales, softened
    /// slightly so its edges carry energy below the Nyquist rate of a x4
    /// decimation.
    Checker,
    /// Gaussian-filtered white noise, roughly natural second-order statistics.
    FilteredNoise,
    /// Smooth ramp in sin(longitude); continuous across the seam.
    SeamRamp,
    /// Oscillation that sharpens toward the poles.
    PoleHeavy,
}

impl TestPattern {
    pub const ALL: [TestPattern; 5] = [
        TestPattern::Gradient,
        TestPattern::Checker,
        TestPattern::FilteredNoise,
        TestPattern::SeamRamp,
        TestPattern::PoleHeavy,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TestPattern::Gradient => "gradient",
            TestPattern::Checker => "checker",
            TestPattern::FilteredNoise => "filtered-noise",
            TestPattern::SeamRamp => "seam-ramp",
            TestPattern::PoleHeavy => "pole-heavy",
        }
    }
}

/// Generates a single-channel 2:1 pattern of the given width.
pub fn generate(pattern: TestPattern, width: u32, seed: u64) -> ErpImage {
    assert!(width >= 16 && width % 2 == 0, "width must be even and >= 16");
    let height = width / 2;
    match pattern {
        TestPattern::Gradient => from_fn(width, height, |u, v| {
            let tri = 1.0 - (2.0 * u - 1.0).abs();
            0.1 + 0.8 * (0.55 * v + 0.45 * tri)
        }),
        TestPattern::Checker => {
            let tile = 27u32;
            let hard = from_grid(width, height, |u, v| {
                if ((u / tile) + (v / tile)) % 2 == 0 {
                    0.25
                } else {
                    0.75
                }
            });
            gaussian_blur(&hard, 1.5).expect("blur of valid image")
        }
        TestPattern::FilteredNoise => filtered_noise(width, height, seed),
        TestPattern::SeamRamp => from_sphere(width, height, |_lat, lon| 0.5 + 0.4 * lon.sin()),
        TestPattern::PoleHeavy => from_sphere(width, height, |lat, lon| {
            let weight = (lat.abs() / (PI / 2.0)).powi(2);
            0.5 + 0.45 * weight * (10.0 * lat).sin() * (6.0 * lon).cos()
        }),
    }
}

/// Adds clamped Gaussian noise to every sample.
pub fn add_gaussian_noise(img: &ErpImage, sigma: f64, seed: u64) -> ErpImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = img
        .data()
        .iter()
        .map(|&v| (f64::from(v) + sigma * standard_normal(&mut rng)).clamp(0.0, 1.0) as f32)
        .collect();
    ErpImage::new_any_aspect(img.width(), img.height(), img.channels(), data)
        .expect("noisy copy keeps dimensions")
}

/// Box-Muller standard normal draw.
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

fn from_fn(width: u32, height: u32, f: impl Fn(f64, f64) -> f64) -> ErpImage {
    let mut data = Vec::with_capacity((width * height) as usize);
    for v in 0..height {
        for u in 0..width {
            let x = f64::from(u) / f64::from(width - 1);
            let y = f64::from(v) / f64::from(height - 1);
            data.push(f(x, y).clamp(0.0, 1.0) as f32);
        }
    }
    ErpImage::new(width, height, 1, data).expect("generator output is 2:1 and in range")
}

fn from_grid(width: u32, height: u32, f: impl Fn(u32, u32) -> f64) -> ErpImage {
    let mut data = Vec::with_capacity((width * height) as usize);
    for v in 0..height {
        for u in 0..width {
            data.push(f(u, v).clamp(0.0, 1.0) as f32);
        }
    }
    ErpImage::new(width, height, 1, data).expect("generator output is 2:1 and in range")
}

fn from_sphere(width: u32, height: u32, f: impl Fn(f64, f64) -> f64) -> ErpImage {
    let mut data = Vec::with_capacity((width * height) as usize);
    for v in 0..height {
        for u in 0..width {
            let p = erp_pixel_to_sphere(u, v, width, height);
            data.push(f(p.lat(), p.lon()).clamp(0.0, 1.0) as f32);
        }
    }
    ErpImage::new(width, height, 1, data).expect("generator output is 2:1 and in range")
}

fn filtered_noise(width: u32, height: u32, seed: u64) -> ErpImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f32> = (0..width as usize * height as usize)
        .map(|_| rng.random_range(0.0..1.0f32))
        .collect();
    let white = ErpImage::new(width, height, 1, data).expect("white noise in range");
    // Two blur scales give both fine texture and coarse structure.
    let fine = gaussian_blur(&white, 1.5).expect("blur of valid image");
    let coarse = gaussian_blur(&white, 8.0).expect("blur of valid image");
    let mixed: Vec<f32> = fine
        .data()
        .iter()
        .zip(coarse.data())
        .map(|(&a, &b)| 0.55 * a + 0.45 * b)
        .collect();
    // Stretch to a healthy contrast range.
    let lo = mixed.iter().cloned().fold(f32::MAX, f32::min);
    let hi = mixed.iter().cloned().fold(f32::MIN, f32::max);
    let span = (hi - lo).max(1e-6);
    let stretched = mixed
        .iter()
        .map(|&v| 0.1 + 0.8 * (v - lo) / span)
        .collect();
    ErpImage::new(width, height, 1, stretched).expect("stretched noise in range")
}
