use super::image::ErpImage;
use super::ResampleError;

/// Resampling kernel for degrade / upsample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    /// Catmull-Rom cubic (Keys, a = -0.5).
    Bicubic,
    Bilinear,
    Nearest,
    /// Gaussian low-pass with the given sigma, in output-pixel units.
    GaussianBlur(f64),
}

impl Kernel {
    /// Continuous filter support radius in output-sample units.
    fn radius(&self) -> f64 {
        match self {
            Kernel::Bicubic => 2.0,
            Kernel::Bilinear => 1.0,
            Kernel::Nearest => 0.5,
            Kernel::GaussianBlur(sigma) => (3.0 * sigma).ceil(),
        }
    }

    fn eval(&self, t: f64) -> f64 {
        let t = t.abs();
        match self {
            Kernel::Bicubic => {
                // Keys cubic with a = -0.5.
                if t < 1.0 {
                    (1.5 * t - 2.5) * t * t + 1.0
                } else if t < 2.0 {
                    ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0
                } else {
                    0.0
                }
            }
            Kernel::Bilinear => (1.0 - t).max(0.0),
            Kernel::Nearest => {
                if t < 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            Kernel::GaussianBlur(sigma) => {
                if t <= self.radius() {
                    (-0.5 * (t / sigma) * (t / sigma)).exp()
                } else {
                    0.0
                }
            }
        }
    }
}

/// How to build a low-resolution stand-in from a full-resolution image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegradeSpec {
    scale: u32,
    kernel: Kernel,
}

impl DegradeSpec {
    pub fn new(scale: u32, kernel: Kernel) -> Result<Self, ResampleError> {
        if scale < 2 {
            return Err(ResampleError::InvalidParameter(format!(
                "degrade scale must be at least 2, got {scale}"
            )));
        }
        if let Kernel::GaussianBlur(sigma) = kernel {
            if sigma.is_nan() || sigma <= 0.0 {
                return Err(ResampleError::InvalidParameter(format!(
                    "gaussian sigma must be positive, got {sigma}"
                )));
            }
        }
        Ok(Self { scale, kernel })
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }
}

#[derive(Clone, Copy)]
enum Boundary {
    /// Longitude seam: indices wrap around.
    Wrap,
    /// Poles: indices clamp to the edge row.
    Clamp,
}

fn resolve(idx: i64, len: u32, boundary: Boundary) -> u32 {
    match boundary {
        Boundary::Wrap => idx.rem_euclid(i64::from(len)) as u32,
        Boundary::Clamp => idx.clamp(0, i64::from(len) - 1) as u32,
    }
}

/// One output sample's source taps: start index plus normalized weights.
struct Taps {
    start: i64,
    weights: Vec<f64>,
    /// Tap index nearest the sample center; anchors the weighted sum so
    /// constant inputs reproduce bit-exactly.
    anchor: usize,
}

/// Tap tables along one axis for an `in_len -> out_len` resample.
///
/// `filter_scale` stretches the kernel support (decimation anti-aliasing);
/// it is 1 for interpolation.
fn build_taps(in_len: u32, out_len: u32, kernel: Kernel, filter_scale: f64) -> Vec<Taps> {
    let ratio = f64::from(in_len) / f64::from(out_len);
    let radius = kernel.radius() * filter_scale;
    (0..out_len)
        .map(|o| {
            let center = (f64::from(o) + 0.5) * ratio - 0.5;
            if matches!(kernel, Kernel::Nearest) {
                return Taps {
                    start: center.round() as i64,
                    weights: vec![1.0],
                    anchor: 0,
                };
            }
            let first = (center - radius).ceil() as i64;
            let last = (center + radius).floor() as i64;
            let mut weights: Vec<f64> = (first..=last)
                .map(|i| kernel.eval((i as f64 - center) / filter_scale))
                .collect();
            let sum: f64 = weights.iter().sum();
            debug_assert!(sum > 0.0);
            for w in &mut weights {
                *w /= sum;
            }
            let anchor = (center.round() as i64 - first).clamp(0, last - first) as usize;
            Taps {
                start: first,
                weights,
                anchor,
            }
        })
        .collect()
}

fn apply_horizontal(
    src: &[f64],
    width_in: u32,
    height: u32,
    channels: usize,
    taps: &[Taps],
    boundary: Boundary,
) -> Vec<f64> {
    let width_out = taps.len() as u32;
    let mut out = vec![0.0; width_out as usize * height as usize * channels];
    for row in 0..height as usize {
        let src_row = &src[row * width_in as usize * channels..][..width_in as usize * channels];
        let out_row = &mut out[row * width_out as usize * channels..];
        for (o, t) in taps.iter().enumerate() {
            for c in 0..channels {
                let anchor_col = resolve(t.start + t.anchor as i64, width_in, boundary) as usize;
                let anchor_val = src_row[anchor_col * channels + c];
                let mut acc = 0.0;
                for (k, &w) in t.weights.iter().enumerate() {
                    let col = resolve(t.start + k as i64, width_in, boundary) as usize;
                    acc += w * (src_row[col * channels + c] - anchor_val);
                }
                out_row[o * channels + c] = anchor_val + acc;
            }
        }
    }
    out
}

fn apply_vertical(
    src: &[f64],
    width: u32,
    height_in: u32,
    channels: usize,
    taps: &[Taps],
    boundary: Boundary,
) -> Vec<f64> {
    let height_out = taps.len() as u32;
    let stride = width as usize * channels;
    let mut out = vec![0.0; stride * height_out as usize];
    for (o, t) in taps.iter().enumerate() {
        let out_row = &mut out[o * stride..][..stride];
        let anchor_row = resolve(t.start + t.anchor as i64, height_in, boundary) as usize;
        let anchor = &src[anchor_row * stride..][..stride];
        out_row.copy_from_slice(anchor);
        for (k, &w) in t.weights.iter().enumerate() {
            let row = resolve(t.start + k as i64, height_in, boundary) as usize;
            let src_row = &src[row * stride..][..stride];
            for (dst, (&s, &a)) in out_row.iter_mut().zip(src_row.iter().zip(anchor.iter())) {
                *dst += w * (s - a);
            }
        }
    }
    out
}

fn to_f64(img: &ErpImage) -> Vec<f64> {
    img.data().iter().map(|&v| f64::from(v)).collect()
}

fn from_f64(
    data: Vec<f64>,
    width: u32,
    height: u32,
    channels: u8,
    any_aspect: bool,
) -> Result<ErpImage, ResampleError> {
    let clamped: Vec<f32> = data.iter().map(|&v| v.clamp(0.0, 1.0) as f32).collect();
    if any_aspect {
        ErpImage::new_any_aspect(width, height, channels, clamped)
    } else {
        ErpImage::new(width, height, channels, clamped)
    }
}

fn resize(
    img: &ErpImage,
    width_out: u32,
    height_out: u32,
    kernel: Kernel,
    filter_scale: f64,
) -> Result<ErpImage, ResampleError> {
    let channels = img.channels() as usize;
    let h_taps = build_taps(img.width(), width_out, kernel, filter_scale);
    let v_taps = build_taps(img.height(), height_out, kernel, filter_scale);
    let tmp = apply_horizontal(
        &to_f64(img),
        img.width(),
        img.height(),
        channels,
        &h_taps,
        Boundary::Wrap,
    );
    let out = apply_vertical(&tmp, width_out, img.height(), channels, &v_taps, Boundary::Clamp);
    from_f64(
        out,
        width_out,
        height_out,
        img.channels(),
        width_out != 2 * height_out,
    )
}

/// Downscales by an integer factor with the kernel support stretched by the
/// same factor (area-style anti-aliased decimation).
pub fn degrade(img: &ErpImage, spec: DegradeSpec) -> Result<ErpImage, ResampleError> {
    let scale = spec.scale();
    if img.width() % scale != 0 || img.height() % scale != 0 {
        return Err(ResampleError::Indivisible {
            width: img.width(),
            height: img.height(),
            scale,
        });
    }
    resize(
        img,
        img.width() / scale,
        img.height() / scale,
        spec.kernel(),
        f64::from(scale),
    )
}

/// Upscales by an integer factor; plain interpolation, support unscaled.
pub fn upsample(img: &ErpImage, scale: u32, kernel: Kernel) -> Result<ErpImage, ResampleError> {
    if scale == 0 {
        return Err(ResampleError::InvalidParameter(
            "upsample scale must be positive".into(),
        ));
    }
    if matches!(kernel, Kernel::GaussianBlur(_)) {
        return Err(ResampleError::InvalidParameter(
            "gaussian-blur is a decimation kernel; upsample supports bicubic, bilinear and nearest"
                .into(),
        ));
    }
    resize(img, img.width() * scale, img.height() * scale, kernel, 1.0)
}

/// Gaussian low-pass at constant resolution; wraps across the seam and
/// clamps at the poles. Sigma is in pixels.
pub fn gaussian_blur(img: &ErpImage, sigma: f64) -> Result<ErpImage, ResampleError> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(ResampleError::InvalidParameter(format!(
            "gaussian sigma must be positive, got {sigma}"
        )));
    }
    resize(
        img,
        img.width(),
        img.height(),
        Kernel::GaussianBlur(sigma),
        1.0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degrade_shrinks_paper_resolution() {
        let img = ErpImage::constant(1920, 960, 1, 0.5).unwrap();
        let spec = DegradeSpec::new(4, Kernel::Bicubic).unwrap();
        let out = degrade(&img, spec).unwrap();
        assert_eq!((out.width(), out.height()), (480, 240));
    }

    #[test]
    fn degrade_scale_three_divisible() {
        let img = ErpImage::constant(1920, 960, 1, 0.5).unwrap();
        let out = degrade(&img, DegradeSpec::new(3, Kernel::Bicubic).unwrap()).unwrap();
        assert_eq!((out.width(), out.height()), (640, 320));
    }

    #[test]
    fn degrade_rejects_indivisible_dims() {
        let img = ErpImage::constant(30, 15, 1, 0.5).unwrap();
        assert!(matches!(
            degrade(&img, DegradeSpec::new(4, Kernel::Bicubic).unwrap()),
            Err(ResampleError::Indivisible { .. })
        ));
    }

    #[test]
    fn constants_survive_every_kernel_exactly() {
        let img = ErpImage::constant(64, 32, 3, 0.73).unwrap();
        for kernel in [
            Kernel::Bicubic,
            Kernel::Bilinear,
            Kernel::Nearest,
            Kernel::GaussianBlur(1.2),
        ] {
            let down = degrade(&img, DegradeSpec::new(2, kernel).unwrap()).unwrap();
            assert!(down.data().iter().all(|&v| v == 0.73));
        }
        for kernel in [Kernel::Bicubic, Kernel::Bilinear, Kernel::Nearest] {
            let up = upsample(&img, 2, kernel).unwrap();
            assert!(up.data().iter().all(|&v| v == 0.73));
        }
        let blurred = gaussian_blur(&img, 2.0).unwrap();
        assert!(blurred.data().iter().all(|&v| v == 0.73));
    }

    #[test]
    fn nearest_upsample_replicates_pixels() {
        let data = vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8];
        let img = ErpImage::new(4, 2, 1, data).unwrap();
        let up = upsample(&img, 2, Kernel::Nearest).unwrap();
        assert_eq!((up.width(), up.height()), (8, 4));
        for v in 0..4u32 {
            for u in 0..8u32 {
                let expect = img.pixel(u / 2, v / 2)[0];
                assert_eq!(up.pixel(u, v)[0], expect, "pixel ({u},{v})");
            }
        }
    }

    #[test]
    fn band_limited_round_trip_is_tight() {
        // Heavily pre-blurred content survives a x4 bicubic round trip.
        let width = 128u32;
        let height = 64u32;
        let mut data = Vec::new();
        for v in 0..height {
            for u in 0..width {
                let x = f64::from(u) / f64::from(width) * 2.0 * std::f64::consts::PI;
                let y = f64::from(v) / f64::from(height) * std::f64::consts::PI;
                data.push((0.5 + 0.25 * x.sin() * y.cos() + 0.1 * (2.0 * x).cos()) as f32);
            }
        }
        let img = ErpImage::new(width, height, 1, data).unwrap();
        let spec = DegradeSpec::new(4, Kernel::Bicubic).unwrap();
        let down = degrade(&img, spec).unwrap();
        let up = upsample(&down, 4, Kernel::Bicubic).unwrap();
        let worst = img
            .data()
            .iter()
            .zip(up.data())
            .map(|(&a, &b)| (f64::from(a) - f64::from(b)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.02, "round-trip error {worst}");
    }

    #[test]
    fn upsample_rejects_gaussian() {
        let img = ErpImage::constant(8, 4, 1, 0.5).unwrap();
        assert!(upsample(&img, 2, Kernel::GaussianBlur(1.0)).is_err());
    }

    #[test]
    fn degrade_spec_validation() {
        assert!(DegradeSpec::new(1, Kernel::Bicubic).is_err());
        assert!(DegradeSpec::new(2, Kernel::GaussianBlur(0.0)).is_err());
        assert!(DegradeSpec::new(4, Kernel::GaussianBlur(1.5)).is_ok());
    }

    #[test]
    fn outputs_stay_in_unit_range() {
        // A harsh step pattern provokes bicubic over/undershoot.
        let mut data = vec![0.0f32; 64 * 32];
        for v in 0..32 {
            for u in 0..64 {
                data[v * 64 + u] = if (u / 4) % 2 == 0 { 0.0 } else { 1.0 };
            }
        }
        let img = ErpImage::new(64, 32, 1, data).unwrap();
        let down = degrade(&img, DegradeSpec::new(2, Kernel::Bicubic).unwrap()).unwrap();
        let up = upsample(&down, 4, Kernel::Bicubic).unwrap();
        for &v in up.data() {
            assert!((0.0..=1.0).contains(&v));
        }
    }
}
