//! Pixel-domain visual information fidelity.

use super::plane::{conv_valid, gaussian_kernel, Luma};
use super::{MetricError, MetricId, MetricScore};

/// Noise variance of the visual channel model: the reference value 2
/// rescaled from the [0, 255] intensity range to [0, 1].
pub const SIGMA_NSQ: f64 = 2.0 / (255.0 * 255.0);
/// Stability floor for unit-range local variances.
pub const EPS: f64 = 1e-12;
pub const SCALES: usize = 4;

/// Gaussian window sigma at scale `k` (1-based): `(2^(4-k+1) + 1) / 5`.
pub fn scale_sigma(k: usize) -> f64 {
    ((1u32 << (SCALES - k + 1)) as f64 + 1.0) / 5.0
}

/// Window side at scale `k`: the Gaussian truncated at three sigma.
pub fn scale_window_side(k: usize) -> usize {
    2 * (3.0 * scale_sigma(k)).ceil() as usize + 1
}

/// Ratio of information preserved in the distorted image to information in
/// the reference, accumulated over four dyadic scales.
///
/// 1 for identical inputs; a reference with no local structure anywhere
/// carries no information, and the ratio resolves to the ideal 1.
pub fn vifs(reference: &Luma, distorted: &Luma) -> Result<MetricScore, MetricError> {
    if reference.width() != distorted.width() || reference.height() != distorted.height() {
        return Err(MetricError::Shape {
            ref_w: reference.width(),
            ref_h: reference.height(),
            dist_w: distorted.width(),
            dist_h: distorted.height(),
        });
    }
    check_support(reference.width(), reference.height())?;

    let mut x = reference.clone();
    let mut y = distorted.clone();
    let mut numerator = 0.0;
    let mut denominator = 0.0;

    for k in 1..=SCALES {
        let taps = gaussian_kernel(scale_window_side(k), scale_sigma(k));
        if k > 1 {
            x = conv_valid(&x, &taps).decimate2();
            y = conv_valid(&y, &taps).decimate2();
        }
        let mu_x = conv_valid(&x, &taps);
        let mu_y = conv_valid(&y, &taps);
        let e_xx = conv_valid(&x.product(&x), &taps);
        let e_yy = conv_valid(&y.product(&y), &taps);
        let e_xy = conv_valid(&x.product(&y), &taps);

        for i in 0..mu_x.data().len() {
            let mx = mu_x.data()[i];
            let my = mu_y.data()[i];
            let mut var_x = e_xx.data()[i] - mx * mx;
            let var_y = e_yy.data()[i] - my * my;
            let cov = e_xy.data()[i] - mx * my;

            // Gain and restored-signal variance of the local distortion
            // model, with the reference clamp chain.
            let mut g = cov / (var_x + EPS);
            let mut sv = var_y - g * cov;
            if var_x < EPS {
                g = 0.0;
                sv = var_y;
                var_x = 0.0;
            }
            if var_y < EPS {
                g = 0.0;
                sv = 0.0;
            }
            if g < 0.0 {
                sv = var_y;
                g = 0.0;
            }
            let sv = sv.max(EPS);

            numerator += (1.0 + g * g * var_x / (sv + SIGMA_NSQ)).log10();
            denominator += (1.0 + var_x / SIGMA_NSQ).log10();
        }
    }

    let value = if denominator == 0.0 {
        1.0
    } else {
        numerator / denominator
    };
    Ok(MetricScore {
        id: MetricId::Vifs,
        value,
    })
}

/// Walks the 4-scale cascade and errors as soon as a convolution would run
/// out of support.
fn check_support(width: usize, height: usize) -> Result<(), MetricError> {
    let support_err = || {
        Err(MetricError::Support {
            metric: "vifs",
            min: MIN_SIDE,
            got_w: width,
            got_h: height,
        })
    };
    let (mut w, mut h) = (width, height);
    for k in 1..=SCALES {
        let side = scale_window_side(k);
        if k > 1 {
            // Pre-decimation low-pass, then the image itself halves.
            if w < side || h < side {
                return support_err();
            }
            w = (w - (side - 1)).div_ceil(2);
            h = (h - (side - 1)).div_ceil(2);
        }
        // The local-statistics convolution reads the image without
        // consuming it; only its map shrinks.
        if w < side || h < side {
            return support_err();
        }
    }
    Ok(())
}

/// Smallest square side the 4-scale cascade accepts; derived from the window
/// arithmetic in `check_support` and pinned by a test.
pub const MIN_SIDE: usize = 73;
