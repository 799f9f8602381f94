//! SSIM and MS-SSIM kernels.

use super::plane::{conv_valid, gaussian_kernel, Luma};
use super::{MetricError, MetricId, MetricScore};

/// 11x11 Gaussian window, sigma 1.5.
pub const WINDOW_SIDE: usize = 11;
pub const WINDOW_SIGMA: f64 = 1.5;
pub const K1: f64 = 0.01;
pub const K2: f64 = 0.03;
/// Dynamic range of the unit-interval samples.
pub const DYNAMIC_RANGE: f64 = 1.0;

/// Scale weights from the multi-scale formulation.
pub const MS_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];
pub const MS_SCALES: usize = 5;
/// Each of the 4 downsamplings halves the image; the last scale still needs
/// the full window.
pub const MS_MIN_SIDE: usize = WINDOW_SIDE << (MS_SCALES - 1);

fn c1() -> f64 {
    (K1 * DYNAMIC_RANGE) * (K1 * DYNAMIC_RANGE)
}

fn c2() -> f64 {
    (K2 * DYNAMIC_RANGE) * (K2 * DYNAMIC_RANGE)
}

struct LocalStats {
    mu_x: Luma,
    mu_y: Luma,
    var_x: Luma,
    var_y: Luma,
    cov: Luma,
}

/// Windowed means, variances and covariance over the valid region.
fn local_stats(x: &Luma, y: &Luma, taps: &[f64]) -> LocalStats {
    let mu_x = conv_valid(x, taps);
    let mu_y = conv_valid(y, taps);
    let var_x = conv_valid(&x.product(x), taps).zip(&mu_x, |exx, m| (exx - m * m).max(0.0));
    let var_y = conv_valid(&y.product(y), taps).zip(&mu_y, |eyy, m| (eyy - m * m).max(0.0));
    let exy = conv_valid(&x.product(y), taps);
    let cov = Luma::new(
        exy.width(),
        exy.height(),
        exy.data()
            .iter()
            .zip(mu_x.data().iter().zip(mu_y.data()))
            .map(|(&e, (&mx, &my))| e - mx * my)
            .collect(),
    );
    LocalStats {
        mu_x,
        mu_y,
        var_x,
        var_y,
        cov,
    }
}

fn luminance_map(stats: &LocalStats) -> Luma {
    let c1 = c1();
    stats
        .mu_x
        .zip(&stats.mu_y, |mx, my| (2.0 * (mx * my) + c1) / (mx * mx + my * my + c1))
}

fn contrast_structure_map(stats: &LocalStats) -> Luma {
    let c2 = c2();
    let var_sum = stats.var_x.zip(&stats.var_y, |a, b| a + b);
    stats.cov.zip(&var_sum, |cov, vs| (2.0 * cov + c2) / (vs + c2))
}

fn check_support(metric: &'static str, min: usize, x: &Luma) -> Result<(), MetricError> {
    if x.min_side() < min {
        return Err(MetricError::Support {
            metric,
            min,
            got_w: x.width(),
            got_h: x.height(),
        });
    }
    Ok(())
}

/// Mean structural similarity over the valid-region local map.
pub fn ssim(reference: &Luma, distorted: &Luma) -> Result<MetricScore, MetricError> {
    same_shape(reference, distorted)?;
    check_support("ssim", WINDOW_SIDE, reference)?;
    let taps = gaussian_kernel(WINDOW_SIDE, WINDOW_SIGMA);
    let stats = local_stats(reference, distorted, &taps);
    let map = luminance_map(&stats).zip(&contrast_structure_map(&stats), |l, cs| l * cs);
    Ok(MetricScore {
        id: MetricId::Ssim,
        value: map.mean(),
    })
}

/// Multi-scale SSIM: contrast-structure terms at five dyadic scales plus the
/// coarsest-scale luminance term, combined with the standard exponents.
/// Negative contrast-structure means clamp to zero before exponentiation.
pub fn msssim(reference: &Luma, distorted: &Luma) -> Result<MetricScore, MetricError> {
    same_shape(reference, distorted)?;
    check_support("msssim", MS_MIN_SIDE, reference)?;
    let taps = gaussian_kernel(WINDOW_SIDE, WINDOW_SIGMA);

    let mut x = reference.clone();
    let mut y = distorted.clone();
    let mut value = 1.0f64;
    for scale in 0..MS_SCALES {
        let stats = local_stats(&x, &y, &taps);
        let cs = contrast_structure_map(&stats).mean().max(0.0);
        value *= cs.powf(MS_WEIGHTS[scale]);
        if scale + 1 == MS_SCALES {
            let lum = luminance_map(&stats).mean().max(0.0);
            value *= lum.powf(MS_WEIGHTS[scale]);
        } else {
            x = x.mean_pool2();
            y = y.mean_pool2();
        }
    }
    Ok(MetricScore {
        id: MetricId::MsSsim,
        value,
    })
}

fn same_shape(a: &Luma, b: &Luma) -> Result<(), MetricError> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(MetricError::Shape {
            ref_w: a.width(),
            ref_h: a.height(),
            dist_w: b.width(),
            dist_h: b.height(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::test_support::{blur_luma, noisy_luma, textured_luma};

    #[test]
    fn identity_is_exactly_one() {
        let x = textured_luma(64, 64, 5);
        let score = ssim(&x, &x).unwrap();
        assert_eq!(score.value, 1.0);
    }

    #[test]
    fn msssim_identity_is_one() {
        let x = textured_luma(176, 176, 5);
        let score = msssim(&x, &x).unwrap();
        assert!((score.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_pair_matches_closed_form() {
        let a = 0.3f64;
        let b = 0.6f64;
        let x = Luma::new(32, 32, vec![a; 1024]);
        let y = Luma::new(32, 32, vec![b; 1024]);
        let score = ssim(&x, &y).unwrap();
        let expected = (2.0 * a * b + c1()) / (a * a + b * b + c1());
        assert!((score.value - expected).abs() < 1e-12);
    }

    #[test]
    fn msssim_constant_pair_matches_closed_form() {
        // Contrast-structure degenerates to C2/C2 = 1 at every scale, so
        // only the final luminance term survives, raised to its weight.
        let a = 0.3f64;
        let b = 0.6f64;
        let x = Luma::new(176, 176, vec![a; 176 * 176]);
        let y = Luma::new(176, 176, vec![b; 176 * 176]);
        let got = msssim(&x, &y).unwrap().value;
        let lum = (2.0 * a * b + c1()) / (a * a + b * b + c1());
        let expected = lum.powf(MS_WEIGHTS[4]);
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn window_matches_published_center_weight() {
        // The separable 11-tap sigma-1.5 window squared at its center must
        // reproduce the canonical 2-D window's center value.
        let taps = gaussian_kernel(WINDOW_SIDE, WINDOW_SIGMA);
        let center_2d = taps[5] * taps[5];
        assert!((center_2d - 0.0707622377).abs() < 1e-9, "{center_2d}");
    }

    #[test]
    fn noise_strictly_decreases_ssim() {
        let x = textured_luma(96, 96, 7);
        let mut last = f64::INFINITY;
        for (i, sigma) in [0.01, 0.05, 0.1].iter().enumerate() {
            let y = noisy_luma(&x, *sigma, 100 + i as u64);
            let s = ssim(&x, &y).unwrap().value;
            assert!(s < last, "sigma {sigma}: {s} !< {last}");
            assert!((-1.0..=1.0).contains(&s));
            last = s;
        }
    }

    #[test]
    fn noise_strictly_decreases_msssim() {
        let x = textured_luma(192, 192, 7);
        let mut last = f64::INFINITY;
        for (i, sigma) in [0.01, 0.05, 0.1].iter().enumerate() {
            let y = noisy_luma(&x, *sigma, 200 + i as u64);
            let s = msssim(&x, &y).unwrap().value;
            assert!(s < last, "sigma {sigma}: {s} !< {last}");
            assert!((0.0..=1.0).contains(&s));
            last = s;
        }
    }

    #[test]
    fn blur_decreases_ssim_monotonically() {
        let x = textured_luma(128, 128, 3);
        let mut last = f64::INFINITY;
        for sigma in [0.5, 1.0, 2.0, 4.0] {
            let y = blur_luma(&x, sigma);
            let s = ssim(&x, &y).unwrap().value;
            assert!(s < last, "sigma {sigma}: {s} !< {last}");
            last = s;
        }
    }

    #[test]
    fn support_thresholds() {
        let small = Luma::new(10, 10, vec![0.5; 100]);
        assert!(matches!(
            ssim(&small, &small),
            Err(MetricError::Support { metric: "ssim", .. })
        ));
        let eleven = Luma::new(11, 11, vec![0.5; 121]);
        assert!(ssim(&eleven, &eleven).is_ok());

        let m175 = Luma::new(175, 175, vec![0.5; 175 * 175]);
        assert!(matches!(
            msssim(&m175, &m175),
            Err(MetricError::Support {
                metric: "msssim",
                min: 176,
                ..
            })
        ));
        let m176 = Luma::new(176, 176, vec![0.5; 176 * 176]);
        assert!(msssim(&m176, &m176).is_ok());
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = Luma::new(32, 32, vec![0.5; 1024]);
        let b = Luma::new(32, 16, vec![0.5; 512]);
        assert!(matches!(ssim(&a, &b), Err(MetricError::Shape { .. })));
    }
}
