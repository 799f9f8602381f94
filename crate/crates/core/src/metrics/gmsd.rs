//! Gradient magnitude similarity deviation.

use super::plane::Luma;
use super::{MetricError, MetricId, MetricScore};

/// Similarity stabilizer: the reference constant 170 rescaled from the
/// [0, 255] squared-gradient range to [0, 1].
pub const STABILITY: f64 = 170.0 / (255.0 * 255.0);
/// Both images are 2x2 mean-pooled before gradients, so Prewitt needs at
/// least a 3x3 pooled plane.
pub const MIN_SIDE: usize = 6;

/// Standard deviation of the pooled gradient-magnitude similarity map.
/// Zero for identical inputs; symmetric in its arguments.
pub fn gmsd(reference: &Luma, distorted: &Luma) -> Result<MetricScore, MetricError> {
    if reference.width() != distorted.width() || reference.height() != distorted.height() {
        return Err(MetricError::Shape {
            ref_w: reference.width(),
            ref_h: reference.height(),
            dist_w: distorted.width(),
            dist_h: distorted.height(),
        });
    }
    if reference.min_side() < MIN_SIDE {
        return Err(MetricError::Support {
            metric: "gmsd",
            min: MIN_SIDE,
            got_w: reference.width(),
            got_h: reference.height(),
        });
    }

    let g_ref = gradient_magnitude(&reference.mean_pool2());
    let g_dist = gradient_magnitude(&distorted.mean_pool2());
    let gms = g_ref.zip(&g_dist, |a, b| {
        (2.0 * (a * b) + STABILITY) / (a * a + b * b + STABILITY)
    });
    Ok(MetricScore {
        id: MetricId::Gmsd,
        value: gms.std_dev(),
    })
}

/// Prewitt gradient magnitude over the valid interior.
fn gradient_magnitude(plane: &Luma) -> Luma {
    let w = plane.width() - 2;
    let h = plane.height() - 2;
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let p = |dx: usize, dy: usize| plane.at(x + dx, y + dy);
            let gx = (p(0, 0) + p(0, 1) + p(0, 2) - p(2, 0) - p(2, 1) - p(2, 2)) / 3.0;
            let gy = (p(0, 0) + p(1, 0) + p(2, 0) - p(0, 2) - p(1, 2) - p(2, 2)) / 3.0;
            data.push((gx * gx + gy * gy).sqrt());
        }
    }
    Luma::new(w, h, data)
}
