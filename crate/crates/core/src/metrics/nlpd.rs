//! Normalized Laplacian pyramid distance.

use super::plane::{compensated_sum, conv_symmetric, Luma};
use super::{MetricError, MetricId, MetricScore};

/// Separable 5-tap binomial low-pass.
pub const FILTER: [f64; 5] = [0.05, 0.25, 0.4, 0.25, 0.05];
/// Divisive-normalization offset.
pub const SIGMA0: f64 = 0.17;
pub const LEVELS: usize = 6;
/// Five reduce steps halve the image; below this the pyramid degenerates.
pub const MIN_SIDE: usize = 1 << (LEVELS - 1);

/// Mean over pyramid levels of the RMS difference between divisively
/// normalized band coefficients. Zero for identical inputs; symmetric.
pub fn nlpd(reference: &Luma, distorted: &Luma) -> Result<MetricScore, MetricError> {
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
            metric: "nlpd",
            min: MIN_SIDE,
            got_w: reference.width(),
            got_h: reference.height(),
        });
    }

    let bands_ref = normalized_pyramid(reference);
    let bands_dist = normalized_pyramid(distorted);
    let total: f64 = bands_ref
        .iter()
        .zip(&bands_dist)
        .map(|(a, b)| rms_difference(a, b))
        .sum();
    Ok(MetricScore {
        id: MetricId::Nlpd,
        value: total / LEVELS as f64,
    })
}

fn rms_difference(a: &Luma, b: &Luma) -> f64 {
    let sq = compensated_sum(
        a.data()
            .iter()
            .zip(b.data())
            .map(|(&x, &y)| (x - y) * (x - y)),
    );
    (sq / a.data().len() as f64).sqrt()
}

/// Laplacian pyramid with every band divisively normalized:
/// `c / (SIGMA0 + local mean of |c|)`, the local mean taken with the same
/// binomial filter.
fn normalized_pyramid(plane: &Luma) -> Vec<Luma> {
    let mut bands = Vec::with_capacity(LEVELS);
    let mut current = plane.clone();
    for _ in 0..LEVELS - 1 {
        let low = reduce(&current);
        let up = expand(&low, current.width(), current.height());
        bands.push(current.zip(&up, |a, b| a - b));
        current = low;
    }
    bands.push(current);
    bands.iter().map(normalize_band).collect()
}

fn normalize_band(band: &Luma) -> Luma {
    let local = conv_symmetric(&band.map(f64::abs), &FILTER);
    band.zip(&local, |c, a| c / (SIGMA0 + a))
}

/// Binomial blur then keep even-index samples.
fn reduce(plane: &Luma) -> Luma {
    conv_symmetric(plane, &FILTER).decimate2()
}

/// Zero-insertion upsample to the given shape, then binomial blur with
/// doubled taps per axis to restore DC gain.
fn expand(plane: &Luma, out_width: usize, out_height: usize) -> Luma {
    debug_assert_eq!(out_width.div_ceil(2), plane.width());
    debug_assert_eq!(out_height.div_ceil(2), plane.height());
    let mut upsampled = vec![0.0; out_width * out_height];
    for y in 0..plane.height() {
        for x in 0..plane.width() {
            upsampled[(2 * y) * out_width + 2 * x] = plane.at(x, y);
        }
    }
    let doubled: Vec<f64> = FILTER.iter().map(|&t| 2.0 * t).collect();
    conv_symmetric(&Luma::new(out_width, out_height, upsampled), &doubled)
}
