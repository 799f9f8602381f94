//! Cross-metric invariants: polarity-ordered degradation response,
//! boundedness on random pairs, and statistics properties.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tangent_iqa_core::metrics::{
    compensated_sum, score_luma, Luma, MetricDescriptor, MetricId, Polarity,
};
use tangent_iqa_core::subjective::{binom_cdf, pref_prob};

/// Gaussian-filtered white noise in [0.1, 0.9]; the shared degradation
/// target for every kernel.
fn natural_test_image(side: usize, seed: u64) -> Luma {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..side * side).map(|_| rng.random_range(0.0..1.0)).collect();
    let white = Luma::new(side, side, data);
    let blur = |p: &Luma, sigma: f64| {
        let taps = gaussian(sigma);
        conv(p, &taps)
    };
    let fine = blur(&white, 1.2);
    let coarse = blur(&white, 6.0);
    let mixed = fine.zip(&coarse, |a, b| 0.6 * a + 0.4 * b);
    let lo = mixed.data().iter().cloned().fold(f64::MAX, f64::min);
    let hi = mixed.data().iter().cloned().fold(f64::MIN, f64::max);
    mixed.map(|v| 0.1 + 0.8 * (v - lo) / (hi - lo))
}

fn gaussian(sigma: f64) -> Vec<f64> {
    let half = (3.0 * sigma).ceil() as isize;
    let mut taps: Vec<f64> = (-half..=half)
        .map(|i| (-0.5 * (i as f64 / sigma).powi(2)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Separable convolution with edge clamping; a deliberately independent
/// implementation from the library's own filters.
fn conv(p: &Luma, taps: &[f64]) -> Luma {
    let (w, h) = (p.width(), p.height());
    let half = taps.len() as isize / 2;
    let idx = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
    let mut mid = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            mid[y * w + x] = taps
                .iter()
                .enumerate()
                .map(|(t, &tap)| tap * p.at(idx(x as isize + t as isize - half, w), y))
                .sum();
        }
    }
    let mid = Luma::new(w, h, mid);
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = taps
                .iter()
                .enumerate()
                .map(|(t, &tap)| tap * mid.at(x, idx(y as isize + t as isize - half, h)))
                .sum();
        }
    }
    Luma::new(w, h, out)
}

#[test]
fn blur_ladder_moves_every_metric_in_its_polarity_direction() {
    let reference = natural_test_image(256, 42);
    for id in MetricId::BUILT_INS {
        let polarity = MetricDescriptor::builtin(&id).unwrap().polarity;
        let mut scores = Vec::new();
        for sigma in [0.5, 1.0, 2.0, 4.0] {
            let distorted = conv(&reference, &gaussian(sigma));
            scores.push(score_luma(&id, &reference, &distorted).unwrap().value);
        }
        for pair in scores.windows(2) {
            match polarity {
                Polarity::HigherBetter => assert!(
                    pair[1] < pair[0],
                    "{id}: blur ladder not strictly decreasing: {scores:?}"
                ),
                Polarity::LowerBetter => assert!(
                    pair[1] > pair[0],
                    "{id}: blur ladder not strictly increasing: {scores:?}"
                ),
            }
        }
    }
}

#[test]
fn scores_stay_in_their_documented_ranges_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    // msssim and vifs need large support, so use structured random sizes.
    for trial in 0..60 {
        let side = 180 + (trial % 5) * 16;
        let a = natural_test_image(side, rng.random());
        let b = if trial % 3 == 0 {
            // Pure white noise against texture.
            let mut r2 = ChaCha8Rng::seed_from_u64(rng.random());
            Luma::new(
                side,
                side,
                (0..side * side).map(|_| r2.random_range(0.0..1.0)).collect(),
            )
        } else {
            natural_test_image(side, rng.random())
        };
        for id in MetricId::BUILT_INS {
            let value = score_luma(&id, &a, &b).unwrap().value;
            assert!(value.is_finite(), "{id} produced {value}");
            match id {
                MetricId::Ssim => assert!((-1.0..=1.0).contains(&value), "ssim {value}"),
                MetricId::MsSsim => assert!((0.0..=1.0).contains(&value), "msssim {value}"),
                MetricId::Gmsd | MetricId::Vifs | MetricId::Nlpd => {
                    assert!(value >= 0.0, "{id} {value}")
                }
                MetricId::External(_) => unreachable!(),
            }
        }
    }
}

#[test]
fn small_kernels_stay_bounded_over_ten_thousand_random_pairs() {
    // ssim and gmsd run on tiny planes, so the full 10k-pair sweep is cheap;
    // the large-support kernels get the structured sweep above.
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    for _ in 0..10_000 {
        let side = rng.random_range(12..24);
        let random_plane = |rng: &mut ChaCha8Rng| {
            Luma::new(
                side,
                side,
                (0..side * side).map(|_| rng.random_range(0.0..=1.0)).collect(),
            )
        };
        let a = random_plane(&mut rng);
        let b = random_plane(&mut rng);
        let ssim = score_luma(&MetricId::Ssim, &a, &b).unwrap().value;
        assert!((-1.0..=1.0).contains(&ssim), "ssim {ssim}");
        let gmsd = score_luma(&MetricId::Gmsd, &a, &b).unwrap().value;
        assert!(gmsd.is_finite() && gmsd >= 0.0, "gmsd {gmsd}");
    }
}

#[test]
fn gmsd_and_nlpd_are_symmetric_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    for _ in 0..20 {
        let a = natural_test_image(96, rng.random());
        let b = natural_test_image(96, rng.random());
        for id in [MetricId::Gmsd, MetricId::Nlpd] {
            let xy = score_luma(&id, &a, &b).unwrap().value;
            let yx = score_luma(&id, &b, &a).unwrap().value;
            assert!((xy - yx).abs() < 1e-12, "{id}: {xy} vs {yx}");
        }
    }
}

proptest! {
    #[test]
    fn binom_cdf_is_a_cdf(n in 1u64..=60, p in 0.0f64..=1.0) {
        let mut last = 0.0f64;
        for k in 0..=n {
            let c = binom_cdf(k, n, p).unwrap();
            prop_assert!((0.0..=1.0).contains(&c));
            prop_assert!(c >= last - 1e-15);
            last = c;
        }
        prop_assert_eq!(binom_cdf(n, n, p).unwrap(), 1.0);
    }

    #[test]
    fn pref_prob_complement_sums_to_exactly_one(n in 1u32..=200, w_frac in 0.0f64..=1.0, t_frac in 0.0f64..=1.0) {
        let w = (f64::from(n) * w_frac).floor();
        let remaining = f64::from(n) - w;
        let tau = (remaining * t_frac).floor();
        let p1 = pref_prob(w, n, tau).unwrap();
        let p2 = pref_prob(f64::from(n) - w - tau, n, tau).unwrap();
        prop_assert_eq!(p1 + p2, 1.0);
        prop_assert!((0.0..=1.0).contains(&p1));
    }

    #[test]
    fn compensated_sum_matches_exact_integer_sums(values in proptest::collection::vec(-1000i32..1000, 1..200)) {
        let exact: i64 = values.iter().map(|&v| i64::from(v)).sum();
        let sum = compensated_sum(values.iter().map(|&v| f64::from(v)));
        prop_assert_eq!(sum, exact as f64);
    }
}
