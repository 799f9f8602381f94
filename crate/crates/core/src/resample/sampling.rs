use std::f64::consts::PI;

use rayon::prelude::*;

use super::image::{ErpImage, TangentView};
use crate::geometry::{gnomonic_inverse, SphericalPoint, TangentLayout};

/// Interpolation used when reading the equirectangular source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interp {
    Bilinear,
    /// Catmull-Rom cubic (Keys kernel, a = -0.5).
    Bicubic,
}

/// Direction of the center of pixel `(u, v)` under the pixel-center
/// convention.
pub fn erp_pixel_to_sphere(u: u32, v: u32, width: u32, height: u32) -> SphericalPoint {
    debug_assert!(u < width && v < height);
    let lon = ((f64::from(u) + 0.5) / f64::from(width) - 0.5) * 2.0 * PI;
    let lat = (0.5 - (f64::from(v) + 0.5) / f64::from(height)) * PI;
    SphericalPoint::new(lat, lon).expect("pixel centers are always on the sphere")
}

/// Fractional pixel coordinates of a spherical point; the exact inverse of
/// [`erp_pixel_to_sphere`] at pixel centers. The column may fall in
/// `[-0.5, width - 0.5)` and wraps; the row clamps at the poles.
pub fn sphere_to_erp_pixel(p: SphericalPoint, width: u32, height: u32) -> (f64, f64) {
    let uf = (p.lon() / (2.0 * PI) + 0.5) * f64::from(width) - 0.5;
    let vf = (0.5 - p.lat() / PI) * f64::from(height) - 0.5;
    (uf, vf)
}

/// Samples the image at a spherical point.
///
/// Returns one value per channel, clamped to `[0, 1]`. Columns wrap across
/// the longitude seam, rows clamp at the poles.
pub fn sample_erp(img: &ErpImage, p: SphericalPoint, interp: Interp) -> Vec<f64> {
    let mut out = vec![0.0; img.channels() as usize];
    sample_erp_into(img, p, interp, &mut out);
    out
}

pub(crate) fn sample_erp_into(img: &ErpImage, p: SphericalPoint, interp: Interp, out: &mut [f64]) {
    debug_assert_eq!(out.len(), img.channels() as usize);
    let (uf, vf) = sphere_to_erp_pixel(p, img.width(), img.height());
    match interp {
        Interp::Bilinear => bilinear_into(img, uf, vf, out),
        Interp::Bicubic => bicubic_into(img, uf, vf, out),
    }
}

fn wrap_col(i: i64, width: u32) -> u32 {
    i.rem_euclid(i64::from(width)) as u32
}

fn clamp_row(j: i64, height: u32) -> u32 {
    j.clamp(0, i64::from(height) - 1) as u32
}

fn bilinear_into(img: &ErpImage, uf: f64, vf: f64, out: &mut [f64]) {
    let i0 = uf.floor();
    let j0 = vf.floor();
    let fu = uf - i0;
    let fv = vf - j0;
    let (i0, j0) = (i0 as i64, j0 as i64);
    let cols = [wrap_col(i0, img.width()), wrap_col(i0 + 1, img.width())];
    let rows = [clamp_row(j0, img.height()), clamp_row(j0 + 1, img.height())];
    for (c, slot) in out.iter_mut().enumerate() {
        // Nested lerp keeps constant regions bit-exact.
        let top = lerp(
            img.sample_at(cols[0], rows[0], c),
            img.sample_at(cols[1], rows[0], c),
            fu,
        );
        let bottom = lerp(
            img.sample_at(cols[0], rows[1], c),
            img.sample_at(cols[1], rows[1], c),
            fu,
        );
        *slot = lerp(top, bottom, fv).clamp(0.0, 1.0);
    }
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + t * (b - a)
}

fn bicubic_into(img: &ErpImage, uf: f64, vf: f64, out: &mut [f64]) {
    let i0 = uf.floor();
    let j0 = vf.floor();
    let fu = uf - i0;
    let fv = vf - j0;
    let (i0, j0) = (i0 as i64, j0 as i64);
    let cols: [u32; 4] = std::array::from_fn(|k| wrap_col(i0 - 1 + k as i64, img.width()));
    let rows: [u32; 4] = std::array::from_fn(|k| clamp_row(j0 - 1 + k as i64, img.height()));
    for (c, slot) in out.iter_mut().enumerate() {
        let col_values: [f64; 4] = std::array::from_fn(|k| {
            let r = rows[k];
            catmull_rom(
                img.sample_at(cols[0], r, c),
                img.sample_at(cols[1], r, c),
                img.sample_at(cols[2], r, c),
                img.sample_at(cols[3], r, c),
                fu,
            )
        });
        *slot = catmull_rom(col_values[0], col_values[1], col_values[2], col_values[3], fv)
            .clamp(0.0, 1.0);
    }
}

/// Catmull-Rom interpolation of four uniform samples at fraction `t` past
/// `p1`. Written in difference form so constant inputs reproduce exactly.
pub(crate) fn catmull_rom(p0: f64, p1: f64, p2: f64, p3: f64, t: f64) -> f64 {
    let a = 0.5 * (p2 - p0);
    let b = (p0 - p1) + 2.0 * (p2 - p1) + 0.5 * (p1 - p3);
    let d = 0.5 * (p3 - p0) + 1.5 * (p1 - p2);
    p1 + t * (a + t * (b + t * d))
}

/// Renders the square tangential view for one plane of the layout.
///
/// View pixel `(i, j)` maps to tangent coordinates
/// `x = (2 (i + 0.5) / dim - 1) tan(fov / 2)` (same for `y` with `j`), then
/// through the inverse gnomonic projection and an equirectangular read.
pub fn render_view(
    img: &ErpImage,
    layout: &TangentLayout,
    plane_index: usize,
    interp: Interp,
) -> TangentView {
    assert!(
        plane_index < layout.planes.len(),
        "plane index {plane_index} out of range for {} planes",
        layout.planes.len()
    );
    let plane = &layout.planes[plane_index];
    let dim = layout.view_dim;
    let half_extent = (plane.fov / 2.0).tan();
    let channels = img.channels() as usize;

    let mut data = Vec::with_capacity(dim as usize * dim as usize * channels);
    let mut sample = vec![0.0f64; channels];
    for j in 0..dim {
        let y = (2.0 * (f64::from(j) + 0.5) / f64::from(dim) - 1.0) * half_extent;
        for i in 0..dim {
            let x = (2.0 * (f64::from(i) + 0.5) / f64::from(dim) - 1.0) * half_extent;
            let p = gnomonic_inverse(plane, x, y);
            sample_erp_into(img, p, interp, &mut sample);
            data.extend(sample.iter().map(|&v| v as f32));
        }
    }

    TangentView::new(plane_index, dim, img.channels(), data)
        .expect("rendered view dimensions are consistent by construction")
}

/// Renders every view of the layout, in face order.
///
/// Views are independent, so they render in parallel on the current rayon
/// pool; the result is identical to the serial loop bit for bit.
pub fn render_all_views(img: &ErpImage, layout: &TangentLayout, interp: Interp) -> Vec<TangentView> {
    (0..layout.planes.len())
        .into_par_iter()
        .map(|i| render_view(img, layout, i, interp))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_layout;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ramp_image(width: u32, height: u32) -> ErpImage {
        // Linear in column index, constant in rows.
        let mut data = Vec::with_capacity((width * height) as usize);
        for _v in 0..height {
            for u in 0..width {
                data.push(u as f32 / (width - 1) as f32);
            }
        }
        ErpImage::new(width, height, 1, data).unwrap()
    }

    #[test]
    fn pixel_center_convention_anchor_values() {
        let p = erp_pixel_to_sphere(0, 0, 1920, 960);
        assert!((p.lon() - (-PI + PI / 1920.0)).abs() < 1e-12);
        assert!((p.lat() - (PI / 2.0 - PI / 1920.0)).abs() < 1e-12);

        let q = erp_pixel_to_sphere(960, 480, 1920, 960);
        assert!((q.lon() - PI / 1920.0).abs() < 1e-12);
        assert!((q.lat() - (-PI / 1920.0)).abs() < 1e-12);
    }

    #[test]
    fn pixel_round_trip_is_exact() {
        for (w, h) in [(64, 32), (1920, 960), (30, 22)] {
            for (u, v) in [(0, 0), (w / 2, h / 2), (w - 1, h - 1), (3, 7)] {
                let p = erp_pixel_to_sphere(u, v, w, h);
                let (uf, vf) = sphere_to_erp_pixel(p, w, h);
                assert!((uf - f64::from(u)).abs() < 1e-9 / (2.0 * PI) * f64::from(w));
                assert!((vf - f64::from(v)).abs() < 1e-9 / PI * f64::from(h));
                assert!((uf - f64::from(u)).abs() < 1e-9);
                assert!((vf - f64::from(v)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn constant_image_samples_to_the_constant() {
        let img = ErpImage::constant(64, 32, 3, 0.37).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let lat = rng.random_range(-PI / 2.0..=PI / 2.0);
            let lon = rng.random_range(-PI..PI);
            let p = SphericalPoint::new(lat, lon).unwrap();
            for interp in [Interp::Bilinear, Interp::Bicubic] {
                for v in sample_erp(&img, p, interp) {
                    assert_eq!(v, f64::from(0.37f32));
                }
            }
        }
    }

    #[test]
    fn pixel_center_sampling_returns_the_pixel() {
        let img = ramp_image(32, 16);
        for (u, v) in [(0u32, 0u32), (5, 9), (31, 15), (16, 8)] {
            let p = erp_pixel_to_sphere(u, v, 32, 16);
            let got = sample_erp(&img, p, Interp::Bilinear)[0];
            let want = f64::from(img.pixel(u, v)[0]);
            assert!((got - want).abs() < 1e-9, "pixel ({u},{v})");
        }
    }

    #[test]
    fn bilinear_matches_analytic_ramp() {
        let width = 256u32;
        let img = ramp_image(width, 128);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut worst: f64 = 0.0;
        for _ in 0..10_000 {
            // Stay away from the seam and the poles.
            let lon = rng.random_range(-2.6..2.6);
            let lat = rng.random_range(-1.2..1.2);
            let p = SphericalPoint::new(lat, lon).unwrap();
            let (uf, _) = sphere_to_erp_pixel(p, width, 128);
            let expected = (uf / f64::from(width - 1)).clamp(0.0, 1.0);
            let got = sample_erp(&img, p, Interp::Bilinear)[0];
            worst = worst.max((got - expected).abs());
        }
        // f32 storage quantizes the ramp itself, hence the small floor.
        assert!(
            worst < 1.0 / f64::from(width),
            "worst ramp error {worst}"
        );
    }

    #[test]
    fn seam_samples_are_continuous() {
        let width = 256u32;
        let height = 128u32;
        let mut data = Vec::with_capacity((width * height) as usize);
        for v in 0..height {
            for u in 0..width {
                let lon = erp_pixel_to_sphere(u, v, width, height).lon();
                data.push((0.5 + 0.4 * lon.sin()) as f32);
            }
        }
        let img = ErpImage::new(width, height, 1, data).unwrap();
        let eps = 1e-6;
        for interp in [Interp::Bilinear, Interp::Bicubic] {
            let east = sample_erp(
                &img,
                SphericalPoint::new(0.0, PI - eps).unwrap(),
                interp,
            )[0];
            let west = sample_erp(
                &img,
                SphericalPoint::new(0.0, -PI + eps).unwrap(),
                interp,
            )[0];
            let bound = 2.0 * eps * f64::from(width) / (2.0 * PI);
            assert!(
                (east - west).abs() < bound,
                "{interp:?}: seam gap {} exceeds {bound}",
                (east - west).abs()
            );
        }
    }

    #[test]
    fn render_constant_view_is_exact() {
        let img = ErpImage::constant(128, 64, 1, 0.62).unwrap();
        let layout = build_layout(0, 128, 1.3).unwrap();
        let view = render_view(&img, &layout, 3, Interp::Bicubic);
        let c = 0.62f32;
        assert!(view.data().iter().all(|&v| v == c));
        let mean: f64 = view.data().iter().map(|&v| f64::from(v)).sum::<f64>()
            / view.data().len() as f64;
        assert_eq!(mean, f64::from(c));
    }

    #[test]
    fn center_pixel_samples_plane_center() {
        let layout = build_layout(0, 256, 1.3).unwrap();
        let width = 256u32;
        let height = 128u32;
        // Image encoding longitude in [0,1] away from the seam.
        let mut data = Vec::new();
        for v in 0..height {
            for u in 0..width {
                let p = erp_pixel_to_sphere(u, v, width, height);
                data.push(((p.lon() / PI) * 0.45 + 0.5) as f32);
                let _ = v;
            }
        }
        let img = ErpImage::new(width, height, 1, data).unwrap();
        let plane_index = 6;
        let view = render_view(&img, &layout, plane_index, Interp::Bilinear);
        let dim = view.dim();
        // view_dim is even, so the view center falls between four pixels;
        // check one of them against the plane-center direction.
        let i = dim / 2;
        let center_px = f64::from(view.data()[(i * dim + i) as usize]);
        let center_dir =
            SphericalPoint::from_vector(layout.planes[plane_index].center);
        let expected = (center_dir.lon() / PI) * 0.45 + 0.5;
        // Half a pixel of slack across the view center.
        let fov = layout.planes[plane_index].fov;
        let px_step = fov / f64::from(dim);
        assert!(
            (center_px - expected).abs() < px_step,
            "center sample {center_px} vs {expected}"
        );
    }

    #[test]
    fn render_all_views_is_deterministic_and_complete() {
        let img = ErpImage::constant(128, 64, 1, 0.5).unwrap();
        let layout = build_layout(1, 128, 1.3).unwrap();
        let views = render_all_views(&img, &layout, Interp::Bicubic);
        assert_eq!(views.len(), 80);
        for (i, v) in views.iter().enumerate() {
            assert_eq!(v.plane_index(), i);
            assert_eq!(v.dim(), layout.view_dim);
        }
        let serial: Vec<_> = (0..layout.planes.len())
            .map(|i| render_view(&img, &layout, i, Interp::Bicubic))
            .collect();
        assert_eq!(views, serial);
    }
}
