use super::layout::TangentPlane;
use super::vec3;
use super::{GeometryError, SphericalPoint};

/// Gnomonic (central) projection of a spherical point onto a tangent plane.
///
/// Returns tangent-plane coordinates in units of the unit sphere radius; the
/// plane center maps to `(0, 0)`. Only points strictly inside the plane's
/// hemisphere project; at or beyond the boundary the central ray never meets
/// the plane.
pub fn gnomonic_forward(
    plane: &TangentPlane,
    p: SphericalPoint,
) -> Result<(f64, f64), GeometryError> {
    const EPS: f64 = 1e-9;
    let dir = p.to_unit_vector();
    let c = vec3::dot(plane.center, dir);
    if c <= EPS {
        return Err(GeometryError::OutOfHemisphere);
    }
    Ok((
        vec3::dot(plane.basis_u, dir) / c,
        vec3::dot(plane.basis_v, dir) / c,
    ))
}

/// Inverse gnomonic projection: tangent-plane coordinates back to the sphere.
///
/// Total on finite inputs; `(0, 0)` maps to the plane center.
pub fn gnomonic_inverse(plane: &TangentPlane, x: f64, y: f64) -> SphericalPoint {
    let dir = vec3::add(
        plane.center,
        vec3::add(vec3::scale(plane.basis_u, x), vec3::scale(plane.basis_v, y)),
    );
    SphericalPoint::from_vector(dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_layout;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn equatorial_plane() -> TangentPlane {
        // Tangent at (lat 0, lon 0): u points along +lon, v toward north.
        TangentPlane::new([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], 1.5).unwrap()
    }

    #[test]
    fn center_projects_to_origin() {
        let plane = equatorial_plane();
        let (x, y) = gnomonic_forward(&plane, SphericalPoint::new(0.0, 0.0).unwrap()).unwrap();
        assert_eq!((x, y), (0.0, 0.0));
        let back = gnomonic_inverse(&plane, 0.0, 0.0);
        assert!(back.lat().abs() < 1e-15 && back.lon().abs() < 1e-15);
    }

    #[test]
    fn equatorial_closed_form_is_tan_theta() {
        let plane = equatorial_plane();
        for theta in [-1.2, -0.5, -0.01, 0.0, 0.3, 0.9, 1.4] {
            let p = SphericalPoint::new(0.0, theta).unwrap();
            let (x, y) = gnomonic_forward(&plane, p).unwrap();
            assert!((x - theta.tan()).abs() < 1e-12, "theta {theta}");
            assert!(y.abs() < 1e-12);
            let back = gnomonic_inverse(&plane, theta.tan(), 0.0);
            assert!(back.lat().abs() < 1e-12);
            assert!((back.lon() - theta).abs() < 1e-12);
        }
    }

    #[test]
    fn hemisphere_boundary_is_an_error() {
        let plane = equatorial_plane();
        let boundary = SphericalPoint::new(0.0, FRAC_PI_2).unwrap();
        assert!(matches!(
            gnomonic_forward(&plane, boundary),
            Err(GeometryError::OutOfHemisphere)
        ));
        let behind = SphericalPoint::new(0.0, PI - 0.1).unwrap();
        assert!(gnomonic_forward(&plane, behind).is_err());
    }

    #[test]
    fn round_trip_on_random_in_fov_points() {
        let layout = build_layout(1, 512, 1.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let mut checked = 0usize;
        while checked < 10_000 {
            let plane = &layout.planes[rng.random_range(0..layout.planes.len())];
            // Uniform direction, kept only when inside the plane's fov cone.
            let z: f64 = rng.random_range(-1.0..1.0);
            let lon: f64 = rng.random_range(-PI..PI);
            let r = (1.0 - z * z).sqrt();
            let dir = [r * lon.cos(), r * lon.sin(), z];
            if vec3::angle_between(dir, plane.center) >= plane.fov / 2.0 {
                continue;
            }
            let p = SphericalPoint::from_vector(dir);
            let (x, y) = gnomonic_forward(plane, p).unwrap();
            let back = gnomonic_inverse(plane, x, y);
            let err = vec3::angle_between(p.to_unit_vector(), back.to_unit_vector());
            assert!(err < 1e-9, "round-trip error {err}");
            checked += 1;
        }
    }

    #[test]
    fn forward_of_inverse_is_identity_on_the_view_grid() {
        let layout = build_layout(0, 256, 1.3).unwrap();
        let plane = &layout.planes[7];
        let half = (plane.fov / 2.0).tan();
        let dim = 16;
        for j in 0..dim {
            for i in 0..dim {
                let x = (2.0 * (f64::from(i) + 0.5) / f64::from(dim) - 1.0) * half;
                let y = (2.0 * (f64::from(j) + 0.5) / f64::from(dim) - 1.0) * half;
                let p = gnomonic_inverse(plane, x, y);
                let (xf, yf) = gnomonic_forward(plane, p).unwrap();
                assert!((xf - x).abs() < 1e-9 && (yf - y).abs() < 1e-9);
            }
        }
    }
}
