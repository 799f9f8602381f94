//! Icosahedral sphere tessellation and gnomonic projection math.
//!
//! A level-`b` layout places one oriented tangent plane on every face of the
//! icosahedron after `b` rounds of 4-way midpoint subdivision, giving
//! `20 * 4^b` planes. Each plane carries an orthonormal frame
//! (`basis_u`, `basis_v`, `center`) and a field of view sized so the square
//! view fully covers its face with a configurable overlap margin.

pub mod vec3;

mod icosahedron;
mod layout;
mod projection;

pub use icosahedron::IcosahedronMesh;
pub use layout::{build_layout, TangentLayout, TangentPlane};
pub use projection::{gnomonic_forward, gnomonic_inverse};

use thiserror::Error;
use vec3::Vec3;

/// Levels above this make the face count explode; kept configurable by
/// constructing meshes level by level instead if ever needed.
pub const MAX_SUBDIVISION_LEVEL: u32 = 8;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("subdivision level {level} exceeds the maximum of {max}")]
    Capacity { level: u32, max: u32 },
    #[error("latitude {0} outside [-pi/2, pi/2]")]
    LatitudeRange(f64),
    #[error("coordinate is not finite")]
    NonFinite,
    #[error("point lies at or beyond the hemisphere boundary of the tangent plane")]
    OutOfHemisphere,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// A point on the unit sphere in latitude/longitude radians.
///
/// Latitude is in `[-pi/2, pi/2]`, longitude is normalized to `[-pi, pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalPoint {
    lat: f64,
    lon: f64,
}

impl SphericalPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeometryError> {
        if !lat.is_finite() || !lon.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if !(-std::f64::consts::FRAC_PI_2..=std::f64::consts::FRAC_PI_2).contains(&lat) {
            return Err(GeometryError::LatitudeRange(lat));
        }
        Ok(Self {
            lat,
            lon: normalize_lon(lon),
        })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    /// Unit direction vector; `z` points at the north pole (`lat = pi/2`).
    pub fn to_unit_vector(&self) -> Vec3 {
        let (sin_lat, cos_lat) = self.lat.sin_cos();
        let (sin_lon, cos_lon) = self.lon.sin_cos();
        [cos_lat * cos_lon, cos_lat * sin_lon, sin_lat]
    }

    /// Inverse of [`to_unit_vector`](Self::to_unit_vector); `v` need not be
    /// normalized but must be nonzero.
    pub fn from_vector(v: Vec3) -> Self {
        let d = vec3::normalize(v);
        Self {
            lat: d[2].clamp(-1.0, 1.0).asin(),
            lon: normalize_lon(d[1].atan2(d[0])),
        }
    }
}

/// Wraps a longitude into `[-pi, pi)`.
pub fn normalize_lon(lon: f64) -> f64 {
    use std::f64::consts::PI;
    let wrapped = (lon + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can return exactly 2*pi for inputs just below it.
    if wrapped >= PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

/// Number of tangential views at subdivision level `level`: `20 * 4^level`.
pub fn view_count(level: u32) -> u64 {
    20u64 * 4u64.pow(level)
}
