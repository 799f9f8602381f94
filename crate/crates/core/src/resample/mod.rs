//! Rendering tangential views from equirectangular images, plus the
//! degrade/upsample kernels used to build evaluation stand-ins.
//!
//! All sampling follows the pixel-center convention: pixel `(u, v)` covers
//! the unit square centered at `(u + 0.5, v + 0.5)`. Horizontal resampling
//! wraps across the longitude seam; vertical resampling clamps at the poles.
//! Sample values live in `[0, 1]`, stored single precision with all
//! arithmetic done in double precision.

mod image;
mod resize;
mod sampling;

pub use image::{Colorspace, ErpImage, TangentView};
pub use resize::{degrade, gaussian_blur, upsample, DegradeSpec, Kernel};
pub use sampling::{
    erp_pixel_to_sphere, render_all_views, render_view, sample_erp, sphere_to_erp_pixel, Interp,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ResampleError {
    #[error("image is {width}x{height} but a 2:1 equirectangular aspect is required")]
    AspectRatio { width: u32, height: u32 },
    #[error("{context}: got {got} samples, expected {expected}")]
    DataLength {
        context: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("sample value {0} outside [0, 1]")]
    SampleRange(f64),
    #[error("channel count {0} unsupported (must be 1 or 3)")]
    ChannelCount(u8),
    #[error("dimensions {width}x{height} not divisible by scale {scale}")]
    Indivisible { width: u32, height: u32, scale: u32 },
    #[error("invalid resample parameter: {0}")]
    InvalidParameter(String),
}
