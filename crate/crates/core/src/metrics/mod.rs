//! Full-reference quality metric kernels and the external-metric adapter.
//!
//! Every kernel takes a reference/distorted pair of equal shape with samples
//! in `[0, 1]`; RGB inputs are reduced to Rec.601 luma first. Built-in
//! kernels are pure and reentrant. Constants follow the metrics' reference
//! implementations, rescaled to the unit sample range where noted on each
//! constant.

mod external;
mod gmsd;
mod nlpd;
mod plane;
mod ssim;
mod vifs;

pub use external::{run_plugin, Plugin, PluginFailure, PluginRegistry, DEFAULT_TIMEOUT};
pub use gmsd::gmsd;
pub use nlpd::nlpd;
pub use plane::{compensated_sum, Luma};
pub use ssim::{msssim, ssim};
pub use vifs::vifs;

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::io::{save_image, BitDepth};
use crate::resample::TangentView;

/// Constants of the built-in kernels, re-exported in one place so
/// configuration listings can display them.
pub mod constants {
    pub use super::gmsd::{MIN_SIDE as GMSD_MIN_SIDE, STABILITY as GMSD_STABILITY};
    pub use super::nlpd::{
        FILTER as NLPD_FILTER, LEVELS as NLPD_LEVELS, MIN_SIDE as NLPD_MIN_SIDE,
        SIGMA0 as NLPD_SIGMA0,
    };
    pub use super::ssim::{
        DYNAMIC_RANGE as SSIM_DYNAMIC_RANGE, K1 as SSIM_K1, K2 as SSIM_K2,
        MS_MIN_SIDE as MSSSIM_MIN_SIDE, MS_WEIGHTS as MSSSIM_WEIGHTS,
        WINDOW_SIDE as SSIM_WINDOW_SIDE, WINDOW_SIGMA as SSIM_WINDOW_SIGMA,
    };
    pub use super::vifs::{
        EPS as VIF_EPS, MIN_SIDE as VIF_MIN_SIDE, SCALES as VIF_SCALES,
        SIGMA_NSQ as VIF_SIGMA_NSQ,
    };
}

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("dimension mismatch: reference {ref_w}x{ref_h} vs distorted {dist_w}x{dist_h}")]
    Shape {
        ref_w: usize,
        ref_h: usize,
        dist_w: usize,
        dist_h: usize,
    },
    #[error("{metric}: {got_w}x{got_h} input below the minimum support of {min} px per side")]
    Support {
        metric: &'static str,
        min: usize,
        got_w: usize,
        got_h: usize,
    },
    #[error("views from different planes: {ref_plane} vs {dist_plane}")]
    Pairing {
        ref_plane: usize,
        dist_plane: usize,
    },
    #[error("invalid metric name {0:?}")]
    InvalidName(String),
    #[error("no plugin registered for external metric {0:?}")]
    UnregisteredPlugin(String),
    #[error("external metric {0:?} requested but no plugin context provided")]
    NoExternalContext(String),
    #[error("plugin {name}: {failure}{}", format_stderr(.stderr))]
    Plugin {
        name: String,
        failure: PluginFailure,
        stderr: String,
    },
    #[error("writing plugin input {path}: {detail}")]
    TempFile { path: PathBuf, detail: String },
}

fn format_stderr(stderr: &str) -> String {
    let trimmed = stderr.trim();
    if trimmed.is_empty() {
        String::new()
    } else {
        format!(" (stderr: {trimmed})")
    }
}

/// Identity of a metric: one of the built-in kernels or a named plugin.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MetricId {
    Ssim,
    MsSsim,
    Gmsd,
    Vifs,
    Nlpd,
    External(String),
}

impl MetricId {
    pub const BUILT_INS: [MetricId; 5] = [
        MetricId::Ssim,
        MetricId::MsSsim,
        MetricId::Gmsd,
        MetricId::Vifs,
        MetricId::Nlpd,
    ];

    /// Parses a metric name; built-ins match case-insensitively (with or
    /// without a dash in "ms-ssim"), anything else becomes an external
    /// metric as long as it is a non-empty filesystem-safe token.
    pub fn parse(name: &str) -> Result<Self, MetricError> {
        match name.to_ascii_lowercase().as_str() {
            "ssim" => Ok(MetricId::Ssim),
            "msssim" | "ms-ssim" => Ok(MetricId::MsSsim),
            "gmsd" => Ok(MetricId::Gmsd),
            "vifs" => Ok(MetricId::Vifs),
            "nlpd" => Ok(MetricId::Nlpd),
            _ => {
                let safe = !name.is_empty()
                    && name
                        .chars()
                        .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
                if safe {
                    Ok(MetricId::External(name.to_string()))
                } else {
                    Err(MetricError::InvalidName(name.to_string()))
                }
            }
        }
    }

    pub fn name(&self) -> &str {
        match self {
            MetricId::Ssim => "ssim",
            MetricId::MsSsim => "msssim",
            MetricId::Gmsd => "gmsd",
            MetricId::Vifs => "vifs",
            MetricId::Nlpd => "nlpd",
            MetricId::External(name) => name,
        }
    }

    pub fn is_builtin(&self) -> bool {
        !matches!(self, MetricId::External(_))
    }
}

impl std::fmt::Display for MetricId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Whether larger values mean better quality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    HigherBetter,
    LowerBetter,
}

impl Polarity {
    /// True when `a` is a strictly better score than `b`.
    pub fn prefers(&self, a: f64, b: f64) -> bool {
        match self {
            Polarity::HigherBetter => a > b,
            Polarity::LowerBetter => a < b,
        }
    }
}

/// A metric plus how to read its values.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricDescriptor {
    pub id: MetricId,
    pub polarity: Polarity,
    pub range_hint: Option<(f64, f64)>,
}

impl MetricDescriptor {
    /// Descriptor for a built-in metric; `None` for external ids.
    pub fn builtin(id: &MetricId) -> Option<Self> {
        let (polarity, range_hint) = match id {
            MetricId::Ssim => (Polarity::HigherBetter, Some((-1.0, 1.0))),
            MetricId::MsSsim => (Polarity::HigherBetter, Some((0.0, 1.0))),
            MetricId::Gmsd => (Polarity::LowerBetter, Some((0.0, 1.0))),
            MetricId::Vifs => (Polarity::HigherBetter, None),
            MetricId::Nlpd => (Polarity::LowerBetter, None),
            MetricId::External(_) => return None,
        };
        Some(Self {
            id: id.clone(),
            polarity,
            range_hint,
        })
    }
}

/// One metric value.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricScore {
    pub id: MetricId,
    pub value: f64,
}

/// Everything external scoring needs: the plugin table plus a scratch
/// directory for the image pairs handed to child processes.
pub struct ExternalContext<'a> {
    registry: &'a PluginRegistry,
    work_dir: PathBuf,
    keep_temp: bool,
    serial: AtomicU64,
}

impl<'a> ExternalContext<'a> {
    pub fn new(registry: &'a PluginRegistry, work_dir: PathBuf, keep_temp: bool) -> Self {
        Self {
            registry,
            work_dir,
            keep_temp,
            serial: AtomicU64::new(0),
        }
    }

    pub fn registry(&self) -> &PluginRegistry {
        self.registry
    }

    fn score(
        &self,
        name: &str,
        reference: &TangentView,
        distorted: &TangentView,
    ) -> Result<f64, MetricError> {
        if self.registry.get(name).is_none() {
            return Err(MetricError::UnregisteredPlugin(name.to_string()));
        }
        let serial = self.serial.fetch_add(1, Ordering::Relaxed);
        let stem = format!("{name}_{:04}_{serial}", reference.plane_index());
        let ref_path = self.work_dir.join(format!("{stem}_ref.png"));
        let dist_path = self.work_dir.join(format!("{stem}_dist.png"));
        let write = |path: &Path, view: &TangentView| {
            save_image(path, &crate::io::view_to_image(view), BitDepth::Sixteen).map_err(|e| {
                MetricError::TempFile {
                    path: path.to_path_buf(),
                    detail: e.to_string(),
                }
            })
        };
        write(&ref_path, reference)?;
        write(&dist_path, distorted)?;

        let result = self.registry.run(name, &ref_path, &dist_path);
        if !self.keep_temp {
            let _ = std::fs::remove_file(&ref_path);
            let _ = std::fs::remove_file(&dist_path);
        }
        result
    }
}

/// Scores one reference/distorted view pair with the given metric.
pub fn score_pair(
    reference: &TangentView,
    distorted: &TangentView,
    metric: &MetricId,
    external: Option<&ExternalContext>,
) -> Result<MetricScore, MetricError> {
    if reference.plane_index() != distorted.plane_index() {
        return Err(MetricError::Pairing {
            ref_plane: reference.plane_index(),
            dist_plane: distorted.plane_index(),
        });
    }
    if reference.dim() != distorted.dim() || reference.channels() != distorted.channels() {
        return Err(MetricError::Shape {
            ref_w: reference.dim() as usize,
            ref_h: reference.dim() as usize,
            dist_w: distorted.dim() as usize,
            dist_h: distorted.dim() as usize,
        });
    }
    match metric {
        MetricId::External(name) => {
            let ctx = external.ok_or_else(|| MetricError::NoExternalContext(name.clone()))?;
            let value = ctx.score(name, reference, distorted)?;
            Ok(MetricScore {
                id: metric.clone(),
                value,
            })
        }
        builtin => {
            let x = Luma::from_view(reference);
            let y = Luma::from_view(distorted);
            score_luma(builtin, &x, &y)
        }
    }
}

/// Dispatches a built-in kernel on luma planes.
pub fn score_luma(
    metric: &MetricId,
    reference: &Luma,
    distorted: &Luma,
) -> Result<MetricScore, MetricError> {
    match metric {
        MetricId::Ssim => ssim(reference, distorted),
        MetricId::MsSsim => msssim(reference, distorted),
        MetricId::Gmsd => gmsd(reference, distorted),
        MetricId::Vifs => vifs(reference, distorted),
        MetricId::Nlpd => nlpd(reference, distorted),
        MetricId::External(name) => Err(MetricError::NoExternalContext(name.clone())),
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    //! Shared fixtures for kernel tests: a seeded textured plane and basic
    //! distortions of it.

    use super::plane::{conv_symmetric, gaussian_kernel, Luma};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Gaussian-filtered white noise stretched to [0.1, 0.9]; crude natural
    /// image statistics.
    pub fn textured_luma(width: usize, height: usize, seed: u64) -> Luma {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let white = Luma::new(
            width,
            height,
            (0..width * height)
                .map(|_| rng.random_range(0.0..1.0))
                .collect(),
        );
        let fine = conv_symmetric(&white, &gaussian_kernel(7, 1.2));
        let coarse = conv_symmetric(&white, &gaussian_kernel(25, 5.0));
        let mixed = fine.zip(&coarse, |a, b| 0.6 * a + 0.4 * b);
        let lo = mixed.data().iter().cloned().fold(f64::MAX, f64::min);
        let hi = mixed.data().iter().cloned().fold(f64::MIN, f64::max);
        mixed.map(|v| 0.1 + 0.8 * (v - lo) / (hi - lo))
    }

    pub fn noisy_luma(plane: &Luma, sigma: f64, seed: u64) -> Luma {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        plane.map(|v| {
            let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.random_range(0.0..1.0);
            let n = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
            (v + sigma * n).clamp(0.0, 1.0)
        })
    }

    pub fn blur_luma(plane: &Luma, sigma: f64) -> Luma {
        let side = 2 * (3.0 * sigma).ceil() as usize + 1;
        conv_symmetric(plane, &gaussian_kernel(side, sigma))
    }
}
