//! Full-reference quality assessment for omnidirectional (360-degree) images.
//!
//! An equirectangular image is tessellated with a subdivided icosahedron and a
//! square tangential view is rendered at every face via the gnomonic
//! projection. Classical full-reference metrics score each view pair and the
//! per-view scores are averaged into a single t-metric value. A companion
//! statistics module analyzes pairwise preference data (subjective votes or
//! objective scores) with exact binomial thresholds and Bradley-Terry scaling.
//!
//! The crate is organized along the pipeline:
//!
//! * [`geometry`] — icosahedral tessellation, tangent-plane layouts, gnomonic
//!   projection math.
//! * [`resample`] — rendering tangential views from equirectangular images,
//!   plus degrade/upsample kernels for building evaluation stand-ins.
//! * [`metrics`] — SSIM, MS-SSIM, GMSD, VIF (spatial) and NLPD kernels, and a
//!   subprocess protocol for external metrics.
//! * [`aggregate`] — per-view score pooling into t-metric reports.
//! * [`subjective`] — preference probabilities, binomial significance
//!   thresholds, Bradley-Terry strengths, objective pairwise comparison.
//! * [`io`] — PNG / PGM / PPM image reading and writing.
//! * [`synth`] — seeded synthetic test patterns.

pub mod aggregate;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod resample;
pub mod subjective;
pub mod synth;

/// Schema version stamped on every JSON document this crate emits.
pub const SCHEMA_VERSION: u32 = 1;
