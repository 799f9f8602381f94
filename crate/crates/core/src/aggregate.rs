//! Pooling per-view metric scores into t-metric reports.
//!
//! The t-metric of a view set is the plain arithmetic mean of the per-view
//! scores, computed with compensated summation. An optional solid-angle
//! weighted mean is available for callers that want area-exact pooling; the
//! faces are near-equal-area, so the two rarely differ visibly.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::TangentLayout;
use crate::metrics::{
    compensated_sum, score_pair, ExternalContext, MetricDescriptor, MetricError, MetricId,
    MetricScore, Polarity, PluginRegistry,
};
use crate::resample::{render_all_views, ErpImage, Interp, TangentView};

#[derive(Debug, Error)]
pub enum AggregateError {
    #[error("no scores to aggregate")]
    Empty,
    #[error("mixed metric ids in one aggregation: {expected} and {got}")]
    MixedMetrics { expected: MetricId, got: MetricId },
    #[error("{0} scores do not form a complete layout (expected 20 * 4^b for some b)")]
    BadLength(usize),
    #[error("{scores} scores but {weights} weights")]
    WeightCount { scores: usize, weights: usize },
}

#[derive(Debug, Error)]
pub enum EvaluateError {
    #[error("reference is {0}x{1} but distorted is {2}x{3}")]
    InputShape(u32, u32, u32, u32),
    #[error("metric {metric} at view {plane_index}: {source}")]
    Metric {
        metric: MetricId,
        plane_index: usize,
        source: MetricError,
    },
    #[error("aggregating metric {metric}: {source}")]
    Aggregate {
        metric: MetricId,
        source: AggregateError,
    },
}

/// Spread statistics over the per-view scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReportStats {
    pub min: f64,
    pub max: f64,
    /// Population standard deviation.
    pub stddev: f64,
}

/// Aggregated result of one metric over a full view set.
#[derive(Debug, Clone, PartialEq)]
pub struct TMetricReport {
    pub metric: MetricDescriptor,
    pub level: u32,
    /// `(plane_index, score)` in face order.
    pub per_view: Vec<(usize, f64)>,
    pub t_value: f64,
    pub stats: ReportStats,
}

/// Infers the subdivision level from a view count of the form `20 * 4^b`.
pub fn level_for_len(len: usize) -> Option<u32> {
    if len == 0 || len % 20 != 0 {
        return None;
    }
    let q = len / 20;
    if !q.is_power_of_two() || q.trailing_zeros() % 2 != 0 {
        return None;
    }
    Some(q.trailing_zeros() / 2)
}

/// Mean of the per-view scores.
pub fn t_metric(
    descriptor: &MetricDescriptor,
    scores: &[MetricScore],
) -> Result<TMetricReport, AggregateError> {
    aggregate(descriptor, scores, None)
}

/// Weighted mean, typically with face solid angles as weights.
pub fn t_metric_weighted(
    descriptor: &MetricDescriptor,
    scores: &[MetricScore],
    weights: &[f64],
) -> Result<TMetricReport, AggregateError> {
    if weights.len() != scores.len() {
        return Err(AggregateError::WeightCount {
            scores: scores.len(),
            weights: weights.len(),
        });
    }
    aggregate(descriptor, scores, Some(weights))
}

fn aggregate(
    descriptor: &MetricDescriptor,
    scores: &[MetricScore],
    weights: Option<&[f64]>,
) -> Result<TMetricReport, AggregateError> {
    if scores.is_empty() {
        return Err(AggregateError::Empty);
    }
    for s in scores {
        if s.id != descriptor.id {
            return Err(AggregateError::MixedMetrics {
                expected: descriptor.id.clone(),
                got: s.id.clone(),
            });
        }
    }
    let level = level_for_len(scores.len()).ok_or(AggregateError::BadLength(scores.len()))?;

    let values: Vec<f64> = scores.iter().map(|s| s.value).collect();
    let mean = match weights {
        None => compensated_sum(values.iter().copied()) / values.len() as f64,
        Some(w) => {
            let num = compensated_sum(values.iter().zip(w).map(|(&v, &wi)| v * wi));
            let den = compensated_sum(w.iter().copied());
            num / den
        }
    };
    let min = values.iter().copied().fold(f64::MAX, f64::min);
    let max = values.iter().copied().fold(f64::MIN, f64::max);
    let t_value = mean.clamp(min, max);
    let var = compensated_sum(values.iter().map(|&v| (v - t_value) * (v - t_value)))
        / values.len() as f64;

    Ok(TMetricReport {
        metric: descriptor.clone(),
        level,
        per_view: values.iter().copied().enumerate().collect(),
        t_value,
        stats: ReportStats {
            min,
            max,
            stddev: var.max(0.0).sqrt(),
        },
    })
}

/// Scores every view pair with one metric, in parallel, in face order.
pub fn score_views(
    ref_views: &[TangentView],
    dist_views: &[TangentView],
    metric: &MetricId,
    external: Option<&ExternalContext>,
) -> Result<Vec<MetricScore>, EvaluateError> {
    debug_assert_eq!(ref_views.len(), dist_views.len());
    let results: Vec<Result<MetricScore, MetricError>> = ref_views
        .par_iter()
        .zip(dist_views.par_iter())
        .map(|(r, d)| score_pair(r, d, metric, external))
        .collect();
    // Scan serially so the reported failure is the first view in face order.
    results
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|source| EvaluateError::Metric {
                metric: metric.clone(),
                plane_index: i,
                source,
            })
        })
        .collect()
}

/// Polarity and range for a metric id, consulting the plugin registry for
/// external metrics (unregistered externals default to higher-better).
pub fn resolve_descriptor(id: &MetricId, registry: Option<&PluginRegistry>) -> MetricDescriptor {
    MetricDescriptor::builtin(id).unwrap_or_else(|| MetricDescriptor {
        id: id.clone(),
        polarity: registry
            .and_then(|r| r.get(id.name()))
            .map(|p| p.polarity())
            .unwrap_or(Polarity::HigherBetter),
        range_hint: None,
    })
}

/// Renders both view sets once and aggregates every requested metric.
///
/// Fails on the first metric error; callers that need per-metric resilience
/// render views themselves and call [`score_views`] per metric.
pub fn evaluate_odi(
    reference: &ErpImage,
    distorted: &ErpImage,
    layout: &TangentLayout,
    metrics: &[MetricId],
    interp: Interp,
    external: Option<&ExternalContext>,
) -> Result<Vec<TMetricReport>, EvaluateError> {
    if reference.width() != distorted.width() || reference.height() != distorted.height() {
        return Err(EvaluateError::InputShape(
            reference.width(),
            reference.height(),
            distorted.width(),
            distorted.height(),
        ));
    }
    let ref_views = render_all_views(reference, layout, interp);
    let dist_views = render_all_views(distorted, layout, interp);

    let mut reports = Vec::with_capacity(metrics.len());
    for metric in metrics {
        let scores = score_views(&ref_views, &dist_views, metric, external)?;
        let descriptor = resolve_descriptor(metric, external.map(|e| e.registry()));
        let report =
            t_metric(&descriptor, &scores).map_err(|source| EvaluateError::Aggregate {
                metric: metric.clone(),
                source,
            })?;
        reports.push(report);
    }
    Ok(reports)
}

/// Serializable form of one metric report.
#[derive(Debug, Serialize)]
pub struct MetricReportDoc {
    pub metric: String,
    pub polarity: Polarity,
    pub t_value: f64,
    pub min: f64,
    pub max: f64,
    pub stddev: f64,
    pub per_view: Vec<f64>,
}

/// Serializable result of scoring one distorted image against a reference.
#[derive(Debug, Serialize)]
pub struct OdiReportDoc {
    pub schema_version: u32,
    #[serde(rename = "ref")]
    pub reference: String,
    pub dist: String,
    pub level: u32,
    pub view_dim: u32,
    pub reports: Vec<MetricReportDoc>,
}

impl MetricReportDoc {
    pub fn from_report(report: &TMetricReport) -> Self {
        Self {
            metric: report.metric.id.name().to_string(),
            polarity: report.metric.polarity,
            t_value: report.t_value,
            min: report.stats.min,
            max: report.stats.max,
            stddev: report.stats.stddev,
            per_view: report.per_view.iter().map(|&(_, v)| v).collect(),
        }
    }
}

impl OdiReportDoc {
    pub fn new(
        reference: impl Into<String>,
        dist: impl Into<String>,
        layout: &TangentLayout,
        reports: &[TMetricReport],
    ) -> Self {
        Self {
            schema_version: crate::SCHEMA_VERSION,
            reference: reference.into(),
            dist: dist.into(),
            level: layout.level,
            view_dim: layout.view_dim,
            reports: reports.iter().map(MetricReportDoc::from_report).collect(),
        }
    }
}

/// CSV header for the flat per-(dist, metric) export.
pub const CSV_HEADER: &str = "ref,dist,metric,polarity,level,view_dim,t_value,min,max,stddev";

/// One CSV row per metric report.
pub fn csv_rows(doc: &OdiReportDoc) -> Vec<String> {
    doc.reports
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{},{},{},{},{}",
                doc.reference,
                doc.dist,
                r.metric,
                match r.polarity {
                    Polarity::HigherBetter => "higher_better",
                    Polarity::LowerBetter => "lower_better",
                },
                doc.level,
                doc.view_dim,
                r.t_value,
                r.min,
                r.max,
                r.stddev
            )
        })
        .collect()
}
