//! Subcommand implementations.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde_json::json;

use tangent_iqa_core::aggregate::{
    csv_rows, score_views, t_metric, t_metric_weighted, OdiReportDoc, CSV_HEADER,
};
use tangent_iqa_core::geometry::{build_layout, IcosahedronMesh};
use tangent_iqa_core::io::{load_image, save_image, view_to_image, BitDepth};
use tangent_iqa_core::metrics::{ExternalContext, MetricDescriptor, MetricId};
use tangent_iqa_core::resample::{render_all_views, ErpImage, Kernel};
use tangent_iqa_core::subjective::{
    analyze_votes, objective_preference, parse_vote_csv, vote_matrix_from_records, ScoreTable,
    VoteAnalysis, VoteRecord,
};
use tangent_iqa_core::SCHEMA_VERSION;

use crate::config::{OutputFormat, RunConfig};

/// Stdout or a file, decided once per run.
pub struct OutputTarget {
    path: Option<PathBuf>,
}

impl OutputTarget {
    pub fn new(path: Option<PathBuf>) -> Self {
        Self { path }
    }

    pub fn write(&self, content: &str) -> Result<()> {
        match &self.path {
            Some(p) => fs::write(p, content).with_context(|| format!("writing {}", p.display())),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(content.as_bytes())?;
                Ok(())
            }
        }
    }
}

fn parse_bit_depth(bits: u8) -> Result<BitDepth> {
    match bits {
        8 => Ok(BitDepth::Eight),
        16 => Ok(BitDepth::Sixteen),
        other => bail!("bit depth {other} unsupported (expected 8 or 16)"),
    }
}

fn parse_kernel(token: &str) -> Result<Kernel> {
    match token {
        "bicubic" => Ok(Kernel::Bicubic),
        "bilinear" => Ok(Kernel::Bilinear),
        "nearest" => Ok(Kernel::Nearest),
        other => {
            if let Some(sigma) = other.strip_prefix("gaussian:") {
                let sigma: f64 = sigma
                    .parse()
                    .with_context(|| format!("gaussian sigma {sigma:?} is not a number"))?;
                Ok(Kernel::GaussianBlur(sigma))
            } else {
                bail!("unknown kernel {other:?} (bicubic, bilinear, nearest or gaussian:SIGMA)")
            }
        }
    }
}

/// Renders all views of one image and writes them plus layout.json.
pub fn tangents(
    input: &Path,
    out_dir: &Path,
    config: &RunConfig,
    allow_any_aspect: bool,
    bit_depth: u8,
) -> Result<()> {
    let depth = parse_bit_depth(bit_depth)?;
    let img = load_image(input, !allow_any_aspect)
        .with_context(|| format!("loading {}", input.display()))?;
    let layout = build_layout(config.level, img.width(), config.padding)?;
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;

    let views = render_all_views(&img, &layout, config.interp);
    for view in &views {
        let path = out_dir.join(format!("view_{:04}.png", view.plane_index()));
        save_image(&path, &view_to_image(view), depth)?;
    }
    let layout_doc = json!({
        "schema_version": SCHEMA_VERSION,
        "level": layout.level,
        "view_dim": layout.view_dim,
        "planes": layout.planes,
    });
    fs::write(
        out_dir.join("layout.json"),
        serde_json::to_string_pretty(&layout_doc)?,
    )?;
    println!(
        "wrote {} views ({}x{} px) and layout.json to {}",
        views.len(),
        layout.view_dim,
        layout.view_dim,
        out_dir.display()
    );
    Ok(())
}

pub struct ScoreOptions {
    pub allow_any_aspect: bool,
    pub solid_angle_weights: bool,
    pub keep_temp: bool,
}

/// Scores each distorted image against the reference with every configured
/// metric. Failures are reported per (image, metric) without aborting the
/// rest; any failure makes the exit status nonzero.
pub fn score(
    reference: &Path,
    distorted: &[PathBuf],
    config: &RunConfig,
    out: OutputTarget,
    options: ScoreOptions,
) -> Result<()> {
    let ref_img = load_image(reference, !options.allow_any_aspect)
        .with_context(|| format!("loading reference {}", reference.display()))?;
    let layout = build_layout(config.level, ref_img.width(), config.padding)?;
    let registry = config.build_registry()?;

    let temp_dir = tempfile::Builder::new()
        .prefix("tangent-iqa-")
        .tempdir()
        .context("creating plugin scratch directory")?;
    let external = ExternalContext::new(&registry, temp_dir.path().to_path_buf(), options.keep_temp);

    let weights = options.solid_angle_weights.then(|| {
        IcosahedronMesh::subdivide(config.level)
            .expect("layout construction already validated the level")
            .face_solid_angles()
    });

    let ref_views = render_all_views(&ref_img, &layout, config.interp);
    let mut docs: Vec<OdiReportDoc> = Vec::new();
    let mut failures: Vec<String> = Vec::new();

    for dist_path in distorted {
        let dist_name = dist_path.display().to_string();
        let dist_img = match load_image(dist_path, false) {
            Ok(img) => img,
            Err(e) => {
                failures.push(format!("{dist_name}: {e}"));
                continue;
            }
        };
        if dist_img.width() != ref_img.width() || dist_img.height() != ref_img.height() {
            failures.push(format!(
                "{dist_name}: dimensions {}x{} do not match the reference {}x{}",
                dist_img.width(),
                dist_img.height(),
                ref_img.width(),
                ref_img.height()
            ));
            continue;
        }
        let dist_views = render_all_views(&dist_img, &layout, config.interp);

        let mut reports = Vec::new();
        for metric in &config.metrics {
            let descriptor = MetricDescriptor {
                id: metric.clone(),
                polarity: config.polarity_for(metric, Some(&registry)),
                range_hint: MetricDescriptor::builtin(metric).and_then(|d| d.range_hint),
            };
            let result = score_views(&ref_views, &dist_views, metric, Some(&external))
                .and_then(|scores| {
                    let aggregated = match &weights {
                        Some(w) => t_metric_weighted(&descriptor, &scores, w),
                        None => t_metric(&descriptor, &scores),
                    };
                    aggregated.map_err(|source| {
                        tangent_iqa_core::aggregate::EvaluateError::Aggregate {
                            metric: metric.clone(),
                            source,
                        }
                    })
                });
            match result {
                Ok(report) => reports.push(report),
                Err(e) => failures.push(format!("{dist_name}: {e}")),
            }
        }
        docs.push(OdiReportDoc::new(
            reference.display().to_string(),
            dist_name,
            &layout,
            &reports,
        ));
    }

    if options.keep_temp {
        let kept = temp_dir.keep();
        eprintln!("plugin scratch kept at {}", kept.display());
    }

    out.write(&render_score_output(&docs, config.format)?)?;
    if !failures.is_empty() {
        for f in &failures {
            eprintln!("error: {f}");
        }
        bail!("{} of the requested scores failed", failures.len());
    }
    Ok(())
}

fn render_score_output(docs: &[OdiReportDoc], format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => Ok(format!("{}\n", serde_json::to_string_pretty(docs)?)),
        OutputFormat::Csv => {
            let mut lines = vec![CSV_HEADER.to_string()];
            for doc in docs {
                lines.extend(csv_rows(doc));
            }
            lines.push(String::new());
            Ok(lines.join("\n"))
        }
    }
}

pub fn degrade(
    input: &Path,
    scale: u32,
    kernel: &str,
    out: OutputTarget,
    bit_depth: u8,
) -> Result<()> {
    let depth = parse_bit_depth(bit_depth)?;
    let kernel = parse_kernel(kernel)?;
    let img = load_image(input, false).with_context(|| format!("loading {}", input.display()))?;
    let spec = tangent_iqa_core::resample::DegradeSpec::new(scale, kernel)?;
    let result = tangent_iqa_core::resample::degrade(&img, spec)?;
    write_image_output(&result, &out, depth, input, "degraded")
}

pub fn upsample(
    input: &Path,
    scale: u32,
    kernel: &str,
    out: OutputTarget,
    bit_depth: u8,
) -> Result<()> {
    let depth = parse_bit_depth(bit_depth)?;
    let kernel = parse_kernel(kernel)?;
    let img = load_image(input, false).with_context(|| format!("loading {}", input.display()))?;
    let result = tangent_iqa_core::resample::upsample(&img, scale, kernel)?;
    write_image_output(&result, &out, depth, input, "upsampled")
}

fn write_image_output(
    img: &ErpImage,
    out: &OutputTarget,
    depth: BitDepth,
    input: &Path,
    verb: &str,
) -> Result<()> {
    let path = out
        .path
        .clone()
        .ok_or_else(|| anyhow!("--out FILE is required for image outputs"))?;
    save_image(&path, img, depth)?;
    println!(
        "{verb} {} -> {} ({}x{})",
        input.display(),
        path.display(),
        img.width(),
        img.height()
    );
    Ok(())
}

/// Reads a long-format objective score table
/// (`scene,method,metric,value`) and emits per-metric preference
/// percentages across methods.
pub fn compare(scores_csv: &Path, config: &RunConfig, out: OutputTarget) -> Result<()> {
    let file = fs::File::open(scores_csv)
        .with_context(|| format!("opening {}", scores_csv.display()))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    {
        let headers = reader.headers()?.clone();
        let got: Vec<&str> = headers.iter().collect();
        if got != ["scene", "method", "metric", "value"] {
            bail!("score csv header {got:?}, expected [scene, method, metric, value]");
        }
    }

    // metric -> (scene, method) -> value
    let mut per_metric: HashMap<String, HashMap<(String, String), f64>> = HashMap::new();
    let mut metric_order: Vec<String> = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.with_context(|| format!("score csv row {}", i + 2))?;
        if row.len() != 4 {
            bail!("score csv row {}: {} fields, expected 4", i + 2, row.len());
        }
        let value: f64 = row[3]
            .parse()
            .with_context(|| format!("score csv row {}: value {:?}", i + 2, &row[3]))?;
        let metric = row[2].to_string();
        if !metric_order.contains(&metric) {
            metric_order.push(metric.clone());
        }
        per_metric
            .entry(metric)
            .or_default()
            .insert((row[0].to_string(), row[1].to_string()), value);
    }
    if metric_order.is_empty() {
        bail!("score csv contains no rows");
    }

    let registry = config.build_registry()?;
    let mut tables: Vec<(String, ScoreTable, Vec<f64>)> = Vec::new();
    let mut methods: Option<Vec<String>> = None;
    for metric_name in &metric_order {
        let cells = &per_metric[metric_name];
        let table = ScoreTable::from_cells(cells)
            .with_context(|| format!("metric {metric_name}"))?;
        match &methods {
            None => methods = Some(table.methods().to_vec()),
            Some(m) if m != table.methods() => bail!(
                "metric {metric_name} covers methods {:?}, others cover {m:?}",
                table.methods()
            ),
            _ => {}
        }
        let id = MetricId::parse(metric_name).map_err(|e| anyhow!(e.to_string()))?;
        let polarity = config.polarity_for(&id, Some(&registry));
        let pct = objective_preference(&table, polarity)?;
        tables.push((metric_name.clone(), table, pct));
    }
    let methods = methods.expect("at least one metric");

    let content = match config.format {
        OutputFormat::Csv => {
            let mut lines = vec![format!("metric,{}", methods.join(","))];
            for (name, _, pct) in &tables {
                let cells: Vec<String> = pct.iter().map(|p| format!("{p:.4}")).collect();
                lines.push(format!("{name},{}", cells.join(",")));
            }
            lines.push(String::new());
            lines.join("\n")
        }
        OutputFormat::Json => {
            let rows: Vec<_> = tables
                .iter()
                .map(|(name, _, pct)| {
                    json!({
                        "metric": name,
                        "preference_percent": methods
                            .iter()
                            .zip(pct)
                            .map(|(m, p)| json!({"method": m, "percent": p}))
                            .collect::<Vec<_>>(),
                    })
                })
                .collect();
            format!(
                "{}\n",
                serde_json::to_string_pretty(&json!({
                    "schema_version": SCHEMA_VERSION,
                    "methods": methods,
                    "metrics": rows,
                }))?
            )
        }
    };
    out.write(&content)
}

/// Analyzes a pairwise vote CSV: preference probabilities, verdicts,
/// thresholds and Bradley-Terry strengths, pooled and per scene.
pub fn subjective(
    votes_csv: &Path,
    participants: Option<u32>,
    config: &RunConfig,
    out: OutputTarget,
) -> Result<()> {
    let file = fs::File::open(votes_csv)
        .with_context(|| format!("opening {}", votes_csv.display()))?;
    let records = parse_vote_csv(file)?;
    if records.is_empty() {
        bail!("vote csv contains no rows");
    }

    let pooled_matrix = vote_matrix_from_records(&records)?;
    if let Some(expected) = participants {
        // Pooling multiplies the per-pair count by the number of scenes a
        // pair appears in; validate against the per-scene count.
        let scenes = distinct_scenes(&records);
        for scene in &scenes {
            let scene_records: Vec<VoteRecord> = records
                .iter()
                .filter(|r| &r.scene == scene)
                .cloned()
                .collect();
            let m = vote_matrix_from_records(&scene_records)?;
            if m.n_per_pair() != expected {
                bail!(
                    "scene {scene}: {} comparisons per pair, --participants says {expected}",
                    m.n_per_pair()
                );
            }
        }
    }
    let pooled = analyze_votes(&pooled_matrix, config.alpha)?;

    let mut scenes: Vec<(String, VoteAnalysis)> = Vec::new();
    let scene_names = distinct_scenes(&records);
    if scene_names.len() > 1 {
        for scene in &scene_names {
            let scene_records: Vec<VoteRecord> = records
                .iter()
                .filter(|r| &r.scene == scene)
                .cloned()
                .collect();
            let matrix = vote_matrix_from_records(&scene_records)
                .with_context(|| format!("scene {scene}"))?;
            scenes.push((scene.clone(), analyze_votes(&matrix, config.alpha)?));
        }
    }

    let content = match config.format {
        OutputFormat::Json => {
            let scene_docs: Vec<_> = scenes
                .iter()
                .map(|(name, a)| json!({"scene": name, "analysis": a}))
                .collect();
            format!(
                "{}\n",
                serde_json::to_string_pretty(&json!({
                    "schema_version": SCHEMA_VERSION,
                    "alpha": config.alpha,
                    "pooled": pooled,
                    "scenes": scene_docs,
                }))?
            )
        }
        OutputFormat::Csv => {
            let mut lines = vec![
                "scope,method,opponent,wins,ties,n,pref_prob,verdict,mean_pref_prob,bt_strength"
                    .to_string(),
            ];
            let mut emit = |scope: &str, a: &VoteAnalysis| {
                for m in &a.methods {
                    for p in &m.per_pair {
                        lines.push(format!(
                            "{scope},{},{},{},{},{},{},{},{},{}",
                            m.method,
                            p.opponent,
                            p.wins,
                            p.ties,
                            a.n_per_pair,
                            p.pref_prob,
                            p.verdict,
                            m.mean_pref_prob,
                            m.bt_strength
                        ));
                    }
                }
            };
            emit("pooled", &pooled);
            for (name, a) in &scenes {
                emit(name, a);
            }
            lines.push(String::new());
            lines.join("\n")
        }
    };
    out.write(&content)
}

fn distinct_scenes(records: &[VoteRecord]) -> Vec<String> {
    let mut scenes = Vec::new();
    for r in records {
        if !scenes.contains(&r.scene) {
            scenes.push(r.scene.clone());
        }
    }
    scenes
}
