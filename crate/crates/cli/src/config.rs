//! Run configuration: a plain `key = value` file with dotted sections,
//! overridden by command-line flags.
//!
//! Recognized keys:
//!
//! ```text
//! level = 1                  # icosahedron subdivision level b
//! padding = 1.3              # tangent view overlap factor
//! interp = bicubic           # bicubic | bilinear
//! metrics = ssim,msssim,gmsd,vifs,nlpd
//! alpha = 0.06               # binomial significance level
//! threads = 0                # 0 = hardware parallelism
//! format = json              # json | csv
//! plugin_timeout_s = 120
//! metric.<name>.cmd = /path/to/plugin
//! metric.<name>.polarity = higher | lower
//! ```
//!
//! `metric.<builtin>.polarity` overrides a built-in polarity (the distance
//! metrics default to lower-is-better).

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};

use tangent_iqa_core::metrics::{MetricId, PluginRegistry, Polarity, DEFAULT_TIMEOUT};
use tangent_iqa_core::resample::Interp;

/// Environment variable consulted when --config is absent.
pub const CONFIG_ENV: &str = "TANGENT_IQA_CONFIG";

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub level: u32,
    pub padding: f64,
    pub interp: Interp,
    pub metrics: Vec<MetricId>,
    pub alpha: f64,
    pub threads: usize,
    pub format: OutputFormat,
    pub plugin_timeout: Duration,
    pub plugins: Vec<PluginEntry>,
    pub polarity_overrides: HashMap<String, Polarity>,
}

#[derive(Debug, Clone)]
pub struct PluginEntry {
    pub name: String,
    pub command: PathBuf,
    pub polarity: Option<Polarity>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            level: 1,
            padding: 1.3,
            interp: Interp::Bicubic,
            metrics: MetricId::BUILT_INS.to_vec(),
            alpha: 0.06,
            threads: 0,
            format: OutputFormat::Json,
            plugin_timeout: DEFAULT_TIMEOUT,
            plugins: Vec::new(),
            polarity_overrides: HashMap::new(),
        }
    }
}

impl RunConfig {
    /// Loads the file, if any, and applies it over the defaults.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut config = Self::default();
        let resolved = match path {
            Some(p) => Some(p.to_path_buf()),
            None => std::env::var_os(CONFIG_ENV).map(PathBuf::from),
        };
        if let Some(p) = resolved {
            let text = std::fs::read_to_string(&p)
                .with_context(|| format!("reading config {}", p.display()))?;
            config
                .apply_text(&text)
                .with_context(|| format!("parsing config {}", p.display()))?;
        }
        Ok(config)
    }

    fn apply_text(&mut self, text: &str) -> Result<()> {
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", line_no + 1))?;
            self.apply_entry(key.trim(), value.trim())
                .with_context(|| format!("line {}", line_no + 1))?;
        }
        Ok(())
    }

    fn apply_entry(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "level" => self.level = value.parse().context("level must be an integer")?,
            "padding" => self.padding = value.parse().context("padding must be a number")?,
            "interp" => self.interp = parse_interp(value)?,
            "metrics" => self.metrics = parse_metrics(value)?,
            "alpha" => self.alpha = value.parse().context("alpha must be a number")?,
            "threads" => self.threads = value.parse().context("threads must be an integer")?,
            "format" => self.format = parse_format(value)?,
            "plugin_timeout_s" => {
                let secs: u64 = value.parse().context("plugin_timeout_s must be an integer")?;
                self.plugin_timeout = Duration::from_secs(secs);
            }
            other => {
                if let Some(rest) = other.strip_prefix("metric.") {
                    return self.apply_metric_entry(rest, value);
                }
                bail!("unknown config key {other:?}");
            }
        }
        Ok(())
    }

    fn apply_metric_entry(&mut self, rest: &str, value: &str) -> Result<()> {
        let (name, field) = rest
            .rsplit_once('.')
            .ok_or_else(|| anyhow!("metric key must be metric.<name>.cmd or .polarity"))?;
        if name.is_empty() {
            bail!("empty metric name in config key");
        }
        match field {
            "cmd" => {
                let entry = self.plugin_entry_mut(name);
                entry.command = PathBuf::from(value);
            }
            "polarity" => {
                let polarity = parse_polarity(value)?;
                let id = MetricId::parse(name).map_err(|e| anyhow!(e.to_string()))?;
                if id.is_builtin() {
                    self.polarity_overrides.insert(name.to_string(), polarity);
                } else {
                    let entry = self.plugin_entry_mut(name);
                    entry.polarity = Some(polarity);
                }
            }
            other => bail!("unknown metric field {other:?} (expected cmd or polarity)"),
        }
        Ok(())
    }

    fn plugin_entry_mut(&mut self, name: &str) -> &mut PluginEntry {
        if let Some(i) = self.plugins.iter().position(|p| p.name == name) {
            &mut self.plugins[i]
        } else {
            self.plugins.push(PluginEntry {
                name: name.to_string(),
                command: PathBuf::new(),
                polarity: None,
            });
            self.plugins.last_mut().expect("just pushed")
        }
    }

    /// Builds the plugin registry from the configured entries.
    pub fn build_registry(&self) -> Result<PluginRegistry> {
        let mut registry = PluginRegistry::new();
        for entry in &self.plugins {
            if entry.command.as_os_str().is_empty() {
                bail!(
                    "plugin {:?} has a polarity but no metric.{}.cmd entry",
                    entry.name,
                    entry.name
                );
            }
            registry.register_with_timeout(
                entry.name.clone(),
                entry.command.clone(),
                entry.polarity.unwrap_or(Polarity::HigherBetter),
                self.plugin_timeout,
            );
        }
        Ok(registry)
    }

    /// Effective worker count (0 means all hardware threads).
    pub fn effective_threads(&self) -> usize {
        if self.threads == 0 {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        } else {
            self.threads
        }
    }

    /// Descriptor polarity with config overrides applied.
    pub fn polarity_for(&self, id: &MetricId, registry: Option<&PluginRegistry>) -> Polarity {
        if let Some(&p) = self.polarity_overrides.get(id.name()) {
            return p;
        }
        tangent_iqa_core::aggregate::resolve_descriptor(id, registry).polarity
    }
}

pub fn parse_interp(value: &str) -> Result<Interp> {
    match value {
        "bicubic" => Ok(Interp::Bicubic),
        "bilinear" => Ok(Interp::Bilinear),
        other => bail!("unknown interpolation {other:?} (expected bicubic or bilinear)"),
    }
}

pub fn parse_metrics(value: &str) -> Result<Vec<MetricId>> {
    let mut metrics = Vec::new();
    for token in value.split(',') {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        let id = MetricId::parse(token).map_err(|e| anyhow!(e.to_string()))?;
        if !metrics.contains(&id) {
            metrics.push(id);
        }
    }
    if metrics.is_empty() {
        bail!("metric list is empty");
    }
    Ok(metrics)
}

pub fn parse_format(value: &str) -> Result<OutputFormat> {
    match value {
        "json" => Ok(OutputFormat::Json),
        "csv" => Ok(OutputFormat::Csv),
        other => bail!("unknown format {other:?} (expected json or csv)"),
    }
}

pub fn parse_polarity(value: &str) -> Result<Polarity> {
    match value {
        "higher" | "higher_better" => Ok(Polarity::HigherBetter),
        "lower" | "lower_better" => Ok(Polarity::LowerBetter),
        other => bail!("unknown polarity {other:?} (expected higher or lower)"),
    }
}
