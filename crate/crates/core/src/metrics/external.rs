//! Subprocess protocol for external metrics.
//!
//! A plugin is any executable invoked as `<cmd> <ref_path> <dist_path>` that
//! prints exactly one finite decimal number to stdout and exits 0. Access is
//! serialized per plugin (one child at a time per name); different plugins
//! and built-in kernels run concurrently.

use std::collections::HashMap;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use super::{MetricError, Polarity};

/// Default wall-clock budget for one plugin invocation.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PluginFailure {
    Spawn(String),
    NonzeroExit(Option<i32>),
    UnparsableOutput(String),
    NonFinite(String),
    Timeout,
}

impl std::fmt::Display for PluginFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PluginFailure::Spawn(err) => write!(f, "failed to start: {err}"),
            PluginFailure::NonzeroExit(code) => match code {
                Some(c) => write!(f, "exited with status {c}"),
                None => write!(f, "killed by signal"),
            },
            PluginFailure::UnparsableOutput(s) => {
                write!(f, "output {s:?} is not a single decimal number")
            }
            PluginFailure::NonFinite(s) => write!(f, "output {s:?} is not finite"),
            PluginFailure::Timeout => write!(f, "timed out"),
        }
    }
}

/// One registered plugin.
#[derive(Debug)]
pub struct Plugin {
    command: PathBuf,
    polarity: Polarity,
    timeout: Duration,
    lock: Mutex<()>,
}

impl Plugin {
    pub fn command(&self) -> &Path {
        &self.command
    }

    pub fn polarity(&self) -> Polarity {
        self.polarity
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }
}

/// Name-to-plugin table built from configuration.
#[derive(Debug, Default)]
pub struct PluginRegistry {
    plugins: HashMap<String, Plugin>,
}

impl PluginRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, name: impl Into<String>, command: PathBuf, polarity: Polarity) {
        self.register_with_timeout(name, command, polarity, DEFAULT_TIMEOUT);
    }

    pub fn register_with_timeout(
        &mut self,
        name: impl Into<String>,
        command: PathBuf,
        polarity: Polarity,
        timeout: Duration,
    ) {
        self.plugins.insert(
            name.into(),
            Plugin {
                command,
                polarity,
                timeout,
                lock: Mutex::new(()),
            },
        );
    }

    pub fn get(&self, name: &str) -> Option<&Plugin> {
        self.plugins.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.plugins.keys().map(String::as_str)
    }

    /// Runs the named plugin on a reference/distorted file pair.
    pub fn run(&self, name: &str, ref_path: &Path, dist_path: &Path) -> Result<f64, MetricError> {
        let plugin = self
            .get(name)
            .ok_or_else(|| MetricError::UnregisteredPlugin(name.to_string()))?;
        let _serialized = plugin.lock.lock().expect("plugin lock poisoned");
        run_plugin(name, &plugin.command, ref_path, dist_path, plugin.timeout)
    }
}

/// Spawns `<command> <ref_path> <dist_path>` and parses its stdout.
pub fn run_plugin(
    name: &str,
    command: &Path,
    ref_path: &Path,
    dist_path: &Path,
    timeout: Duration,
) -> Result<f64, MetricError> {
    let plugin_err = |failure: PluginFailure, stderr: String| MetricError::Plugin {
        name: name.to_string(),
        failure,
        stderr,
    };

    let mut child = Command::new(command)
        .arg(ref_path)
        .arg(dist_path)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| plugin_err(PluginFailure::Spawn(e.to_string()), String::new()))?;

    // Drain pipes on threads so a chatty plugin can never deadlock on a
    // full pipe buffer.
    let mut stdout_pipe = child.stdout.take().expect("stdout piped");
    let mut stderr_pipe = child.stderr.take().expect("stderr piped");
    let stdout_thread = std::thread::spawn(move || {
        let mut buf = String::new();
        let _ = stdout_pipe.read_to_string(&mut buf);
        buf
    });
    let stderr_thread = std::thread::spawn(move || {
        let mut buf = String::new();
        let _ = stderr_pipe.read_to_string(&mut buf);
        buf
    });

    let deadline = Instant::now() + timeout;
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status,
            Ok(None) => {
                if Instant::now() >= deadline {
                    let _ = child.kill();
                    let _ = child.wait();
                    // Orphaned grandchildren may keep the pipes open, so the
                    // reader threads are detached rather than joined; they
                    // finish whenever the write ends finally close.
                    drop(stdout_thread);
                    drop(stderr_thread);
                    return Err(plugin_err(PluginFailure::Timeout, String::new()));
                }
                std::thread::sleep(Duration::from_millis(5));
            }
            Err(e) => {
                let stderr = stderr_thread.join().unwrap_or_default();
                let _ = stdout_thread.join();
                return Err(plugin_err(PluginFailure::Spawn(e.to_string()), stderr));
            }
        }
    };

    let stdout = stdout_thread.join().unwrap_or_default();
    let stderr = stderr_thread.join().unwrap_or_default();

    if !status.success() {
        return Err(plugin_err(PluginFailure::NonzeroExit(status.code()), stderr));
    }
    parse_plugin_output(&stdout).map_err(|failure| plugin_err(failure, stderr))
}

/// Accepts `-?digits(.digits)?([eE][+-]?digits)?` with optional trailing
/// whitespace; anything else (including NaN and infinities) is rejected.
fn parse_plugin_output(raw: &str) -> Result<f64, PluginFailure> {
    let s = raw.trim_end();
    let bad = || PluginFailure::UnparsableOutput(truncate_for_error(raw));

    let mut chars = s.as_bytes();
    if chars.first() == Some(&b'-') {
        chars = &chars[1..];
    }
    let digits = |bytes: &mut &[u8]| -> usize {
        let n = bytes.iter().take_while(|b| b.is_ascii_digit()).count();
        *bytes = &bytes[n..];
        n
    };
    let mut rest = chars;
    if digits(&mut rest) == 0 {
        return Err(bad());
    }
    if rest.first() == Some(&b'.') {
        rest = &rest[1..];
        if digits(&mut rest) == 0 {
            return Err(bad());
        }
    }
    if matches!(rest.first(), Some(b'e' | b'E')) {
        rest = &rest[1..];
        if matches!(rest.first(), Some(b'+' | b'-')) {
            rest = &rest[1..];
        }
        if digits(&mut rest) == 0 {
            return Err(bad());
        }
    }
    if !rest.is_empty() {
        return Err(bad());
    }

    let value: f64 = s.parse().map_err(|_| bad())?;
    if !value.is_finite() {
        return Err(PluginFailure::NonFinite(truncate_for_error(raw)));
    }
    Ok(value)
}

fn truncate_for_error(s: &str) -> String {
    const LIMIT: usize = 120;
    if s.len() > LIMIT {
        let mut end = LIMIT;
        while !s.is_char_boundary(end) {
            end -= 1;
        }
        format!("{}...", &s[..end])
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_grammar() {
        assert_eq!(parse_plugin_output("0.5\n").unwrap(), 0.5);
        assert_eq!(parse_plugin_output("-3").unwrap(), -3.0);
        assert_eq!(parse_plugin_output("1.25e-3  \n").unwrap(), 0.00125);
        assert_eq!(parse_plugin_output("7E+2").unwrap(), 700.0);
        for bad in [
            "", "NaN", "nan", "inf", "-inf", ".5", "5.", "1 2", "0.5\n0.6", "a1", "1e", "--1",
            " 0.5",
        ] {
            assert!(parse_plugin_output(bad).is_err(), "{bad:?} should fail");
        }
        // Finite grammar but non-finite value.
        assert!(matches!(
            parse_plugin_output("1e999"),
            Err(PluginFailure::NonFinite(_))
        ));
    }
}
