//! Output sinks, metadata echo and the JSON summary schema.
//!
//! Every artifact embeds the tool version and the fully resolved
//! configuration (seed included) so a run can be reproduced from its
//! output alone. Nothing time- or host-dependent is ever written, which is
//! what makes repeated invocations byte-identical.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variable prepended to relative `--output` paths.
pub const OUTPUT_DIR_ENV: &str = "NRSYNC_OUTPUT_DIR";

pub fn tool_version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

/// `# nrsync <version> <command>` / `# config <json>` comment header for
/// CSV artifacts.
pub fn csv_header(command: &str, config_json: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# nrsync {} {}", tool_version(), command);
    let _ = writeln!(out, "# config {}", config_json);
    out
}

/// The `meta` object embedded in JSON artifacts.
pub fn meta_value(command: &str, config: serde_json::Value) -> serde_json::Value {
    serde_json::json!({
        "tool": "nrsync",
        "version": tool_version(),
        "command": command,
        "config": config,
    })
}

/// Resolve the effective output path: relative paths land under
/// `NRSYNC_OUTPUT_DIR` when it is set.
pub fn resolve_output_path(path: &Path) -> PathBuf {
    if path.is_relative() {
        if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
            if !dir.is_empty() {
                return PathBuf::from(dir).join(path);
            }
        }
    }
    path.to_path_buf()
}

/// Write to stdout or atomically (temp file + rename) to a path.
pub fn write_output(path: Option<&Path>, content: &str) -> Result<(), CliError> {
    match path {
        None => {
            use std::io::ErrorKind;
            match std::io::stdout().lock().write_all(content.as_bytes()) {
                Ok(()) => Ok(()),
                // a closed pipe (e.g. `| head`) is not an error
                Err(e) if e.kind() == ErrorKind::BrokenPipe => Ok(()),
                Err(source) => Err(CliError::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                }),
            }
        }
        Some(path) => {
            let path = resolve_output_path(path);
            let io_err = |source: std::io::Error| CliError::Io {
                path: path.clone(),
                source,
            };
            let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
            let mut tmp = match dir {
                Some(dir) => tempfile::NamedTempFile::new_in(dir),
                None => tempfile::NamedTempFile::new_in("."),
            }
            .map_err(io_err)?;
            tmp.write_all(content.as_bytes()).map_err(io_err)?;
            tmp.persist(&path).map_err(|e| io_err(e.error))?;
            Ok(())
        }
    }
}

/// Machine-readable summary of a simulation run; also the input format of
/// `budget --from-sim`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimSummary {
    pub meta: serde_json::Value,
    pub scs_khz: u32,
    pub trials: u64,
    pub avg_window: usize,
    pub confidence: f64,
    pub p_e_ns: f64,
    pub mean_abs_error_ns: f64,
    pub mean_signed_error_ns: f64,
    /// Probability (as printed, e.g. "0.999") to error in nanoseconds.
    pub quantiles_ns: std::collections::BTreeMap<String, f64>,
    pub saturation_count: u64,
}

impl SimSummary {
    pub fn new(
        command: &str,
        config: &nrsync_core::ScenarioConfig,
        result: &nrsync_core::SimResult,
    ) -> Self {
        let config_value = serde_json::to_value(config).expect("config serializes");
        let quantiles_ns = result
            .quantiles
            .iter()
            .map(|&(q, v)| (format!("{q}"), v * 1e9))
            .collect();
        Self {
            meta: meta_value(command, config_value),
            scs_khz: result.numerology.scs_khz(),
            trials: result.trials,
            avg_window: config.avg_window,
            confidence: result.confidence,
            p_e_ns: result.p_e * 1e9,
            mean_abs_error_ns: result.mean_abs_error * 1e9,
            mean_signed_error_ns: result.mean_signed_error * 1e9,
            quantiles_ns,
            saturation_count: result.saturation_count,
        }
    }
}

/// `error_ns,cdf` rows for one empirical CDF (one row per distinct value).
pub fn cdf_csv_rows(cdf: &nrsync_core::EmpiricalCdf) -> String {
    let mut out = String::from("error_ns,cdf\n");
    for (value, prob) in cdf.distinct_points() {
        let _ = writeln!(out, "{},{}", value * 1e9, prob);
    }
    out
}
