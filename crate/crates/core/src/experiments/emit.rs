//! CSV and JSON writers for experiment output.
//!
//! Numbers use Rust's shortest round-trip formatting, so equal inputs give
//! byte-identical files. Files are written next to their destination and
//! renamed into place, leaving nothing behind on failure.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::decision::{SummaryRow, TrialRecord};
use super::gowalla::GowallaRow;
use super::tradeoff::TradeoffRow;
use super::ExperimentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(ExperimentError::InvalidConfig(format!("unknown format '{s}'"))),
        }
    }
}

impl Format {
    /// JSON for a `.json` extension, CSV otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Self::Json,
            _ => Self::Csv,
        }
    }
}

/// Rows that have a fixed CSV layout.
pub trait CsvRow: Serialize {
    fn header(bins: usize) -> String;
    fn write_fields(&self, out: &mut String);
    fn bins(&self) -> usize {
        0
    }
}

impl CsvRow for SummaryRow {
    fn header(bins: usize) -> String {
        let mut h = String::from("family,d_m,qavg_m,avg_perr,min_perr,pct_better");
        for k in 0..bins {
            let _ = write!(h, ",bin_{k}");
        }
        h
    }

    fn write_fields(&self, out: &mut String) {
        let pct = self.pct_better.map(|p| p.to_string()).unwrap_or_default();
        let _ = write!(
            out,
            "{},{},{},{},{},{}",
            self.family, self.d_m, self.qavg_m, self.avg_perr, self.min_perr, pct
        );
        for c in &self.histogram {
            let _ = write!(out, ",{c}");
        }
    }

    fn bins(&self) -> usize {
        self.histogram.len()
    }
}

impl CsvRow for TradeoffRow {
    fn header(_: usize) -> String {
        "epsilon_inv_km,eps_star,perr_min,qavg_m,r95_m".into()
    }

    fn write_fields(&self, out: &mut String) {
        let _ = write!(
            out,
            "{},{},{},{},{}",
            self.epsilon_inv_km, self.eps_star, self.perr_min, self.qavg_m, self.r95_m
        );
    }
}

impl CsvRow for GowallaRow {
    fn header(_: usize) -> String {
        "epsilon_inv_km,qavg_remap_m,r95_remap_m,qavg_plain_m,r95_plain_m,qavg_reduction_pct,r95_reduction_pct".into()
    }

    fn write_fields(&self, out: &mut String) {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{}",
            self.epsilon_inv_km,
            self.qavg_remap_m,
            self.r95_remap_m,
            self.qavg_plain_m,
            self.r95_plain_m,
            self.qavg_reduction_pct(),
            self.r95_reduction_pct()
        );
    }
}

impl CsvRow for TrialRecord {
    fn header(_: usize) -> String {
        "family,d_m,qavg_m,trial,truth,z_x_m,z_y_m,perr".into()
    }

    fn write_fields(&self, out: &mut String) {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{}",
            self.family,
            self.d_m,
            self.qavg_m,
            self.trial,
            self.truth.tag(),
            self.z.x,
            self.z.y,
            self.perr
        );
    }
}

/// CSV text. An empty slice gives the header alone; summary headers then
/// assume 50 bins.
pub fn to_csv<R: CsvRow>(rows: &[R]) -> String {
    let bins = rows.first().map_or(50, R::bins);
    let mut out = R::header(bins);
    out.push('\n');
    for r in rows {
        r.write_fields(&mut out);
        out.push('\n');
    }
    out
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String, ExperimentError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| ExperimentError::InvalidConfig(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes `bytes` to a temporary sibling of `path`, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ExperimentError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| ExperimentError::InvalidConfig(format!("'{}' is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

pub fn emit<R: CsvRow>(rows: &[R], path: &Path, format: Format) -> Result<(), ExperimentError> {
    let text = match format {
        Format::Csv => to_csv(rows),
        Format::Json => to_json(rows)?,
    };
    write_atomic(path, text.as_bytes())
}

/// Everything needed to rerun a command and get the same bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub code_version: String,
    /// SHA-256 of the input dataset, hex.
    pub dataset_digest: Option<String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, config: serde_json::Value, seed: Option<u64>) -> Self {
        Self {
            command: command.into(),
            config,
            seed,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            dataset_digest: None,
            outputs: Vec::new(),
        }
    }

    /// `<output>.manifest.json`.
    pub fn path_for(output: &Path) -> std::path::PathBuf {
        let mut s = output.as_os_str().to_owned();
        s.push(".manifest.json");
        s.into()
    }

    pub fn write(&self, path: &Path) -> Result<(), ExperimentError> {
        write_atomic(path, to_json(self)?.as_bytes())
    }
}
