//! File formats.
//!
//! All tables are UTF-8 CSV with a fixed header row, `.` as decimal
//! separator and no thousands separators. Lines starting with `#` are
//! skipped. Numbers are written with 17 significant digits so a write/read
//! cycle reproduces every `f64` exactly.
//!
//! | table          | header                                   |
//! |----------------|------------------------------------------|
//! | decay curve    | `tau_us,signal,sigma`                    |
//! | gamma table    | `f_mhz,gamma_khz,gamma_err_khz`          |
//! | temperatures   | `t_kelvin,inv_t1_khz`                    |
//! | noise spectrum | `f_mhz,s_e_perp,sigma`                   |
//! | suppression    | `f_mhz,suppression_pct`                  |
//!
//! Configuration files are flat `key = value` lines with `#` comments.
//! Reports are TOML documents carrying a `schema_version`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::inference::PowerLawPoint;
use crate::noise::{GammaEntry, NoisePoint, NoiseSpectrum};
use crate::synth::DecayCurve;

pub const DECAY_HEADER: [&str; 3] = ["tau_us", "signal", "sigma"];
pub const GAMMA_HEADER: [&str; 3] = ["f_mhz", "gamma_khz", "gamma_err_khz"];
pub const TEMPERATURE_HEADER: [&str; 2] = ["t_kelvin", "inv_t1_khz"];
pub const SPECTRUM_HEADER: [&str; 3] = ["f_mhz", "s_e_perp", "sigma"];
pub const SUPPRESSION_HEADER: [&str; 2] = ["f_mhz", "suppression_pct"];

/// Version of the report layout written by [`Report::to_toml`].
pub const REPORT_SCHEMA_VERSION: i64 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{source_name}: line {line}, column {column}: {message}")]
    Table {
        source_name: String,
        line: u64,
        column: String,
        message: String,
    },

    #[error("{source_name}: line {line}: {message}")]
    Config {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("{source_name}: {message}")]
    Content {
        source_name: String,
        message: String,
    },

    #[error("report: {0}")]
    Report(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parses a numeric table with the given header.
///
/// Returns one row of values per data line together with its line number.
pub fn parse_table(
    text: &str,
    header: &[&str],
    source_name: &str,
) -> Result<Vec<(u64, Vec<f64>)>, IoError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let table_err = |line: u64, column: &str, message: String| IoError::Table {
        source_name: source_name.to_string(),
        line,
        column: column.to_string(),
        message,
    };

    let mut rows = Vec::new();
    let mut saw_header = false;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            table_err(line, "-", e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if !saw_header {
            let got: Vec<&str> = record.iter().collect();
            if got != header {
                return Err(table_err(
                    line,
                    "-",
                    format!(
                        "expected header `{}`, found `{}`",
                        header.join(","),
                        got.join(",")
                    ),
                ));
            }
            saw_header = true;
            continue;
        }
        if record.len() != header.len() {
            let column = header.get(record.len()).copied().unwrap_or("-");
            return Err(table_err(
                line,
                column,
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        let mut values = Vec::with_capacity(header.len());
        for (field, name) in record.iter().zip(header) {
            let v: f64 = field.parse().map_err(|_| {
                table_err(line, name, format!("cannot parse `{field}` as a number"))
            })?;
            if !v.is_finite() {
                return Err(table_err(line, name, format!("`{field}` is not finite")));
            }
            values.push(v);
        }
        rows.push((line, values));
    }
    if !saw_header {
        return Err(IoError::Content {
            source_name: source_name.to_string(),
            message: format!("missing header `{}`", header.join(",")),
        });
    }
    Ok(rows)
}

pub fn write_table(header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(format_f64).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn content_err(source_name: &str, e: impl std::fmt::Display) -> IoError {
    IoError::Content {
        source_name: source_name.to_string(),
        message: e.to_string(),
    }
}

pub fn parse_decay_csv(text: &str, source_name: &str) -> Result<DecayCurve, IoError> {
    let rows = parse_table(text, &DECAY_HEADER, source_name)?;
    let mut tau = Vec::with_capacity(rows.len());
    let mut signal = Vec::with_capacity(rows.len());
    let mut sigma = Vec::with_capacity(rows.len());
    for (line, r) in &rows {
        if r[2] < 0.0 {
            return Err(IoError::Table {
                source_name: source_name.to_string(),
                line: *line,
                column: "sigma".into(),
                message: "sigma must be >= 0".into(),
            });
        }
        if let Some(&prev) = tau.last() {
            if r[0] <= prev {
                return Err(IoError::Table {
                    source_name: source_name.to_string(),
                    line: *line,
                    column: "tau_us".into(),
                    message: "tau must be strictly increasing".into(),
                });
            }
        }
        tau.push(r[0]);
        signal.push(r[1]);
        sigma.push(r[2]);
    }
    DecayCurve::new(tau, signal, sigma).map_err(|e| content_err(source_name, e))
}

pub fn write_decay_csv(curve: &DecayCurve) -> String {
    write_table(
        &DECAY_HEADER,
        (0..curve.len()).map(|i| vec![curve.tau[i], curve.signal[i], curve.sigma[i]]),
    )
}

pub fn parse_gamma_csv(text: &str, source_name: &str) -> Result<Vec<(u64, GammaEntry)>, IoError> {
    Ok(parse_table(text, &GAMMA_HEADER, source_name)?
        .into_iter()
        .map(|(line, r)| {
            (
                line,
                GammaEntry {
                    f: r[0],
                    gamma: r[1],
                    sigma: r[2],
                },
            )
        })
        .collect())
}

pub fn write_gamma_csv(entries: &[GammaEntry]) -> String {
    write_table(
        &GAMMA_HEADER,
        entries.iter().map(|e| vec![e.f, e.gamma, e.sigma]),
    )
}

/// Gamma table rows as power-law fit input.
pub fn gamma_entries_to_points(entries: &[(u64, GammaEntry)]) -> Vec<PowerLawPoint> {
    entries
        .iter()
        .map(|(_, e)| PowerLawPoint {
            f: e.f,
            gamma: e.gamma,
            sigma: e.sigma,
        })
        .collect()
}

pub fn parse_temperature_csv(text: &str, source_name: &str) -> Result<Vec<(f64, f64)>, IoError> {
    Ok(parse_table(text, &TEMPERATURE_HEADER, source_name)?
        .into_iter()
        .map(|(_, r)| (r[0], r[1]))
        .collect())
}

pub fn write_temperature_csv(points: &[(f64, f64)]) -> String {
    write_table(&TEMPERATURE_HEADER, points.iter().map(|&(t, r)| vec![t, r]))
}

pub fn parse_spectrum_csv(text: &str, source_name: &str) -> Result<NoiseSpectrum, IoError> {
    let points = parse_table(text, &SPECTRUM_HEADER, source_name)?
        .into_iter()
        .map(|(_, r)| NoisePoint {
            f: r[0],
            s_e_perp: r[1],
            sigma: r[2],
        })
        .collect();
    NoiseSpectrum::new(points, source_name).map_err(|e| content_err(source_name, e))
}

pub fn write_spectrum_csv(spectrum: &NoiseSpectrum) -> String {
    write_table(
        &SPECTRUM_HEADER,
        spectrum
            .points
            .iter()
            .map(|p| vec![p.f, p.s_e_perp, p.sigma]),
    )
}

pub fn write_suppression_csv(per_point: &[(f64, f64)]) -> String {
    write_table(
        &SUPPRESSION_HEADER,
        per_point.iter().map(|&(f, s)| vec![f, s]),
    )
}

/// Parses flat `key = value` lines. Keys are normalized to lowercase with
/// `-` replaced by `_`.
pub fn parse_config(text: &str, source_name: &str) -> Result<BTreeMap<String, String>, IoError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| IoError::Config {
            source_name: source_name.to_string(),
            line: i + 1,
            message,
        };
        let Some((key, value)) = line.split_once('=') else {
            return Err(err(format!("expected `key = value`, found `{line}`")));
        };
        let key = normalize_key(key.trim());
        let value = value.trim().trim_matches('"').to_string();
        if key.is_empty() {
            return Err(err("empty key".into()));
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(err(format!("key `{key}` appears twice")));
        }
    }
    Ok(map)
}

pub fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn read_to_string(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(io_err(path))
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), IoError> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    fs::write(&tmp, contents).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(path)(e)
    })
}

/// A file consumed by a command, identified by its content hash.
#[derive(Debug, Clone, PartialEq)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of_bytes(role: &str, path: &Path, bytes: &[u8]) -> Self {
        Self {
            role: role.to_string(),
            path: path.display().to_string(),
            sha256: sha256_hex(bytes),
        }
    }
}

/// Structured result of one command run.
///
/// Everything except `generated_unix` is a deterministic function of the
/// inputs and configuration.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub command: String,
    pub generated_unix: u64,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<InputDigest>,
    pub config: BTreeMap<String, String>,
    pub sections: Vec<(String, toml::Table)>,
}

impl Report {
    pub fn new(command: &str, config: BTreeMap<String, String>) -> Self {
        let generated_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        Self {
            command: command.to_string(),
            generated_unix,
            config,
            ..Self::default()
        }
    }

    pub fn section(&mut self, name: &str, table: toml::Table) {
        self.sections.push((name.to_string(), table));
    }

    pub fn to_toml(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "schema_version = {REPORT_SCHEMA_VERSION}");
        let _ = writeln!(out, "tool = \"spinrelax\"");
        let _ = writeln!(out, "tool_version = \"{}\"", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(
            out,
            "command = {}",
            toml::Value::from(self.command.as_str())
        );
        let _ = writeln!(out, "generated_unix = {}", self.generated_unix);

        let digests = |list: &[InputDigest]| {
            list.iter()
                .map(|d| {
                    let mut t = toml::Table::new();
                    t.insert("role".into(), d.role.clone().into());
                    t.insert("path".into(), d.path.clone().into());
                    t.insert("sha256".into(), d.sha256.clone().into());
                    toml::Value::Table(t)
                })
                .collect::<Vec<_>>()
        };
        let mut doc = toml::Table::new();
        if !self.inputs.is_empty() {
            doc.insert("inputs".into(), toml::Value::Array(digests(&self.inputs)));
        }
        if !self.outputs.is_empty() {
            doc.insert("outputs".into(), toml::Value::Array(digests(&self.outputs)));
        }
        let config: toml::Table = self
            .config
            .iter()
            .map(|(k, v)| (k.clone(), toml::Value::from(v.as_str())))
            .collect();
        doc.insert("config".into(), toml::Value::Table(config));
        for (name, table) in &self.sections {
            doc.insert(name.clone(), toml::Value::Table(table.clone()));
        }
        out.push('\n');
        out.push_str(&toml::to_string(&doc).unwrap_or_default());
        out
    }
}

/// Result of re-hashing the files a report lists.
#[derive(Debug, Clone, PartialEq)]
pub struct DigestCheck {
    pub role: String,
    pub path: String,
    pub matches: bool,
}

/// Recomputes the digest of every `[[inputs]]` and `[[outputs]]` entry of a
/// report. Relative paths resolve against `base`.
pub fn verify_report(text: &str, base: &Path) -> Result<Vec<DigestCheck>, IoError> {
    let doc: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| IoError::Report(e.to_string()))?;
    match doc.get("schema_version").and_then(toml::Value::as_integer) {
        Some(REPORT_SCHEMA_VERSION) => {}
        other => {
            return Err(IoError::Report(format!(
                "unsupported schema_version {other:?}"
            )))
        }
    }
    let mut checks = Vec::new();
    for key in ["inputs", "outputs"] {
        let Some(list) = doc.get(key).and_then(toml::Value::as_array) else {
            continue;
        };
        for entry in list {
            let field = |name: &str| {
                entry
                    .get(name)
                    .and_then(toml::Value::as_str)
                    .map(str::to_string)
                    .ok_or_else(|| IoError::Report(format!("{key} entry without `{name}`")))
            };
            let (role, path, want) = (field("role")?, field("path")?, field("sha256")?);
            let full = base.join(&path);
            let bytes = fs::read(&full).map_err(io_err(&full))?;
            checks.push(DigestCheck {
                role,
                path,
                matches: sha256_hex(&bytes) == want,
            });
        }
    }
    Ok(checks)
}
