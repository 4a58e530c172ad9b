use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Renders `x` with 12 significant digits, dropping trailing zeros.
pub fn g12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let s = format!("{:.*}", (11 - exp).max(0) as usize, x);
        let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
        // Rounding can carry into a new leading digit; one more pass fixes the digit count.
        if s.trim_start_matches('-').replace('.', "").trim_start_matches('0').len() > 12 {
            return g12(s.parse().expect("formatted float"));
        }
        s
    } else {
        let s = format!("{:.11e}", x);
        let (mant, e) = s.split_once('e').expect("exponent");
        let mant = mant.trim_end_matches('0').trim_end_matches('.');
        format!("{mant}e{e}")
    }
}

/// `x` rounded to 12 significant digits, for JSON output.
pub fn r12(x: f64) -> f64 {
    g12(x).parse().unwrap_or(x)
}

/// Serializes an `f64` field through [`r12`].
pub fn ser_r12<S: serde::Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(r12(*x))
}

/// Serializes an optional `f64` field through [`r12`].
pub fn ser_opt_r12<S: serde::Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_some(&r12(*v)),
        None => s.serialize_none(),
    }
}

/// A table rendered as CSV or as a JSON array of objects with the same field names.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub json: serde_json::Value,
}

impl Table {
    pub fn render(&self, format: Format) -> Result<Vec<u8>> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.header)?;
                for row in &self.rows {
                    w.write_record(row)?;
                }
                Ok(w.into_inner().context("flushing csv")?)
            }
            Format::Json => {
                let mut s = serde_json::to_vec_pretty(&self.json)?;
                s.push(b'\n');
                Ok(s)
            }
        }
    }
}

/// Record of one invocation, written next to its output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Every argument of the command, enough to replay it.
    pub params: serde_json::Value,
    pub seed: u64,
    pub git_like_version: String,
    pub outputs: Vec<String>,
}

pub fn version_string() -> String {
    format!("pdos-cli {}", env!("CARGO_PKG_VERSION"))
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// Writes `bytes` to `out` (or stdout) and the manifest to `<out>.manifest.json` (or stderr).
pub fn emit(bytes: &[u8], out: Option<&Path>, manifest: &RunManifest) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest)? + "\n";
    match out {
        Some(path) => {
            std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
            let mpath = manifest_path(path);
            std::fs::write(&mpath, text).with_context(|| format!("writing {}", mpath.display()))?;
        }
        None => {
            std::io::stdout().write_all(bytes)?;
            eprint!("{text}");
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(g12(std::f64::consts::PI), "3.14159265359");
        assert_eq!(g12(1.0 / 3.0), "0.333333333333");
        assert_eq!(g12(0.5), "0.5");
        assert_eq!(g12(-3.8695), "-3.8695");
        assert_eq!(g12(1e-9), "1e-9");
        assert_eq!(g12(123456789012345.0), "1.23456789012e14");
        assert_eq!(g12(0.99999999999999), "1");
        assert_eq!(g12(42.0), "42");
    }
}
