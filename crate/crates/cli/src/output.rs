//! Report files and console tables.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use ensemble_projection::EpParams;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct Report<'a, C: Serialize, R: Serialize> {
    schema_version: u32,
    command: &'a str,
    seed: u64,
    config: &'a C,
    #[serde(skip_serializing_if = "Option::is_none")]
    ep: Option<&'a EpParams>,
    results: &'a R,
}

/// Writes `<dir>/report.json`. The config echo is the parsed argument
/// struct, so it excludes the thread count.
pub fn write_report<C: Serialize, R: Serialize>(
    dir: &Path,
    command: &str,
    seed: u64,
    config: &C,
    ep: Option<&EpParams>,
    results: &R,
) -> Result<()> {
    let report = Report {
        schema_version: SCHEMA_VERSION,
        command,
        seed,
        config,
        ep,
        results,
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    let path = dir.join("report.json");
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

/// Headerless CSV, one row per entry.
pub fn write_csv(path: &Path, rows: &[Vec<String>]) -> Result<()> {
    let mut out = Vec::new();
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn print_table(header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect();
        println!("{}", padded.join("  "));
    };
    line(header.to_vec());
    for row in rows {
        line(row.iter().map(String::as_str).collect());
    }
}

pub fn fmt4(v: f64) -> String {
    format!("{v:.4}")
}
