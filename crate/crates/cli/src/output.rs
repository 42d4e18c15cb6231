//! Trajectory files: CSV, JSON-lines records, metadata.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use synthdim::scenarios::RunResult;

use crate::config::{replay_record, Format};
use crate::{svg, CliError};

/// Shortest round-trip decimal, switching to exponent form outside `[1e-4, 1e6)`.
pub fn num(x: f64) -> String {
    if x == 0.0 || (1e-4..1e6).contains(&x.abs()) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn io(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("cannot write {}: {e}", path.display()))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io(dir, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io(path, e))
}

pub fn write_csv(path: &Path, run: &RunResult) -> Result<(), CliError> {
    let tr = &run.trajectory;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path).map_err(|e| io(path, e))?;
    let header: Vec<String> = std::iter::once("t".to_string()).chain(tr.labels.iter().map(|l| l.to_string())).collect();
    w.write_record(&header).map_err(|e| io(path, e))?;
    for (t, row) in tr.times.iter().zip(&tr.probs) {
        let rec: Vec<String> = std::iter::once(num(*t)).chain(row.iter().map(|p| num(*p))).collect();
        w.write_record(&rec).map_err(|e| io(path, e))?;
    }
    w.flush().map_err(|e| io(path, e))
}

/// One JSON object per sample: `{"t": .., "p": {label: prob, ..}}`.
pub fn write_records(path: &Path, run: &RunResult) -> Result<(), CliError> {
    let tr = &run.trajectory;
    let file = File::create(path).map_err(|e| io(path, e))?;
    let mut w = BufWriter::new(file);
    for (t, row) in tr.times.iter().zip(&tr.probs) {
        let p: serde_json::Map<String, serde_json::Value> =
            tr.labels.iter().zip(row).map(|(l, v)| (l.to_string(), serde_json::json!(v))).collect();
        let line = serde_json::json!({ "t": t, "p": p });
        writeln!(w, "{line}").map_err(|e| io(path, e))?;
    }
    w.flush().map_err(|e| io(path, e))
}

/// Writes every requested artifact of one run into `dir`; returns the paths written.
pub fn write_run(dir: &Path, run: &RunResult, formats: &[Format]) -> Result<Vec<PathBuf>, CliError> {
    ensure_dir(dir)?;
    let name = &run.spec.name;
    let mut written = Vec::new();
    let meta = dir.join(format!("{name}.meta.json"));
    let record = serde_json::to_string_pretty(&replay_record(&run.spec, formats)).expect("record serializes");
    write_text(&meta, &(record + "\n"))?;
    written.push(meta);
    for f in formats {
        match f {
            Format::Csv => {
                let p = dir.join(format!("{name}.csv"));
                write_csv(&p, run)?;
                written.push(p);
            }
            Format::Records => {
                let p = dir.join(format!("{name}.jsonl"));
                write_records(&p, run)?;
                written.push(p);
            }
            Format::Svg => {
                let p = dir.join(format!("{name}_heatmap.svg"));
                write_text(&p, &svg::heatmap(&run.trajectory, name))?;
                written.push(p);
                let p = dir.join(format!("{name}_lines.svg"));
                write_text(&p, &svg::lines(&run.trajectory, run.spec.model.span(), name))?;
                written.push(p);
            }
        }
    }
    Ok(written)
}
