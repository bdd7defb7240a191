//! Reading operators, matrices and signals from disk.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{}: malformed JSON", path.display()))
}

/// Headerless single-column CSV of floats.
pub fn read_signal(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: line {}", path.display(), i + 1))?;
        if rec.len() != 1 {
            bail!("{}: line {}: expected one column, found {}", path.display(), i + 1, rec.len());
        }
        let x: f64 = rec[0]
            .parse()
            .with_context(|| format!("{}: line {}: {:?} is not a number", path.display(), i + 1, &rec[0]))?;
        if !x.is_finite() {
            bail!("{}: line {}: value must be finite", path.display(), i + 1);
        }
        out.push(x);
    }
    Ok(out)
}

pub fn write_signal(path: &Path, xs: &[f64]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    for x in xs {
        w.write_record([format!("{x}")])?;
    }
    w.flush()?;
    Ok(())
}

/// A CSV file if `arg` names one, otherwise comma-separated numbers.
pub fn read_vector(arg: &str) -> Result<Vec<f64>> {
    let p = Path::new(arg);
    if p.is_file() {
        return read_signal(p);
    }
    arg.split(',')
        .map(|s| {
            let x: f64 = s.trim().parse().with_context(|| format!("{s:?} is not a number or a file"))?;
            if !x.is_finite() {
                bail!("{s:?} is not finite");
            }
            Ok(x)
        })
        .collect()
}
