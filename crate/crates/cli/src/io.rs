//! CSV files: one point per row, a header line, optional trailing `label`.

use std::fs::File;
use std::path::Path;

use anyhow::{bail, Context, Result};
use assc::model::{normalize_labels, DataMatrix};
use nalgebra::DMatrix;

pub fn read_dataset(path: &Path) -> Result<DataMatrix> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("cannot open {}", path.display()))?;
    let header = rdr.headers().context("missing header")?.clone();
    let labelled = header.iter().next_back().is_some_and(|h| h.trim().eq_ignore_ascii_case("label"));
    let nfeat = header.len() - usize::from(labelled);
    if nfeat == 0 {
        bail!("no feature columns in {}", path.display());
    }
    let mut rows = Vec::new();
    let mut raw = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("row {}", line + 2))?;
        let parse = |k: usize| -> Result<f64> {
            let f = rec.get(k).unwrap_or("").trim();
            f.parse::<f64>().with_context(|| format!("row {}, column {}: bad number {f:?}", line + 2, k + 1))
        };
        rows.push((0..nfeat).map(parse).collect::<Result<Vec<f64>>>()?);
        if labelled {
            let f = rec.get(nfeat).unwrap_or("").trim();
            let l: i64 = f.parse().with_context(|| format!("row {}: bad label {f:?}", line + 2))?;
            if l < 1 {
                bail!("row {}: labels must be positive integers, got {l}", line + 2);
            }
            raw.push(l);
        }
    }
    if rows.is_empty() {
        bail!("{} has no data rows", path.display());
    }
    let labels = labelled.then(|| normalize_labels(&raw));
    Ok(DataMatrix::from_rows(&rows, labels)?)
}

pub fn write_dataset(path: &Path, data: &DataMatrix) -> Result<()> {
    let mut w = writer(path)?;
    let mut header: Vec<String> = (1..=data.ambient_dim()).map(|i| format!("x{i}")).collect();
    if data.labels().is_some() {
        header.push("label".into());
    }
    w.write_record(&header)?;
    for (j, row) in data.to_rows().iter().enumerate() {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        if let Some(l) = data.labels() {
            rec.push(l[j].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Square or rectangular matrix, row by row, with a `c1..cN` header.
pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record((1..=m.ncols()).map(|i| format!("c{i}")))?;
    for r in m.row_iter() {
        w.write_record(r.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("cannot open {}", path.display()))?;
    let cols = rdr.headers()?.len();
    let mut vals = Vec::new();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != cols {
            bail!("row {} has {} fields, expected {cols}", rows + 2, rec.len());
        }
        for f in rec.iter() {
            vals.push(f.trim().parse::<f64>().with_context(|| format!("bad number {f:?}"))?);
        }
        rows += 1;
    }
    Ok(DMatrix::from_row_slice(rows, cols, &vals))
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["label"])?;
    for l in labels {
        w.write_record([l.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut raw = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let f = rec.get(rec.len().saturating_sub(1)).unwrap_or("").trim();
        raw.push(f.parse::<i64>().with_context(|| format!("bad label {f:?}"))?);
    }
    Ok(normalize_labels(&raw))
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let f = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(csv::Writer::from_writer(f))
}
