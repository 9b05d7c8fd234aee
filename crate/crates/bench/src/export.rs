//! Embedding dumps for external plotting.

use std::path::Path;

use uda_core::{AdaptationResult, Scalar};

use crate::error::{BenchError, Result};

/// One parsed embedding row.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRow {
    pub sample_id: usize,
    pub domain: String,
    pub class: usize,
    pub z: Vec<f64>,
}

/// Writes `sample_id,domain,class,z1..zk` for every joint sample.
///
/// `labels` holds one class per joint sample (source first) and is written
/// verbatim. `sample_id` is the 1-based position within the domain. Values use
/// 17 significant digits; `dims` caps the number of embedding columns.
pub fn export_embedding<T: Scalar>(
    result: &AdaptationResult<T>,
    labels: &[usize],
    path: &Path,
    dims: Option<usize>,
) -> Result<()> {
    let z = &result.projection.embedding;
    let n = result.n_source + result.n_target;
    if z.ncols() != n || labels.len() != n {
        return Err(BenchError::Runtime(format!(
            "embedding has {} columns and {} labels for {n} samples",
            z.ncols(),
            labels.len()
        )));
    }
    let k = dims.map_or(z.nrows(), |d| d.min(z.nrows()));
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header = vec!["sample_id".to_string(), "domain".into(), "class".into()];
    header.extend((1..=k).map(|i| format!("z{i}")));
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for j in 0..n {
        let (domain, id) = if j < result.n_source {
            ("source", j + 1)
        } else {
            ("target", j - result.n_source + 1)
        };
        let mut record = vec![id.to_string(), domain.to_string(), labels[j].to_string()];
        record.extend((0..k).map(|r| format!("{:.16e}", z[(r, j)].as_f64())));
        w.write_record(&record).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| BenchError::io(path, e))
}

/// Reads a file written by [`export_embedding`].
pub fn read_embedding(path: &Path) -> Result<Vec<EmbeddingRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let bad = |row: usize, what: &str| BenchError::Runtime(format!("{}: row {row}: bad {what}", path.display()));
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let field = |c: usize| record.get(c).ok_or_else(|| bad(i + 1, "field count"));
        rows.push(EmbeddingRow {
            sample_id: field(0)?.parse().map_err(|_| bad(i + 1, "sample_id"))?,
            domain: field(1)?.to_string(),
            class: field(2)?.parse().map_err(|_| bad(i + 1, "class"))?,
            z: record
                .iter()
                .skip(3)
                .map(|v| v.parse::<f64>().map_err(|_| bad(i + 1, "value")))
                .collect::<Result<_>>()?,
        });
    }
    Ok(rows)
}

fn csv_error(path: &Path, e: csv::Error) -> BenchError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => BenchError::io(path, source),
        kind => BenchError::Runtime(format!("{}: {kind:?}", path.display())),
    }
}
