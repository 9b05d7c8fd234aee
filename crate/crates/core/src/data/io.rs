//! CSV and `DAMX` raw binary matrix formats.
//!
//! CSV: UTF-8 with a header `f1,...,fm[,label]`, one sample per row, 1-based
//! integer labels in the optional final column.
//!
//! Raw binary: magic `DAMX`, little-endian `u32` feature count `m`, `u32`
//! sample count `n`, then `m*n` little-endian `f64` values sample by sample
//! (column-major in the features × samples layout). No labels.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::dataset::{DomainDataset, Role};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const RAW_MAGIC: &[u8; 4] = b"DAMX";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileFormat {
    Csv,
    Rawbinary,
}

impl FromStr for FileFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(FileFormat::Csv),
            "rawbinary" | "raw" | "damx" => Ok(FileFormat::Rawbinary),
            other => Err(Error::validation(format!("unknown file format '{other}'"))),
        }
    }
}

/// Loads a dataset, transposing rows-as-samples into a features × samples matrix.
pub fn load_dataset<T: Scalar>(path: &Path, format: FileFormat, role: Role) -> Result<DomainDataset<T>> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let (features, labels) = match format {
        FileFormat::Csv => read_csv(path)?,
        FileFormat::Rawbinary => (read_rawbinary(path)?, None),
    };
    DomainDataset::new(name, role, features, labels)
}

fn read_csv<T: Scalar>(path: &Path) -> Result<(DMatrix<T>, Option<Vec<usize>>)> {
    let parse_err = |row: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        row,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let has_label = header
        .iter()
        .next_back()
        .is_some_and(|h| h.eq_ignore_ascii_case("label"));
    let width = header.len();
    let m = if has_label { width - 1 } else { width };
    if m == 0 {
        return Err(parse_err(0, "header declares no feature columns".into()));
    }

    let mut values: Vec<f64> = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| csv_error(path, e))?;
        if record.len() != width {
            return Err(parse_err(row, format!("expected {width} fields, found {}", record.len())));
        }
        for (col, field) in record.iter().take(m).enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(row, format!("column {}: cannot parse '{field}'", header[col].to_owned())))?;
            if !v.is_finite() {
                return Err(parse_err(row, format!("column {}: non-finite value '{field}'", &header[col])));
            }
            values.push(v);
        }
        if has_label {
            let field = &record[m];
            let label: i64 = field
                .parse()
                .map_err(|_| parse_err(row, format!("label: cannot parse '{field}'")))?;
            if label < 1 {
                return Err(Error::validation(format!(
                    "{}: row {row}: label {label} outside 1..C",
                    path.display()
                )));
            }
            labels.push(label as usize - 1);
        }
    }
    let n = values.len() / m;
    let features = DMatrix::from_iterator(m, n, values.into_iter().map(T::lit));
    Ok((features, has_label.then_some(labels)))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.record() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        kind => Error::Parse {
            path: path.to_path_buf(),
            row,
            message: format!("{kind:?}"),
        },
    }
}

fn read_rawbinary<T: Scalar>(path: &Path) -> Result<DMatrix<T>> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_rawbinary(&bytes).map_err(|message| Error::Parse {
        path: path.to_path_buf(),
        row: 0,
        message,
    })
}

/// Decodes an in-memory `DAMX` buffer.
pub fn decode_rawbinary<T: Scalar>(bytes: &[u8]) -> std::result::Result<DMatrix<T>, String> {
    if bytes.len() < 12 || &bytes[..4] != RAW_MAGIC {
        return Err("missing DAMX header".into());
    }
    let m = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body = &bytes[12..];
    if body.len() != m * n * 8 {
        return Err(format!(
            "header declares {m}x{n} values ({} bytes) but body has {} bytes",
            m * n * 8,
            body.len()
        ));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| T::lit(f64::from_le_bytes(c.try_into().unwrap())));
    Ok(DMatrix::from_iterator(m, n, values))
}

/// Encodes a matrix (any shape) into a `DAMX` buffer.
pub fn encode_rawbinary<T: Scalar>(matrix: &DMatrix<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + matrix.len() * 8);
    out.extend_from_slice(RAW_MAGIC);
    out.extend_from_slice(&(matrix.nrows() as u32).to_le_bytes());
    out.extend_from_slice(&(matrix.ncols() as u32).to_le_bytes());
    for v in matrix.iter() {
        out.extend_from_slice(&v.as_f64().to_le_bytes());
    }
    out
}

pub fn save_rawbinary<T: Scalar>(matrix: &DMatrix<T>, path: &Path) -> Result<()> {
    std::fs::write(path, encode_rawbinary(matrix)).map_err(|e| Error::io(path, e))
}

/// Writes features (and 1-based labels, when given) as CSV.
pub fn save_csv<T: Scalar>(features: &DMatrix<T>, labels: Option<&[usize]>, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        let mut header: Vec<String> = (1..=features.nrows()).map(|i| format!("f{i}")).collect();
        if labels.is_some() {
            header.push("label".into());
        }
        writeln!(w, "{}", header.join(","))?;
        for (j, column) in features.column_iter().enumerate() {
            let mut fields: Vec<String> = column.iter().map(|v| format!("{}", v.as_f64())).collect();
            if let Some(labels) = labels {
                fields.push((labels[j] + 1).to_string());
            }
            writeln!(w, "{}", fields.join(","))?;
        }
        w.flush()
    };
    write(&mut w).map_err(|e| Error::io(path, e))
}

/// Saves a dataset in the given format. Labels are dropped for raw binary.
pub fn save_dataset<T: Scalar>(dataset: &DomainDataset<T>, format: FileFormat, path: &Path) -> Result<()> {
    match format {
        FileFormat::Csv => save_csv(dataset.features(), dataset.evaluation_labels(), path),
        FileFormat::Rawbinary => save_rawbinary(dataset.features(), path),
    }
}
