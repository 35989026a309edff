use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{DatasetMeta, LabeledDataset};
use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::scalar::Scalar;

/// Reads `f0,...,f{d-1},label`. The class count is `max(label) + 1`.
pub fn load_csv<T: Scalar>(path: &Path) -> Result<LabeledDataset<T>> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)?;
    let header = reader.headers()?.clone();
    let dim = header.len().saturating_sub(1);
    let header_ok = header.len() >= 2
        && header.get(dim) == Some("label")
        && header.iter().take(dim).enumerate().all(|(i, h)| h == format!("f{i}"));
    if !header_ok {
        return Err(parse_err(1, "header must be f0,...,f{d-1},label".into()));
    }
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != dim + 1 {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", dim + 1, record.len()),
            ));
        }
        for (i, field) in record.iter().take(dim).enumerate() {
            let v: T = field
                .trim()
                .parse()
                .map_err(|_| parse_err(line, format!("f{i} `{field}` is not a number")))?;
            data.push(v);
        }
        let raw = record[dim].trim();
        let y: usize = raw
            .parse()
            .map_err(|_| parse_err(line, format!("label `{raw}` is not a nonnegative integer")))?;
        labels.push(y);
    }
    let num_classes = labels.iter().max().map_or(0, |m| m + 1);
    let name = path
        .file_stem()
        .map_or_else(|| "csv".to_string(), |s| s.to_string_lossy().into_owned());
    let features = Matrix::from_vec(labels.len(), dim, data)?;
    LabeledDataset::new(name, features, labels, num_classes)
}

pub fn save_csv<T: Scalar>(data: &LabeledDataset<T>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let header: Vec<String> = (0..data.dim())
        .map(|i| format!("f{i}"))
        .chain(["label".to_string()])
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for i in 0..data.len() {
        for v in data.row(i) {
            write!(w, "{v},")?;
        }
        writeln!(w, "{}", data.label(i))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the JSON metadata sidecar (`name`, class counts, imbalance factor).
pub fn write_meta<T: Scalar>(data: &LabeledDataset<T>, path: &Path) -> Result<DatasetMeta> {
    let meta = data.meta();
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &meta)?;
    writeln!(w)?;
    Ok(meta)
}
