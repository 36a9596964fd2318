use std::fs::File;
use std::path::Path;

use super::{Dataset, Label};
use crate::error::{Error, Result};

/// Which column holds the class tag and which value marks the target class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelColumn {
    pub name: String,
    pub target: String,
}

impl LabelColumn {
    pub fn new(name: impl Into<String>, target: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            target: target.into(),
        }
    }
}

/// Reads a comma-separated file with a header row. All columns except the
/// optional label column must be numeric.
pub fn load_csv(path: impl AsRef<Path>, label: Option<&LabelColumn>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(file);

    let headers: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_owned)
        .collect();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::Csv {
            path: path.to_path_buf(),
            message: "empty file".into(),
        });
    }

    let label_idx = match label {
        Some(col) => Some(headers.iter().position(|h| *h == col.name).ok_or_else(|| {
            Error::Csv {
                path: path.to_path_buf(),
                message: format!("label column {:?} not found", col.name),
            }
        })?),
        None => None,
    };
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(j, _)| Some(*j) != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    if names.is_empty() {
        return Err(Error::Csv {
            path: path.to_path_buf(),
            message: "no numeric columns".into(),
        });
    }

    let mut points = Vec::new();
    let mut labels = Vec::new();
    let mut n = 0usize;
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        for (j, cell) in record.iter().enumerate() {
            if Some(j) == label_idx {
                let target = &label.expect("label index implies a label column").target;
                labels.push(if cell == target {
                    Label::Target
                } else {
                    Label::Other
                });
                continue;
            }
            let value: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
                // 1-based data row, header excluded
                row: r + 1,
                column: j + 1,
                name: headers[j].clone(),
                value: cell.to_owned(),
            })?;
            if !value.is_finite() {
                return Err(Error::NonNumericCell {
                    row: r + 1,
                    column: j + 1,
                    name: headers[j].clone(),
                    value: cell.to_owned(),
                });
            }
            points.push(value);
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::Csv {
            path: path.to_path_buf(),
            message: "no data rows".into(),
        });
    }

    let m = names.len();
    let ds = Dataset::new(points, n, m)?.with_names(names)?;
    match label_idx {
        Some(_) => ds.with_labels(labels),
        None => Ok(ds),
    }
}

/// Writes the dataset with a header row. Labels, when present, go to a
/// trailing `label` column as `1` (target) / `0` (other).
pub fn write_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut writer = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = data.column_names();
    if data.labels().is_some() {
        header.push("label".into());
    }
    writer.write_record(&header).map_err(csv_err)?;
    let mut record: Vec<String> = Vec::with_capacity(header.len());
    for i in 0..data.n() {
        record.clear();
        // Display for f64 is the shortest representation that round-trips
        record.extend(data.row(i).iter().map(|v| v.to_string()));
        if let Some(labels) = data.labels() {
            record.push(
                match labels[i] {
                    Label::Target => "1",
                    Label::Other => "0",
                }
                .into(),
            );
        }
        writer.write_record(&record).map_err(csv_err)?;
    }
    writer.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
