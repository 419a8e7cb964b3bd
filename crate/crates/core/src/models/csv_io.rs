//! CSV datasets: header row required, one named label column, numeric
//! features with '.' decimals. Labels are re-encoded densely in order of
//! first occurrence.

use std::io::{Read, Write};
use std::path::Path;

use super::dataset::Dataset;
use crate::error::{Error, Result};

pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_csv(file, label_column)
}

fn parse_error(row: usize, column: usize, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        row,
        column,
        message: e.to_string(),
    }
}

fn csv_error(e: csv::Error) -> Error {
    let row = e.position().map(|p| p.line() as usize).unwrap_or(0);
    parse_error(row, 0, e)
}

/// Rows and columns in errors are 1-based, counting the header as row 1.
pub fn read_csv(reader: impl Read, label_column: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let label_at = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| parse_error(1, 0, format!("no column named {label_column:?}")))?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != label_at)
        .map(|(_, h)| h.to_string())
        .collect();

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut label_names: Vec<String> = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let row_no = r + 2;
        let record = record.map_err(csv_error)?;
        let mut row = Vec::with_capacity(feature_names.len());
        for (c, cell) in record.iter().enumerate() {
            if c == label_at {
                let id = match label_names.iter().position(|l| l == cell) {
                    Some(id) => id,
                    None => {
                        label_names.push(cell.to_string());
                        label_names.len() - 1
                    }
                };
                labels.push(id);
            } else {
                row.push(parse_feature(cell, row_no, c + 1)?);
            }
        }
        features.push(row);
    }
    if features.is_empty() {
        return Err(parse_error(2, 0, "no data rows"));
    }
    let mut ds = Dataset {
        features,
        labels,
        class_count: label_names.len(),
        feature_names: Some(feature_names),
        label_names: Some(label_names),
    };
    ds.validate()?;
    if ds.feature_names.as_ref().is_some_and(|n| n.is_empty()) {
        ds.feature_names = None;
    }
    Ok(ds)
}

fn parse_feature(cell: &str, row: usize, column: usize) -> Result<f64> {
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::NonNumericFeature {
            row,
            column,
            value: cell.to_string(),
        }),
    }
}

pub fn write_csv(dataset: &Dataset, writer: impl Write, label_column: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..dataset.dim())
        .map(|j| dataset.feature_name(j))
        .collect();
    header.push(label_column.to_string());
    w.write_record(&header).map_err(csv_error)?;
    for (row, &label) in dataset.features.iter().zip(&dataset.labels) {
        let mut rec: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        rec.push(match &dataset.label_names {
            Some(names) => names[label].clone(),
            None => label.to_string(),
        });
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(dataset: &Dataset, path: impl AsRef<Path>, label_column: &str) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(dataset, std::io::BufWriter::new(file), label_column)
}

/// Reads points: header row, then all-numeric rows. A column named
/// `drop_column`, if present, is ignored.
pub fn read_points(reader: impl Read, drop_column: Option<&str>) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let skip = drop_column.and_then(|d| headers.iter().position(|h| h == d));
    let mut out = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let row = record
            .iter()
            .enumerate()
            .filter(|(c, _)| Some(*c) != skip)
            .map(|(c, cell)| parse_feature(cell, r + 2, c + 1))
            .collect::<Result<Vec<_>>>()?;
        out.push(row);
    }
    if out.is_empty() {
        return Err(parse_error(2, 0, "no data rows"));
    }
    Ok(out)
}

pub fn load_points(path: impl AsRef<Path>, drop_column: Option<&str>) -> Result<Vec<Vec<f64>>> {
    read_points(std::fs::File::open(path)?, drop_column)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_encode_by_first_occurrence() {
        let text = "f1,f2,label\n1.0,2.0,a\n3,4,b\n5,6,a\n";
        let ds = read_csv(text.as_bytes(), "label").unwrap();
        assert_eq!(ds.class_count, 2);
        assert_eq!(ds.labels, vec![0, 1, 0]);
        assert_eq!(ds.features[1], vec![3.0, 4.0]);
        assert_eq!(ds.label_names.unwrap(), vec!["a", "b"]);
    }

    #[test]
    fn label_column_may_be_anywhere() {
        let text = "y,f1\n2,0.5\n7,1.5\n";
        let ds = read_csv(text.as_bytes(), "y").unwrap();
        assert_eq!(ds.labels, vec![0, 1]);
        assert_eq!(ds.feature_names.unwrap(), vec!["f1"]);
    }

    #[test]
    fn nan_cell_reports_location() {
        let text = "f1,f2,label\n1,2,a\n3,NaN,b\n";
        match read_csv(text.as_bytes(), "label") {
            Err(Error::NonNumericFeature { row, column, value }) => {
                assert_eq!((row, column, value.as_str()), (3, 2, "NaN"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ragged_rows_are_parse_errors() {
        let text = "f1,f2,label\n1,2,a\n3,b\n";
        assert!(matches!(
            read_csv(text.as_bytes(), "label"),
            Err(Error::Parse { row: 3, .. })
        ));
    }

    #[test]
    fn missing_label_column() {
        assert!(matches!(
            read_csv("a,b\n1,2\n".as_bytes(), "label"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn round_trip_is_exact() {
        let ds = Dataset::new(
            vec![vec![0.1, -1.0 / 3.0], vec![1e-17, 12345.678901234567]],
            vec![1, 0],
            2,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf, "label").unwrap();
        let back = read_csv(buf.as_slice(), "label").unwrap();
        for (a, b) in ds
            .features
            .iter()
            .flatten()
            .zip(back.features.iter().flatten())
        {
            assert!((a - b).abs() <= 1e-12);
            assert_eq!(a.to_bits(), b.to_bits());
        }
        // integer labels "1","0" re-encode by first occurrence
        assert_eq!(back.labels, vec![0, 1]);
        assert_eq!(back.label_names.unwrap(), vec!["1", "0"]);
    }
}
