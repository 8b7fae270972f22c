use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::data::{LabeledDataset, Origin};
use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// Reads a numeric CSV: samples as rows, features as columns, an optional
/// header row, and optionally a named label column whose values are
/// integer-encoded in order of first appearance.
///
/// A first row containing any non-numeric cell is treated as a header.
pub fn load_csv(path: impl AsRef<Path>, label_column: Option<&str>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, label_column)
}

pub fn read_csv<R: Read>(reader: R, label_column: Option<&str>) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut header: Option<Vec<String>> = None;
    let mut label_idx: Option<usize> = None;
    let mut width: Option<usize> = None;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    let mut rows = 0usize;

    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            column: None,
            msg: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(i as u64 + 1);

        if i == 0 && rec.iter().any(|c| c.parse::<f64>().is_err()) {
            let names: Vec<String> = rec.iter().map(str::to_owned).collect();
            if let Some(label) = label_column {
                label_idx = Some(names.iter().position(|n| n == label).ok_or_else(|| {
                    Error::invalid(format!("label column {label:?} not found in header"))
                })?);
            }
            width = Some(names.len());
            header = Some(names);
            continue;
        }
        if i == 0 && label_column.is_some() {
            return Err(Error::invalid(
                "a label column was requested but the file has no header row",
            ));
        }

        let expected = *width.get_or_insert(rec.len());
        if rec.len() != expected {
            return Err(Error::Parse {
                line,
                column: None,
                msg: format!("expected {expected} fields, found {}", rec.len()),
            });
        }
        for (c, cell) in rec.iter().enumerate() {
            if Some(c) == label_idx {
                let code = match class_names.iter().position(|n| n == cell) {
                    Some(k) => k,
                    None => {
                        class_names.push(cell.to_owned());
                        class_names.len() - 1
                    }
                };
                labels.push(code);
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                line,
                column: Some(c + 1),
                msg: format!("non-numeric cell {cell:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    column: Some(c + 1),
                    msg: format!("non-finite value {cell:?}"),
                });
            }
            data.push(v);
        }
        rows += 1;
    }

    let total_cols = width.unwrap_or(0);
    let cols = total_cols - usize::from(label_idx.is_some());
    let features = Matrix::from_vec(rows, cols, data)?;
    let feature_names = header.map(|h| {
        h.into_iter()
            .enumerate()
            .filter(|(c, _)| Some(*c) != label_idx)
            .map(|(_, n)| n)
            .collect()
    });
    Ok(LabeledDataset {
        features,
        class_labels: label_idx.map(|_| labels),
        origin: Origin::Target,
        feature_names,
        class_names: label_idx.map(|_| class_names),
    })
}

/// Writes `data` with a header row. Labels, when present and a column name
/// is given, go in a trailing column using the original class names if known.
pub fn save_csv(
    data: &LabeledDataset,
    path: impl AsRef<Path>,
    label_column: Option<&str>,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_csv(data, &mut w, label_column).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_csv<W: Write>(
    data: &LabeledDataset,
    w: &mut W,
    label_column: Option<&str>,
) -> std::io::Result<()> {
    let names: Vec<String> = match &data.feature_names {
        Some(n) if n.len() == data.dim() => n.clone(),
        _ => (0..data.dim()).map(|i| format!("f{i}")).collect(),
    };
    let labels = label_column.zip(data.class_labels.as_ref());
    let mut header = names.join(",");
    if let Some((name, _)) = labels {
        header.push(',');
        header.push_str(name);
    }
    writeln!(w, "{header}")?;
    for r in 0..data.n() {
        let mut line = data
            .features
            .row(r)
            .iter()
            .map(|v| format_float(*v))
            .collect::<Vec<_>>()
            .join(",");
        if let Some((_, l)) = labels {
            line.push(',');
            match &data.class_names {
                Some(names) if l[r] < names.len() => line.push_str(&names[l[r]]),
                _ => line.push_str(&l[r].to_string()),
            }
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Shortest decimal representation that parses back to the same bits.
pub fn format_float(v: f64) -> String {
    format!("{v:?}")
}
