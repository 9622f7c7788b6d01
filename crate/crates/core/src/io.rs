//! Reading response matrices and writing matrices, reordered views and
//! block summaries. Group labels are written 1-based.

use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::Path;

use crate::error::{LbmError, Result};
use crate::inference::FitResult;
use crate::model::{BinaryDataMatrix, LbmParameters};

/// Parses comma-separated 0/1 rows. A first row holding any non-numeric
/// token is taken as a header and skipped. Errors carry 1-based line and
/// column numbers.
pub fn parse_matrix<R: Read>(reader: R) -> Result<BinaryDataMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<u8>> = Vec::new();
    let mut width = None;
    for (idx, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(idx + 1, |p| p.line() as usize);
            LbmError::Parse {
                row: line,
                col: 1,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map_or(idx + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if idx == 0 && record.iter().any(|t| t.parse::<f64>().is_err()) {
            continue;
        }
        let mut row = Vec::with_capacity(record.len());
        for (j, token) in record.iter().enumerate() {
            match token {
                "0" => row.push(0),
                "1" => row.push(1),
                other => {
                    return Err(LbmError::Parse {
                        row: line,
                        col: j + 1,
                        message: format!("expected 0 or 1, found {other:?}"),
                    })
                }
            }
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(LbmError::Parse {
                    row: line,
                    col: row.len().min(w) + 1,
                    message: format!("row has {} columns, expected {w}", row.len()),
                })
            }
            _ => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(LbmError::Parse {
            row: 1,
            col: 1,
            message: "no data rows".into(),
        });
    }
    BinaryDataMatrix::from_rows(&rows)
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<BinaryDataMatrix> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| LbmError::io(path, e))?;
    parse_matrix(file)
}

pub fn matrix_to_csv(data: &BinaryDataMatrix) -> String {
    let mut out = String::with_capacity(data.n() * (2 * data.q()));
    for i in 0..data.n() {
        let row: Vec<&str> = data
            .row(i)
            .iter()
            .map(|&c| if c == 1 { "1" } else { "0" })
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix(data: &BinaryDataMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_text(path, &matrix_to_csv(data))
}

pub(crate) fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, text).map_err(|e| LbmError::io(path, e))
}

/// Indices sorted by label, original order kept inside each label.
pub fn order_by_group(labels: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by_key(|&i| labels[i]);
    order
}

/// Matrix with rows and columns grouped by MAP label, as CSV.
///
/// Line 1 is `row,group,` followed by the original 1-based column numbers,
/// line 2 gives each column's group, and every following line is the
/// original row number, the row group and the row's cells.
pub fn reordered_csv(data: &BinaryDataMatrix, fit: &FitResult) -> Result<String> {
    let part = &fit.map_part;
    if part.z.len() != data.n() || part.w.len() != data.q() {
        return Err(LbmError::DimensionMismatch(format!(
            "fit covers {}x{} but data is {}x{}",
            part.z.len(),
            part.w.len(),
            data.n(),
            data.q()
        )));
    }
    let rows = order_by_group(&part.z);
    let cols = order_by_group(&part.w);
    let join = |v: Vec<String>| v.join(",");
    let mut out = String::new();
    out.push_str("row,group,");
    out.push_str(&join(cols.iter().map(|j| (j + 1).to_string()).collect()));
    out.push_str("\n,,");
    out.push_str(&join(
        cols.iter().map(|&j| (part.w[j] + 1).to_string()).collect(),
    ));
    out.push('\n');
    for &i in &rows {
        let cells = join(cols.iter().map(|&j| data.get(i, j).to_string()).collect());
        let _ = writeln!(out, "{},{},{}", i + 1, part.z[i] + 1, cells);
    }
    Ok(out)
}

/// Estimated parameters laid out as a table: column proportions across the
/// top, row proportions down the left, block parameters in the body.
pub fn block_summary(params: &LbmParameters) -> String {
    let (g, m) = (params.g(), params.m());
    let cell = |x: f64| format!("{x:>8.4}");
    let mut out = String::new();
    let _ = writeln!(out, "# rho (top), pi (left), alpha (body); g={g} m={m}");
    let _ = write!(out, "{:>8} |", "");
    for &r in &params.rho {
        out.push_str(&cell(r));
    }
    out.push('\n');
    let _ = writeln!(out, "{}-+{}", "-".repeat(8), "-".repeat(8 * m));
    for k in 0..g {
        let _ = write!(out, "{} |", cell(params.pi[k]));
        for l in 0..m {
            out.push_str(&cell(params.alpha(k, l)));
        }
        out.push('\n');
    }
    out
}

/// Writes the reordered matrix and the block summary.
pub fn export_reordered(
    data: &BinaryDataMatrix,
    fit: &FitResult,
    matrix_path: impl AsRef<Path>,
    summary_path: impl AsRef<Path>,
) -> Result<()> {
    let csv = reordered_csv(data, fit)?;
    write_text(matrix_path, &csv)?;
    let mut summary = block_summary(&fit.params);
    let boundaries = |labels: &[usize], groups: usize| {
        let mut sizes = vec![0usize; groups];
        labels.iter().for_each(|&k| sizes[k] += 1);
        sizes
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    let _ = writeln!(
        summary,
        "row_group_sizes: {}",
        boundaries(&fit.map_part.z, fit.g)
    );
    let _ = writeln!(
        summary,
        "col_group_sizes: {}",
        boundaries(&fit.map_part.w, fit.m)
    );
    write_text(summary_path, &summary)
}
