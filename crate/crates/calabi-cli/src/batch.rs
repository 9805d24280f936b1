//! CSV point batches for the map commands. The header row is mandatory and
//! names every column; floats are written with enough digits to reparse to
//! the identical binary64 value, so map -> invmap loses nothing to the file
//! format. Output files carry a trailing `status` column; rows that fail to
//! map keep their status tag instead of aborting the batch.

use std::path::Path;

use crate::CliError;

pub const STATUS_OK: &str = "ok";

#[derive(Debug)]
pub struct Batch {
    pub rows: Vec<Row>,
}

#[derive(Debug)]
pub struct Row {
    /// 1-based line number in the source file.
    pub line: usize,
    /// First block of n coordinates (x for tube points, p for images).
    pub a: Vec<f64>,
    /// Fiber block of n coordinates.
    pub y: Vec<f64>,
    pub status: String,
}

/// `<prefix>1..<prefix>n, y1..yn` with an optional trailing `status`.
fn expected_header(prefix: &str, n: usize, with_status: bool) -> String {
    let mut cols = Vec::with_capacity(2 * n + 1);
    for i in 1..=n {
        cols.push(format!("{prefix}{i}"));
    }
    for i in 1..=n {
        cols.push(format!("y{i}"));
    }
    if with_status {
        cols.push("status".into());
    }
    cols.join(",")
}

/// Reads a batch whose coordinate block is named `prefix`. A trailing
/// `status` column (as written by the map commands) is accepted; rows whose
/// status is not `ok` keep it and skip numeric parsing.
pub fn read(path: &Path, prefix: &str, n: usize) -> Result<Batch, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read batch {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let Some(header) = lines.next() else {
        return Err(CliError::Validation(format!(
            "{}: empty file, expected a header row",
            path.display()
        )));
    };
    let plain = expected_header(prefix, n, false);
    let with_status = expected_header(prefix, n, true);
    let trimmed = header.trim();
    let has_status = if trimmed == plain {
        false
    } else if trimmed == with_status {
        true
    } else {
        return Err(CliError::Validation(format!(
            "{}: line 1: header {trimmed:?} does not match {plain:?} (optionally with a trailing status column)",
            path.display()
        )));
    };
    let width = 2 * n + usize::from(has_status);

    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != width {
            return Err(CliError::Validation(format!(
                "{}: line {line_no}: expected {width} columns, found {}",
                path.display(),
                fields.len()
            )));
        }
        let status = if has_status {
            fields[2 * n].to_string()
        } else {
            STATUS_OK.to_string()
        };
        if status != STATUS_OK {
            rows.push(Row {
                line: line_no,
                a: Vec::new(),
                y: Vec::new(),
                status,
            });
            continue;
        }
        let mut values = Vec::with_capacity(2 * n);
        for (col, field) in fields[..2 * n].iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::Validation(format!(
                    "{}: line {line_no}: column {}: cannot parse {field:?} as a number",
                    path.display(),
                    col + 1
                ))
            })?;
            values.push(v);
        }
        rows.push(Row {
            line: line_no,
            a: values[..n].to_vec(),
            y: values[n..].to_vec(),
            status,
        });
    }
    Ok(Batch { rows })
}

/// Writes a batch with coordinate block `prefix` and a `status` column.
/// Rows whose status is not `ok` are written with empty numeric cells.
pub fn write(path: &Path, prefix: &str, n: usize, rows: &[Row]) -> Result<(), CliError> {
    let mut out = String::new();
    out.push_str(&expected_header(prefix, n, true));
    out.push('\n');
    for row in rows {
        if row.status == STATUS_OK {
            for v in row.a.iter().chain(row.y.iter()) {
                out.push_str(&format!("{v},"));
            }
        } else {
            out.push_str(&",".repeat(2 * n));
        }
        out.push_str(&row.status);
        out.push('\n');
    }
    std::fs::write(path, out)
        .map_err(|e| CliError::Io(format!("cannot write batch {}: {e}", path.display())))
}
