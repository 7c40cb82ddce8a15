//! CSV output and input. Numbers are written with 17 significant digits
//! (`{:.16e}`) so every f64 round-trips losslessly; files are written to a
//! temporary name and renamed into place.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{CliError, CliResult};

/// One CSV cell: either a verbatim label or a losslessly formatted float.
pub enum Cell {
    Label(String),
    Number(f64),
}

pub fn number(v: f64) -> Cell {
    Cell::Number(v)
}

pub fn label(v: impl Into<String>) -> Cell {
    Cell::Label(v.into())
}

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `header` and `rows` atomically (temp file + rename).
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<Cell>]) -> CliResult<()> {
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        let mut first = true;
        for cell in row {
            if !first {
                text.push(',');
            }
            first = false;
            match cell {
                Cell::Label(s) => text.push_str(s),
                Cell::Number(v) => text.push_str(&format_float(*v)),
            }
        }
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
    let io_err =
        |e: std::io::Error| CliError::numerical(format!("writing {}: {e}", path.display()));
    {
        let mut f = fs::File::create(&tmp).map_err(io_err)?;
        f.write_all(bytes).map_err(io_err)?;
        f.sync_all().map_err(io_err)?;
    }
    fs::rename(&tmp, path).map_err(io_err)
}

/// Reads a CSV produced by this toolkit: a header row plus rows of cells.
pub fn read_csv(path: &Path) -> CliResult<(Vec<String>, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("reading {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::config(format!("{} is empty", path.display())))?
        .split(',')
        .map(str::to_string)
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cells: Vec<String> = line.split(',').map(str::to_string).collect();
        if cells.len() != header.len() {
            return Err(CliError::config(format!(
                "{} row {}: expected {} columns, found {}",
                path.display(),
                i + 2,
                header.len(),
                cells.len()
            )));
        }
        rows.push(cells);
    }
    Ok((header, rows))
}

/// Reads an all-numeric CSV, checking the header against `expected`.
pub fn read_numeric_csv(path: &Path, expected: &[&str]) -> CliResult<Vec<Vec<f64>>> {
    let (header, rows) = read_csv(path)?;
    if header != expected {
        return Err(CliError::config(format!(
            "{}: expected header {:?}, found {:?}",
            path.display(),
            expected,
            header
        )));
    }
    rows.into_iter()
        .enumerate()
        .map(|(i, row)| {
            row.into_iter()
                .map(|cell| {
                    cell.parse::<f64>().map_err(|_| {
                        CliError::config(format!(
                            "{} row {}: `{cell}` is not a number",
                            path.display(),
                            i + 2
                        ))
                    })
                })
                .collect()
        })
        .collect()
}

/// Numeric CSV whose trailing column may be absent (optional sigma).
pub fn read_numeric_csv_flexible(
    path: &Path,
    required: &[&str],
    optional_last: &str,
) -> CliResult<(Vec<Vec<f64>>, bool)> {
    let (header, _) = read_csv(path)?;
    if header == required {
        return Ok((read_numeric_csv(path, required)?, false));
    }
    let mut with_opt: Vec<&str> = required.to_vec();
    with_opt.push(optional_last);
    if header == with_opt {
        return Ok((read_numeric_csv(path, &with_opt)?, true));
    }
    Err(CliError::config(format!(
        "{}: expected header {:?} (optionally with `{optional_last}`), found {:?}",
        path.display(),
        required,
        header
    )))
}
