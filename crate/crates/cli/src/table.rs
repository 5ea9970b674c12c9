//! Delimiter-separated table files: one header line, one line per row,
//! fields joined by the delimiter with no trailing delimiter, UTF-8, LF line
//! endings, newline-terminated. Integers render as decimals and reals as
//! shortest round-trip strings, so `parse(export(rows)) == rows`.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::CliError;

/// A rendered table cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Unsigned(u64),
    Signed(i64),
    Real(f64),
}

impl Cell {
    fn render(&self, out: &mut String) {
        match self {
            Cell::Unsigned(v) => write!(out, "{v}").unwrap(),
            Cell::Signed(v) => write!(out, "{v}").unwrap(),
            Cell::Real(v) => write!(out, "{v}").unwrap(),
        }
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Unsigned(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Signed(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

/// Renders a table to a string.
pub fn render_table(header: &[&str], rows: &[Vec<Cell>], delimiter: char) -> String {
    let mut out = String::new();
    out.push_str(&header.join(&delimiter.to_string()));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len(), "row arity must match header");
        let mut first = true;
        for cell in row {
            if !first {
                out.push(delimiter);
            }
            cell.render(&mut out);
            first = false;
        }
        out.push('\n');
    }
    out
}

/// Writes a table atomically: the file appears complete or not at all.
pub fn export_table(
    header: &[&str],
    rows: &[Vec<Cell>],
    path: &Path,
    delimiter: char,
) -> Result<(), CliError> {
    let content = render_table(header, rows, delimiter);
    write_atomic(path, content.as_bytes())
}

/// Writes `content` to `path` through a temporary file in the same
/// directory, renamed into place on success.
pub fn write_atomic(path: &Path, content: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or(Path::new(".")))
        .map_err(|e| CliError::Io(format!("creating temporary file near {}: {e}", path.display())))?;
    tmp.write_all(content)
        .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
    tmp.persist(path)
        .map_err(|e| CliError::Io(format!("renaming into {}: {e}", path.display())))?;
    Ok(())
}

/// Parses a table file back into its header and raw string fields.
pub fn parse_table(path: &Path, delimiter: char) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    let content = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    let mut lines = content.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| CliError::Config(format!("{} is empty", path.display())))?
        .split(delimiter)
        .map(str::to_owned)
        .collect();
    let rows = lines
        .map(|line| line.split(delimiter).map(str::to_owned).collect())
        .collect();
    Ok((header, rows))
}

/// Parses one column of a string table as f64.
pub fn numeric_column(rows: &[Vec<String>], column: usize) -> Result<Vec<f64>, CliError> {
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            let field = row.get(column).ok_or_else(|| {
                CliError::Config(format!("row {} has no column {column}", i + 1))
            })?;
            field.trim().parse::<f64>().map_err(|_| {
                CliError::Config(format!("row {}: {field:?} is not numeric", i + 1))
            })
        })
        .collect()
}
