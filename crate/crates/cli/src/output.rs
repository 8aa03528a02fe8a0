//! CSV datasets with `#` provenance comments.

use std::io::Write;

use crate::error::{CliError, Result};

pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub enum Field {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Field {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Field::Num(x) => Some(*x),
            Field::Int(i) => Some(*i as f64),
            _ => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Field::Num(x) => format_number(*x),
            Field::Int(i) => i.to_string(),
            Field::Bool(b) => b.to_string(),
            Field::Text(s) => s.clone(),
            Field::Empty => String::new(),
        }
    }
}

impl From<f64> for Field {
    fn from(x: f64) -> Self {
        Field::Num(x)
    }
}

impl From<bool> for Field {
    fn from(b: bool) -> Self {
        Field::Bool(b)
    }
}

impl From<usize> for Field {
    fn from(i: usize) -> Self {
        Field::Int(i as i64)
    }
}

/// Scientific notation with [`SIGNIFICANT_DIGITS`] digits; `-0` prints as `0`.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return format!("{:.*e}", SIGNIFICANT_DIGITS - 1, 0.0);
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvDataset {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Field>>,
    /// Comment lines, written without the leading `# `.
    pub provenance: Vec<String>,
}

impl CsvDataset {
    pub fn new(header: &[&str]) -> Self {
        CsvDataset { header: header.iter().map(|s| s.to_string()).collect(), ..Default::default() }
    }

    pub fn push(&mut self, row: Vec<Field>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Numeric values of column `name`, `None` for non-numeric cells.
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i].as_f64()).collect())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(format!("# corrwork {}\n", env!("CARGO_PKG_VERSION")).as_bytes());
        for line in &self.provenance {
            out.extend_from_slice(format!("# {line}\n").as_bytes());
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let io = |e: csv::Error| CliError::Io(std::io::Error::other(e));
        w.write_record(&self.header).map_err(io)?;
        for (k, row) in self.rows.iter().enumerate() {
            if row.len() != self.header.len() {
                return Err(CliError::Numerical(format!(
                    "row {k} has {} fields for {} columns",
                    row.len(),
                    self.header.len()
                )));
            }
            w.write_record(row.iter().map(Field::render)).map_err(io)?;
        }
        w.into_inner().map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))
    }
}

/// Writes `ds` to `path`, or to standard output for `-`.
pub fn write_csv(ds: &CsvDataset, path: &str) -> Result<()> {
    let bytes = ds.to_bytes()?;
    if path == "-" {
        let mut stdout = std::io::stdout().lock();
        stdout.write_all(&bytes)?;
        stdout.flush()?;
    } else {
        std::fs::write(path, bytes)?;
    }
    Ok(())
}
