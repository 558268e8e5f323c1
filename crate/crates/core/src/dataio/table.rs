//! Raw tabular data as read from a measurements CSV.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Fraction of non-missing cells that must parse as numbers for a column to
/// be treated as numeric.
pub const NUMERIC_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Missing,
    Number(f64),
    Text(String),
}

impl Cell {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Cell::Number(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Missing => Ok(()),
            Cell::Number(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub cells: Vec<Cell>,
    /// Rows holding text in a column whose cells are mostly numeric.
    pub non_numeric: Vec<usize>,
}

impl Column {
    pub fn new(name: impl Into<String>, cells: Vec<Cell>) -> Self {
        Self { name: name.into(), cells, non_numeric: Vec::new() }
    }

    pub fn numeric(name: impl Into<String>, values: &[f64]) -> Self {
        Self::new(name, values.iter().map(|&v| Cell::Number(v)).collect())
    }

    /// Fraction of non-missing cells holding numbers (1.0 for an all-missing column).
    pub fn numeric_fraction(&self) -> f64 {
        let present = self.cells.iter().filter(|c| !c.is_missing()).count();
        if present == 0 {
            return 1.0;
        }
        let numbers = self.cells.iter().filter(|c| matches!(c, Cell::Number(_))).count();
        numbers as f64 / present as f64
    }

    pub fn is_numeric(&self) -> bool {
        self.numeric_fraction() >= NUMERIC_FRACTION
    }

    pub fn missing_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_missing()).count()
    }
}

/// An ordered collection of equally long, uniquely named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    columns: Vec<Column>,
    n_rows: usize,
}

impl RawTable {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let n_rows = columns.first().map_or(0, |c| c.cells.len());
        let mut seen = HashSet::new();
        for c in &columns {
            if c.cells.len() != n_rows {
                return Err(Error::Schema(format!(
                    "column '{}' has {} rows, expected {n_rows}",
                    c.name,
                    c.cells.len()
                )));
            }
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column name '{}'", c.name)));
            }
        }
        Ok(Self { columns, n_rows })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn require(&self, name: &str) -> Result<&Column> {
        self.column(name)
            .ok_or_else(|| Error::Schema(format!("missing column '{name}'")))
    }

    pub fn column_mut(&mut self, name: &str) -> Option<&mut Column> {
        self.columns.iter_mut().find(|c| c.name == name)
    }

    /// Replace a column with the same name, or append it.
    pub fn upsert_column(&mut self, column: Column) -> Result<()> {
        if column.cells.len() != self.n_rows && !self.columns.is_empty() {
            return Err(Error::Schema(format!(
                "column '{}' has {} rows, expected {}",
                column.name,
                column.cells.len(),
                self.n_rows
            )));
        }
        if self.columns.is_empty() {
            self.n_rows = column.cells.len();
        }
        match self.column_index(&column.name) {
            Some(i) => self.columns[i] = column,
            None => self.columns.push(column),
        }
        Ok(())
    }

    /// Keep the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let columns = self
            .columns
            .iter()
            .map(|c| {
                let mut remap = vec![None; self.n_rows];
                for (new, &old) in rows.iter().enumerate() {
                    remap[old] = Some(new);
                }
                Column {
                    name: c.name.clone(),
                    cells: rows.iter().map(|&r| c.cells[r].clone()).collect(),
                    non_numeric: c.non_numeric.iter().filter_map(|&r| remap[r]).collect(),
                }
            })
            .collect();
        Self { columns, n_rows: rows.len() }
    }

    pub fn to_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        let mut record = Vec::with_capacity(self.columns.len());
        for i in 0..self.n_rows {
            record.clear();
            record.extend(self.columns.iter().map(|c| c.cells[i].to_string()));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn parse_number(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parse a UTF-8 CSV with a mandatory header row.
///
/// Empty cells become [`Cell::Missing`]. A column whose non-missing cells
/// parse as numbers at least [`NUMERIC_FRACTION`] of the time stores those
/// cells as numbers; other columns keep every cell as text. Text cells in a
/// column whose cells are mostly numeric are listed in `non_numeric`.
pub fn parse_measurements_csv<R: Read>(reader: R) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse { row: 0, message: e.to_string() })?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut seen = HashSet::new();
    for h in &headers {
        if !seen.insert(h.as_str()) {
            return Err(Error::Schema(format!("duplicate header '{h}'")));
        }
    }

    let mut raw: Vec<Vec<Option<String>>> = vec![Vec::new(); headers.len()];
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse { row, message: e.to_string() })?;
        if rec.len() != headers.len() {
            return Err(Error::Parse {
                row,
                message: format!("expected {} fields, found {}", headers.len(), rec.len()),
            });
        }
        for (j, field) in rec.iter().enumerate() {
            raw[j].push(if field.is_empty() { None } else { Some(field.to_owned()) });
        }
    }

    let columns = headers
        .into_iter()
        .zip(raw)
        .map(|(name, cells)| build_column(name, cells))
        .collect();
    RawTable::new(columns)
}

fn build_column(name: String, raw: Vec<Option<String>>) -> Column {
    let present = raw.iter().flatten().count();
    let numbers = raw.iter().flatten().filter(|s| parse_number(s).is_some()).count();
    let fraction = if present == 0 { 1.0 } else { numbers as f64 / present as f64 };
    let numeric = fraction >= NUMERIC_FRACTION;
    let mostly_numeric = present > 0 && 2 * numbers > present;

    let mut non_numeric = Vec::new();
    let cells = raw
        .into_iter()
        .enumerate()
        .map(|(i, cell)| match cell {
            None => Cell::Missing,
            Some(s) => match parse_number(&s) {
                Some(v) if numeric => Cell::Number(v),
                parsed => {
                    if parsed.is_none() && mostly_numeric {
                        non_numeric.push(i);
                    }
                    Cell::Text(s)
                }
            },
        })
        .collect();
    Column { name, cells, non_numeric }
}
