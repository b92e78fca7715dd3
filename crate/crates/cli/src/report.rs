//! CSV output: a commented header echoing the resolved configuration, then
//! one row per configuration point. Floats are written with 17 significant
//! digits in scientific notation.

use crate::config::Config;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    B(bool),
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => format!("{x:.16e}"),
            Cell::U(u) => u.to_string(),
            Cell::B(b) => b.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::U(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::U(x as u64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::B(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::S(x.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvReport {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Failed checks; any entry makes the run exit with status 1.
    pub failures: Vec<String>,
}

impl CsvReport {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new(), failures: Vec::new() }
    }

    /// Appends a row given as `(column, value)` pairs; missing columns are
    /// left empty.
    pub fn row(&mut self, cells: Vec<(&'static str, Cell)>) {
        let mut row = vec![Cell::S(String::new()); self.columns.len()];
        for (name, cell) in cells {
            let i = self.columns.iter().position(|c| *c == name).unwrap_or_else(|| panic!("unknown column {name}"));
            row[i] = cell;
        }
        self.rows.push(row);
    }

    pub fn check(&mut self, ok: bool, what: impl Into<String>) -> bool {
        if !ok {
            self.failures.push(what.into());
        }
        ok
    }

    pub fn render(&self, command: &str, cfg: &Config) -> String {
        let mut out = format!("# bayescomplex {command}\n{cfg}");
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render)).expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells"));
        out
    }
}
