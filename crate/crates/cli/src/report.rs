//! Tabular results, metadata and plot stubs.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl Cell {
    /// Shortest representation that parses back to the same value.
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x:?}"),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if !x.is_finite() => Value::String(format!("{x:?}")),
            other => serde_json::to_value(other).expect("cells serialize"),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

/// Columns of a table that belong in a gnuplot data file.
#[derive(Debug, Clone)]
pub struct Plot {
    pub x: &'static str,
    pub y: Vec<&'static str>,
    pub title: String,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Map<String, Value>,
    pub seed: Option<u64>,
    pub plot: Option<Plot>,
}

impl Report {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
            summary: Map::new(),
            seed: None,
            plot: None,
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        self.summary
            .insert(key.to_string(), serde_json::to_value(value).expect("summary serializes"));
    }

    pub fn csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).map_err(CliError::io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(CliError::io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    fn rows_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| (c.to_string(), v.json()))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }

    fn dat(&self, plot: &Plot) -> String {
        let idx = |name: &str| self.columns.iter().position(|c| *c == name).expect("plot column exists");
        let cols: Vec<usize> = std::iter::once(plot.x).chain(plot.y.iter().copied()).map(idx).collect();
        let mut out = format!(
            "# {}\n",
            cols.iter().map(|&i| self.columns[i]).collect::<Vec<_>>().join(" ")
        );
        for row in &self.rows {
            let line: Vec<String> = cols.iter().map(|&i| row[i].render()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    fn gnuplot(&self, name: &str, plot: &Plot) -> String {
        let series: Vec<String> = plot
            .y
            .iter()
            .enumerate()
            .map(|(k, y)| format!("'{name}.dat' using 1:{} with linespoints title '{y}'", k + 2))
            .collect();
        format!(
            "set title '{}'\nset xlabel '{}'\nset grid\nplot {}\npause -1\n",
            plot.title,
            plot.x,
            series.join(", \\\n     ")
        )
    }
}

/// Everything recorded about one run.
pub struct Run<'a> {
    pub name: &'a str,
    pub config: Value,
    pub threads: Option<usize>,
    pub wall_time: f64,
    pub report: &'a Report,
}

impl Run<'_> {
    pub fn metadata(&self) -> Value {
        json!({
            "command": self.name,
            "version": metriq::version_string(),
            "config": self.config,
            "seed": self.report.seed,
            "threads": self.threads,
            "wall_time_s": self.wall_time,
            "columns": self.report.columns,
            "summary": Value::Object(self.report.summary.clone()),
        })
    }

    pub fn json(&self) -> Value {
        let mut meta = self.metadata();
        meta["rows"] = self.report.rows_json();
        meta
    }

    pub fn write_files(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir).map_err(CliError::io)?;
        let base = dir.join(self.name);
        fs::write(base.with_extension("csv"), self.report.csv()?).map_err(CliError::io)?;
        let mut meta = self.metadata();
        meta["table"] = Value::String(format!("{}.csv", self.name));
        let mut f = fs::File::create(base.with_extension("json")).map_err(CliError::io)?;
        serde_json::to_writer_pretty(&mut f, &meta).map_err(CliError::io)?;
        writeln!(f).map_err(CliError::io)?;
        if let Some(plot) = &self.report.plot {
            fs::write(base.with_extension("dat"), self.report.dat(plot)).map_err(CliError::io)?;
            fs::write(base.with_extension("gp"), self.report.gnuplot(self.name, plot)).map_err(CliError::io)?;
        }
        Ok(())
    }
}
