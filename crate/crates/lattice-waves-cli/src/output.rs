//! Artifact writers and embedded check records.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Format;
use crate::CliError;

/// A CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    /// Floating-point value, written with 17 significant digits.
    Float(f64),
    /// Integer value.
    Int(i64),
    /// Text.
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Format a float with 17 significant digits (round-trip exact).
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(x) => fmt_float(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// Build a CSV row from heterogeneous values.
#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($crate::output::Cell::from($x)),*] };
}

/// Writes the artifacts of one analysis into a directory.
#[derive(Debug)]
pub struct ArtifactWriter {
    dir: PathBuf,
    format: Format,
    written: Vec<PathBuf>,
}

impl ArtifactWriter {
    /// Create `dir` (and parents) for writing.
    ///
    /// # Errors
    /// [`CliError::Io`] when the directory cannot be created.
    pub fn new(dir: &Path, format: Format) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), format, written: Vec::new() })
    }

    /// A writer for a subdirectory with the same format.
    pub fn subdir(&self, name: &str) -> Result<Self, CliError> {
        Self::new(&self.dir.join(name), self.format)
    }

    /// Output directory.
    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Files written so far (including those of subdirectory writers that
    /// were merged back with [`ArtifactWriter::absorb`]).
    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// Record the files of a subdirectory writer.
    pub fn absorb(&mut self, other: ArtifactWriter) {
        self.written.extend(other.written);
    }

    /// Write a CSV table (header row, LF line endings) if CSV output is enabled.
    ///
    /// # Errors
    /// [`CliError::Io`] on write failures.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<Cell>>) -> Result<(), CliError> {
        if !self.format.csv() {
            return Ok(());
        }
        let path = self.dir.join(format!("{name}.csv"));
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)
            .map_err(|e| CliError::io(&path, e))?;
        w.write_record(header).map_err(|e| CliError::io(&path, e))?;
        for row in rows {
            debug_assert_eq!(row.len(), header.len(), "row width of {name}");
            w.write_record(row.iter().map(Cell::render)).map_err(|e| CliError::io(&path, e))?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    /// Write a pretty-printed JSON document if JSON output is enabled.
    ///
    /// # Errors
    /// [`CliError::Io`] on write failures.
    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        if !self.format.json() {
            return Ok(());
        }
        let path = self.dir.join(format!("{name}.json"));
        self.write_json_always(&path, value)?;
        self.written.push(path);
        Ok(())
    }

    /// Write a JSON document regardless of the format setting.
    pub(crate) fn write_json_always<T: Serialize + ?Sized>(&self, path: &Path, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, e))?;
        text.push('\n');
        fs::write(path, text).map_err(|e| CliError::io(path, e))
    }
}

/// Outcome of one embedded invariant check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    /// Identifier, `analysis/check`.
    pub name: String,
    /// Measured value.
    pub value: f64,
    /// Comparison applied to the value.
    pub relation: &'static str,
    /// Threshold of the comparison.
    pub threshold: f64,
    /// Whether the check holds.
    pub pass: bool,
}

impl Check {
    /// `value < threshold` (NaN fails).
    pub fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, relation: "<", threshold, pass: value < threshold }
    }

    /// `value <= threshold` (NaN fails).
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, relation: "<=", threshold, pass: value <= threshold }
    }

    /// `value > threshold` (NaN fails).
    pub fn above(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, relation: ">", threshold, pass: value > threshold }
    }

    /// `value == expected` for small integers.
    pub fn equals(name: impl Into<String>, value: usize, expected: usize) -> Self {
        Self { name: name.into(), value: value as f64, relation: "==", threshold: expected as f64, pass: value == expected }
    }

    /// A boolean property, recorded as 1 (holds) or 0.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self { name: name.into(), value: if ok { 1.0 } else { 0.0 }, relation: "==", threshold: 1.0, pass: ok }
    }

    /// Prefix the name with an analysis.
    pub fn scoped(mut self, scope: &str) -> Self {
        self.name = format!("{scope}/{}", self.name);
        self
    }
}

/// CSV rows of a list of checks.
pub fn check_rows(checks: &[Check]) -> Vec<Vec<Cell>> {
    checks.iter().map(|c| row![c.name.clone(), c.value, c.relation, c.threshold, c.pass]).collect()
}

/// Header matching [`check_rows`].
pub const CHECK_HEADER: [&str; 5] = ["check", "value", "relation", "threshold", "pass"];
