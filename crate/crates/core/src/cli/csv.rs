//! CSV emission with a leading comment block that echoes the resolved
//! configuration.

use std::fmt::Write as _;

use super::config::{format_float, ConfigError, RunConfig};

pub const CONFIG_BEGIN: &str = "# config begin";
pub const CONFIG_END: &str = "# config end";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(usize),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(x) => format_float(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(t) => t.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Float)
    }
}

/// A result table. Column names carry their unit in brackets.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub title: String,
    pub notes: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(title: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            title: title.into(),
            notes: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.notes.push(line.into());
    }

    /// Title line, config echo, notes, header, rows; `\n` line endings.
    pub fn render(&self, config: Option<&RunConfig>) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {}", self.title);
        if let Some(config) = config {
            out.push_str(CONFIG_BEGIN);
            out.push('\n');
            for line in config.echo() {
                let _ = writeln!(out, "# {line}");
            }
            out.push_str(CONFIG_END);
            out.push('\n');
        }
        for note in &self.notes {
            let _ = writeln!(out, "# {note}");
        }
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let rows = std::iter::once(self.columns.clone()).chain(
            self.rows
                .iter()
                .map(|r| r.iter().map(Cell::render).collect()),
        );
        for row in rows {
            writer.write_record(&row).expect("in-memory write");
        }
        let bytes = writer.into_inner().expect("in-memory flush");
        out.push_str(std::str::from_utf8(&bytes).expect("utf-8 cells"));
        out
    }
}

/// The configuration text echoed in an output file, ready to be loaded
/// again.
pub fn echoed_config(csv: &str) -> Option<String> {
    let mut lines = csv.lines().skip_while(|l| *l != CONFIG_BEGIN);
    lines.next()?;
    let mut out = String::new();
    for line in lines {
        if line == CONFIG_END {
            return Some(out);
        }
        out.push_str(line.strip_prefix("# ")?);
        out.push('\n');
    }
    None
}

/// Parses the configuration echoed in an output file.
pub fn config_from_output(csv: &str) -> Result<RunConfig, ConfigError> {
    let text = echoed_config(csv).ok_or(ConfigError::Parse {
        line: 0,
        message: "no echoed configuration block".into(),
    })?;
    RunConfig::parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::Preset;

    #[test]
    fn render_layout() {
        let mut t = Table::new("demo", &["x [m]", "label"]);
        t.note("two rows");
        t.push(vec![Cell::Float(0.5), Cell::Text("a,b".into())]);
        t.push(vec![Cell::Empty, Cell::Int(3)]);
        assert_eq!(
            t.render(None),
            "# demo\n# two rows\nx [m],label\n0.5,\"a,b\"\n,3\n"
        );
    }

    #[test]
    fn echo_block_reloads() {
        let config = RunConfig::preset(Preset::HotDefault);
        let text = Table::new("demo", &["x"]).render(Some(&config));
        assert_eq!(config_from_output(&text).unwrap(), config);
        assert!(config_from_output("x\n1\n").is_err());
    }
}
