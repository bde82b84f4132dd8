//! Structured command output with a JSON form and an aligned-text form.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    pub fn from_bool(ok: bool) -> Status {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    pub values: Vec<usize>,
}

/// A table of dimensions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<TableRow>,
}

impl Table {
    pub fn new(title: impl Into<String>, columns: Vec<String>) -> Table {
        Table { title: title.into(), columns, rows: Vec::new() }
    }

    pub fn row(&mut self, label: impl Into<String>, values: Vec<usize>) {
        self.rows.push(TableRow { label: label.into(), values });
    }

    pub fn get(&self, label: &str) -> Option<&[usize]> {
        self.rows.iter().find(|r| r.label == label).map(|r| r.values.as_slice())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub label: String,
    pub lines: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub model: String,
    pub field: String,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    pub witnesses: Vec<Witness>,
    #[serde(default)]
    pub notes: Vec<String>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(command: &str, model: &str, field: &str) -> Report {
        Report {
            command: command.into(),
            model: model.into(),
            field: field.into(),
            checks: Vec::new(),
            tables: Vec::new(),
            witnesses: Vec::new(),
            notes: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn check(&mut self, name: impl Into<String>, ok: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), status: Status::from_bool(ok), detail: detail.into() });
    }

    pub fn witness(&mut self, label: impl Into<String>, lines: Vec<String>) {
        self.witnesses.push(Witness { label: label.into(), lines });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status == Status::Pass)
    }

    pub fn table(&self, title: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.title == title)
    }

    pub fn find_check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Report> {
        serde_json::from_str(text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} · model {} · field {}", self.command, self.model, self.field);
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        for t in &self.tables {
            out.push('\n');
            render_table(&mut out, t);
        }
        for w in &self.witnesses {
            let _ = writeln!(out, "\n{}:", w.label);
            for line in &w.lines {
                let _ = writeln!(out, "  {line}");
            }
        }
        if !self.notes.is_empty() {
            out.push('\n');
            for n in &self.notes {
                let _ = writeln!(out, "note: {n}");
            }
        }
        if !self.checks.is_empty() {
            out.push('\n');
            let width = self.checks.iter().map(|c| c.name.chars().count()).max().unwrap_or(0);
            for c in &self.checks {
                let pad = width - c.name.chars().count();
                let _ = write!(out, "{}{}  {}", c.name, " ".repeat(pad), c.status.label());
                if !c.detail.is_empty() {
                    let _ = write!(out, "  {}", c.detail);
                }
                out.push('\n');
            }
        }
        let _ = writeln!(out, "\nverdict: {}", Status::from_bool(self.passed()).label());
        out
    }
}

fn render_table(out: &mut String, t: &Table) {
    let _ = writeln!(out, "{}", t.title);
    let label_width = t.rows.iter().map(|r| r.label.chars().count()).max().unwrap_or(0);
    let ncols = t.columns.len().max(t.rows.iter().map(|r| r.values.len()).max().unwrap_or(0));
    let widths: Vec<usize> = (0..ncols)
        .map(|j| {
            let head = t.columns.get(j).map_or(0, |c| c.chars().count());
            let cells = t.rows.iter().filter_map(|r| r.values.get(j)).map(|v| v.to_string().len());
            cells.chain([head]).max().unwrap_or(0)
        })
        .collect();
    let _ = write!(out, "  {}", " ".repeat(label_width));
    for (j, w) in widths.iter().enumerate() {
        let _ = write!(out, "  {:>w$}", t.columns.get(j).map_or("", String::as_str), w = w);
    }
    out.push('\n');
    for r in &t.rows {
        let _ = write!(out, "  {:<w$}", r.label, w = label_width);
        for (j, w) in widths.iter().enumerate() {
            match r.values.get(j) {
                Some(v) => {
                    let _ = write!(out, "  {v:>w$}", w = w);
                }
                None => {
                    let _ = write!(out, "  {:>w$}", "", w = w);
                }
            }
        }
        out.push('\n');
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let mut r = Report::new("hh", "point_dual", "Q");
        r.check("d² = 0", true, "");
        r.check("something", false, "at (0,1)");
        let mut t = Table::new("cohomology", vec!["0".into(), "1".into()]);
        t.row("H^q", vec![2, 1]);
        r.tables.push(t);
        r.witness("w", vec!["line".into()]);
        r.warnings.push("careful".into());
        let back = Report::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(!back.passed());
    }

    #[test]
    fn text_has_aligned_tables_and_verdict() {
        let mut r = Report::new("hh", "m", "Q");
        let mut t = Table::new("dims", vec!["0".into(), "10".into()]);
        t.row("C^p", vec![100, 2]);
        t.row("H", vec![1]);
        r.tables.push(t);
        r.check("ok", true, "");
        let text = r.to_text();
        assert!(text.contains("  C^p  100   2\n"), "{text}");
        assert!(text.ends_with("verdict: PASS\n"));
    }
}
