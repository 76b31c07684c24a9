//! Deterministic rendering of tables and experiment results.
//!
//! Tables carry a versioned schema name, a fixed column list, and an
//! `approx-columns` subset flagging cells that are 17-significant-digit
//! decimal approximations rather than exact values. CSV is the flat format
//! (comment lines start with `#`, no quoting, LF line ends); JSON preserves
//! the same column order. Experiments serialize their full nested record as
//! JSON; their CSV form keeps one row of per-sample statistics and demotes
//! parameters and summary entries to comment lines.

use malpha::metric::ExperimentResult;
use std::io::Write;
use std::path::PathBuf;

pub struct Table {
    pub schema: String,
    pub columns: &'static [&'static str],
    pub approx: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(
        name: &str,
        columns: &'static [&'static str],
        approx: &'static [&'static str],
    ) -> Self {
        Table { schema: format!("malpha.{name}.v1"), columns, approx, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("# schema: {}\n", self.schema);
        if !self.approx.is_empty() {
            s.push_str("# approx-columns: ");
            s.push_str(&self.approx.join(","));
            s.push('\n');
        }
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> String {
        let mut s = String::from("{\n");
        s.push_str("  \"schema\": ");
        s.push_str(&json_string(&self.schema));
        s.push_str(",\n  \"approx_columns\": [");
        let approx: Vec<String> = self.approx.iter().map(|c| json_string(c)).collect();
        s.push_str(&approx.join(", "));
        s.push_str("],\n  \"rows\": [\n");
        for (i, row) in self.rows.iter().enumerate() {
            s.push_str("    {");
            let fields: Vec<String> = self
                .columns
                .iter()
                .zip(row)
                .map(|(c, v)| format!("{}: {}", json_string(c), json_string(v)))
                .collect();
            s.push_str(&fields.join(", "));
            s.push('}');
            if i + 1 < self.rows.len() {
                s.push(',');
            }
            s.push('\n');
        }
        s.push_str("  ]\n}\n");
        s
    }
}

fn json_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if (c as u32) < 0x20 => {
                out.push_str(&format!("\\u{:04x}", c as u32));
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Flat CSV view of an experiment: one row of statistics per sample.
/// Per-sample series (grid rows, exceedance listings) are JSON-only.
pub fn experiment_csv(r: &ExperimentResult) -> String {
    let mut s = format!("# schema: malpha.experiment.{}.v1\n", r.experiment);
    s.push_str(&format!("# master_seed: {}\n", r.master_seed));
    for (k, v) in &r.params {
        s.push_str(&format!("# param {k} = {v}\n"));
    }
    let stat_cols: Vec<&String> =
        r.samples.first().map(|s0| s0.stats.keys().collect()).unwrap_or_default();
    let mut header = vec!["index".to_string(), "seed".to_string()];
    header.extend(stat_cols.iter().map(|c| (*c).clone()));
    s.push_str(&header.join(","));
    s.push('\n');
    for rec in &r.samples {
        let mut row = vec![rec.index.to_string(), rec.seed.to_string()];
        for c in &stat_cols {
            row.push(rec.stats.get(*c).cloned().unwrap_or_default());
        }
        s.push_str(&row.join(","));
        s.push('\n');
    }
    for (k, v) in &r.summary {
        s.push_str(&format!("# summary {k} = {v}\n"));
    }
    s
}

pub fn write_out(path: &Option<PathBuf>, content: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, content),
        None => std::io::stdout().write_all(content.as_bytes()),
    }
}
