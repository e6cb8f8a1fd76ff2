//! Human-readable and JSON rendering of command results.
//!
//! JSON documents are wrapped as `{"schema": <name>, "version": 1, ...}`.

use std::fmt::Write as _;

use dnip::baselines::ComparisonReport;
use dnip::Report;
use serde::Serialize;

pub const REPORT_VERSION: u32 = 1;

#[derive(Serialize)]
struct Envelope<'a, B: Serialize> {
    schema: &'a str,
    version: u32,
    #[serde(flatten)]
    body: B,
}

pub fn to_json<B: Serialize>(schema: &str, body: B) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(&Envelope {
        schema,
        version: REPORT_VERSION,
        body,
    })?;
    s.push('\n');
    Ok(s)
}

/// Class labels: the given names, falling back to the class index.
pub struct ClassNames(Vec<String>);

impl ClassNames {
    pub fn new(names: &[String], n: usize) -> anyhow::Result<Self> {
        if names.is_empty() {
            return Ok(Self((0..n).map(|i| i.to_string()).collect()));
        }
        anyhow::ensure!(
            names.len() == n,
            dnip::Error::DimensionMismatch {
                expected: n,
                actual: names.len()
            }
        );
        Ok(Self(names.to_vec()))
    }

    pub fn get(&self, i: usize) -> &str {
        &self.0[i]
    }

    fn width(&self) -> usize {
        self.0.iter().map(String::len).max().unwrap_or(0).max(5)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6}"))
}

pub fn metrics_text(r: &Report, names: &ClassNames) -> String {
    let w = names.width();
    let n = r.num_classes;
    let mut s = String::new();
    let _ = writeln!(s, "samples: {}", r.num_samples);
    let _ = writeln!(s, "classes: {n}");
    let _ = writeln!(
        s,
        "\nconfusion matrix (rows: true class, columns: predicted)"
    );
    let _ = write!(s, "{:w$}", "");
    for j in 0..n {
        let _ = write!(s, " {:>w$}", names.get(j));
    }
    s.push('\n');
    for i in 0..n {
        let _ = write!(s, "{:w$}", names.get(i));
        for c in r.confusion.row(i) {
            let _ = write!(s, " {c:>w$}");
        }
        s.push('\n');
    }
    let _ = writeln!(
        s,
        "\n{:w$} {:>10} {:>10} {:>w$}",
        "class", "accuracy", "pmi", "odd"
    );
    for i in 0..n {
        let odd = r.accuracy.odd_class[i].map_or("-", |j| names.get(j));
        let _ = writeln!(
            s,
            "{:w$} {:>10} {:>10.6} {:>w$}",
            names.get(i),
            opt(r.accuracy.per_class[i]),
            r.pmi[i],
            odd
        );
    }
    let _ = writeln!(s, "\noverall accuracy: {:.6}", r.accuracy.overall);
    let _ = writeln!(s, "COBias: {:.6}", r.accuracy.cobias);
    let _ = writeln!(s, "COBias_single: {}", opt(r.accuracy.cobias_single));
    let _ = writeln!(s, "PMI smoothing mu: {}", r.mu);
    s
}

pub fn comparison_text(r: &ComparisonReport<f64>) -> String {
    let mut s = format!(
        "{:<18} {:>10} {:>10} {:>14} {:>12}\n",
        "method", "accuracy", "COBias", "COBias_single", "worst class"
    );
    for row in &r.rows {
        let _ = writeln!(
            s,
            "{:<18} {:>10.6} {:>10.6} {:>14} {:>12.6}",
            row.method,
            row.accuracy,
            row.cobias,
            opt(row.cobias_single),
            row.worst_class_accuracy
        );
    }
    let _ = writeln!(s, "\nDNIP selection: {:?}", r.dnip_selection.indices());
    s
}
