//! Result tables and their CSV / plain-text renderings.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    /// One value per parameter column, already formatted.
    pub point: Vec<String>,
    pub metric: String,
    pub value: f64,
    pub trials: usize,
    pub stderr: f64,
}

/// Rows of `(point, metric, value, trials, stderr)` for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub scenario: String,
    pub parameters: Vec<String>,
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn new(scenario: &str, parameters: &[&str]) -> Self {
        Self {
            scenario: scenario.to_string(),
            parameters: parameters.iter().map(|p| p.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(
        &mut self,
        point: Vec<String>,
        metric: &str,
        value: f64,
        trials: usize,
        stderr: f64,
    ) {
        assert_eq!(
            point.len(),
            self.parameters.len(),
            "point arity must match the parameter columns"
        );
        self.rows.push(ResultRow {
            point,
            metric: metric.to_string(),
            value,
            trials,
            stderr,
        });
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows reporting `metric`.
    pub fn select<'a>(&'a self, metric: &'a str) -> impl Iterator<Item = &'a ResultRow> + 'a {
        self.rows.iter().filter(move |r| r.metric == metric)
    }

    pub fn parameter_index(&self, name: &str) -> Option<usize> {
        self.parameters.iter().position(|p| p == name)
    }

    /// Comma-separated table with a header row. Floats use the shortest
    /// representation that parses back to the same value.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = std::iter::once("scenario")
            .chain(self.parameters.iter().map(String::as_str))
            .chain(["metric", "value", "trials", "stderr"]);
        w.write_record(header).expect("writing to memory");
        for row in &self.rows {
            let numbers = [
                row.value.to_string(),
                row.trials.to_string(),
                row.stderr.to_string(),
            ];
            let record = std::iter::once(self.scenario.as_str())
                .chain(row.point.iter().map(String::as_str))
                .chain(std::iter::once(row.metric.as_str()))
                .chain(numbers.iter().map(String::as_str));
            w.write_record(record).expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("flushing to memory")).expect("fields are UTF-8")
    }

    /// Aligned human-readable summary.
    pub fn to_summary(&self) -> String {
        let mut header: Vec<String> = self.parameters.clone();
        header.extend(["metric", "value", "trials", "stderr"].map(String::from));
        let body: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut cells = r.point.clone();
                cells.push(r.metric.clone());
                cells.push(format!("{:.6}", r.value));
                cells.push(r.trials.to_string());
                cells.push(format!("{:.2e}", r.stderr));
                cells
            })
            .collect();
        let widths: Vec<usize> = (0..header.len())
            .map(|c| {
                body.iter()
                    .map(|r| r[c].len())
                    .chain([header[c].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let mut out = format!("{} ({} rows)\n", self.scenario, self.rows.len());
        out.push_str(&line(&header));
        out.push('\n');
        for row in &body {
            out.push_str(&line(row));
            out.push('\n');
        }
        out
    }
}

/// Standard error of a proportion estimated from `n` trials.
pub fn proportion_stderr(p: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        (p * (1.0 - p) / n as f64).sqrt()
    }
}

/// Formats a float for a point column (shortest round-trip form).
pub fn fmt_point(x: f64) -> String {
    format!("{x}")
}
