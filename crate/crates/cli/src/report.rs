//! Experiment reports: rows, fits, plot series and verdicts, written as
//! `report.json`, `rows.csv`, `timings.json` and `plot.svg`.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use indexmap::IndexMap;
use resolvent_core::numerics::ScalingFit;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Num(v as f64)
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

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:e}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

pub type Row = IndexMap<String, Cell>;

/// Builds a row from `(column, value)` pairs.
#[macro_export]
macro_rules! row {
    ($($k:expr => $v:expr),* $(,)?) => {{
        let mut r = $crate::report::Row::new();
        $( r.insert($k.to_string(), $crate::report::Cell::from($v)); )*
        r
    }};
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub name: String,
    pub exponent: f64,
    pub log_prefactor: f64,
    pub residual: f64,
}

impl Fit {
    pub fn new(name: &str, fit: &ScalingFit) -> Self {
        Fit {
            name: name.to_string(),
            exponent: fit.exponent,
            log_prefactor: fit.log_prefactor,
            residual: fit.residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub points: Vec<[f64; 2]>,
}

impl Series {
    pub fn new(label: &str, points: Vec<[f64; 2]>) -> Self {
        Series {
            label: label.to_string(),
            points,
        }
    }

    /// Line `y = y0 (x/x0)^slope` through the first point of `anchor`.
    pub fn reference(label: &str, anchor: &Series, slope: f64) -> Self {
        let [x0, y0] = anchor.points[0];
        let points = anchor
            .points
            .iter()
            .map(|p| [p[0], y0 * (p[0] / x0).powf(slope)])
            .collect();
        Series::new(label, points)
    }
}

/// One check, tied to exactly one acceptance criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion: String,
    pub check: String,
    pub measured: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub passed: bool,
}

impl Verdict {
    pub fn new(
        criterion: &str,
        check: &str,
        measured: f64,
        lower: Option<f64>,
        upper: Option<f64>,
    ) -> Self {
        let passed = measured.is_finite()
            && lower.is_none_or(|l| measured >= l)
            && upper.is_none_or(|u| measured <= u);
        Verdict {
            criterion: criterion.to_string(),
            check: check.to_string(),
            measured,
            lower,
            upper,
            passed,
        }
    }

    pub fn bound_text(&self) -> String {
        match (self.lower, self.upper) {
            (Some(l), Some(u)) => format!("in [{l:.4}, {u:.4}]"),
            (Some(l), None) => format!(">= {l:.4}"),
            (None, Some(u)) => format!("<= {u:.4e}"),
            (None, None) => "recorded".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub section: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub seed: u64,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub x_label: String,
    pub y_label: String,
    pub rows: Vec<Row>,
    pub fits: Vec<Fit>,
    pub series: Vec<Series>,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
    /// Kept out of `report.json` so identical runs give identical files.
    #[serde(skip)]
    pub timings: Vec<Timing>,
}

impl Report {
    pub fn new(experiment: &str, seed: u64) -> Self {
        Report {
            experiment: experiment.to_string(),
            seed,
            parameters: BTreeMap::new(),
            x_label: "x".into(),
            y_label: "y".into(),
            rows: Vec::new(),
            fits: Vec::new(),
            series: Vec::new(),
            verdicts: Vec::new(),
            notes: Vec::new(),
            timings: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.parameters.insert(key.to_string(), v);
    }

    pub fn axes(&mut self, x: &str, y: &str) {
        self.x_label = x.to_string();
        self.y_label = y.to_string();
    }

    pub fn verdict(
        &mut self,
        criterion: &str,
        check: &str,
        measured: f64,
        lower: Option<f64>,
        upper: Option<f64>,
    ) {
        self.verdicts
            .push(Verdict::new(criterion, check, measured, lower, upper));
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    /// Runs `f`, recording its wall-clock time under `section`.
    pub fn timed<T>(&mut self, section: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = f();
        self.timings.push(Timing {
            section: section.to_string(),
            seconds: t.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn total_seconds(&self) -> f64 {
        self.timings.iter().map(|t| t.seconds).sum()
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    /// Column order of first appearance across rows.
    pub fn columns(&self) -> Vec<String> {
        let mut cols: IndexMap<String, ()> = IndexMap::new();
        for r in &self.rows {
            for k in r.keys() {
                cols.entry(k.clone()).or_insert(());
            }
        }
        cols.into_keys().collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn to_csv(&self) -> Result<String> {
        let cols = self.columns();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&cols)?;
        for r in &self.rows {
            w.write_record(
                cols.iter()
                    .map(|c| r.get(c).map(Cell::csv).unwrap_or_default()),
            )?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Plot(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Writes the report files into `dir`; the plot only when every series
    /// has at least two points.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let put = |name: &str, body: String| {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| CliError::io(p, e))
        };
        put("report.json", self.to_json()?)?;
        put("rows.csv", self.to_csv()?)?;
        put(
            "timings.json",
            serde_json::to_string_pretty(&self.timings)? + "\n",
        )?;
        if !self.series.is_empty() && self.series.iter().all(|s| s.points.len() >= 2) {
            crate::plot::emit_report_plot(self, &dir.join("plot.svg"))?;
        }
        Ok(())
    }
}
