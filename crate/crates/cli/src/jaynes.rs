//! Comparison of confidence and credible intervals for the first-failure model.

use serde::{Deserialize, Serialize};
use spe_core::jaynes::{ci_type1, ci_type2, coverage_mc, sci_flat, Builder, FailureData, Interval};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JaynesInput {
    pub times: Vec<f64>,
    pub rate: f64,
    pub level: f64,
    /// Coverage simulations per builder; skipped when zero.
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JaynesRow {
    pub method: String,
    pub lower: f64,
    pub upper: f64,
    /// Simulated coverage at `T = t_min`, if requested.
    pub coverage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JaynesTable {
    pub input: JaynesInput,
    pub t_av: f64,
    pub t_min: f64,
    pub mean_estimator: f64,
    pub rows: Vec<JaynesRow>,
}

pub fn jaynes_table(input: JaynesInput) -> Result<JaynesTable, CliError> {
    let d = FailureData::new(input.times.clone(), input.rate).map_err(|e| CliError::Config(e.to_string()))?;
    let stage = CliError::stage;
    let coverage = |b: Builder| -> Result<Option<f64>, CliError> {
        if input.trials == 0 {
            return Ok(None);
        }
        let n = d.n();
        coverage_mc(b, d.t_min(), input.rate, n, input.level, input.trials, input.seed)
            .map(Some)
            .map_err(stage("jaynes"))
    };
    let row = |method: &str, iv: Interval, coverage: Option<f64>| JaynesRow {
        method: method.to_string(),
        lower: iv.lo,
        upper: iv.hi,
        coverage,
    };
    let rows = vec![
        row("ci_type1", ci_type1(&d, input.level).map_err(stage("jaynes"))?, coverage(Builder::Type1)?),
        row("ci_type2", ci_type2(&d, input.level).map_err(stage("jaynes"))?, coverage(Builder::Type2)?),
        row("sci_flat", sci_flat(&d, input.level).map_err(stage("jaynes"))?, None),
    ];
    Ok(JaynesTable { t_av: d.t_av(), t_min: d.t_min(), mean_estimator: d.mean_estimator(), rows, input })
}

pub fn render_jaynes(t: &JaynesTable) -> String {
    let mut s = format!(
        "N = {}  r = {}  level = {}  t_av = {:.4}  t_min = {:.4}  t_av - 1/r = {:.4}\n\n",
        t.input.times.len(),
        t.input.rate,
        t.input.level,
        t.t_av,
        t.t_min,
        t.mean_estimator
    );
    s.push_str(&format!("{:<10}{:>10}{:>10}{:>10}{:>10}\n", "method", "lower", "upper", "length", "coverage"));
    for r in &t.rows {
        let cov = r.coverage.map_or("-".to_string(), |c| format!("{c:.4}"));
        s.push_str(&format!("{:<10}{:>10.4}{:>10.4}{:>10.4}{:>10}\n", r.method, r.lower, r.upper, r.upper - r.lower, cov));
    }
    s
}
