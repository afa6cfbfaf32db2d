//! Result tables, observed rates and CSV output.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::config::CheckConfig;
use super::ExperimentError;
use crate::diagnostics::{ErrorReport, StabilityReport};
use crate::forms::BcMode;

pub const CSV_HEADER: &str = "problem,k,bc_mode,h_max,dofs,err_l2,err_h1,err_triple,err_p_l2,slope_l2,slope_h1,beta_h,korn_h,qoi";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TableRow {
    /// Subdivisions per side.
    pub n: usize,
    pub h_max: f64,
    pub dofs: usize,
    pub errors: Option<ErrorReport>,
    pub slope_l2: Option<f64>,
    pub slope_h1: Option<f64>,
    pub slope_p_l2: Option<f64>,
    pub qoi: Option<f64>,
    pub stability: Option<StabilityReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub problem: String,
    pub order: usize,
    pub bc_mode: BcMode,
    pub rows: Vec<TableRow>,
}

/// `log(e_0/e_1) / log(h_0/h_1)`.
pub fn observed_rate(h0: f64, e0: f64, h1: f64, e1: f64) -> f64 {
    (e0 / e1).ln() / (h0 / h1).ln()
}

/// One CSV line; `None` becomes an empty cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub problem: String,
    pub k: usize,
    pub bc_mode: String,
    pub h_max: f64,
    pub dofs: usize,
    pub err_l2: Option<f64>,
    pub err_h1: Option<f64>,
    pub err_triple: Option<f64>,
    pub err_p_l2: Option<f64>,
    pub slope_l2: Option<f64>,
    pub slope_h1: Option<f64>,
    pub beta_h: Option<f64>,
    pub korn_h: Option<f64>,
    pub qoi: Option<f64>,
}

/// Outcome of one `[check]` threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub value: Option<f64>,
    pub passed: bool,
}

impl ConvergenceTable {
    /// Builds the table and fills slopes between consecutive rows.
    pub fn new(problem: &str, order: usize, bc_mode: BcMode, mut rows: Vec<TableRow>) -> Self {
        for i in 1..rows.len() {
            let (h0, h1) = (rows[i - 1].h_max, rows[i].h_max);
            if let (Some(a), Some(b)) = (rows[i - 1].errors, rows[i].errors) {
                rows[i].slope_l2 = Some(observed_rate(h0, a.l2_error, h1, b.l2_error));
                rows[i].slope_h1 = Some(observed_rate(h0, a.h1_semi_error, h1, b.h1_semi_error));
                if let (Some(pa), Some(pb)) = (a.pressure_l2_error, b.pressure_l2_error) {
                    rows[i].slope_p_l2 = Some(observed_rate(h0, pa, h1, pb));
                }
            }
        }
        ConvergenceTable { problem: problem.to_string(), order, bc_mode, rows }
    }

    pub fn last(&self) -> Option<&TableRow> {
        self.rows.last()
    }

    /// `|q_n - q_{n-1}| / |q_{n-1} - q_{n-2}|` over the last three QoI values.
    pub fn increment_ratio(&self) -> Option<f64> {
        let (last, prev) = self.increments()?;
        Some(last / prev)
    }

    /// Last and previous QoI increments.
    pub fn increments(&self) -> Option<(f64, f64)> {
        let q: Vec<f64> = self.rows.iter().filter_map(|r| r.qoi).collect();
        if q.len() < 3 {
            return None;
        }
        let n = q.len();
        Some(((q[n - 1] - q[n - 2]).abs(), (q[n - 2] - q[n - 3]).abs()))
    }

    /// Max over min of the inf-sup constants.
    pub fn beta_ratio(&self) -> Option<f64> {
        let b: Vec<f64> = self.rows.iter().filter_map(|r| r.stability.map(|s| s.beta_h)).collect();
        if b.is_empty() {
            return None;
        }
        let max = b.iter().copied().fold(f64::MIN, f64::max);
        let min = b.iter().copied().fold(f64::MAX, f64::min);
        Some(max / min)
    }

    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.rows
            .iter()
            .map(|r| CsvRow {
                problem: self.problem.clone(),
                k: self.order,
                bc_mode: self.bc_mode.as_str().to_string(),
                h_max: r.h_max,
                dofs: r.dofs,
                err_l2: r.errors.map(|e| e.l2_error),
                err_h1: r.errors.map(|e| e.h1_semi_error),
                err_triple: r.errors.map(|e| e.triple_norm_error),
                err_p_l2: r.errors.and_then(|e| e.pressure_l2_error),
                slope_l2: r.slope_l2,
                slope_h1: r.slope_h1,
                beta_h: r.stability.map(|s| s.beta_h),
                korn_h: r.stability.and_then(|s| s.korn_const_h),
                qoi: r.qoi,
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ExperimentError> {
        write_csv_rows(out, &self.csv_rows())
    }

    /// Evaluates configured thresholds on the finest pair of meshes.
    pub fn check(&self, check: &CheckConfig) -> Vec<CheckOutcome> {
        let last = self.last();
        let band = |name, value: Option<f64>, b: Option<[f64; 2]>| {
            b.map(|[lo, hi]| CheckOutcome { name, value, passed: value.is_some_and(|v| lo <= v && v <= hi) })
        };
        let mut out = Vec::new();
        out.extend(band("slope_l2", last.and_then(|r| r.slope_l2), check.slope_l2));
        out.extend(band("slope_h1", last.and_then(|r| r.slope_h1), check.slope_h1));
        if let Some(min) = check.slope_p_l2_min {
            let v = last.and_then(|r| r.slope_p_l2);
            out.push(CheckOutcome { name: "slope_p_l2", value: v, passed: v.is_some_and(|v| v >= min) });
        }
        if let Some(max) = check.increment_ratio_max {
            let v = self.increment_ratio();
            out.push(CheckOutcome { name: "increment_ratio", value: v, passed: v.is_some_and(|v| v <= max) });
        }
        if let Some(max) = check.beta_ratio_max {
            let v = self.beta_ratio();
            out.push(CheckOutcome { name: "beta_ratio", value: v, passed: v.is_some_and(|v| v <= max) });
        }
        out
    }
}

pub fn write_csv_rows<W: Write>(out: W, rows: &[CsvRow]) -> Result<(), ExperimentError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv_rows<R: std::io::Read>(input: R) -> Result<Vec<CsvRow>, ExperimentError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(ExperimentError::Config(format!("unexpected CSV header `{}`", header.join(","))));
    }
    r.deserialize().map(|row| row.map_err(ExperimentError::from)).collect()
}
