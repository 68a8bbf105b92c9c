use super::fit::DevFactorTable;
use super::triangle::{LossTriangle, NextDiagonal};
use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PredictionRow {
    pub line: String,
    pub accident_year: usize,
    /// Latest observed lag; the prediction is for `lag + 1`.
    pub lag: usize,
    pub latest: f64,
    pub incremental: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Prediction {
    pub rows: Vec<PredictionRow>,
    /// Per-line sums of the incremental predictions, in triangle order.
    pub totals: Vec<(String, f64)>,
}

impl Prediction {
    pub fn total(&self, line: &str) -> Option<f64> {
        self.totals.iter().find(|(l, _)| l == line).map(|(_, v)| *v)
    }
}

/// Next-calendar-year incremental claims,
/// `Y_{i,j} · (exp(ζ_{j+1} + σ²/2) − 1)` with `j` the latest lag of row `i`.
pub fn predict_next_diagonal(
    triangles: &[LossTriangle],
    factors: &DevFactorTable,
) -> Result<Prediction> {
    let half_var = 0.5 * factors.sigma2_hat;
    let mut rows = Vec::new();
    let mut totals = Vec::new();
    for t in triangles {
        let line = factors.line_index(t.line_id()).ok_or_else(|| {
            Error::InvalidState(format!("no development factors for line {}", t.line_id()))
        })?;
        let mut total = 0.0;
        for i in 2..=t.origin_count() {
            let lag = t.last_lag(i);
            if lag >= t.dev_count() {
                continue;
            }
            let zeta = factors.zeta(line, lag + 1).ok_or_else(|| {
                Error::InvalidState(format!(
                    "line {}: missing factor for lag {}",
                    t.line_id(),
                    lag + 1
                ))
            })?;
            let latest = t.get(i, lag).expect("latest cell is observed");
            let incremental = latest * (zeta + half_var).exp_m1();
            total += incremental;
            rows.push(PredictionRow {
                line: t.line_id().to_string(),
                accident_year: i,
                lag,
                latest,
                incremental,
            });
        }
        totals.push((t.line_id().to_string(), total));
    }
    Ok(Prediction { rows, totals })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LineMetrics {
    pub line: String,
    pub rmse: f64,
    pub mae: f64,
    pub actual_total: f64,
    pub count: usize,
}

/// RMSE and MAE of incremental predictions against the realised diagonal.
pub fn validate(prediction: &Prediction, actuals: &NextDiagonal) -> Result<Vec<LineMetrics>> {
    let lines: Vec<&str> = prediction.totals.iter().map(|(l, _)| l.as_str()).collect();
    let mut out = Vec::new();
    for line in lines {
        let rows: Vec<&PredictionRow> = prediction.rows.iter().filter(|r| r.line == line).collect();
        let expected = actuals.cells.keys().filter(|(l, _)| l == line).count();
        if rows.len() != expected || rows.is_empty() {
            return Err(Error::invalid(format!(
                "line {line}: {} predictions but {expected} actual values",
                rows.len()
            )));
        }
        let mut sq = 0.0;
        let mut abs = 0.0;
        let mut actual_total = 0.0;
        for r in &rows {
            let actual = actuals.get(line, r.accident_year).ok_or_else(|| {
                Error::invalid(format!(
                    "line {line}: no actual value for accident year {}",
                    r.accident_year
                ))
            })? - r.latest;
            actual_total += actual;
            let e = r.incremental - actual;
            sq += e * e;
            abs += e.abs();
        }
        let m = rows.len() as f64;
        out.push(LineMetrics {
            line: line.to_string(),
            rmse: (sq / m).sqrt(),
            mae: abs / m,
            actual_total,
            count: rows.len(),
        });
    }
    Ok(out)
}

/// Realised incremental claims on the next diagonal, per line.
pub fn actual_totals(triangles: &[LossTriangle], actuals: &NextDiagonal) -> Vec<(String, f64)> {
    triangles
        .iter()
        .map(|t| {
            let total = (2..=t.origin_count())
                .filter_map(|i| {
                    let lag = t.last_lag(i);
                    let latest = t.get(i, lag)?;
                    actuals.get(t.line_id(), i).map(|a| a - latest)
                })
                .sum();
            (t.line_id().to_string(), total)
        })
        .collect()
}
