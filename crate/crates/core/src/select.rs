//! Penalty-strength selection by k-fold cross-validation and empirical
//! degrees of freedom.

use crate::error::{Error, Result};
use crate::penalty::{laad_threshold, PenaltyKind, PenaltySpec};
use crate::solver::{
    coordinate_descent_prepared, independent_columns, least_squares, CdOptions, Dataset,
    FitResult, Init, LossScale, PenaltyScale, Prepared,
};
use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const GRID_POINTS: usize = 50;
pub const GRID_RATIO: f64 = 1e-4;
pub const DEFAULT_FOLDS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CvResult {
    /// Descending.
    pub grid: Vec<f64>,
    pub cv_rmse_mean: Vec<f64>,
    pub cv_rmse_se: Vec<f64>,
    pub r_min: f64,
    pub r_1se: f64,
    /// Geometric mean of `r_min` and `r_1se`.
    pub r_selected: f64,
}

/// Smallest strength whose prox maps `|z| = t` to zero.
fn zeroing_strength(kind: PenaltyKind, t: f64) -> Result<f64> {
    match kind {
        PenaltyKind::Lasso | PenaltyKind::Scad | PenaltyKind::Mcp => Ok(t),
        PenaltyKind::Laad if t <= 1.0 => Ok(t),
        PenaltyKind::Laad => {
            // z*(r) increases in r and z*(r) ∈ [2√r − 1, r].
            let (mut lo, mut hi) = (t, 0.25 * (t + 1.0) * (t + 1.0));
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if laad_threshold(mid)? < t {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-14 * hi {
                    break;
                }
            }
            Ok(hi)
        }
        PenaltyKind::None | PenaltyKind::Ridge => Err(Error::invalid(format!(
            "{} never sets coefficients to zero; no strength grid",
            kind.name()
        ))),
    }
}

/// Smallest strength at which every penalized coefficient is zero, probed
/// at β = 0 after fitting the exempt columns alone.
pub fn max_strength(
    data: &Dataset,
    spec: &PenaltySpec,
    weights: &[f64],
    opts: &CdOptions,
) -> Result<f64> {
    if weights.len() != data.p() {
        return Err(Error::invalid("one weight per column is required"));
    }
    let exempt: Vec<usize> = (0..data.p()).filter(|&j| weights[j] == 0.0).collect();
    let resid: DVector<f64> = if exempt.is_empty() {
        data.response().clone()
    } else {
        let sub = data.select_columns(&exempt)?;
        let b = least_squares(sub.design(), sub.response(), sub.column_names())?;
        data.response() - sub.design() * b
    };
    let loss_factor = match opts.loss {
        LossScale::Sum => 1.0,
        LossScale::Mean => 1.0 / (data.n() as f64).sqrt(),
    };
    let mut best = 0.0f64;
    for j in (0..data.p()).filter(|&j| weights[j] > 0.0) {
        let col = data.design().column(j);
        let norm = col.norm();
        if norm == 0.0 {
            continue;
        }
        let z = (col.dot(&resid) / norm * loss_factor).abs();
        let needed = match opts.penalty_scale {
            PenaltyScale::Normalized => zeroing_strength(spec.kind, z)? / weights[j],
            PenaltyScale::Original => {
                let f = norm * loss_factor;
                zeroing_strength(spec.kind, z / f)? * f * f / weights[j]
            }
        };
        best = best.max(needed);
    }
    Ok(best)
}

/// `points` log-spaced strengths from `max_strength` down to
/// `max_strength · ratio`.
///
/// LAAD grids start no higher than `r = 1`, the largest strength for which
/// coordinate descent is guaranteed to converge.
pub fn default_grid(
    data: &Dataset,
    spec: &PenaltySpec,
    weights: &[f64],
    opts: &CdOptions,
    points: usize,
    ratio: f64,
) -> Result<Vec<f64>> {
    let mut top = max_strength(data, spec, weights, opts)?;
    if spec.kind == PenaltyKind::Laad {
        top = top.min(1.0);
    }
    if !(top > 0.0) {
        return Err(Error::invalid("response is already fitted by the exempt columns"));
    }
    if points < 2 || !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::invalid("grid needs at least two points and 0 < ratio < 1"));
    }
    let step = ratio.ln() / (points - 1) as f64;
    Ok((0..points)
        .map(|k| top * (step * k as f64).exp())
        .collect())
}

/// Fold label of every row: a seeded shuffle dealt round-robin.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 || k > n {
        return Err(Error::invalid(format!("need 2 ≤ k ≤ n, got k = {k}, n = {n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    for (pos, &row) in order.iter().enumerate() {
        fold[row] = pos % k;
    }
    Ok(fold)
}

/// A training subset prepared once and refitted across the grid.
struct FoldFit {
    train: Dataset,
    cols: Vec<usize>,
    weights: Vec<f64>,
    prep: Prepared,
    ols: Vec<f64>,
}

impl FoldFit {
    fn new(data: &Dataset, rows: &[usize], weights: &[f64], opts: &CdOptions) -> Result<Self> {
        let full = data.select_rows(rows)?;
        // Columns without training rows, or duplicated by others on this
        // subset, are held at zero.
        let cols = independent_columns(full.design());
        if cols.is_empty() {
            return Err(Error::invalid("training fold has no usable columns"));
        }
        let train = full.select_columns(&cols)?;
        let weights = cols.iter().map(|&j| weights[j]).collect();
        let prep = Prepared::new(&train, opts.loss)?;
        let ols = least_squares(train.design(), train.response(), train.column_names())?
            .iter()
            .copied()
            .collect();
        Ok(FoldFit {
            train,
            cols,
            weights,
            prep,
            ols,
        })
    }

    fn fit(&self, spec: &PenaltySpec, opts: &CdOptions, p: usize) -> Result<Vec<f64>> {
        let init = match &opts.init {
            Init::Ols => Init::Given(self.ols.clone()),
            other => other.clone(),
        };
        let opts = CdOptions {
            init,
            ..opts.clone()
        };
        let fit = coordinate_descent_prepared(&self.prep, &self.train, spec, &self.weights, &opts)?;
        let mut beta = vec![0.0; p];
        for (k, &j) in self.cols.iter().enumerate() {
            beta[j] = fit.coefficients[k];
        }
        Ok(beta)
    }
}

/// k-fold cross-validated RMSE over a strength grid, with the
/// geometric-mean one-standard-error choice.
pub fn kfold_cv(
    data: &Dataset,
    spec: &PenaltySpec,
    weights: &[f64],
    grid: &[f64],
    k: usize,
    seed: u64,
    opts: &CdOptions,
) -> Result<CvResult> {
    if grid.is_empty() || grid.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
        return Err(Error::invalid("grid must be non-empty and strictly positive"));
    }
    if weights.len() != data.p() {
        return Err(Error::invalid("one weight per column is required"));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(|a, b| b.total_cmp(a));
    let fold = fold_assignment(data.n(), k, seed)?;
    let mut rmse = vec![vec![0.0; k]; grid.len()];
    for f in 0..k {
        let test: Vec<usize> = (0..data.n()).filter(|&i| fold[i] == f).collect();
        let train: Vec<usize> = (0..data.n()).filter(|&i| fold[i] != f).collect();
        if test.is_empty() || train.is_empty() {
            return Err(Error::invalid(format!("fold {f} has no rows")));
        }
        let fold_fit = FoldFit::new(data, &train, weights, opts)?;
        let held = data.select_rows(&test)?;
        for (g, &strength) in grid.iter().enumerate() {
            let beta = fold_fit.fit(&spec.with_strength(strength), opts, data.p())?;
            rmse[g][f] = (held.rss(&beta) / test.len() as f64).sqrt();
        }
    }
    let kf = k as f64;
    let cv_rmse_mean: Vec<f64> = rmse.iter().map(|r| r.iter().sum::<f64>() / kf).collect();
    let cv_rmse_se: Vec<f64> = rmse
        .iter()
        .zip(&cv_rmse_mean)
        .map(|(r, m)| {
            let var = r.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (kf - 1.0);
            (var / kf).sqrt()
        })
        .collect();
    // Ties go to the larger strength, which comes first in the grid.
    let i_min = (0..grid.len())
        .min_by(|&a, &b| cv_rmse_mean[a].total_cmp(&cv_rmse_mean[b]))
        .expect("grid is non-empty");
    let bound = cv_rmse_mean[i_min] + cv_rmse_se[i_min];
    let i_1se = (0..=i_min)
        .find(|&g| cv_rmse_mean[g] <= bound)
        .unwrap_or(i_min);
    let (r_min, r_1se) = (grid[i_min], grid[i_1se]);
    Ok(CvResult {
        r_selected: (r_min * r_1se).sqrt(),
        grid,
        cv_rmse_mean,
        cv_rmse_se,
        r_min,
        r_1se,
    })
}

/// Effective degrees of freedom `Σ_i ∂ŷ_i/∂y_i`, estimated by central
/// differences of refits with `y_i ± eps`.
///
/// `eps` defaults to `1e-4 · sd(y)`. Perturbed fits start from the base
/// solution.
pub fn empirical_edf(
    data: &Dataset,
    spec: &PenaltySpec,
    weights: &[f64],
    eps: Option<f64>,
    opts: &CdOptions,
) -> Result<f64> {
    let y = data.response();
    let n = data.n();
    let eps = match eps {
        Some(e) if e > 0.0 && e.is_finite() => e,
        Some(e) => return Err(Error::invalid(format!("eps must be positive, got {e}"))),
        None => {
            let mean = y.mean();
            let sd = if n > 1 {
                (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            if sd > 0.0 {
                1e-4 * sd
            } else {
                1e-4
            }
        }
    };
    let prep = Prepared::new(data, opts.loss)?;
    let base: FitResult = coordinate_descent_prepared(&prep, data, spec, weights, opts)?;
    let perturbed_opts = CdOptions {
        init: Init::Given(base.coefficients.clone()),
        tol: opts.tol.min(1e-13),
        ..opts.clone()
    };
    let x = data.design();
    let mut edf = 0.0;
    for i in 0..n {
        let shifted = |sign: f64| -> Result<Vec<f64>> {
            let mut yp = y.clone();
            yp[i] += sign * eps;
            let d = data.with_response(yp)?;
            Ok(coordinate_descent_prepared(&prep, &d, spec, weights, &perturbed_opts)?.coefficients)
        };
        let plus = shifted(1.0)?;
        let minus = shifted(-1.0)?;
        let diff: f64 = (0..data.p())
            .map(|j| x[(i, j)] * (plus[j] - minus[j]))
            .sum();
        edf += diff / (2.0 * eps);
    }
    Ok(edf)
}
