//! Penalized least squares by cyclic coordinate descent.
//!
//! Columns are scaled to unit norm before fitting and coefficients are
//! reported on the original column scale. Sweeps run on the Gram matrix of
//! the normalized design, so a sweep costs O(p²) regardless of n.

use crate::error::{Error, Result};
use crate::penalty::{penalty_at, PenaltyKind, PenaltySpec, Prox};
use nalgebra::{DMatrix, DVector};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_SWEEPS: usize = 10_000;

/// Relative size below which a column counts as linearly dependent on the
/// columns before it.
const RANK_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    design: DMatrix<f64>,
    response: DVector<f64>,
    column_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        design: DMatrix<f64>,
        response: DVector<f64>,
        column_names: Vec<String>,
    ) -> Result<Self> {
        let (n, p) = design.shape();
        if n == 0 || p == 0 {
            return Err(Error::invalid(format!("design must be non-empty, got {n}x{p}")));
        }
        if response.len() != n {
            return Err(Error::invalid(format!(
                "response has {} entries for {n} rows",
                response.len()
            )));
        }
        if column_names.len() != p {
            return Err(Error::invalid(format!(
                "{} column names for {p} columns",
                column_names.len()
            )));
        }
        if design.iter().chain(response.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("design and response must be finite"));
        }
        Ok(Dataset {
            design,
            response,
            column_names,
        })
    }

    /// Builds a dataset from row-major values with generated column names.
    pub fn from_rows(rows: &[Vec<f64>], response: Vec<f64>) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::invalid("rows have unequal lengths"));
        }
        let design = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
        let names = (1..=p).map(|j| format!("x{j}")).collect();
        Dataset::new(design, DVector::from_vec(response), names)
    }

    pub fn n(&self) -> usize {
        self.design.nrows()
    }

    pub fn p(&self) -> usize {
        self.design.ncols()
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn response(&self) -> &DVector<f64> {
        &self.response
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn with_response(&self, response: DVector<f64>) -> Result<Self> {
        Dataset::new(self.design.clone(), response, self.column_names.clone())
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let design = self.design.select_rows(rows);
        let response = DVector::from_iterator(rows.len(), rows.iter().map(|&i| self.response[i]));
        Dataset::new(design, response, self.column_names.clone())
    }

    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        let design = self.design.select_columns(cols);
        let names = cols.iter().map(|&j| self.column_names[j].clone()).collect();
        Dataset::new(design, self.response.clone(), names)
    }

    pub fn predict(&self, coefficients: &[f64]) -> DVector<f64> {
        &self.design * DVector::from_column_slice(coefficients)
    }

    pub fn rss(&self, coefficients: &[f64]) -> f64 {
        (&self.response - self.predict(coefficients)).norm_squared()
    }
}

/// Divides every column by its Euclidean norm.
///
/// Original-scale coefficients are recovered as `β_j = β̃_j / scale_j`.
pub fn normalize_columns(data: &Dataset) -> Result<(Dataset, Vec<f64>)> {
    let scales = column_norms(data)?;
    let mut design = data.design.clone();
    for (j, s) in scales.iter().enumerate() {
        design.column_mut(j).unscale_mut(*s);
    }
    Ok((
        Dataset {
            design,
            response: data.response.clone(),
            column_names: data.column_names.clone(),
        },
        scales,
    ))
}

fn column_norms(data: &Dataset) -> Result<Vec<f64>> {
    data.design
        .column_iter()
        .enumerate()
        .map(|(j, c)| {
            let s = c.norm();
            if s > 0.0 {
                Ok(s)
            } else {
                Err(Error::DegenerateColumn(data.column_names[j].clone()))
            }
        })
        .collect()
}

/// How the squared-error term is weighted against the penalty.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LossScale {
    /// `½‖y − Xβ‖²`
    #[default]
    Sum,
    /// `‖y − Xβ‖² / (2n)`, equivalently the response divided by `√n`.
    Mean,
}

/// Which coefficients the penalty is applied to.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PenaltyScale {
    /// Coefficients of the unit-norm (loss-scaled) design.
    #[default]
    Normalized,
    /// Coefficients on the caller's column scale.
    Original,
}

/// Residual variance estimator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Sigma2 {
    /// `RSS / n`
    #[default]
    Ml,
    /// `RSS / (n − k)`, `k` the number of nonzero coefficients.
    Unbiased,
}

impl Sigma2 {
    pub fn estimate(self, rss: f64, n: usize, k: usize) -> f64 {
        match self {
            Sigma2::Ml => rss / n as f64,
            Sigma2::Unbiased => rss / (n.saturating_sub(k)).max(1) as f64,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub enum Init {
    /// Least-squares start, as in the coordinate descent algorithm.
    #[default]
    Ols,
    Zero,
    /// Original-scale starting coefficients.
    Given(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CdOptions {
    pub tol: f64,
    pub max_sweeps: usize,
    pub init: Init,
    pub loss: LossScale,
    pub penalty_scale: PenaltyScale,
    pub sigma2: Sigma2,
}

impl Default for CdOptions {
    fn default() -> Self {
        CdOptions {
            tol: DEFAULT_TOL,
            max_sweeps: DEFAULT_MAX_SWEEPS,
            init: Init::Ols,
            loss: LossScale::Sum,
            penalty_scale: PenaltyScale::Normalized,
            sigma2: Sigma2::Ml,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    /// Original column scale.
    pub coefficients: Vec<f64>,
    /// Objective after each sweep, in the normalized coordinates.
    pub objective_trace: Vec<f64>,
    pub sigma2_hat: f64,
    pub rss: f64,
    pub n_iter: usize,
    pub converged: bool,
    pub nonzero_mask: Vec<bool>,
    /// Set when a LAAD coordinate ran with effective strength above 1,
    /// outside the regime where convergence is guaranteed.
    pub strength_warning: bool,
}

impl FitResult {
    fn from_coefficients(
        data: &Dataset,
        coefficients: Vec<f64>,
        sigma2: Sigma2,
        objective_trace: Vec<f64>,
        n_iter: usize,
        converged: bool,
    ) -> Self {
        let rss = data.rss(&coefficients);
        let nonzero_mask: Vec<bool> = coefficients.iter().map(|b| *b != 0.0).collect();
        let k = nonzero_mask.iter().filter(|m| **m).count();
        FitResult {
            sigma2_hat: sigma2.estimate(rss, data.n(), k),
            rss,
            coefficients,
            objective_trace,
            n_iter,
            converged,
            nonzero_mask,
            strength_warning: false,
        }
    }

    pub fn nonzero_count(&self) -> usize {
        self.nonzero_mask.iter().filter(|m| **m).count()
    }
}

/// Indices of columns that are (numerically) linear combinations of the
/// columns before them, read off the diagonal of an unpivoted QR.
fn dependent_columns(x: &DMatrix<f64>) -> Vec<usize> {
    let (n, p) = x.shape();
    let norms: Vec<f64> = x.column_iter().map(|c| c.norm()).collect();
    let r = x.clone().qr().r();
    (0..p)
        .filter(|&j| j >= n || norms[j] == 0.0 || r[(j, j)].abs() <= RANK_TOL * norms[j])
        .collect()
}

/// Columns kept after dropping zero and dependent columns, in order.
pub(crate) fn independent_columns(x: &DMatrix<f64>) -> Vec<usize> {
    let dependent = dependent_columns(x);
    (0..x.ncols()).filter(|j| !dependent.contains(j)).collect()
}

pub(crate) fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>, names: &[String]) -> Result<DVector<f64>> {
    let dependent = dependent_columns(x);
    if !dependent.is_empty() {
        return Err(Error::RankDeficient(
            dependent.into_iter().map(|j| names[j].clone()).collect(),
        ));
    }
    let qr = x.clone().qr();
    let qty = qr.q().transpose() * y;
    qr.r()
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::RankDeficient(names.to_vec()))
}

/// Exact least-squares fit.
pub fn ols_fit(data: &Dataset) -> Result<FitResult> {
    ols_fit_with(data, Sigma2::default())
}

pub fn ols_fit_with(data: &Dataset, sigma2: Sigma2) -> Result<FitResult> {
    let beta = least_squares(&data.design, &data.response, &data.column_names)?;
    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let rss = data.rss(&coefficients);
    Ok(FitResult::from_coefficients(
        data,
        coefficients,
        sigma2,
        vec![0.5 * rss],
        1,
        true,
    ))
}

/// Normalized design and its Gram matrix, reusable across responses.
#[derive(Clone, Debug)]
pub struct Prepared {
    xu: DMatrix<f64>,
    gram: DMatrix<f64>,
    /// `‖X_j‖ · loss factor`; original β_j = β̃_j / scale_j.
    scales: Vec<f64>,
    loss_factor: f64,
    names: Vec<String>,
}

impl Prepared {
    pub fn new(data: &Dataset, loss: LossScale) -> Result<Self> {
        let (normalized, norms) = normalize_columns(data)?;
        let loss_factor = match loss {
            LossScale::Sum => 1.0,
            LossScale::Mean => 1.0 / (data.n() as f64).sqrt(),
        };
        let xu = normalized.design;
        let gram = xu.transpose() * &xu;
        Ok(Prepared {
            xu,
            gram,
            scales: norms.iter().map(|s| s * loss_factor).collect(),
            loss_factor,
            names: data.column_names.clone(),
        })
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// `X̃ᵀ y` in the loss-scaled coordinates.
    fn correlations(&self, y: &DVector<f64>) -> DVector<f64> {
        self.xu.tr_mul(y) * self.loss_factor
    }
}

/// Per-coordinate update rule. `factor` is 1 when the penalty acts on the
/// normalized coefficient and `scale_j` when it acts on the original one.
#[derive(Clone, Copy, Debug)]
struct Coord {
    prox: Prox,
    factor: f64,
    spec: PenaltySpec,
}

impl Coord {
    fn update(&self, z: f64) -> f64 {
        self.factor * self.prox.apply(z / self.factor)
    }

    fn penalty(&self, beta_tilde: f64) -> f64 {
        self.factor * self.factor * penalty_at(beta_tilde / self.factor, &self.spec)
    }
}

fn build_coords(
    prep: &Prepared,
    spec: &PenaltySpec,
    weights: &[f64],
    scale: PenaltyScale,
) -> Result<(Vec<Coord>, bool)> {
    spec.validate()?;
    let mut warning = false;
    let coords = weights
        .iter()
        .zip(&prep.scales)
        .map(|(&w, &s)| {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::invalid(format!("weights must be nonnegative, got {w}")));
            }
            let factor = match scale {
                PenaltyScale::Normalized => 1.0,
                PenaltyScale::Original => s,
            };
            let coord_spec = if w == 0.0 || spec.kind == PenaltyKind::None {
                PenaltySpec::none()
            } else {
                spec.with_strength(spec.strength * w / (factor * factor))
            };
            if coord_spec.kind == PenaltyKind::Laad && coord_spec.strength > 1.0 {
                warning = true;
            }
            Ok(Coord {
                prox: Prox::new(coord_spec)?,
                factor,
                spec: coord_spec,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((coords, warning))
}

/// Raw coordinate-descent state in normalized coordinates.
struct CdRun {
    beta: Vec<f64>,
    trace: Vec<f64>,
    sweeps: usize,
    converged: bool,
}

fn objective(yy: f64, c: &DVector<f64>, beta: &[f64], q: &[f64], coords: &[Coord]) -> f64 {
    let mut fit = 0.0;
    let mut pen = 0.0;
    for j in 0..beta.len() {
        fit += beta[j] * (q[j] - 2.0 * c[j]);
        pen += coords[j].penalty(beta[j]);
    }
    0.5 * (yy + fit) + pen
}

fn run_cd(
    prep: &Prepared,
    c: &DVector<f64>,
    yy: f64,
    coords: &[Coord],
    mut beta: Vec<f64>,
    tol: f64,
    max_sweeps: usize,
) -> Result<CdRun> {
    let p = beta.len();
    let g = &prep.gram;
    // q = G β̃, kept current as coordinates move.
    let mut q: Vec<f64> = (0..p)
        .map(|i| (0..p).map(|k| g[(i, k)] * beta[k]).sum())
        .collect();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut max_change = 0.0f64;
        for j in 0..p {
            let z = c[j] - q[j] + g[(j, j)] * beta[j];
            if !z.is_finite() {
                return Err(Error::Numerical { sweep: sweeps });
            }
            let new = coords[j].update(z);
            let delta = new - beta[j];
            if delta != 0.0 {
                for (i, qi) in q.iter_mut().enumerate() {
                    *qi += g[(i, j)] * delta;
                }
                beta[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        let obj = objective(yy, c, &beta, &q, coords);
        if !obj.is_finite() {
            return Err(Error::Numerical { sweep: sweeps });
        }
        trace.push(obj);
        if max_change <= tol {
            converged = true;
            break;
        }
    }
    Ok(CdRun {
        beta,
        trace,
        sweeps,
        converged,
    })
}

fn initial_beta(prep: &Prepared, y: &DVector<f64>, init: &Init) -> Result<Vec<f64>> {
    let p = prep.scales.len();
    match init {
        Init::Zero => Ok(vec![0.0; p]),
        Init::Given(b) => {
            if b.len() != p {
                return Err(Error::invalid(format!(
                    "initial vector has {} entries for {p} columns",
                    b.len()
                )));
            }
            Ok(b.iter().zip(&prep.scales).map(|(b, s)| b * s).collect())
        }
        Init::Ols => {
            let scaled = y * prep.loss_factor;
            let b = least_squares(&prep.xu, &scaled, &prep.names)?;
            Ok(b.iter().copied().collect())
        }
    }
}

/// Coordinate descent on a prepared design for a given response.
pub fn coordinate_descent_prepared(
    prep: &Prepared,
    data: &Dataset,
    spec: &PenaltySpec,
    weights: &[f64],
    opts: &CdOptions,
) -> Result<FitResult> {
    let p = data.p();
    if weights.len() != p {
        return Err(Error::invalid(format!(
            "{} weights for {p} columns",
            weights.len()
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("tol must be positive"));
    }
    let (coords, strength_warning) = build_coords(prep, spec, weights, opts.penalty_scale)?;
    let y = data.response();
    let c = prep.correlations(y);
    let yy = y.norm_squared() * prep.loss_factor * prep.loss_factor;
    let beta0 = initial_beta(prep, y, &opts.init)?;
    let run = run_cd(prep, &c, yy, &coords, beta0, opts.tol, opts.max_sweeps)?;
    let coefficients = run
        .beta
        .iter()
        .zip(&prep.scales)
        .map(|(b, s)| b / s)
        .collect();
    let mut fit = FitResult::from_coefficients(
        data,
        coefficients,
        opts.sigma2,
        run.trace,
        run.sweeps,
        run.converged,
    );
    fit.strength_warning = strength_warning;
    Ok(fit)
}

/// Penalized least squares by cyclic coordinate descent.
pub fn coordinate_descent(
    data: &Dataset,
    spec: &PenaltySpec,
    weights: &[f64],
    opts: &CdOptions,
) -> Result<FitResult> {
    let prep = Prepared::new(data, opts.loss)?;
    coordinate_descent_prepared(&prep, data, spec, weights, opts)
}

/// Largest `|β̃_j − prox(z_j)|` at a fitted point, in normalized
/// coordinates. Zero at an exact coordinate-wise fixed point.
pub fn fixed_point_violation(
    data: &Dataset,
    spec: &PenaltySpec,
    weights: &[f64],
    fit: &FitResult,
    opts: &CdOptions,
) -> Result<f64> {
    let prep = Prepared::new(data, opts.loss)?;
    let (coords, _) = build_coords(&prep, spec, weights, opts.penalty_scale)?;
    let beta: Vec<f64> = fit
        .coefficients
        .iter()
        .zip(&prep.scales)
        .map(|(b, s)| b * s)
        .collect();
    let c = prep.correlations(data.response());
    let g = &prep.gram;
    let p = beta.len();
    let mut worst = 0.0f64;
    for j in 0..p {
        let qj: f64 = (0..p).map(|k| g[(j, k)] * beta[k]).sum();
        let z = c[j] - qj + beta[j];
        worst = worst.max((coords[j].update(z) - beta[j]).abs());
    }
    Ok(worst)
}

/// Greedy forward selection by BIC, `n·log(RSS/n) + k·log(n)`.
///
/// Starts from `always_in`, adds the column with the largest RSS drop while
/// that lowers BIC, and returns the least-squares refit on the chosen set.
pub fn forward_bic(data: &Dataset, always_in: &[usize]) -> Result<FitResult> {
    forward_bic_with(data, always_in, Sigma2::default())
}

pub fn forward_bic_with(data: &Dataset, always_in: &[usize], sigma2: Sigma2) -> Result<FitResult> {
    let (n, p) = (data.n(), data.p());
    if let Some(&bad) = always_in.iter().find(|&&j| j >= p) {
        return Err(Error::invalid(format!("column index {bad} out of range")));
    }
    let nf = n as f64;
    let x = data.design();
    let mut resid = data.response().clone();
    let mut selected: Vec<usize> = Vec::new();
    let mut candidates: Vec<Option<DVector<f64>>> =
        x.column_iter().map(|c| Some(c.clone_owned())).collect();
    let col_norms: Vec<f64> = x.column_iter().map(|c| c.norm()).collect();

    let add = |j: usize,
                   resid: &mut DVector<f64>,
                   candidates: &mut Vec<Option<DVector<f64>>>|
     -> bool {
        let v = match candidates[j].take() {
            Some(v) if v.norm() > RANK_TOL * col_norms[j] => v,
            _ => return false,
        };
        let q = &v / v.norm();
        resid.axpy(-q.dot(resid), &q, 1.0);
        for cand in candidates.iter_mut().flatten() {
            let d = q.dot(cand);
            cand.axpy(-d, &q, 1.0);
        }
        true
    };

    for &j in always_in {
        if selected.contains(&j) {
            continue;
        }
        if !add(j, &mut resid, &mut candidates) {
            return Err(Error::RankDeficient(vec![data.column_names()[j].clone()]));
        }
        selected.push(j);
    }

    let floor = 1e-14 * data.response().norm_squared().max(f64::MIN_POSITIVE);
    let bic = |rss: f64, k: usize| nf * (rss.max(floor) / nf).ln() + k as f64 * nf.ln();
    let mut rss = resid.norm_squared();
    let mut current = bic(rss, selected.len());
    let mut steps = 0;
    while selected.len() < p.min(n) && rss > floor {
        let mut best: Option<(usize, f64)> = None;
        for (j, cand) in candidates.iter().enumerate() {
            let Some(v) = cand else { continue };
            let vv = v.norm_squared();
            if vv.sqrt() <= RANK_TOL * col_norms[j] {
                continue;
            }
            let gain = v.dot(&resid).powi(2) / vv;
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((j, gain));
            }
        }
        let Some((j, gain)) = best else { break };
        let next = bic(rss - gain, selected.len() + 1);
        if next >= current {
            break;
        }
        add(j, &mut resid, &mut candidates);
        selected.push(j);
        rss = resid.norm_squared();
        current = next;
        steps += 1;
    }

    selected.sort_unstable();
    let mut coefficients = vec![0.0; p];
    if !selected.is_empty() {
        let sub = data.select_columns(&selected)?;
        let b = least_squares(sub.design(), sub.response(), sub.column_names())?;
        for (k, &j) in selected.iter().enumerate() {
            coefficients[j] = b[k];
        }
    }
    let rss = data.rss(&coefficients);
    Ok(FitResult::from_coefficients(
        data,
        coefficients,
        sigma2,
        vec![0.5 * rss],
        steps.max(1),
        true,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalty::prox;
    use approx::assert_abs_diff_eq;

    fn ds(rows: &[&[f64]], y: &[f64]) -> Dataset {
        Dataset::from_rows(
            &rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
            y.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn normalize_examples() {
        let d = ds(&[&[3.0, 1.0], &[4.0, 0.0]], &[0.0, 0.0]);
        let (nd, s) = normalize_columns(&d).unwrap();
        assert_eq!(s, vec![5.0, 1.0]);
        assert_abs_diff_eq!(nd.design()[(0, 0)], 0.6);
        assert_abs_diff_eq!(nd.design()[(1, 0)], 0.8);
        assert_eq!(nd.design().column(1), d.design().column(1));
        let z = ds(&[&[0.0, 1.0], &[0.0, 2.0]], &[1.0, 2.0]);
        assert_eq!(
            normalize_columns(&z).unwrap_err(),
            Error::DegenerateColumn("x1".into())
        );
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::from_rows(&[vec![1.0], vec![f64::NAN]], vec![1.0, 2.0]).is_err());
        assert!(Dataset::from_rows(&[vec![1.0]], vec![1.0, 2.0]).is_err());
        assert!(Dataset::from_rows(&[], vec![]).is_err());
    }

    #[test]
    fn ols_identity() {
        let d = ds(&[&[1.0, 0.0], &[0.0, 1.0]], &[1.0, 2.0]);
        let f = ols_fit(&d).unwrap();
        assert_abs_diff_eq!(f.coefficients[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.coefficients[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn ols_duplicate_column_is_rank_deficient() {
        let d = ds(&[&[1.0, 1.0], &[2.0, 2.0], &[3.0, 3.0]], &[1.0, 2.0, 3.0]);
        assert_eq!(
            ols_fit(&d).unwrap_err(),
            Error::RankDeficient(vec!["x2".into()])
        );
    }

    #[test]
    fn identity_design_decouples() {
        let y = [3.0, -0.4, 1.2, 0.05];
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let d = Dataset::from_rows(&rows, y.to_vec()).unwrap();
        for spec in [
            PenaltySpec::lasso(0.5).unwrap(),
            PenaltySpec::laad(0.8).unwrap(),
            PenaltySpec::scad(0.3, 3.7).unwrap(),
            PenaltySpec::mcp(0.3, 3.0).unwrap(),
            PenaltySpec::ridge(1.0).unwrap(),
        ] {
            let f = coordinate_descent(&d, &spec, &[1.0; 4], &CdOptions::default()).unwrap();
            for j in 0..4 {
                assert_abs_diff_eq!(
                    f.coefficients[j],
                    prox(y[j], &spec).unwrap(),
                    epsilon = 1e-12
                );
            }
            assert!(f.n_iter <= 2);
        }
    }

    #[test]
    fn exempt_coordinate_is_unpenalized() {
        let d = ds(&[&[1.0, 0.0], &[0.0, 1.0]], &[0.3, 0.3]);
        let f = coordinate_descent(&d, &PenaltySpec::lasso(1.0).unwrap(), &[0.0, 1.0], &CdOptions::default())
            .unwrap();
        assert_abs_diff_eq!(f.coefficients[0], 0.3, epsilon = 1e-12);
        assert_eq!(f.coefficients[1], 0.0);
        assert_eq!(f.nonzero_mask, vec![true, false]);
    }

    #[test]
    fn laad_warning_above_one() {
        let d = ds(&[&[1.0], &[1.0]], &[5.0, 5.0]);
        let opts = CdOptions::default();
        let f = coordinate_descent(&d, &PenaltySpec::laad(2.0).unwrap(), &[1.0], &opts).unwrap();
        assert!(f.strength_warning);
        let f = coordinate_descent(&d, &PenaltySpec::laad(0.5).unwrap(), &[1.0], &opts).unwrap();
        assert!(!f.strength_warning);
    }

    #[test]
    fn mean_loss_matches_scaled_strength() {
        // n·[(1/2n)RSS + λ′|β̃|/√n] = ½RSS + √n·λ′|β̃|, so λ′ = λ/√n with n = 4.
        let d = ds(&[&[1.0, 0.5], &[0.2, 1.0], &[0.3, -0.7], &[1.0, 1.0]], &[1.0, 2.0, -1.0, 0.4]);
        let sum = coordinate_descent(
            &d,
            &PenaltySpec::lasso(0.1).unwrap(),
            &[1.0, 1.0],
            &CdOptions::default(),
        )
        .unwrap();
        let mean = coordinate_descent(
            &d,
            &PenaltySpec::lasso(0.1 / 2.0).unwrap(),
            &[1.0, 1.0],
            &CdOptions {
                loss: LossScale::Mean,
                ..CdOptions::default()
            },
        )
        .unwrap();
        for j in 0..2 {
            assert_abs_diff_eq!(sum.coefficients[j], mean.coefficients[j], epsilon = 1e-7);
        }
    }

    #[test]
    fn forward_bic_all_in_equals_ols() {
        let d = ds(
            &[&[1.0, 0.1], &[0.5, 1.0], &[0.2, 0.3], &[0.9, -0.4], &[0.0, 1.0]],
            &[1.0, 2.0, 0.4, 0.3, 1.9],
        );
        let f = forward_bic(&d, &[0, 1]).unwrap();
        let o = ols_fit(&d).unwrap();
        for j in 0..2 {
            assert_abs_diff_eq!(f.coefficients[j], o.coefficients[j], epsilon = 1e-12);
        }
    }

    #[test]
    fn sigma2_estimators() {
        assert_eq!(Sigma2::Ml.estimate(10.0, 5, 2), 2.0);
        assert_abs_diff_eq!(Sigma2::Unbiased.estimate(9.0, 5, 2), 3.0);
        assert_eq!(Sigma2::Unbiased.estimate(9.0, 2, 5), 9.0);
    }
}
