use super::design::{CoefKind, ReserveDesign};
use super::triangle::LossTriangle;
use crate::error::{Error, Result};
use crate::penalty::{PenaltyKind, PenaltySpec, DEFAULT_MCP_GAMMA, DEFAULT_SCAD_A};
use crate::select::{default_grid, kfold_cv, CvResult, GRID_POINTS, GRID_RATIO};
use crate::solver::{
    coordinate_descent, forward_bic_with, ols_fit_with, CdOptions, Dataset, FitResult, LossScale,
    Sigma2,
};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReserveModel {
    Unconstrained,
    Best,
    Lasso,
    Scad,
    Mcp,
    Laad,
}

impl ReserveModel {
    pub const ALL: [ReserveModel; 6] = [
        ReserveModel::Unconstrained,
        ReserveModel::Best,
        ReserveModel::Lasso,
        ReserveModel::Scad,
        ReserveModel::Mcp,
        ReserveModel::Laad,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReserveModel::Unconstrained => "unconstrained",
            ReserveModel::Best => "best",
            ReserveModel::Lasso => "lasso",
            ReserveModel::Scad => "scad",
            ReserveModel::Mcp => "mcp",
            ReserveModel::Laad => "laad",
        }
    }

    pub fn penalty_kind(self) -> Option<PenaltyKind> {
        match self {
            ReserveModel::Unconstrained | ReserveModel::Best => None,
            ReserveModel::Lasso => Some(PenaltyKind::Lasso),
            ReserveModel::Scad => Some(PenaltyKind::Scad),
            ReserveModel::Mcp => Some(PenaltyKind::Mcp),
            ReserveModel::Laad => Some(PenaltyKind::Laad),
        }
    }
}

impl std::fmt::Display for ReserveModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ReserveModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ReserveModel::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown model `{s}`")))
    }
}

/// Penalty strength for the penalized models.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Strength {
    Fixed(f64),
    /// k-fold cross-validation over the default grid.
    Cv { k: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReserveOptions {
    /// Re-level η₂ after fitting so residuals sum to zero.
    pub balance: bool,
    pub sigma2: Sigma2,
    pub cd: CdOptions,
    pub scad_a: f64,
    pub mcp_gamma: f64,
}

impl Default for ReserveOptions {
    fn default() -> Self {
        ReserveOptions {
            balance: true,
            sigma2: Sigma2::Unbiased,
            cd: CdOptions {
                loss: LossScale::Mean,
                ..CdOptions::default()
            },
            scad_a: DEFAULT_SCAD_A,
            mcp_gamma: DEFAULT_MCP_GAMMA,
        }
    }
}

impl ReserveOptions {
    pub fn penalty(&self, model: ReserveModel, strength: f64) -> Result<Option<PenaltySpec>> {
        Ok(match model.penalty_kind() {
            None => None,
            Some(PenaltyKind::Scad) => Some(PenaltySpec::scad(strength, self.scad_a)?),
            Some(PenaltyKind::Mcp) => Some(PenaltySpec::mcp(strength, self.mcp_gamma)?),
            Some(kind) => Some(PenaltySpec::new(kind, strength)?),
        })
    }
}

/// Estimated incremental development per line and lag.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DevFactorTable {
    pub lines: Vec<String>,
    pub dev_count: usize,
    /// `zeta[line][lag − 2]`
    pub zeta: Vec<Vec<f64>>,
    pub sigma2_hat: f64,
}

impl DevFactorTable {
    pub fn zeta(&self, line: usize, lag: usize) -> Option<f64> {
        if lag < 2 {
            return None;
        }
        self.zeta.get(line)?.get(lag - 2).copied()
    }

    /// `exp(ζ)`; exactly 1 where ζ was set to zero.
    pub fn factor(&self, line: usize, lag: usize) -> Option<f64> {
        self.zeta(line, lag).map(f64::exp)
    }

    pub fn line_index(&self, line_id: &str) -> Option<usize> {
        self.lines.iter().position(|l| l == line_id)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReserveFit {
    pub model: ReserveModel,
    pub strength: Option<f64>,
    pub cv: Option<CvResult>,
    pub coefficients: Vec<f64>,
    pub fitted: DVector<f64>,
    pub rss: f64,
    pub sigma2_hat: f64,
    pub nonzero: usize,
    pub converged: bool,
    pub strength_warning: bool,
    pub factors: DevFactorTable,
}

pub fn fit_reserving(
    design: &ReserveDesign,
    model: ReserveModel,
    strength: Option<Strength>,
) -> Result<ReserveFit> {
    fit_reserving_with(design, model, strength, &ReserveOptions::default())
}

pub fn fit_reserving_with(
    design: &ReserveDesign,
    model: ReserveModel,
    strength: Option<Strength>,
    opts: &ReserveOptions,
) -> Result<ReserveFit> {
    let data = &design.dataset;
    let mut cv = None;
    let mut used_strength = None;
    let base: FitResult = match model {
        ReserveModel::Unconstrained => ols_fit_with(data, opts.sigma2)?,
        ReserveModel::Best => forward_bic_with(data, &design.exempt_columns(), opts.sigma2)?,
        _ => {
            let value = match strength {
                None => {
                    return Err(Error::invalid(format!(
                        "model {model} needs a penalty strength"
                    )))
                }
                Some(Strength::Fixed(v)) => v,
                Some(Strength::Cv { k, seed }) => {
                    let template = opts.penalty(model, 1.0)?.expect("penalized model");
                    let grid = default_grid(data, &template, &design.weights, &opts.cd, GRID_POINTS, GRID_RATIO)?;
                    let res = kfold_cv(data, &template, &design.weights, &grid, k, seed, &opts.cd)?;
                    let v = res.r_selected;
                    cv = Some(res);
                    v
                }
            };
            used_strength = Some(value);
            let spec = opts.penalty(model, value)?.expect("penalized model");
            coordinate_descent(data, &spec, &design.weights, &opts.cd)?
        }
    };

    let mut coefficients = base.coefficients.clone();
    if opts.balance {
        balance(design, &mut coefficients)?;
    }
    let fitted = data.predict(&coefficients);
    let rss = (data.response() - &fitted).norm_squared();
    let nonzero = coefficients.iter().filter(|b| **b != 0.0).count();
    let sigma2_hat = opts.sigma2.estimate(rss, data.n(), nonzero);
    let zeta = (0..design.n_lines())
        .map(|line| {
            (2..=design.dev_count)
                .map(|lag| design.zeta(&coefficients, line, lag))
                .collect()
        })
        .collect();
    Ok(ReserveFit {
        model,
        strength: used_strength,
        cv,
        coefficients,
        fitted,
        rss,
        sigma2_hat,
        nonzero,
        converged: base.converged,
        strength_warning: base.strength_warning,
        factors: DevFactorTable {
            lines: design.lines.clone(),
            dev_count: design.dev_count,
            zeta,
            sigma2_hat,
        },
    })
}

/// Shifts η₂ so that the residuals of the whole fit sum to zero.
fn balance(design: &ReserveDesign, coefficients: &mut [f64]) -> Result<()> {
    let j = design
        .column(CoefKind::Eta, 2, None)
        .ok_or_else(|| Error::InvalidState("design has no lag-2 column".into()))?;
    let data = &design.dataset;
    let resid = data.response() - data.predict(coefficients);
    let rows = data.design().column(j).iter().filter(|v| **v != 0.0).count();
    if rows > 0 {
        coefficients[j] += resid.sum() / rows as f64;
    }
    Ok(())
}

/// Log-cumulative loss decomposed as overall level + accident-year effect
/// + development effect, with the first year and first lag as baselines.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossClassified {
    pub gamma: f64,
    /// Accident years 2..I.
    pub alpha: Vec<f64>,
    /// Lags 2..J.
    pub delta: Vec<f64>,
    pub sigma2_hat: f64,
}

pub fn fit_cross_classified(triangle: &LossTriangle) -> Result<CrossClassified> {
    let (big_i, big_j) = (triangle.origin_count(), triangle.dev_count());
    let cells: Vec<((usize, usize), f64)> = triangle.cells().collect();
    let p = 1 + (big_i - 1) + (big_j - 1);
    let mut x = DMatrix::zeros(cells.len(), p);
    for (row, ((i, j), _)) in cells.iter().enumerate() {
        x[(row, 0)] = 1.0;
        if *i > 1 {
            x[(row, i - 1)] = 1.0;
        }
        if *j > 1 {
            x[(row, big_i - 1 + j - 1)] = 1.0;
        }
    }
    let y = DVector::from_iterator(cells.len(), cells.iter().map(|(_, v)| v.ln()));
    let mut names = vec!["gamma".to_string()];
    names.extend((2..=big_i).map(|i| format!("alpha{i}")));
    names.extend((2..=big_j).map(|j| format!("delta{j}")));
    let fit = ols_fit_with(&Dataset::new(x, y, names)?, Sigma2::Unbiased)?;
    let b = &fit.coefficients;
    Ok(CrossClassified {
        gamma: b[0],
        alpha: b[1..big_i].to_vec(),
        delta: b[big_i..].to_vec(),
        sigma2_hat: fit.sigma2_hat,
    })
}
