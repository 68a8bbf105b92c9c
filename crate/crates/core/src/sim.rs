//! Simulation study: nine correlated-scale covariates, a sparse response
//! with four interactions, and seven competing estimators on the full
//! main-effect-plus-interaction design.

use crate::error::{Error, Result};
use crate::penalty::{PenaltyKind, PenaltySpec};
use crate::select::{default_grid, kfold_cv, DEFAULT_FOLDS, GRID_POINTS, GRID_RATIO};
use crate::solver::{coordinate_descent, forward_bic, ols_fit, CdOptions, Dataset, LossScale};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use std::time::Instant;

pub const MAIN_EFFECTS: usize = 9;
pub const DESIGN_COLUMNS: usize = MAIN_EFFECTS + MAIN_EFFECTS * (MAIN_EFFECTS - 1) / 2;

/// (mean, variance) of X1..X9.
const COVARIATES: [(f64, f64); MAIN_EFFECTS] = [
    (5.0, 1.0),
    (-2.0, 1.0),
    (1.0, 4.0),
    (3.0, 4.0),
    (0.0, 4.0),
    (0.0, 9.0),
    (-3.0, 4.0),
    (2.0, 1.0),
    (3.0, 1.0),
];

const MAIN_COEFS: [f64; MAIN_EFFECTS] = [-1.0, 1.0, 1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0];

/// Nonzero interaction coefficients, 1-based covariate pairs.
const INTERACTIONS: [((usize, usize), f64); 4] = [
    ((1, 6), -10.0),
    ((2, 3), 1.0),
    ((3, 4), 0.1),
    ((4, 6), -0.01),
];

/// Interaction pairs in column order: (1,2), (1,3), …, (8,9).
pub fn interaction_pairs() -> Vec<(usize, usize)> {
    (1..=MAIN_EFFECTS)
        .flat_map(|a| (a + 1..=MAIN_EFFECTS).map(move |b| (a, b)))
        .collect()
}

pub fn column_names() -> Vec<String> {
    (1..=MAIN_EFFECTS)
        .map(|j| format!("x{j}"))
        .chain(interaction_pairs().into_iter().map(|(a, b)| format!("x{a}:x{b}")))
        .collect()
}

pub fn true_coefficients() -> Vec<f64> {
    let mut beta = MAIN_COEFS.to_vec();
    for pair in interaction_pairs() {
        let c = INTERACTIONS
            .iter()
            .find(|(p, _)| *p == pair)
            .map_or(0.0, |(_, c)| *c);
        beta.push(c);
    }
    beta
}

#[derive(Clone, Debug)]
pub struct SimData {
    pub dataset: Dataset,
    pub true_coefficients: Vec<f64>,
}

pub fn gen_sim_data(n: usize, seed: u64) -> Result<SimData> {
    gen_sim_data_with(n, seed, 1.0)
}

/// Draws one sample; `noise_sd = 0` gives an exactly linear response.
pub fn gen_sim_data_with(n: usize, seed: u64, noise_sd: f64) -> Result<SimData> {
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(Error::invalid(format!("noise sd must be finite and non-negative, got {noise_sd}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let laws: Vec<Normal<f64>> = COVARIATES
        .iter()
        .map(|(m, v)| Normal::new(*m, v.sqrt()).expect("valid normal law"))
        .collect();
    let noise = Normal::new(0.0, noise_sd)
        .map_err(|e| Error::invalid(format!("noise sd: {e}")))?;
    let pairs = interaction_pairs();
    let beta = true_coefficients();
    let mut x = DMatrix::zeros(n, DESIGN_COLUMNS);
    let mut y = DVector::zeros(n);
    for i in 0..n {
        let mains: Vec<f64> = laws.iter().map(|d| d.sample(&mut rng)).collect();
        for (j, v) in mains.iter().enumerate() {
            x[(i, j)] = *v;
        }
        for (k, (a, b)) in pairs.iter().enumerate() {
            x[(i, MAIN_EFFECTS + k)] = mains[a - 1] * mains[b - 1];
        }
        let e = if noise_sd > 0.0 { noise.sample(&mut rng) } else { 0.0 };
        y[i] = (0..DESIGN_COLUMNS).map(|j| x[(i, j)] * beta[j]).sum::<f64>() + e;
    }
    Ok(SimData {
        dataset: Dataset::new(x, y, column_names())?,
        true_coefficients: beta,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SimModel {
    Full,
    Reduced,
    Best,
    Lasso,
    Mcp,
    Scad,
    Laad,
}

impl SimModel {
    pub const ALL: [SimModel; 7] = [
        SimModel::Full,
        SimModel::Reduced,
        SimModel::Best,
        SimModel::Lasso,
        SimModel::Mcp,
        SimModel::Scad,
        SimModel::Laad,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SimModel::Full => "full",
            SimModel::Reduced => "reduced",
            SimModel::Best => "best",
            SimModel::Lasso => "lasso",
            SimModel::Mcp => "mcp",
            SimModel::Scad => "scad",
            SimModel::Laad => "laad",
        }
    }

    fn penalty(self) -> Option<PenaltySpec> {
        let kind = match self {
            SimModel::Lasso => PenaltyKind::Lasso,
            SimModel::Mcp => PenaltyKind::Mcp,
            SimModel::Scad => PenaltyKind::Scad,
            SimModel::Laad => PenaltyKind::Laad,
            _ => return None,
        };
        Some(PenaltySpec::new(kind, 1.0).expect("unit strength is valid"))
    }
}

impl std::str::FromStr for SimModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SimModel::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown simulation model `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub models: Vec<SimModel>,
    pub folds: usize,
    pub cd: CdOptions,
}

impl SimConfig {
    pub fn new(n: usize, reps: usize, seed: u64) -> Self {
        SimConfig {
            n,
            reps,
            seed,
            models: SimModel::ALL.to_vec(),
            folds: DEFAULT_FOLDS,
            cd: CdOptions {
                loss: LossScale::Mean,
                ..CdOptions::default()
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefStats {
    pub name: String,
    pub truth: f64,
    /// Mean of `β̂ − β`.
    pub bias: f64,
    pub rmse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelReport {
    pub model: SimModel,
    pub coefficients: Vec<CoefStats>,
    pub mean_l1_diff: f64,
    pub mean_l0_diff: f64,
    pub avg_runtime_seconds: f64,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimReport {
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub models: Vec<ModelReport>,
}

impl SimReport {
    pub fn model(&self, model: SimModel) -> Option<&ModelReport> {
        self.models.iter().find(|m| m.model == model)
    }
}

/// Seed of replicate `rep`'s data stream.
fn data_seed(seed: u64, rep: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(rep as u64)
}

fn fold_seed(seed: u64, rep: usize, model: SimModel) -> u64 {
    let idx = SimModel::ALL.iter().position(|m| *m == model).unwrap_or(0) as u64;
    data_seed(seed, rep).rotate_left(17) ^ (idx + 1).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Fits one model on one sample, returning the 45 coefficients.
pub fn fit_model(
    model: SimModel,
    data: &Dataset,
    folds: usize,
    fold_seed: u64,
    cd: &CdOptions,
) -> Result<Vec<f64>> {
    match model {
        SimModel::Full => Ok(ols_fit(data)?.coefficients),
        SimModel::Reduced => {
            let mains: Vec<usize> = (0..MAIN_EFFECTS).collect();
            let fit = ols_fit(&data.select_columns(&mains)?)?;
            let mut beta = fit.coefficients;
            beta.resize(data.p(), 0.0);
            Ok(beta)
        }
        SimModel::Best => Ok(forward_bic(data, &[])?.coefficients),
        _ => {
            let template = model.penalty().expect("penalized model");
            let weights = vec![1.0; data.p()];
            let grid = default_grid(data, &template, &weights, cd, GRID_POINTS, GRID_RATIO)?;
            let cv = kfold_cv(data, &template, &weights, &grid, folds, fold_seed, cd)?;
            let spec = template.with_strength(cv.r_selected);
            Ok(coordinate_descent(data, &spec, &weights, cd)?.coefficients)
        }
    }
}

pub fn run_sim_study(config: &SimConfig) -> Result<SimReport> {
    if config.n < 50 || config.reps == 0 {
        return Err(Error::invalid(format!(
            "need n ≥ 50 and reps ≥ 1, got n = {}, reps = {}",
            config.n, config.reps
        )));
    }
    let truth = true_coefficients();
    let names = column_names();
    let p = truth.len();
    let m = config.models.len();
    let mut estimates: Vec<Vec<Vec<f64>>> = vec![Vec::new(); m];
    let mut seconds = vec![0.0; m];
    let mut failures = vec![0; m];

    for rep in 0..config.reps {
        let sample = gen_sim_data(config.n, data_seed(config.seed, rep))?;
        for (k, &model) in config.models.iter().enumerate() {
            let start = Instant::now();
            let fit = fit_model(
                model,
                &sample.dataset,
                config.folds,
                fold_seed(config.seed, rep, model),
                &config.cd,
            );
            seconds[k] += start.elapsed().as_secs_f64();
            match fit {
                Ok(beta) => estimates[k].push(beta),
                Err(_) => failures[k] += 1,
            }
        }
    }

    let models = config
        .models
        .iter()
        .enumerate()
        .map(|(k, &model)| {
            let est = &estimates[k];
            let count = est.len().max(1) as f64;
            let coefficients = (0..p)
                .map(|j| {
                    let diffs = est.iter().map(|b| b[j] - truth[j]);
                    CoefStats {
                        name: names[j].clone(),
                        truth: truth[j],
                        bias: diffs.clone().sum::<f64>() / count,
                        rmse: (diffs.map(|d| d * d).sum::<f64>() / count).sqrt(),
                    }
                })
                .collect();
            let l1 = est
                .iter()
                .map(|b| b.iter().zip(&truth).map(|(e, t)| (e - t).abs()).sum::<f64>())
                .sum::<f64>()
                / count;
            let l0 = est
                .iter()
                .map(|b| {
                    b.iter()
                        .zip(&truth)
                        .filter(|(e, t)| (**e != 0.0) != (**t != 0.0))
                        .count() as f64
                })
                .sum::<f64>()
                / count;
            ModelReport {
                model,
                coefficients,
                mean_l1_diff: l1,
                mean_l0_diff: l0,
                avg_runtime_seconds: seconds[k] / config.reps as f64,
                failures: failures[k],
            }
        })
        .collect();
    Ok(SimReport {
        n: config.n,
        reps: config.reps,
        seed: config.seed,
        models,
    })
}
