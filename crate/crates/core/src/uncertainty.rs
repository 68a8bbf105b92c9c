//! Parametric bootstrap of next-calendar-year unpaid claims.
//!
//! Each replicate redraws every observed log link ratio from
//! `N(fitted, σ̂²)`, refits the same model at the same strength, and
//! re-predicts the next diagonal from the latest observed cumulative values.

use crate::error::{Error, Result};
use crate::reserve::{
    fit_reserving_with, predict_next_diagonal, LossTriangle, ReserveDesign, ReserveModel,
    ReserveOptions, Strength,
};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

/// Largest tolerated share of failed replicate fits.
const MAX_FAILURE_RATE: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BootstrapSummary {
    pub line: String,
    /// Successful replicates in replicate order.
    pub replicates: Vec<f64>,
    pub mean: f64,
    pub lower95: f64,
    pub upper95: f64,
    pub seed: u64,
    pub failures: usize,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Random stream for one replicate; independent of evaluation order.
pub fn replicate_rng(seed: u64, replicate: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate as u64);
    rng
}

pub fn bootstrap_reserve(
    design: &ReserveDesign,
    triangles: &[LossTriangle],
    model: ReserveModel,
    strength: Option<f64>,
    replicates: usize,
    seed: u64,
) -> Result<Vec<BootstrapSummary>> {
    bootstrap_reserve_with(
        design,
        triangles,
        model,
        strength,
        replicates,
        seed,
        &ReserveOptions::default(),
    )
}

pub fn bootstrap_reserve_with(
    design: &ReserveDesign,
    triangles: &[LossTriangle],
    model: ReserveModel,
    strength: Option<f64>,
    replicates: usize,
    seed: u64,
    opts: &ReserveOptions,
) -> Result<Vec<BootstrapSummary>> {
    if replicates == 0 {
        return Err(Error::invalid("need at least one replicate"));
    }
    let strength = strength.map(Strength::Fixed);
    let base = fit_reserving_with(design, model, strength, opts)?;
    let sigma = base.sigma2_hat.sqrt();
    let n_lines = triangles.len();
    let mut totals: Vec<Vec<f64>> = vec![Vec::with_capacity(replicates); n_lines];
    let mut failures = 0;
    let mut first_failure = String::new();

    for s in 0..replicates {
        let mut rng = replicate_rng(seed, s);
        let draws = DVector::from_iterator(
            base.fitted.len(),
            base.fitted.iter().map(|mu| {
                let e: f64 = StandardNormal.sample(&mut rng);
                mu + sigma * e
            }),
        );
        let outcome = design
            .with_response(draws)
            .and_then(|d| fit_reserving_with(&d, model, strength, opts))
            .and_then(|fit| predict_next_diagonal(triangles, &fit.factors));
        match outcome {
            Ok(pred) => {
                for (line, (_, total)) in pred.totals.iter().enumerate() {
                    totals[line].push(*total);
                }
            }
            Err(e) => {
                if failures == 0 {
                    first_failure = format!("replicate {s}: {e}");
                }
                failures += 1;
            }
        }
    }
    if failures as f64 > MAX_FAILURE_RATE * replicates as f64 || failures == replicates {
        return Err(Error::BootstrapFailures {
            failed: failures,
            total: replicates,
            first: first_failure,
        });
    }

    Ok(triangles
        .iter()
        .zip(totals)
        .map(|(t, reps)| {
            let mut sorted = reps.clone();
            sorted.sort_by(f64::total_cmp);
            BootstrapSummary {
                line: t.line_id().to_string(),
                mean: reps.iter().sum::<f64>() / reps.len() as f64,
                lower95: quantile(&sorted, 0.025),
                upper95: quantile(&sorted, 0.975),
                replicates: reps,
                seed,
                failures,
            }
        })
        .collect())
}
