//! Univariate penalties and their proximal (thresholding) operators.
//!
//! Every operator here solves `argmin_θ ½(z − θ)² + p(θ)` in closed form,
//! except the LAAD selection threshold for `r > 1`, which is the root of a
//! strictly decreasing gap function and is found by bisection.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const DEFAULT_SCAD_A: f64 = 3.7;
pub const DEFAULT_MCP_GAMMA: f64 = 3.0;

const THRESHOLD_TOL: f64 = 1e-12;
const THRESHOLD_MAX_ITER: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyKind {
    None,
    Ridge,
    Lasso,
    Scad,
    Mcp,
    Laad,
}

impl PenaltyKind {
    pub fn name(self) -> &'static str {
        match self {
            PenaltyKind::None => "none",
            PenaltyKind::Ridge => "ridge",
            PenaltyKind::Lasso => "lasso",
            PenaltyKind::Scad => "scad",
            PenaltyKind::Mcp => "mcp",
            PenaltyKind::Laad => "laad",
        }
    }

    /// True for penalties that set small inputs exactly to zero.
    pub fn is_sparse(self) -> bool {
        matches!(
            self,
            PenaltyKind::Lasso | PenaltyKind::Scad | PenaltyKind::Mcp | PenaltyKind::Laad
        )
    }
}

impl std::str::FromStr for PenaltyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(PenaltyKind::None),
            "ridge" => Ok(PenaltyKind::Ridge),
            "lasso" => Ok(PenaltyKind::Lasso),
            "scad" => Ok(PenaltyKind::Scad),
            "mcp" => Ok(PenaltyKind::Mcp),
            "laad" => Ok(PenaltyKind::Laad),
            other => Err(Error::invalid(format!("unknown penalty kind `{other}`"))),
        }
    }
}

/// Penalty family plus its tuning parameters.
///
/// `strength` is `r` for LAAD and `λ` for the others. Ridge uses
/// `p(θ) = λθ²/2`, so its prox is `z / (1 + λ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    pub strength: f64,
    pub scad_a: f64,
    pub mcp_gamma: f64,
}

impl PenaltySpec {
    pub fn new(kind: PenaltyKind, strength: f64) -> Result<Self> {
        let spec = PenaltySpec {
            kind,
            strength,
            scad_a: DEFAULT_SCAD_A,
            mcp_gamma: DEFAULT_MCP_GAMMA,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn none() -> Self {
        PenaltySpec {
            kind: PenaltyKind::None,
            strength: 0.0,
            scad_a: DEFAULT_SCAD_A,
            mcp_gamma: DEFAULT_MCP_GAMMA,
        }
    }

    pub fn lasso(lambda: f64) -> Result<Self> {
        Self::new(PenaltyKind::Lasso, lambda)
    }

    pub fn ridge(lambda: f64) -> Result<Self> {
        Self::new(PenaltyKind::Ridge, lambda)
    }

    pub fn laad(r: f64) -> Result<Self> {
        Self::new(PenaltyKind::Laad, r)
    }

    pub fn scad(lambda: f64, a: f64) -> Result<Self> {
        let spec = PenaltySpec {
            scad_a: a,
            ..Self::new(PenaltyKind::Scad, lambda)?
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn mcp(lambda: f64, gamma: f64) -> Result<Self> {
        let spec = PenaltySpec {
            mcp_gamma: gamma,
            ..Self::new(PenaltyKind::Mcp, lambda)?
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == PenaltyKind::None {
            return Ok(());
        }
        if !(self.strength.is_finite() && self.strength >= 0.0) {
            return Err(Error::invalid(format!(
                "penalty strength must be finite and nonnegative, got {}",
                self.strength
            )));
        }
        if self.kind == PenaltyKind::Scad && !(self.scad_a > 2.0) {
            return Err(Error::invalid(format!(
                "SCAD requires a > 2, got {}",
                self.scad_a
            )));
        }
        if self.kind == PenaltyKind::Mcp && !(self.mcp_gamma > 1.0) {
            return Err(Error::invalid(format!(
                "MCP requires gamma > 1, got {}",
                self.mcp_gamma
            )));
        }
        Ok(())
    }

    /// Same family and shape parameters with a different strength.
    pub fn with_strength(&self, strength: f64) -> Self {
        PenaltySpec { strength, ..*self }
    }

    /// Strength multiplied by a per-coefficient weight.
    pub fn scaled(&self, weight: f64) -> Self {
        self.with_strength(self.strength * weight)
    }
}

/// Outcome of the LAAD proximal map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProxResult {
    pub theta_hat: f64,
    /// True when the interior stationary point was returned instead of 0.
    pub interior_stationary: bool,
    /// Δ(z|r) when it was evaluated.
    pub delta_value: Option<f64>,
}

fn check_r(r: f64) -> Result<()> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::invalid(format!("LAAD r must be positive, got {r}")));
    }
    Ok(())
}

/// Interior stationary point of the LAAD objective at `|z|`, if real.
fn theta_star(abs_z: f64, r: f64) -> Option<f64> {
    let square = (abs_z + 1.0) * (abs_z + 1.0);
    let disc = square - 4.0 * r;
    // Rounding can push the tangency point z = 2√r − 1 just below zero.
    if disc < -4.0 * f64::EPSILON * square {
        None
    } else {
        Some(0.5 * (abs_z - 1.0 + disc.max(0.0).sqrt()))
    }
}

fn delta_at(abs_z: f64, theta: f64, r: f64) -> f64 {
    0.5 * theta * theta - theta * abs_z + r * theta.ln_1p()
}

/// `Δ(z|r) = ½θ*² − θ*|z| + r·log(1+θ*)`, the objective gap between the
/// interior stationary point and zero.
pub fn laad_delta(z: f64, r: f64) -> Result<f64> {
    check_r(r)?;
    if !z.is_finite() {
        return Err(Error::invalid("z must be finite"));
    }
    let abs_z = z.abs();
    let theta = theta_star(abs_z, r).ok_or_else(|| {
        Error::Domain(format!(
            "Δ(z|r) undefined: (|z|+1)² < 4r at z = {z}, r = {r}"
        ))
    })?;
    Ok(delta_at(abs_z, theta, r))
}

/// Selection threshold of the LAAD prox: `r` when `r ≤ 1`, otherwise the
/// unique root `z*(r)` of `Δ(·|r)` on `[2√r − 1, r]`.
pub fn laad_threshold(r: f64) -> Result<f64> {
    check_r(r)?;
    if r <= 1.0 {
        return Ok(r);
    }
    let mut lo = 2.0 * r.sqrt() - 1.0;
    let mut hi = r;
    let gap = |z: f64| {
        // Clamp guards the bracket endpoint where the discriminant is 0.
        let theta = theta_star(z, r).unwrap_or(0.5 * (z - 1.0));
        delta_at(z, theta, r)
    };
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..THRESHOLD_MAX_ITER {
        mid = 0.5 * (lo + hi);
        let d = gap(mid);
        if d.abs() <= THRESHOLD_TOL {
            break;
        }
        // Δ is strictly decreasing in z.
        if d > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(mid)
}

/// LAAD prox with a precomputed threshold.
fn laad_prox_with(z: f64, r: f64, threshold: f64) -> ProxResult {
    let abs_z = z.abs();
    let theta = theta_star(abs_z, r);
    let delta_value = if r > 1.0 {
        theta.map(|t| delta_at(abs_z, t, r))
    } else {
        None
    };
    match theta {
        Some(t) if abs_z >= threshold && t > 0.0 => ProxResult {
            theta_hat: t.copysign(z),
            interior_stationary: true,
            delta_value,
        },
        Some(_) if abs_z >= threshold => ProxResult {
            theta_hat: 0.0,
            interior_stationary: true,
            delta_value,
        },
        _ => ProxResult {
            theta_hat: 0.0,
            interior_stationary: false,
            delta_value,
        },
    }
}

/// `argmin_θ ½(z − θ)² + r·log(1 + |θ|)`.
pub fn laad_prox(z: f64, r: f64) -> Result<ProxResult> {
    check_r(r)?;
    if !z.is_finite() {
        return Err(Error::invalid("z must be finite"));
    }
    let threshold = laad_threshold(r)?;
    Ok(laad_prox_with(z, r, threshold))
}

fn soft(z: f64, lambda: f64) -> f64 {
    (z.abs() - lambda).max(0.0).copysign(z)
}

/// A prox operator with any per-strength setup (the LAAD threshold) done
/// once, for use inside solver loops.
#[derive(Clone, Copy, Debug)]
pub struct Prox {
    spec: PenaltySpec,
    laad_threshold: f64,
}

impl Prox {
    pub fn new(spec: PenaltySpec) -> Result<Self> {
        spec.validate()?;
        let laad_threshold = if spec.kind == PenaltyKind::Laad && spec.strength > 0.0 {
            laad_threshold(spec.strength)?
        } else {
            0.0
        };
        Ok(Prox {
            spec,
            laad_threshold,
        })
    }

    pub fn spec(&self) -> &PenaltySpec {
        &self.spec
    }

    /// Smallest `|z|` mapped to a nonzero value (0 for non-sparse kinds).
    pub fn threshold(&self) -> f64 {
        match self.spec.kind {
            PenaltyKind::None | PenaltyKind::Ridge => 0.0,
            PenaltyKind::Lasso | PenaltyKind::Scad | PenaltyKind::Mcp => self.spec.strength,
            PenaltyKind::Laad => self.laad_threshold,
        }
    }

    pub fn apply(&self, z: f64) -> f64 {
        let lambda = self.spec.strength;
        if lambda == 0.0 {
            return z;
        }
        match self.spec.kind {
            PenaltyKind::None => z,
            PenaltyKind::Ridge => z / (1.0 + lambda),
            PenaltyKind::Lasso => soft(z, lambda),
            PenaltyKind::Scad => {
                let a = self.spec.scad_a;
                let abs_z = z.abs();
                if abs_z <= 2.0 * lambda {
                    soft(z, lambda)
                } else if abs_z <= a * lambda {
                    ((a - 1.0) * z - (a * lambda).copysign(z)) / (a - 2.0)
                } else {
                    z
                }
            }
            PenaltyKind::Mcp => {
                let g = self.spec.mcp_gamma;
                if z.abs() <= g * lambda {
                    soft(z, lambda) / (1.0 - 1.0 / g)
                } else {
                    z
                }
            }
            PenaltyKind::Laad => laad_prox_with(z, lambda, self.laad_threshold).theta_hat,
        }
    }
}

/// Proximal map of any supported penalty.
pub fn prox(z: f64, spec: &PenaltySpec) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::invalid("z must be finite"));
    }
    if spec.kind == PenaltyKind::Laad {
        return Ok(laad_prox(z, spec.strength)?.theta_hat);
    }
    Ok(Prox::new(*spec)?.apply(z))
}

/// Penalty value `p(θ)` for a single coefficient.
pub fn penalty_at(theta: f64, spec: &PenaltySpec) -> f64 {
    let t = theta.abs();
    let lambda = spec.strength;
    match spec.kind {
        PenaltyKind::None => 0.0,
        PenaltyKind::Ridge => 0.5 * lambda * theta * theta,
        PenaltyKind::Lasso => lambda * t,
        PenaltyKind::Laad => lambda * t.ln_1p(),
        PenaltyKind::Scad => {
            let a = spec.scad_a;
            if t <= lambda {
                lambda * t
            } else if t <= a * lambda {
                (2.0 * a * lambda * t - t * t - lambda * lambda) / (2.0 * (a - 1.0))
            } else {
                lambda * lambda * (a + 1.0) / 2.0
            }
        }
        PenaltyKind::Mcp => {
            let g = spec.mcp_gamma;
            if t <= g * lambda {
                lambda * t - t * t / (2.0 * g)
            } else {
                g * lambda * lambda / 2.0
            }
        }
    }
}

/// Right derivative `p′(θ)` for `θ ≥ 0`.
pub fn penalty_derivative(theta: f64, spec: &PenaltySpec) -> f64 {
    let t = theta.abs();
    let lambda = spec.strength;
    match spec.kind {
        PenaltyKind::None => 0.0,
        PenaltyKind::Ridge => lambda * t,
        PenaltyKind::Lasso => lambda,
        PenaltyKind::Laad => lambda / (1.0 + t),
        PenaltyKind::Scad => {
            if t <= lambda {
                lambda
            } else {
                (spec.scad_a * lambda - t).max(0.0) / (spec.scad_a - 1.0)
            }
        }
        PenaltyKind::Mcp => (lambda - t / spec.mcp_gamma).max(0.0),
    }
}

/// `Σ_j w_j · p(β_j)`; a zero weight exempts a coefficient.
pub fn penalty_value(beta: &[f64], spec: &PenaltySpec, weights: &[f64]) -> Result<f64> {
    if beta.len() != weights.len() {
        return Err(Error::invalid(format!(
            "beta has {} entries but weights has {}",
            beta.len(),
            weights.len()
        )));
    }
    Ok(beta
        .iter()
        .zip(weights)
        .map(|(&b, &w)| if w == 0.0 { 0.0 } else { w * penalty_at(b, spec) })
        .sum())
}

/// Scalar prox objective `½(z − θ)² + p(θ)`.
pub fn prox_objective(theta: f64, z: f64, spec: &PenaltySpec) -> f64 {
    0.5 * (z - theta) * (z - theta) + penalty_at(theta, spec)
}

/// Brute-force grid minimizer of the prox objective over `[lo, hi]`.
///
/// Test oracle only; the solver never calls it.
pub fn oracle_prox(z: f64, spec: &PenaltySpec, lo: f64, hi: f64, step: f64) -> Result<f64> {
    if !(lo < hi) || !(step > 0.0) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid(format!(
            "empty grid: lo = {lo}, hi = {hi}, step = {step}"
        )));
    }
    let count = ((hi - lo) / step).floor() as usize;
    let mut best = lo;
    let mut best_value = prox_objective(lo, z, spec);
    for k in 1..=count {
        let theta = lo + k as f64 * step;
        let value = prox_objective(theta, z, spec);
        if value < best_value {
            best = theta;
            best_value = value;
        }
    }
    // Zero is always a candidate; it is the sparse minimizer of interest.
    if lo <= 0.0 && hi >= 0.0 && prox_objective(0.0, z, spec) <= best_value {
        best = 0.0;
    }
    Ok(best)
}
