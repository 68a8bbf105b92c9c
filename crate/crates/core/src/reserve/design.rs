use super::triangle::{LinkRatio, LinkRatioSet};
use crate::error::{Error, Result};
use crate::solver::Dataset;
use nalgebra::{DMatrix, DVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoefKind {
    /// Development effect shared by all lines.
    Eta,
    /// Line-specific offset from the shared effect.
    Kappa,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CoefLabel {
    pub kind: CoefKind,
    pub lag: usize,
    /// Line index for κ columns.
    pub line: Option<usize>,
}

/// Which lag-2 coefficients are left unpenalized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Exemption {
    /// Only the shared lag-2 effect.
    Eta2,
    /// The shared lag-2 effect and every line's lag-2 offset.
    #[default]
    Lag2Block,
}

/// Indicator regression of log link ratios on development effects.
///
/// Columns are `η_2..η_J` followed by `κ_2..κ_J` for each line except the
/// last, which serves as the baseline (its κ are identically zero).
#[derive(Clone, Debug, PartialEq)]
pub struct ReserveDesign {
    pub dataset: Dataset,
    pub weights: Vec<f64>,
    pub coef_map: Vec<CoefLabel>,
    pub rows: Vec<LinkRatio>,
    pub lines: Vec<String>,
    pub origin_count: usize,
    pub dev_count: usize,
}

pub fn build_design(lr: &LinkRatioSet, n_lines: usize) -> Result<ReserveDesign> {
    build_design_with(lr, n_lines, Exemption::default())
}

pub fn build_design_with(
    lr: &LinkRatioSet,
    n_lines: usize,
    exemption: Exemption,
) -> Result<ReserveDesign> {
    if n_lines == 0 || n_lines != lr.lines.len() {
        return Err(Error::invalid(format!(
            "link ratios cover {} lines, {n_lines} requested",
            lr.lines.len()
        )));
    }
    if lr.dev_count < 2 || lr.observations.is_empty() {
        return Err(Error::invalid("need at least two development lags"));
    }
    let lags = lr.dev_count - 1;
    let mut coef_map: Vec<CoefLabel> = (2..=lr.dev_count)
        .map(|lag| CoefLabel {
            kind: CoefKind::Eta,
            lag,
            line: None,
        })
        .collect();
    for line in 0..n_lines - 1 {
        coef_map.extend((2..=lr.dev_count).map(|lag| CoefLabel {
            kind: CoefKind::Kappa,
            lag,
            line: Some(line),
        }));
    }
    let p = coef_map.len();
    let n = lr.observations.len();
    let mut design = DMatrix::zeros(n, p);
    for (row, obs) in lr.observations.iter().enumerate() {
        design[(row, obs.lag - 2)] = 1.0;
        if obs.line + 1 < n_lines {
            design[(row, lags * (obs.line + 1) + obs.lag - 2)] = 1.0;
        }
    }
    let names = coef_map
        .iter()
        .map(|c| match c.kind {
            CoefKind::Eta => format!("eta{}", c.lag),
            CoefKind::Kappa => format!("kappa{}_{}", c.lag, lr.lines[c.line.unwrap_or(0)]),
        })
        .collect();
    let weights = coef_map
        .iter()
        .map(|c| {
            let exempt = c.lag == 2
                && (c.kind == CoefKind::Eta || exemption == Exemption::Lag2Block);
            if exempt {
                0.0
            } else {
                1.0
            }
        })
        .collect();
    let response = DVector::from_iterator(n, lr.observations.iter().map(|o| o.value));
    Ok(ReserveDesign {
        dataset: Dataset::new(design, response, names)?,
        weights,
        coef_map,
        rows: lr.observations.clone(),
        lines: lr.lines.clone(),
        origin_count: lr.origin_count,
        dev_count: lr.dev_count,
    })
}

impl ReserveDesign {
    pub fn n_lines(&self) -> usize {
        self.lines.len()
    }

    pub fn column(&self, kind: CoefKind, lag: usize, line: Option<usize>) -> Option<usize> {
        self.coef_map
            .iter()
            .position(|c| c.kind == kind && c.lag == lag && c.line == line)
    }

    /// `ζ_lag` of a line: `η_lag + κ_lag` (κ absent for the baseline line).
    pub fn zeta(&self, coefficients: &[f64], line: usize, lag: usize) -> f64 {
        let eta = self
            .column(CoefKind::Eta, lag, None)
            .map_or(0.0, |j| coefficients[j]);
        let kappa = self
            .column(CoefKind::Kappa, lag, Some(line))
            .map_or(0.0, |j| coefficients[j]);
        eta + kappa
    }

    /// Columns that carry no penalty.
    pub fn exempt_columns(&self) -> Vec<usize> {
        (0..self.weights.len())
            .filter(|&j| self.weights[j] == 0.0)
            .collect()
    }

    /// Same design with a different response vector.
    pub fn with_response(&self, response: DVector<f64>) -> Result<Self> {
        Ok(ReserveDesign {
            dataset: self.dataset.with_response(response)?,
            ..self.clone()
        })
    }
}
