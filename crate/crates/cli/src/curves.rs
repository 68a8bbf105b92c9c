use crate::output::{num, Report, Table};
use crate::Outcome;
use anyhow::{bail, Context, Result};
use clap::Args;
use laad::penalty::{laad_threshold, prox, DEFAULT_MCP_GAMMA, DEFAULT_SCAD_A};
use laad::{PenaltyKind, PenaltySpec};
use serde_json::json;
use std::str::FromStr;

#[derive(Args, Debug)]
pub struct CurveArgs {
    /// Penalties to sample; repeatable. Defaults to ridge, lasso and laad.
    #[arg(long)]
    penalty: Vec<PenaltyKind>,
    /// Strength used for the thresholding curves.
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    /// `start:stop:step` for z.
    #[arg(long, default_value = "-5:5:0.01", allow_hyphen_values = true)]
    z_range: Range,
    /// `start:stop:step` for the strength axis of the LAAD zero region.
    #[arg(long, default_value = "0.1:5:0.1", allow_hyphen_values = true)]
    r_range: Range,
}

/// An inclusive arithmetic grid. Points are rounded to the number of
/// decimals written in its bounds so `1` is exactly `1`, not `1.0000000002`.
#[derive(Clone, Debug, PartialEq)]
pub struct Range {
    start: f64,
    step: f64,
    count: usize,
    decimals: i32,
}

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, h] = parts[..] else {
            return Err(format!("expected start:stop:step, got `{s}`"));
        };
        let parse = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("`{t}` is not a number"));
        let (start, stop, step) = (parse(a)?, parse(b)?, parse(h)?);
        if !(step > 0.0 && step.is_finite() && start.is_finite() && stop >= start) {
            return Err(format!("need start ≤ stop and a positive step, got `{s}`"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        if count > 10_000_000 {
            return Err(format!("`{s}` has {count} points"));
        }
        let decimals = [a, b, h]
            .iter()
            .map(|t| t.split_once('.').map_or(0, |(_, frac)| frac.trim().len() as i32))
            .max()
            .unwrap_or(0);
        Ok(Range { start, step, count, decimals })
    }
}

impl Range {
    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let scale = 10f64.powi(self.decimals);
        (0..self.count).map(move |k| ((self.start + k as f64 * self.step) * scale).round() / scale)
    }
}

fn spec(kind: PenaltyKind, r: f64) -> laad::Result<PenaltySpec> {
    match kind {
        PenaltyKind::Scad => PenaltySpec::scad(r, DEFAULT_SCAD_A),
        PenaltyKind::Mcp => PenaltySpec::mcp(r, DEFAULT_MCP_GAMMA),
        k => PenaltySpec::new(k, r),
    }
}

pub fn run(args: &CurveArgs) -> Result<Outcome> {
    if !(args.r > 0.0 && args.r.is_finite()) {
        bail!("--r must be positive, got {}", args.r);
    }
    let kinds = if args.penalty.is_empty() {
        vec![PenaltyKind::Ridge, PenaltyKind::Lasso, PenaltyKind::Laad]
    } else {
        args.penalty.clone()
    };

    let mut curves = Table::new("curves", &["penalty", "r", "z", "theta"]);
    for &kind in &kinds {
        let s = spec(kind, args.r).with_context(|| format!("penalty {}", kind.name()))?;
        for z in args.z_range.points() {
            curves.push(vec![json!(kind.name()), num(args.r), num(z), num(prox(z, &s)?)]);
        }
    }

    let mut thresholds = Table::new("laad_thresholds", &["r", "threshold"]);
    let mut region = Table::new("laad_region", &["r", "z", "zero"]);
    for r in args.r_range.points().filter(|r| *r > 0.0) {
        thresholds.push(vec![num(r), num(laad_threshold(r)?)]);
        let s = PenaltySpec::laad(r)?;
        for z in args.z_range.points() {
            region.push(vec![num(r), num(z), json!(u8::from(prox(z, &s)? == 0.0))]);
        }
    }

    let text = format!(
        "{} curve points for {}; LAAD region {} points\n",
        curves.rows.len(),
        kinds.iter().map(|k| k.name()).collect::<Vec<_>>().join(", "),
        region.rows.len()
    );
    let mut report = Report::new("curves");
    report.field("r", num(args.r));
    report.tables = vec![curves, thresholds, region];
    Ok((report, text))
}
