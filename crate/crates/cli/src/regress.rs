use crate::output::{num, Provenance, Report, Table};
use crate::{Outcome, StrengthArgs};
use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use laad::penalty::{DEFAULT_MCP_GAMMA, DEFAULT_SCAD_A};
use laad::select::{default_grid, kfold_cv, GRID_POINTS, GRID_RATIO};
use laad::solver::{coordinate_descent, ols_fit};
use laad::{CdOptions, Dataset, LossScale, PenaltyKind, PenaltySpec};
use nalgebra::{DMatrix, DVector};
use serde_json::json;
use std::fmt::Write;
use std::fs::File;
use std::path::PathBuf;

#[derive(Args, Debug)]
pub struct RegressArgs {
    /// CSV with a header row; every used column must be numeric.
    #[arg(long)]
    input: PathBuf,
    /// Name of the response column.
    #[arg(long)]
    response: String,
    /// Predictor columns, comma separated; defaults to all others.
    #[arg(long, value_delimiter = ',')]
    columns: Vec<String>,
    #[arg(long, default_value = "laad")]
    penalty: PenaltyKind,
    /// Fit without centering, so no intercept is estimated.
    #[arg(long)]
    no_intercept: bool,
    #[command(flatten)]
    strength: StrengthArgs,
}

struct NumericCsv {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

/// Reads a numeric CSV; errors name the file line and column.
fn read_numeric(path: &PathBuf, keep: &[usize]) -> Result<NumericCsv> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut rdr = csv::Reader::from_reader(file);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| anyhow!("{}: {e}", path.display()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut row = Vec::with_capacity(keep.len());
        for &j in keep {
            let raw = rec.get(j).unwrap_or("").trim();
            let v: f64 = raw.parse().map_err(|_| {
                anyhow!("{} line {line}: column `{}`: `{raw}` is not a number", path.display(), header[j])
            })?;
            if !v.is_finite() {
                bail!("{} line {line}: column `{}` is not finite", path.display(), header[j]);
            }
            row.push(v);
        }
        rows.push(row);
    }
    Ok(NumericCsv { header, rows })
}

fn column_index(header: &[String], name: &str) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| anyhow!("no column named `{name}` (have: {})", header.join(", ")))
}

pub fn run(args: &RegressArgs) -> Result<Outcome> {
    let header: Vec<String> = {
        let file = File::open(&args.input).with_context(|| format!("opening {}", args.input.display()))?;
        csv::Reader::from_reader(file).headers()?.iter().map(|h| h.trim().to_string()).collect()
    };
    let y_col = column_index(&header, &args.response)?;
    let x_cols: Vec<usize> = if args.columns.is_empty() {
        (0..header.len()).filter(|&j| j != y_col).collect()
    } else {
        args.columns.iter().map(|c| column_index(&header, c)).collect::<Result<_>>()?
    };
    if x_cols.is_empty() {
        bail!("no predictor columns");
    }
    let mut keep = vec![y_col];
    keep.extend(&x_cols);
    let raw = read_numeric(&args.input, &keep)?;
    let n = raw.rows.len();
    let p = x_cols.len();
    if n < 2 {
        bail!("need at least two data rows, got {n}");
    }

    let mut x = DMatrix::from_fn(n, p, |i, j| raw.rows[i][j + 1]);
    let mut y = DVector::from_fn(n, |i, _| raw.rows[i][0]);
    let names: Vec<String> = x_cols.iter().map(|&j| raw.header[j].clone()).collect();
    let (x_mean, y_mean) = if args.no_intercept {
        (vec![0.0; p], 0.0)
    } else {
        let means: Vec<f64> = (0..p).map(|j| x.column(j).mean()).collect();
        let ym = y.mean();
        for (j, m) in means.iter().enumerate() {
            x.column_mut(j).add_scalar_mut(-m);
        }
        y.add_scalar_mut(-ym);
        (means, ym)
    };
    let data = Dataset::new(x, y, names.clone())?;
    let opts = CdOptions { loss: LossScale::Mean, ..CdOptions::default() };
    let weights = vec![1.0; p];

    let penalized = args.penalty != PenaltyKind::None;
    let choice = args.strength.resolve(penalized, &format!("penalty {}", args.penalty.name()))?;
    let mut provenance = None;
    let mut strength = None;
    let fit = match choice {
        None => ols_fit(&data)?,
        Some(choice) => {
            let template = match args.penalty {
                PenaltyKind::Scad => PenaltySpec::scad(1.0, DEFAULT_SCAD_A)?,
                PenaltyKind::Mcp => PenaltySpec::mcp(1.0, DEFAULT_MCP_GAMMA)?,
                k => PenaltySpec::new(k, 1.0)?,
            };
            let r = match choice {
                laad::reserve::Strength::Fixed(r) => r,
                laad::reserve::Strength::Cv { k, seed } => {
                    provenance = Some(Provenance { seed, reps: None });
                    let grid = default_grid(&data, &template, &weights, &opts, GRID_POINTS, GRID_RATIO)?;
                    kfold_cv(&data, &template, &weights, &grid, k, seed, &opts)?.r_selected
                }
            };
            strength = Some(r);
            coordinate_descent(&data, &template.with_strength(r), &weights, &opts)?
        }
    };

    let beta = &fit.coefficients;
    let mut table = Table::new("coefficients", &["term", "estimate"]);
    let mut text = format!("{} rows, {} predictors, penalty {}", n, p, args.penalty.name());
    if let Some(r) = strength {
        write!(text, " at strength {r:.6}").unwrap();
    }
    text.push('\n');
    if !args.no_intercept {
        let intercept = y_mean - beta.iter().zip(&x_mean).map(|(b, m)| b * m).sum::<f64>();
        table.push(vec![json!("(intercept)"), num(intercept)]);
        writeln!(text, "{:<20}{intercept:>14.6}", "(intercept)").unwrap();
    }
    for (name, b) in names.iter().zip(beta) {
        table.push(vec![json!(name), num(*b)]);
        writeln!(text, "{name:<20}{b:>14.6}").unwrap();
    }

    let mut report = Report::new("regress");
    report.provenance = provenance;
    report.field("response", args.response.as_str());
    report.field("penalty", args.penalty.name());
    report.field("strength", strength.map(num));
    report.field("n", n);
    report.field("rss", num(fit.rss));
    report.field("nonzero", fit.nonzero_count());
    report.tables.push(table);
    Ok((report, text))
}
