use crate::output::{num, Provenance, Report, Table};
use crate::{InputArgs, Outcome, StrengthArgs};
use anyhow::{bail, Context, Result};
use laad::reserve::*;
use laad::select::{default_grid, empirical_edf, kfold_cv, GRID_POINTS, GRID_RATIO};
use laad::uncertainty::bootstrap_reserve_with;
use serde_json::json;
use std::fmt::Write;
use std::fs::File;

struct Inputs {
    triangles: Vec<LossTriangle>,
    actuals: Option<NextDiagonal>,
    design: ReserveDesign,
}

fn load(args: &InputArgs) -> Result<Inputs> {
    let triangles = match &args.input {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            read_triangles(file).with_context(|| format!("reading {}", path.display()))?
        }
        None => laad::data::triangles()?,
    };
    let actuals = match (&args.actuals, &args.input) {
        (Some(path), _) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            Some(read_next_diagonal(file, &triangles).with_context(|| format!("reading {}", path.display()))?)
        }
        (None, None) => Some(laad::data::next_diagonal()?),
        (None, Some(_)) => None,
    };
    let design = build_design(&link_ratios(&triangles)?, triangles.len())?;
    Ok(Inputs { triangles, actuals, design })
}

fn fit_model(inputs: &Inputs, model: ReserveModel, strength: &StrengthArgs) -> Result<(ReserveFit, Option<Provenance>)> {
    let choice = strength.resolve(model.penalty_kind().is_some(), &format!("model {model}"))?;
    let provenance = match choice {
        Some(Strength::Cv { seed, .. }) => Some(Provenance { seed, reps: None }),
        _ => None,
    };
    let fit = fit_reserving_with(&inputs.design, model, choice, &ReserveOptions::default())?;
    Ok((fit, provenance))
}

fn describe_fit(report: &mut Report, fit: &ReserveFit) {
    report.field("model", fit.model.name());
    report.field("strength", fit.strength.map(num));
    report.field("sigma2_hat", num(fit.sigma2_hat));
    report.field("nonzero", fit.nonzero);
    report.field("converged", fit.converged);
    if let Some(cv) = &fit.cv {
        report.field("cv", json!({ "r_min": cv.r_min, "r_1se": cv.r_1se, "r_selected": cv.r_selected }));
    }
}

fn header_line(fit: &ReserveFit) -> String {
    let mut s = format!("model {}", fit.model);
    if let Some(r) = fit.strength {
        write!(s, ", strength {r:.6}").unwrap();
    }
    writeln!(s, ", sigma2 {:.6}", fit.sigma2_hat).unwrap();
    if fit.strength_warning {
        s.push_str("warning: strength above 1, descent is not guaranteed to converge\n");
    }
    s
}

pub fn fit(model: ReserveModel, input: &InputArgs, strength: &StrengthArgs) -> Result<Outcome> {
    let inputs = load(input)?;
    let (fit, provenance) = fit_model(&inputs, model, strength)?;
    let lines = &fit.factors.lines;

    let mut header = vec!["lag"];
    header.extend(lines.iter().map(String::as_str));
    let mut factors = Table::new("factors", &header);
    let mut text = header_line(&fit);
    writeln!(text, "{:>4} {}", "lag", lines.iter().map(|l| format!("{l:>9}")).collect::<String>()).unwrap();
    for lag in 2..=fit.factors.dev_count {
        let values: Vec<f64> = (0..lines.len()).map(|l| fit.factors.factor(l, lag).unwrap_or(f64::NAN)).collect();
        let mut row = vec![json!(lag)];
        row.extend(values.iter().map(|v| num(*v)));
        factors.push(row);
        writeln!(text, "{lag:>4} {}", values.iter().map(|v| format!("{v:>9.4}")).collect::<String>()).unwrap();
    }

    // Log-scale decomposition of each triangle on its own.
    let cc: Vec<CrossClassified> = inputs
        .triangles
        .iter()
        .map(fit_cross_classified)
        .collect::<laad::Result<_>>()?;
    let mut cc_header = vec!["parameter"];
    cc_header.extend(inputs.triangles.iter().map(|t| t.line_id()));
    let mut cross = Table::new("cross_classified", &cc_header);
    let mut cells = |name: String, pick: &dyn Fn(&CrossClassified) -> Option<f64>| {
        let mut row = vec![json!(name)];
        row.extend(cc.iter().map(|c| pick(c).map_or(serde_json::Value::Null, num)));
        cross.push(row);
    };
    cells("gamma".into(), &|c| Some(c.gamma));
    let max_i = cc.iter().map(|c| c.alpha.len()).max().unwrap_or(0);
    for i in 0..max_i {
        cells(format!("alpha{}", i + 2), &|c| c.alpha.get(i).copied());
    }
    let max_j = cc.iter().map(|c| c.delta.len()).max().unwrap_or(0);
    for j in 0..max_j {
        cells(format!("delta{}", j + 2), &|c| c.delta.get(j).copied());
    }

    let mut report = Report::new("fit");
    report.provenance = provenance;
    describe_fit(&mut report, &fit);
    report.tables = vec![factors, cross];
    Ok((report, text))
}

pub fn cv(model: ReserveModel, input: &InputArgs, k: usize, seed: u64) -> Result<Outcome> {
    let inputs = load(input)?;
    let opts = ReserveOptions::default();
    let Some(template) = opts.penalty(model, 1.0)? else {
        bail!("model {model} has no penalty to cross-validate");
    };
    let data = &inputs.design.dataset;
    let weights = &inputs.design.weights;
    let grid = default_grid(data, &template, weights, &opts.cd, GRID_POINTS, GRID_RATIO)?;
    let res = kfold_cv(data, &template, weights, &grid, k, seed, &opts.cd)?;

    let mut table = Table::new("cv", &["strength", "cv_rmse_mean", "cv_rmse_se", "edf"]);
    for (i, &r) in res.grid.iter().enumerate() {
        let edf = empirical_edf(data, &template.with_strength(r), weights, None, &opts.cd)?;
        table.push(vec![num(r), num(res.cv_rmse_mean[i]), num(res.cv_rmse_se[i]), num(edf)]);
    }
    let mut report = Report::new("cv");
    report.provenance = Some(Provenance { seed, reps: None });
    report.field("model", model.name());
    report.field("k", k);
    report.field("r_min", num(res.r_min));
    report.field("r_1se", num(res.r_1se));
    report.field("r_selected", num(res.r_selected));
    report.tables.push(table);
    let text = format!(
        "model {model}, {k}-fold, seed {seed}\nr_min {:.6}  r_1se {:.6}  selected {:.6}\n",
        res.r_min, res.r_1se, res.r_selected
    );
    Ok((report, text))
}

pub fn predict(model: ReserveModel, input: &InputArgs, strength: &StrengthArgs) -> Result<Outcome> {
    let inputs = load(input)?;
    let (fit, provenance) = fit_model(&inputs, model, strength)?;
    let prediction = predict_next_diagonal(&inputs.triangles, &fit.factors)?;
    let metrics = match &inputs.actuals {
        Some(a) => Some(validate(&prediction, a)?),
        None => None,
    };

    let mut rows = Table::new("predictions", &["line", "accident_year", "lag", "latest", "predicted", "actual"]);
    for r in &prediction.rows {
        let actual = inputs
            .actuals
            .as_ref()
            .and_then(|a| a.get(&r.line, r.accident_year))
            .map_or(serde_json::Value::Null, |v| num(v - r.latest));
        rows.push(vec![json!(r.line), json!(r.accident_year), json!(r.lag), num(r.latest), num(r.incremental), actual]);
    }

    let mut totals = Table::new("totals", &["line", "predicted_total", "actual_total", "rmse", "mae"]);
    let mut text = header_line(&fit);
    for (line, total) in &prediction.totals {
        let m = metrics.as_ref().and_then(|ms| ms.iter().find(|m| &m.line == line));
        let opt = |f: fn(&LineMetrics) -> f64| m.map_or(serde_json::Value::Null, |m| num(f(m)));
        totals.push(vec![json!(line), num(*total), opt(|m| m.actual_total), opt(|m| m.rmse), opt(|m| m.mae)]);
        match m {
            Some(m) => writeln!(
                text,
                "{line}: total {total:.0} (actual {:.0}), RMSE {:.2}, MAE {:.2}",
                m.actual_total, m.rmse, m.mae
            ),
            None => writeln!(text, "{line}: total {total:.0}"),
        }
        .unwrap();
    }

    let mut report = Report::new("predict");
    report.provenance = provenance;
    describe_fit(&mut report, &fit);
    report.tables = vec![totals, rows];
    Ok((report, text))
}

pub fn bootstrap(model: ReserveModel, input: &InputArgs, strength: &StrengthArgs, reps: usize) -> Result<Outcome> {
    let Some(seed) = strength.seed else {
        bail!("bootstrap needs --seed");
    };
    let inputs = load(input)?;
    let opts = ReserveOptions::default();
    // A cross-validated strength is chosen once, on the observed data.
    let fixed = match strength.resolve(model.penalty_kind().is_some(), &format!("model {model}"))? {
        None => None,
        Some(Strength::Fixed(v)) => Some(v),
        Some(cv) => fit_reserving_with(&inputs.design, model, Some(cv), &opts)?.strength,
    };
    let summaries = bootstrap_reserve_with(&inputs.design, &inputs.triangles, model, fixed, reps, seed, &opts)?;
    let actual = inputs.actuals.as_ref().map(|a| actual_totals(&inputs.triangles, a));

    let mut summary = Table::new("bootstrap_summary", &["line", "mean", "lower95", "upper95", "actual_total", "failures"]);
    let mut replicates = Table::new("bootstrap_replicates", &["line", "replicate", "unpaid_loss"]);
    let mut text = format!("model {model}, {reps} replicates, seed {seed}\n");
    for s in &summaries {
        let act = actual.as_ref().and_then(|a| a.iter().find(|(l, _)| *l == s.line)).map(|(_, v)| *v);
        summary.push(vec![
            json!(s.line),
            num(s.mean),
            num(s.lower95),
            num(s.upper95),
            act.map_or(serde_json::Value::Null, num),
            json!(s.failures),
        ]);
        for (i, v) in s.replicates.iter().enumerate() {
            replicates.push(vec![json!(s.line), json!(i + 1), num(*v)]);
        }
        write!(text, "{}: mean {:.0}, 95% interval ({:.0}, {:.0})", s.line, s.mean, s.lower95, s.upper95).unwrap();
        match act {
            Some(a) => writeln!(text, ", actual {a:.0}"),
            None => writeln!(text),
        }
        .unwrap();
    }

    let mut report = Report::new("bootstrap");
    report.provenance = Some(Provenance { seed, reps: Some(reps) });
    report.field("model", model.name());
    report.field("strength", fixed.map(num));
    report.tables = vec![summary, replicates];
    Ok((report, text))
}
