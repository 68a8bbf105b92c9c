use crate::output::{num, Provenance, Report, Table};
use crate::Outcome;
use anyhow::Result;
use clap::Args;
use laad::sim::{run_sim_study, SimConfig, SimModel};
use serde_json::json;
use std::fmt::Write;

#[derive(Args, Debug)]
pub struct SimArgs {
    /// Sample size per replicate.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long)]
    seed: u64,
    /// Comma-separated subset of full, reduced, best, lasso, mcp, scad, laad.
    #[arg(long, value_delimiter = ',')]
    models: Vec<SimModel>,
}

pub fn run(args: &SimArgs) -> Result<Outcome> {
    let mut config = SimConfig::new(args.n, args.reps, args.seed);
    if !args.models.is_empty() {
        config.models = args.models.clone();
    }
    let report = run_sim_study(&config)?;

    let mut coefs = Table::new("sim_coefficients", &["model", "coefficient", "truth", "bias", "rmse"]);
    let mut summary = Table::new(
        "sim_summary",
        &["model", "mean_l1_diff", "mean_l0_diff", "avg_runtime_seconds", "failures"],
    );
    let mut text = format!("n {}, {} replicates, seed {}\n", args.n, args.reps, args.seed);
    writeln!(text, "{:<10}{:>10}{:>10}{:>12}", "model", "L1", "L0", "seconds").unwrap();
    for m in &report.models {
        let name = m.model.name();
        for c in &m.coefficients {
            coefs.push(vec![json!(name), json!(c.name), num(c.truth), num(c.bias), num(c.rmse)]);
        }
        summary.push(vec![
            json!(name),
            num(m.mean_l1_diff),
            num(m.mean_l0_diff),
            num(m.avg_runtime_seconds),
            json!(m.failures),
        ]);
        writeln!(
            text,
            "{name:<10}{:>10.3}{:>10.3}{:>12.5}",
            m.mean_l1_diff, m.mean_l0_diff, m.avg_runtime_seconds
        )
        .unwrap();
    }

    let mut out = Report::new("simulate");
    out.provenance = Some(Provenance { seed: args.seed, reps: Some(args.reps) });
    out.field("n", args.n);
    out.tables = vec![coefs, summary];
    Ok((out, text))
}
