//! The `analyze`, `simulate` and `verify` commands behind the `fluidq`
//! binary. Every command is a pure function of (config file, seed): outputs
//! embed the config hash and master seed in a header line, reruns with the
//! same seed are byte-identical, and exit codes are 0 (success), 1 (check
//! failures), 2 (config or usage errors).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::analytics::{self, BreakdownEmbedding, SteadyStateSummary};
use crate::config::{load_embedding_pairs, ExperimentConfig};
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};
use crate::sim;
use crate::validation::{
    failure_count, run_verification_suite, Budget, ComparisonReport, SuiteOptions, SuiteTarget,
};

#[derive(Debug, Parser)]
#[command(
    name = "fluidq",
    about = "Fluid queue with breakdowns and vacations: simulation, closed forms, verification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the closed-form steady state and write summary/curve files.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the master seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "default")]
        budget: String,
    },
    /// Simulate a path and stationary samples; write event/sample CSVs.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the theory-versus-simulation verification suite.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "default")]
        budget: String,
        /// Calibration control: shift every theory target by ten tolerances
        /// (all affected checks must then fail).
        #[arg(long)]
        perturb_theory: bool,
    },
}

/// Run a parsed command; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let outcome = match cli.command {
        Command::Analyze { config, seed, out, budget } => cmd_analyze(&config, seed, out, &budget),
        Command::Simulate { config, seed, out } => cmd_simulate(&config, seed, out),
        Command::Verify { config, seed, out, budget, perturb_theory } => {
            cmd_verify(&config, seed, out, &budget, perturb_theory)
        }
    };
    match outcome {
        Ok(failures) if failures == 0 => 0,
        Ok(_) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_)
                | Error::InvalidParameter(_)
                | Error::Unstable(_)
                | Error::Usage(_)
                | Error::Domain(_) => 2,
                _ => 1,
            }
        }
    }
}

fn out_dir(cfg: &ExperimentConfig, cli_out: Option<PathBuf>) -> Result<PathBuf> {
    let dir = cli_out
        .or_else(|| cfg.output.directory.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn header_line(cfg: &ExperimentConfig, seed: u64) -> String {
    format!("# config_hash={} seed={}", cfg.config_hash, seed)
}

fn write_csv(path: &Path, header: &str, columns: &str, rows: &[String]) -> Result<()> {
    let mut text = String::with_capacity(rows.len() * 32 + 64);
    writeln!(text, "{header}").unwrap();
    writeln!(text, "{columns}").unwrap();
    for row in rows {
        writeln!(text, "{row}").unwrap();
    }
    std::fs::write(path, text)?;
    Ok(())
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    config_hash: &'a str,
    seed: u64,
    #[serde(flatten)]
    summary: &'a SteadyStateSummary,
}

/// Build the breakdown embedding a `p > 0` analysis needs: from the
/// `embedding_file` if configured, otherwise by simulating the configured
/// number of breakdown pairs under the master seed.
fn embedding_for(
    cfg: &ExperimentConfig,
    model: &sim::QueueModel,
    seed: u64,
    budget: Budget,
) -> Result<Option<BreakdownEmbedding>> {
    if model.p() == 0.0 {
        return Ok(None);
    }
    if let Some(path) = &cfg.run.embedding_file {
        let pairs = load_embedding_pairs(path)?;
        return Ok(Some(BreakdownEmbedding::from_pairs(&pairs)?));
    }
    let n_pairs = ((cfg.run.embedding_pairs as f64 * budget.factor()) as usize).max(256);
    let horizon = n_pairs as f64 / model.failure_rate() * 1.05;
    let mut rng = stream(seed, Purpose::BreakdownPairs, 0);
    let path = sim::simulate_path(model, horizon, &[], &mut rng)?;
    Ok(Some(BreakdownEmbedding::from_pairs(path.breakdown_pairs())?))
}

fn cmd_analyze(
    config: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
    budget: &str,
) -> Result<usize> {
    let budget: Budget = budget.parse()?;
    let cfg = ExperimentConfig::from_path(config)?;
    let seed = cfg.seed(seed);
    let dir = out_dir(&cfg, out)?;
    let theta_grid = cfg.theta_grid();

    let (summary, analytic_cdf): (SteadyStateSummary, Option<Vec<(f64, f64)>>) = match &cfg.target
    {
        SuiteTarget::Queue(model) => {
            let emb = embedding_for(&cfg, model, seed, budget)?;
            let summary = analytics::summarize(model, emb.as_ref(), &theta_grid)?;
            let cdf = if model.p() == 0.0 {
                let x_grid = cfg.x_grid(summary.mean, summary.variance);
                let lst = |s| analytics::steady_state_lst_complex(model, s).expect("p = 0");
                let values = crate::transforms::invert_lst_to_cdf(&lst, &x_grid)?;
                Some(x_grid.into_iter().zip(values).collect())
            } else {
                // Empirical curves are never inverted; no CDF file for p > 0.
                None
            };
            (summary, cdf)
        }
        SuiteTarget::Reflected(net) => {
            let (mean, variance) = analytics::reflected_moments(net);
            let (d1, _, _) = net.varphi_derivatives_at_zero();
            let lst = theta_grid
                .iter()
                .map(|&theta| {
                    analytics::pk_lst(net, theta).map(|v| analytics::LstPoint {
                        theta,
                        value: v,
                        se: 0.0,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let summary = SteadyStateSummary {
                p: 0.0,
                lambda_r: 0.0,
                lambda_v: 0.0,
                mean,
                variance,
                busy_mean: mean / d1,
                lst,
            };
            let x_grid = cfg.x_grid(mean, variance);
            let values = crate::transforms::invert_lst_to_cdf(
                &|s| analytics::pk_lst_complex(net, s),
                &x_grid,
            )?;
            (summary, Some(x_grid.into_iter().zip(values).collect()))
        }
    };

    if cfg.wants_format("json") {
        let file = SummaryFile { config_hash: &cfg.config_hash, seed, summary: &summary };
        std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&file)?.as_bytes())?;
    }
    if cfg.wants_format("csv") {
        let rows: Vec<String> = summary
            .lst
            .iter()
            .map(|p| format!("{},{},{}", p.theta, p.value, p.se))
            .collect();
        write_csv(&dir.join("lst.csv"), &header_line(&cfg, seed), "theta,value,se", &rows)?;
        if let Some(cdf) = &analytic_cdf {
            let rows: Vec<String> = cdf.iter().map(|(x, v)| format!("{x},{v},0")).collect();
            write_csv(&dir.join("cdf.csv"), &header_line(&cfg, seed), "x,value,se", &rows)?;
        }
    }
    println!(
        "p = {:.6}, lambda_R = {:.6}, lambda_V = {:.6}",
        summary.p, summary.lambda_r, summary.lambda_v
    );
    println!(
        "mean = {:.6}, variance = {:.6}, busy_mean = {:.6}",
        summary.mean, summary.variance, summary.busy_mean
    );
    println!("wrote {}", dir.display());
    Ok(0)
}

fn cmd_simulate(config: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<usize> {
    let cfg = ExperimentConfig::from_path(config)?;
    let seed = cfg.seed(seed);
    let dir = out_dir(&cfg, out)?;
    let header = header_line(&cfg, seed);

    if cfg.run.horizon == 0.0 {
        // Zero horizon: empty logs, success.
        write_csv(&dir.join("events.csv"), &header, "time,kind,size,W_before,W_after", &[])?;
        write_csv(&dir.join("samples.csv"), &header, "workload", &[])?;
        println!("zero horizon: wrote empty logs to {}", dir.display());
        return Ok(0);
    }

    match &cfg.target {
        SuiteTarget::Queue(model) => {
            let mut path_rng = stream(seed, Purpose::PathSimulation, 0);
            let path = sim::simulate_path(model, cfg.run.horizon, &[], &mut path_rng)?;
            let rows: Vec<String> = path
                .events()
                .iter()
                .map(|e| {
                    format!(
                        "{},{},{},{},{}",
                        e.time,
                        e.kind.label(),
                        e.size,
                        e.w_before,
                        e.w_after
                    )
                })
                .collect();
            write_csv(&dir.join("events.csv"), &header, "time,kind,size,W_before,W_after", &rows)?;

            let mut srng = stream(seed, Purpose::StationarySamples, 0);
            let run = sim::stationary_samples(
                model,
                cfg.warmup(),
                cfg.run.samples,
                cfg.spacing(),
                &mut srng,
            )?;
            let rows: Vec<String> = run.samples.iter().map(|w| format!("{w}")).collect();
            write_csv(&dir.join("samples.csv"), &header, "workload", &rows)?;
            println!(
                "horizon {}: {} events ({} breakdowns, {} vacations); {} samples, lag-1 autocorrelation {:.4}",
                cfg.run.horizon,
                path.events().len(),
                path.breakdown_count(),
                path.vacation_count(),
                run.samples.len(),
                run.lag1_autocorrelation
            );
        }
        SuiteTarget::Reflected(net) => {
            let mut srng = stream(seed, Purpose::ReflectedSamples, 0);
            let samples =
                sim::simulate_reflected(net, cfg.warmup(), cfg.run.samples, cfg.spacing(), &mut srng)?;
            let rows: Vec<String> = samples.iter().map(|w| format!("{w}")).collect();
            write_csv(&dir.join("samples.csv"), &header, "workload", &rows)?;
            println!("{} reflected samples", samples.len());
        }
    }
    println!("wrote {}", dir.display());
    Ok(0)
}

fn cmd_verify(
    config: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
    budget: &str,
    perturb_theory: bool,
) -> Result<usize> {
    let budget: Budget = budget.parse()?;
    let cfg = ExperimentConfig::from_path(config)?;
    let seed = cfg.seed(seed);
    let dir = out_dir(&cfg, out)?;

    let options = SuiteOptions { budget, perturb_theory };
    let reports = run_verification_suite(&cfg.target, &options, seed);

    #[derive(Serialize)]
    struct ReportFile<'a> {
        config_hash: &'a str,
        seed: u64,
        checks: &'a [ComparisonReport],
    }
    let file = ReportFile { config_hash: &cfg.config_hash, seed, checks: &reports };
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&file)?.as_bytes())?;

    println!("{}", render_table(&reports));
    let failures = failure_count(&reports);
    println!(
        "{} checks, {} failed; report at {}",
        reports.len(),
        failures,
        dir.join("report.json").display()
    );
    Ok(failures)
}

/// Human-readable verdict table.
pub fn render_table(reports: &[ComparisonReport]) -> String {
    let mut s = String::new();
    writeln!(
        s,
        "{:<32} {:>12} {:>12} {:>10} {:>10} {:>6} {:>9}",
        "check", "theory", "empirical", "statistic", "threshold", "ok", "ms"
    )
    .unwrap();
    for r in reports {
        writeln!(
            s,
            "{:<32} {:>12.6} {:>12.6} {:>10.4} {:>10.4} {:>6} {:>9}",
            r.name,
            r.theory,
            r.empirical,
            r.statistic,
            r.threshold,
            if r.passed { "pass" } else { "FAIL" },
            r.runtime_ms
        )
        .unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_renders_every_report() {
        let reports = vec![ComparisonReport {
            name: "demo".into(),
            theory: 1.0,
            empirical: 1.01,
            se: 0.01,
            statistic: 0.3,
            threshold: 1.0,
            passed: true,
            seed: 5,
            detail: String::new(),
            runtime_ms: 12,
        }];
        let table = render_table(&reports);
        assert!(table.contains("demo"));
        assert!(table.contains("pass"));
    }
}
