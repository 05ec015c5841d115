//! Steady-state workload: the closed-form transform, mean and variance
//! against stationary simulation, for the vacation-only queue and for the
//! full queue with breakdowns (where the breakdown embedding is empirical).
//!
//! Run with: cargo run --release --example steady_state

use fluidq::analytics::{self, BreakdownEmbedding};
use fluidq::levy::{JumpDistribution, NetInputModel};
use fluidq::rng::{stream, Purpose};
use fluidq::sim::{self, QueueModel, VacationMode};
use fluidq::validation::batch_mean_se;

fn net() -> NetInputModel {
    NetInputModel::new(0.0, 0.5, JumpDistribution::exponential(1.0).unwrap(), 1.0).unwrap()
}

fn show(model: &QueueModel, emb: Option<&BreakdownEmbedding>, seed: u64) {
    let n = 50_000;
    let mut rng = stream(seed, Purpose::StationarySamples, 0);
    let run = sim::stationary_samples(
        model,
        sim::default_warmup(model),
        n,
        sim::default_spacing(model),
        &mut rng,
    )
    .unwrap();

    let m = analytics::moments(model, emb).unwrap();
    let (emp_mean, _) = batch_mean_se(&run.samples, 32);
    let mean_sq: f64 =
        run.samples.iter().map(|x| (x - emp_mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);

    println!("p = {:.3}", model.p());
    println!("  mean:     formula {:.5}   simulated {:.5}", m.mean.value, emp_mean);
    println!("  variance: formula {:.5}   simulated {:.5}", m.variance.value, mean_sq);
    println!(
        "  busy period (stationary start): {:.5}",
        analytics::busy_period_mean(model, m.mean.value)
    );
    println!("  lag-1 autocorrelation at sampling spacing: {:.4}", run.lag1_autocorrelation);

    println!("  {:>6} {:>12} {:>12}", "theta", "formula", "simulated");
    for theta in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let f = analytics::steady_state_lst(model, emb, theta).unwrap();
        let emp =
            run.samples.iter().map(|w| (-theta * w).exp()).sum::<f64>() / run.samples.len() as f64;
        println!("  {:>6} {:>12.6} {:>12.6}", theta, f.value, emp);
    }
}

fn main() {
    println!("== vacation-only queue (deterministic unit vacations) ==");
    let vacation_only = QueueModel::new(
        net(),
        0.0,
        None,
        VacationMode::DirectEta(JumpDistribution::deterministic(1.0).unwrap()),
        0.0,
    )
    .unwrap();
    show(&vacation_only, None, 11);

    println!("\n== with breakdowns: rate 0.2, Exp(2) repair jumps ==");
    let with_breakdowns = QueueModel::new(
        net(),
        0.2,
        Some(JumpDistribution::exponential(2.0).unwrap()),
        VacationMode::DirectEta(JumpDistribution::deterministic(1.0).unwrap()),
        0.0,
    )
    .unwrap();
    // the transform references the pre/post-breakdown workload law, which the
    // theory leaves undetermined: estimate it from an independent path
    let mut rng = stream(12, Purpose::BreakdownPairs, 0);
    let path = sim::simulate_path(&with_breakdowns, 100_000.0, &[], &mut rng).unwrap();
    let emb = BreakdownEmbedding::from_pairs(path.breakdown_pairs()).unwrap();
    println!("(embedding from {} breakdown pairs)", emb.len());
    show(&with_breakdowns, Some(&emb), 13);

    let (p, lambda_r, lambda_v) = analytics::rates_and_p(&with_breakdowns);
    let (thr_r, thr_v) = analytics::throughput_limits(&with_breakdowns);
    println!("\nrates: p = {p:.3}, lambda_R = {lambda_r:.3}, lambda_V = {lambda_v:.3}");
    println!("long-run jump throughput: repairs {thr_r:.3}, vacations {thr_v:.3} per unit time");
}
