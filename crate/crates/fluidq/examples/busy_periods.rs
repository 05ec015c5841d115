//! Busy periods: the stationary-start mean `E W / ((1-p) varphi'(0))` and
//! the n-order variant that starts from n i.i.d. initial jumps and is linear
//! in n.
//!
//! Run with: cargo run --release --example busy_periods

use fluidq::analytics;
use fluidq::levy::{JumpDistribution, NetInputModel};
use fluidq::rng::{stream, Purpose};
use fluidq::sim::{self, QueueModel, VacationMode};
use rand::Rng;

fn main() {
    let net =
        NetInputModel::new(0.0, 0.5, JumpDistribution::exponential(1.0).unwrap(), 1.0).unwrap();
    let model = QueueModel::new(
        net,
        0.0,
        None,
        VacationMode::DirectEta(JumpDistribution::deterministic(1.0).unwrap()),
        0.0,
    )
    .unwrap();

    // Stationary-start busy period.
    let mut srng = stream(31, Purpose::StationarySamples, 0);
    let run = sim::stationary_samples(
        &model,
        sim::default_warmup(&model),
        20_000,
        sim::default_spacing(&model),
        &mut srng,
    )
    .unwrap();
    let reps = 10_000u64;
    let mut total = 0.0;
    for i in 0..reps {
        let mut rng = stream(31, Purpose::BusyPeriods, i);
        let init = loop {
            let w = run.samples[rng.gen_range(0..run.samples.len())];
            if w > 0.0 {
                break w;
            }
        };
        total += sim::simulate_busy_period(&model, init, &mut rng).unwrap();
    }
    let m = analytics::moments(&model, None).unwrap();
    println!(
        "stationary-start busy period: formula {:.4}   simulated {:.4} ({} replications)",
        analytics::busy_period_mean(&model, m.mean.value),
        total / reps as f64,
        reps
    );

    // n-order busy periods on the breakdown variant: start from n unit jumps,
    // run with breakdowns, stop at the first empty instant.
    let variant = QueueModel::new(
        NetInputModel::new(0.0, 0.5, JumpDistribution::exponential(1.0).unwrap(), 1.0).unwrap(),
        0.2,
        Some(JumpDistribution::exponential(2.0).unwrap()),
        VacationMode::DirectEta(JumpDistribution::deterministic(1.0).unwrap()),
        0.0,
    )
    .unwrap();
    let b_law = JumpDistribution::deterministic(1.0).unwrap();
    let (d1, _, _) = variant.net().varphi_derivatives_at_zero();
    println!("\nn-order busy periods (p = {:.2}):", variant.p());
    println!("{:>4} {:>12} {:>12}", "n", "formula", "simulated");
    for (oi, n) in [1usize, 2, 3, 5].into_iter().enumerate() {
        let mut total = 0.0;
        for i in 0..reps {
            let mut rng = stream(32 + oi as u64, Purpose::BusyPeriods, i);
            total += sim::simulate_n_order_busy(&variant, n, &b_law, &mut rng).unwrap();
        }
        println!(
            "{:>4} {:>12.4} {:>12.4}",
            n,
            analytics::n_order_busy_mean(n, 1.0, variant.p(), d1),
            total / reps as f64
        );
    }
}
