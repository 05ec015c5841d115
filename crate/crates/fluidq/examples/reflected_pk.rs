//! The interruption-free (reflected) process and its steady-state transform
//! `theta varphi'(0) / varphi(theta)`: simulation against the formula.
//!
//! Run with: cargo run --release --example reflected_pk

use fluidq::analytics;
use fluidq::levy::{JumpDistribution, NetInputModel};
use fluidq::rng::{stream, Purpose};
use fluidq::sim;
use fluidq::validation::batch_mean_se;

fn main() {
    let net =
        NetInputModel::new(0.0, 0.5, JumpDistribution::exponential(1.0).unwrap(), 1.0).unwrap();
    let (d1, _, _) = net.varphi_derivatives_at_zero();

    let mut rng = stream(21, Purpose::ReflectedSamples, 0);
    let samples = sim::simulate_reflected(&net, 100.0 / d1, 100_000, 10.0 / d1, &mut rng).unwrap();

    let (mean, se) = batch_mean_se(&samples, 32);
    let (mean_th, var_th) = analytics::reflected_moments(&net);
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (samples.len() - 1) as f64;
    println!("mean:     formula {mean_th:.5}   simulated {mean:.5} (se {se:.5})");
    println!("variance: formula {var_th:.5}   simulated {var:.5}");
    println!("share of time at zero (idle): {:.4}", samples.iter().filter(|&&w| w == 0.0).count() as f64 / samples.len() as f64);

    println!("\n{:>6} {:>12} {:>12}", "theta", "formula", "simulated");
    for theta in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let f = analytics::pk_lst(&net, theta).unwrap();
        let emp = samples.iter().map(|w| (-theta * w).exp()).sum::<f64>() / samples.len() as f64;
        println!("{:>6} {:>12.6} {:>12.6}", theta, f, emp);
    }
}
