//! First passage of the net input below a level: the mean is
//! `E xi / varphi'(0)` and the transform of the passage time is
//! `exp(-varphi^{-1}(beta) xi)`. Passage is by creeping (the paths have no
//! negative jumps), so every passage time is an exact linear-segment hit.
//!
//! Run with: cargo run --release --example first_passage

use fluidq::levy::{JumpDistribution, NetInputModel};
use fluidq::rng::{stream, Purpose};
use fluidq::sim;

fn main() {
    let net =
        NetInputModel::new(0.0, 0.5, JumpDistribution::exponential(1.0).unwrap(), 1.0).unwrap();
    let (d1, _, _) = net.varphi_derivatives_at_zero();
    let level = 1.0;
    let reps = 100_000u64;

    let times: Vec<f64> = (0..reps)
        .map(|i| {
            let mut rng = stream(41, Purpose::FirstPassage, i);
            sim::simulate_first_passage(&net, level, &mut rng).unwrap()
        })
        .collect();

    let mean = times.iter().sum::<f64>() / reps as f64;
    println!("mean passage time: formula {:.4}   simulated {mean:.4}", level / d1);

    println!("\n{:>6} {:>14} {:>14}", "beta", "formula", "simulated");
    for beta in [0.25, 0.5, 1.0, 2.0] {
        let theta_star = net.inverse_varphi(beta).unwrap();
        let formula = (-theta_star * level).exp();
        let emp = times.iter().map(|t| (-beta * t).exp()).sum::<f64>() / reps as f64;
        println!("{:>6} {:>14.6} {:>14.6}", beta, formula, emp);
    }
}
