//! The input process and its exponents: evaluate `phi` and `varphi`, their
//! derivatives at zero, and the exponent inverse.
//!
//! Run with: cargo run --example exponents

use fluidq::levy::{JumpDistribution, NetInputModel};

fn main() {
    // Compound-Poisson input at rate 0.5 with Exp(1) jumps, no drift,
    // drained at unit service rate.
    let net =
        NetInputModel::new(0.0, 0.5, JumpDistribution::exponential(1.0).unwrap(), 1.0).unwrap();

    println!("load rho = {:.4}, drain rate r - a = {:.4}", net.rho(), net.drain_rate());

    println!("\n{:>6} {:>12} {:>12}", "theta", "phi", "varphi");
    for theta in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0] {
        println!(
            "{:>6} {:>12.6} {:>12.6}",
            theta,
            net.phi(theta).unwrap(),
            net.varphi(theta).unwrap()
        );
    }

    let (d1, d2, d3) = net.varphi_derivatives_at_zero();
    println!("\nvarphi'(0) = {d1} (drain surplus)");
    println!("varphi''(0) = {d2}");
    println!("varphi'''(0) = {d3}");

    // The exponent is strictly increasing, so varphi(theta) = gamma has a
    // unique positive root.
    for gamma in [0.25, 0.5, 1.0, 2.0] {
        let root = net.inverse_varphi(gamma).unwrap();
        println!(
            "inverse_varphi({gamma}) = {root:.8}   (round trip varphi = {:.10})",
            net.varphi(root).unwrap()
        );
    }

    // Jump-law surface: transform, moments, residual-life moments.
    let laws = [
        JumpDistribution::exponential(2.0).unwrap(),
        JumpDistribution::deterministic(1.0).unwrap(),
        JumpDistribution::erlang(2, 2.0).unwrap(),
        JumpDistribution::hyperexponential(vec![0.4, 0.6], vec![0.5, 2.0]).unwrap(),
    ];
    println!("\n{:>18} {:>8} {:>8} {:>8} {:>10} {:>10}", "family", "m1", "m2", "m3", "lst(1)", "resid m1");
    for law in &laws {
        println!(
            "{:>18} {:>8.4} {:>8.4} {:>8.4} {:>10.6} {:>10.4}",
            law.family(),
            law.moment(1),
            law.moment(2),
            law.moment(3),
            law.lst(1.0),
            law.residual_moment(1)
        );
    }
}
