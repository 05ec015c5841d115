//! CDF-level validation of the inverted steady-state transform against a
//! large stationary sample of the vacation queue: one million samples,
//! 64-point grid, sup-deviation at most 0.01.

use fluidq::analytics;
use fluidq::levy::{JumpDistribution, NetInputModel};
use fluidq::rng::{stream, Purpose};
use fluidq::sim::{self, QueueModel, VacationMode};
use fluidq::transforms;
use fluidq::validation::empirical_cdf;

#[test]
fn inverted_steady_state_cdf_matches_a_million_samples() {
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

    let mut rng = stream(200, Purpose::StationarySamples, 0);
    let run = sim::stationary_samples(
        &model,
        sim::default_warmup(&model),
        1_000_000,
        sim::default_spacing(&model),
        &mut rng,
    )
    .unwrap();
    let mut sorted = run.samples;
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let m = analytics::moments(&model, None).unwrap();
    let hi = m.mean.value + 6.0 * m.variance.value.sqrt();
    let x_grid: Vec<f64> = (1..=64).map(|k| hi * k as f64 / 64.0).collect();
    let lst = |s| analytics::steady_state_lst_complex(&model, s).unwrap();
    let cdf = transforms::invert_lst_to_cdf(&lst, &x_grid).unwrap();

    let sup = cdf
        .iter()
        .zip(&x_grid)
        .map(|(&c, &x)| (c - empirical_cdf(&sorted, x)).abs())
        .fold(0.0_f64, f64::max);
    assert!(sup <= 0.01, "sup-deviation {sup}");
    println!("[transforms] million-sample CDF sup-deviation: {sup:.5}");
}
