//! One exact sample path of the full queue: linear drains between events,
//! repair jumps at Poisson breakdown epochs, vacation jumps at zero hits.
//!
//! Run with: cargo run --example simulate_path

use fluidq::levy::{JumpDistribution, NetInputModel};
use fluidq::rng::{stream, Purpose};
use fluidq::sim::{self, QueueModel, VacationMode};

fn main() {
    let net =
        NetInputModel::new(0.0, 0.5, JumpDistribution::exponential(1.0).unwrap(), 1.0).unwrap();
    let model = QueueModel::new(
        net,
        0.2,
        Some(JumpDistribution::exponential(2.0).unwrap()),
        VacationMode::DirectEta(JumpDistribution::deterministic(1.0).unwrap()),
        2.0,
    )
    .unwrap();

    let mut rng = stream(1, Purpose::PathSimulation, 0);
    let path = sim::simulate_path(&model, 40.0, &[1.0], &mut rng).unwrap();

    println!("{:>10} {:>18} {:>8} {:>9} {:>9}", "time", "event", "size", "W before", "W after");
    for e in path.events() {
        println!(
            "{:>10.4} {:>18} {:>8.4} {:>9.4} {:>9.4}",
            e.time,
            e.kind.label(),
            e.size,
            e.w_before,
            e.w_after
        );
    }
    println!(
        "\nhorizon {}: {} breakdowns, {} vacations, final workload {:.4}",
        path.horizon(),
        path.breakdown_count(),
        path.vacation_count(),
        path.final_workload()
    );
    println!("busy cycles completed: {:?}", path.busy_durations().len());
    println!(
        "exact integral of exp(-W_s) ds over the horizon: {:.6}",
        path.total_exp_integral(1.0).unwrap()
    );
    println!("workload at t = 17.5 (reconstructed): {:.6}", path.workload_at(17.5).unwrap());
}
