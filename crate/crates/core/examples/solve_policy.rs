//! Solve the reference model: LP over occupation measures, cross-checked by
//! relative value iteration, then print the per-slot voltage thresholds.
//!
//! ```bash
//! cargo run --release --example solve_policy -- 6
//! ```
//! The optional argument is the upper end of the harvest range in mA.

use ostb::energy_model::{DeviceParams, HarvestModel};
use ostb::mdp::{BuildOptions, MdpModel, RewardConfig};
use ostb::solver::{solve_model, upper_thresholds, SolveOptions, Threshold};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gamma: f64 = std::env::args().nth(1).map_or(Ok(3.0), |s| s.parse())?;
    let model = MdpModel::build(
        &DeviceParams::reference(),
        &HarvestModel::uniform_ma(gamma),
        RewardConfig::Basic,
        BuildOptions::default(),
    )?;
    let sol = solve_model(&model, &SolveOptions::default())?;

    println!("LP gain   {:.12}", sol.occupation.gain);
    println!("RVI gain  {:.12}  ({} sweeps)", sol.rvi.gain, sol.rvi.iterations);
    println!("tasks per interval {:.4}", sol.gain.tasks_completed);
    println!("threshold violations: {}", sol.violations.len());

    let show = |t: Threshold| match t {
        Threshold::Level(l) => format!("{:.3}", model.grid.level(l)),
        Threshold::Never => "never".into(),
    };
    let table = sol.thresholds.clone().unwrap_or_else(|| upper_thresholds(&sol.policy, &model.space));
    for e in &table.sensing {
        println!("sense    tau={:>2}  v >= {}", e.tau, show(e.threshold));
    }
    for e in &table.transmitting {
        println!("transmit tau={:>2}  v >= {}", e.tau, show(e.threshold));
    }
    Ok(())
}
