//! Long-run task rate from the stationary distribution versus simulation.
//!
//! Two simulations are run: one that samples the MDP's own voltage kernels
//! and one that integrates the continuous capacitor voltage. The first
//! should agree with the analytic rate up to Monte-Carlo error; the second
//! also carries the error of the 30-level discretization.

use ostb::energy_model::{DeviceParams, HarvestModel};
use ostb::mdp::{BuildOptions, MdpModel, RewardConfig};
use ostb::simulator::{simulate_with_model, Scheduler, SimConfig, SimMode};
use ostb::solver::{solve_model, SolveOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = DeviceParams::reference();
    let harvest = HarvestModel::uniform_ma(1.5);
    let model = MdpModel::build(&p, &harvest, RewardConfig::Basic, BuildOptions::default())?;
    let sol = solve_model(&model, &SolveOptions::default())?;
    println!("analytic       {:.5} tasks/interval", sol.gain.tasks_completed);

    let base = SimConfig {
        horizon_seconds: 20_000.0,
        ..SimConfig::new(p, harvest, Scheduler::ostb(&model, sol.policy))
    };
    for mode in [SimMode::Model, SimMode::Physical] {
        let cfg = SimConfig { mode, ..base.clone() };
        let s = simulate_with_model(&cfg, &model, 0)?.summary();
        println!("{:<14} {:.5} tasks/interval", format!("{mode:?}").to_lowercase(), s.completion_rate);
    }
    Ok(())
}
