//! One 2000 s run of each scheduler on the same harvest sequence.
//!
//! With a lower nominal voltage the device runs closer to its energy budget,
//! which makes the difference between the schedulers visible.

use ostb::energy_model::{DeviceParams, HarvestModel};
use ostb::mdp::{BuildOptions, MdpModel, RewardConfig};
use ostb::simulator::{simulate, Scheduler, SimConfig};
use ostb::solver::{solve_model, SolveOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = DeviceParams {
        nominal_voltage: Some(2.4),
        ..DeviceParams::reference()
    };
    let harvest = HarvestModel::uniform_ma(3.0);
    let model = MdpModel::build(&params, &harvest, RewardConfig::Basic, BuildOptions::default())?;
    let policy = solve_model(&model, &SolveOptions::default())?.policy;

    println!("scheduler     tasks/interval  sense fail  tx fail  latency [s]  mean v_end");
    for scheduler in [Scheduler::ostb(&model, policy), Scheduler::Alap, Scheduler::AsapGreedy] {
        let config = SimConfig {
            master_seed: 42,
            ..SimConfig::new(params.clone(), harvest.clone(), scheduler)
        };
        let s = simulate(&config)?.summary();
        println!(
            "{:<12}  {:>14.4}  {:>10}  {:>7}  {:>11.2}  {:>10.4}",
            s.scheduler.to_string(),
            s.completion_rate,
            s.sensing_failures,
            s.transmit_failures,
            s.latency_seconds,
            s.mean_v_end
        );
    }
    Ok(())
}
