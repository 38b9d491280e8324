use ostb::energy_model::{DeviceParams, HarvestModel};
use ostb::mdp::{BuildOptions, MdpModel, RewardConfig};
use ostb::solver::{solve_model, verify_unichain, Policy, SolveOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = MdpModel::build(
        &DeviceParams::reference(),
        &HarvestModel::uniform_ma(3.0),
        RewardConfig::Basic,
        BuildOptions::default(),
    )?;

    let optimal = solve_model(&model, &SolveOptions::default())?.policy;
    let lazy = Policy::always_sleep(&model.mdp);

    for (name, policy) in [("optimal", &optimal), ("always sleep", &lazy)] {
        let r = verify_unichain(&model, policy)?;
        println!(
            "{name:>12}: {} communicating classes, {} closed (sizes {:?}), {} transient, start recurrent: {:?}",
            r.communicating_classes,
            r.closed_classes.len(),
            r.closed_classes.iter().map(Vec::len).collect::<Vec<_>>(),
            r.transient_states,
            r.start_recurrent
        );
    }
    Ok(())
}
