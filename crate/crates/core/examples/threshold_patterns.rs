use ostb::energy_model::{DeviceParams, HarvestModel};
use ostb::mdp::{BuildOptions, MdpModel, RewardConfig};
use ostb::solver::{solve_model, superstate_pattern, SolveOptions};

// Prints the action pattern by voltage level ('l' sleep, 's'/'t' task) for
// every decidable superstate. A step-structured policy reads "lll...sss".
fn main() -> Result<(), Box<dyn std::error::Error>> {
    for gamma in [3.0, 6.0] {
        let model = MdpModel::build(
            &DeviceParams::reference(),
            &HarvestModel::uniform_ma(gamma),
            RewardConfig::Sigmoid { beta: 25.0, theta: 0.9 },
            BuildOptions::default(),
        )?;
        let sol = solve_model(&model, &SolveOptions::default())?;
        println!("U[0,{gamma}] mA, {} non-step superstates", sol.violations.len());
        for ss in model.space.decidable_superstates() {
            println!("  tau={:>2} f={}  {}", ss.tau, ss.flag, superstate_pattern(&sol.policy, &model.space, ss));
        }
        for v in &sol.violations {
            println!("  ! {v}");
        }
    }
    Ok(())
}
