//! The solvers work on any finite MDP, not only the scheduling model.
//!
//! Two states; in state 0 "sense" earns 0.8 but moves to state 1 half the
//! time, where it earns only 0.3 and always returns. The optimal gain is
//! 19/30.

use ostb::lp::SimplexOptions;
use ostb::mdp::{Action, FiniteMdp, KernelBuilder};
use ostb::solver::{extract_policy, relative_value_iteration, solve_lp, stationary_distribution, ExtractOptions, RviOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut b = KernelBuilder::with_states(2);
    b.push_pair(Action::Sleeping, [(0, 1.0)]);
    b.push_pair(Action::Sensing, [(0, 0.5), (1, 0.5)]);
    b.finish_state();
    b.push_pair(Action::Sleeping, [(0, 1.0)]);
    b.push_pair(Action::Sensing, [(0, 1.0)]);
    b.finish_state();
    let mdp = FiniteMdp::new(b.build(), vec![0.0, 0.8, 0.0, 0.3])?;

    let lp = solve_lp(&mdp, &SimplexOptions::default())?;
    let rvi = relative_value_iteration(&mdp, &RviOptions::default())?;
    let policy = extract_policy(&mdp, &lp, &rvi.bias, ExtractOptions::default());

    println!("LP gain {:.12}, RVI gain {:.12}, exact {:.12}", lp.gain, rvi.gain, 19.0 / 30.0);
    println!("policy {:?}", policy.actions());
    println!("stationary {:?}", stationary_distribution(&mdp, &policy)?);
    println!("occupation {:?}", lp.x);
    Ok(())
}
