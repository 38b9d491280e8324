//! Average-reward solvers and structural checks for the scheduling MDP.
//!
//! The primary solver is the occupation-measure LP; relative value
//! iteration is an independent cross-check and supplies the bias used to
//! complete the policy on states the LP leaves without mass.

mod chain;
mod occupation;
mod rvi;
mod structure;

pub use chain::{
    gain_report, policy_gain, recurrence, stationary_distribution, verify_unichain, GainReport,
    RecurrenceReport,
};
pub use occupation::{extract_policy, solve_lp, solve_lp_from, ExtractOptions, OccupationMeasure};
pub use rvi::{advantage, relative_value_iteration, RviOptions, RviResult};
pub use structure::{
    extract_thresholds, superstate_pattern, threshold_violations, upper_thresholds, Threshold,
    ThresholdEntry, ThresholdTable,
};

use serde::{Deserialize, Serialize};

use crate::error::SolverError;
use crate::lp::SimplexOptions;
use crate::mdp::{Action, FiniteMdp, MdpModel, State};

/// A deterministic stationary policy: one action per state index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Policy {
    actions: Vec<Action>,
}

impl Policy {
    /// Validate that every action is available in its state.
    pub fn new(mdp: &FiniteMdp, actions: Vec<Action>) -> Result<Self, SolverError> {
        let policy = Policy { actions };
        policy.pairs(mdp)?;
        Ok(policy)
    }

    pub(crate) fn from_actions_unchecked(actions: Vec<Action>) -> Self {
        Policy { actions }
    }

    pub fn from_fn(mdp: &FiniteMdp, f: impl FnMut(usize) -> Action) -> Result<Self, SolverError> {
        Self::new(mdp, (0..mdp.n_states()).map(f).collect())
    }

    pub fn always_sleep(mdp: &FiniteMdp) -> Self {
        Policy {
            actions: vec![Action::Sleeping; mdp.n_states()],
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn action(&self, state: usize) -> Action {
        self.actions[state]
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    /// Kernel pair chosen in each state.
    pub fn pairs(&self, mdp: &FiniteMdp) -> Result<Vec<usize>, SolverError> {
        if self.actions.len() != mdp.n_states() {
            return Err(SolverError::Dimension(format!(
                "policy covers {} states, MDP has {}",
                self.actions.len(),
                mdp.n_states()
            )));
        }
        self.actions
            .iter()
            .enumerate()
            .map(|(s, &a)| {
                mdp.kernel.pair(s, a).ok_or_else(|| {
                    SolverError::Model(crate::error::ModelError::ActionNotAllowed {
                        state: s.to_string(),
                        action: a.to_string(),
                    })
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    pub simplex: SimplexOptions,
    pub rvi: RviOptions,
    pub mass_tol: Option<f64>,
}

impl SolveOptions {
    fn extract(&self) -> ExtractOptions {
        let d = ExtractOptions::default();
        ExtractOptions {
            mass_tol: self.mass_tol.unwrap_or(d.mass_tol),
            tie_tol: self.rvi.tie_tol,
        }
    }
}

/// Everything produced by solving one model.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub occupation: OccupationMeasure,
    pub rvi: RviResult,
    pub policy: Policy,
    /// `None` when the policy is not step-structured; see `violations`.
    pub thresholds: Option<ThresholdTable>,
    pub violations: Vec<SolverError>,
    pub gain: GainReport,
    pub recurrence: RecurrenceReport,
}

impl Solution {
    /// Relative gap between the LP and RVI gains.
    pub fn gain_gap(&self) -> f64 {
        (self.occupation.gain - self.rvi.gain).abs() / self.occupation.gain.abs().max(1e-300)
    }
}

/// RVI, the LP (warm-started from the RVI greedy policy), policy
/// extraction and all structural reports.
pub fn solve_model(model: &MdpModel, opts: &SolveOptions) -> Result<Solution, SolverError> {
    let mdp = &model.mdp;
    let rvi = relative_value_iteration(mdp, &opts.rvi)?;
    let occupation = solve_lp_from(mdp, &opts.simplex, Some(&rvi.policy))?;
    let policy = extract_policy(mdp, &occupation, &rvi.bias, opts.extract());
    let violations = threshold_violations(&policy, &model.space);
    let thresholds = extract_thresholds(&policy, &model.space).ok();
    let gain = gain_report(model, &policy)?;
    let recurrence = verify_unichain(model, &policy)?;
    Ok(Solution {
        occupation,
        rvi,
        policy,
        thresholds,
        violations,
        gain,
        recurrence,
    })
}

pub const POLICY_FORMAT: &str = "ostb-policy";
pub const POLICY_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyEntry {
    pub level: usize,
    pub tau: usize,
    pub flag: u8,
    pub action: Action,
}

/// Serialized policy, bound to the model it was solved for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyDocument {
    pub format: String,
    pub version: u32,
    pub model_hash: String,
    pub grid: Vec<f64>,
    pub thresholds: Option<ThresholdTable>,
    pub violations: Vec<String>,
    pub gain: f64,
    pub rvi_gain: f64,
    pub reward_per_interval: f64,
    pub tasks_per_interval: f64,
    pub actions: Vec<PolicyEntry>,
}

impl PolicyDocument {
    pub fn new(model: &MdpModel, solution: &Solution) -> Self {
        PolicyDocument {
            format: POLICY_FORMAT.into(),
            version: POLICY_VERSION,
            model_hash: model.fingerprint(),
            grid: model.grid.levels().to_vec(),
            thresholds: solution.thresholds.clone(),
            violations: solution.violations.iter().map(ToString::to_string).collect(),
            gain: solution.occupation.gain,
            rvi_gain: solution.rvi.gain,
            reward_per_interval: solution.gain.reward_per_interval,
            tasks_per_interval: solution.gain.tasks_completed,
            actions: model
                .space
                .states()
                .zip(solution.policy.actions())
                .map(|(s, &action)| PolicyEntry {
                    level: s.level,
                    tau: s.tau,
                    flag: s.flag,
                    action,
                })
                .collect(),
        }
    }

    /// Rebuild the policy for `model`; fails if the document was produced
    /// for a different model.
    pub fn policy(&self, model: &MdpModel) -> Result<Policy, SolverError> {
        if self.format != POLICY_FORMAT || self.version != POLICY_VERSION {
            return Err(SolverError::Dimension(format!(
                "unsupported policy document {} v{}",
                self.format, self.version
            )));
        }
        if self.model_hash != model.fingerprint() {
            return Err(SolverError::Dimension(
                "policy was solved for a different model".into(),
            ));
        }
        let mut actions = vec![None; model.n_states()];
        for e in &self.actions {
            let idx = model
                .space
                .index(State {
                    level: e.level,
                    tau: e.tau,
                    flag: e.flag,
                })
                .ok_or_else(|| SolverError::Dimension(format!("unknown state ({}, {}, {})", e.level, e.tau, e.flag)))?;
            actions[idx] = Some(e.action);
        }
        let actions = actions
            .into_iter()
            .enumerate()
            .map(|(s, a)| a.ok_or_else(|| SolverError::Dimension(format!("no action for state {s}"))))
            .collect::<Result<Vec<_>, _>>()?;
        Policy::new(&model.mdp, actions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy_model::{DeviceParams, HarvestModel};
    use crate::mdp::{BuildOptions, KernelBuilder, RewardConfig};

    /// State 0: sleep stays (r 0), sense moves to 1 w.p. 1/2 (r 0.8).
    /// State 1: sleep returns to 0 (r 0), sense returns to 0 (r 0.3).
    /// Sensing everywhere gives pi = (2/3, 1/3) and gain 19/30.
    fn toy() -> FiniteMdp {
        let mut b = KernelBuilder::with_states(2);
        b.push_pair(Action::Sleeping, [(0, 1.0)]);
        b.push_pair(Action::Sensing, [(0, 0.5), (1, 0.5)]);
        b.finish_state();
        b.push_pair(Action::Sleeping, [(0, 1.0)]);
        b.push_pair(Action::Sensing, [(0, 1.0)]);
        b.finish_state();
        FiniteMdp::new(b.build(), vec![0.0, 0.8, 0.0, 0.3]).unwrap()
    }

    fn small_model(capacitance: f64) -> MdpModel {
        let p = DeviceParams {
            capacitance,
            subintervals: 8,
            sensing_deadline: 3,
            sensing_duration: 3,
            transmit_duration: None,
            grid_levels: 3,
            ..DeviceParams::reference()
        };
        MdpModel::build(&p, &HarvestModel::uniform_ma(3.0), RewardConfig::Basic, BuildOptions::default()).unwrap()
    }

    #[test]
    fn toy_gain_matches_hand_solution() {
        let mdp = toy();
        let lp = solve_lp(&mdp, &SimplexOptions::default()).unwrap();
        let rvi = relative_value_iteration(&mdp, &RviOptions::default()).unwrap();
        assert!((lp.gain - 19.0 / 30.0).abs() < 1e-12, "{}", lp.gain);
        assert!((rvi.gain - 19.0 / 30.0).abs() < 1e-9, "{}", rvi.gain);
        let policy = extract_policy(&mdp, &lp, &rvi.bias, ExtractOptions::default());
        assert_eq!(policy.actions(), &[Action::Sensing, Action::Sensing]);
        let pi = stationary_distribution(&mdp, &policy).unwrap();
        assert!((pi[0] - 2.0 / 3.0).abs() < 1e-12 && (pi[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!((policy_gain(&mdp, &policy).unwrap() - 19.0 / 30.0).abs() < 1e-12);
    }

    #[test]
    fn suboptimal_policy_has_lower_gain() {
        let mdp = toy();
        let p = Policy::new(&mdp, vec![Action::Sensing, Action::Sleeping]).unwrap();
        assert!((policy_gain(&mdp, &p).unwrap() - 0.8 * 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn recurrence_separates_closed_and_transient() {
        let mdp = toy();
        let lazy = Policy::always_sleep(&mdp);
        let r = recurrence(&mdp, &lazy).unwrap();
        assert_eq!(r.closed_classes, vec![vec![0]]);
        assert_eq!(r.transient_states, 1);
        assert!(r.is_unichain());

        let mut b = KernelBuilder::with_states(2);
        b.push_pair(Action::Sleeping, [(0, 1.0)]);
        b.finish_state();
        b.push_pair(Action::Sleeping, [(1, 1.0)]);
        b.finish_state();
        let two = FiniteMdp::new(b.build(), vec![0.0, 0.0]).unwrap();
        let r = recurrence(&two, &Policy::always_sleep(&two)).unwrap();
        assert_eq!(r.closed_classes.len(), 2);
        assert!(!r.is_unichain());
    }

    #[test]
    fn zero_reward_gives_zero_gain_and_flat_bias() {
        let mut mdp = toy();
        mdp.rewards.iter_mut().for_each(|r| *r = 0.0);
        let rvi = relative_value_iteration(&mdp, &RviOptions::default()).unwrap();
        assert_eq!(rvi.gain, 0.0);
        assert!(rvi.bias.iter().all(|&h| h.abs() < 1e-12));
    }

    #[test]
    fn advantage_sign_and_singletons() {
        let mdp = toy();
        let rvi = relative_value_iteration(&mdp, &RviOptions::default()).unwrap();
        let adv = advantage(&mdp, &rvi.bias, 0).unwrap();
        assert_eq!(adv.len(), 1);
        assert_eq!(adv[0].0, Action::Sensing);
        assert!(adv[0].1 > 0.0);

        let mut b = KernelBuilder::with_states(1);
        b.push_pair(Action::Sleeping, [(0, 1.0)]);
        b.finish_state();
        let one = FiniteMdp::new(b.build(), vec![1.0]).unwrap();
        assert_eq!(advantage(&one, &[0.0], 0), Err(SolverError::SingletonActionSet));
    }

    #[test]
    fn policy_rejects_disallowed_actions() {
        let mdp = toy();
        assert!(Policy::new(&mdp, vec![Action::Transmitting, Action::Sleeping]).is_err());
        assert!(Policy::new(&mdp, vec![Action::Sleeping]).is_err());
    }

    #[test]
    fn small_model_is_threshold_structured_and_consistent() {
        let model = small_model(4.7e-3);
        let sol = solve_model(&model, &SolveOptions::default()).unwrap();
        assert!(sol.gain_gap() < 1e-9);
        assert!(sol.violations.is_empty());
        let table = sol.thresholds.clone().unwrap();
        assert_eq!(table, upper_thresholds(&sol.policy, &model.space));
        assert_eq!(table.sensing.len(), 4);
        assert!(table.transmitting.is_empty());
        assert!(sol.recurrence.passes());
        assert!((sol.gain.gain - sol.occupation.gain).abs() < 1e-9);
    }

    #[test]
    fn non_step_pattern_is_reported() {
        let model = small_model(4.7e-3);
        let ss = crate::mdp::SuperState { tau: 0, flag: 0 };
        let range = model.space.superstate_states(ss).unwrap();
        let policy = Policy::from_fn(&model.mdp, |s| {
            // sense at the bottom level only: pattern "sll"
            if s == range.start { Action::Sensing } else { Action::Sleeping }
        })
        .unwrap();
        assert_eq!(superstate_pattern(&policy, &model.space, ss), "sll");
        let v = threshold_violations(&policy, &model.space);
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], SolverError::NotThreshold { tau: 0, flag: 0, .. }));
        assert!(extract_thresholds(&policy, &model.space).is_err());
        assert_eq!(upper_thresholds(&policy, &model.space).sensing_at(0), Some(Threshold::Never));
    }

    #[test]
    fn policy_document_round_trip_and_hash_check() {
        let model = small_model(4.7e-3);
        let sol = solve_model(&model, &SolveOptions::default()).unwrap();
        let doc = PolicyDocument::new(&model, &sol);
        let text = serde_json::to_string(&doc).unwrap();
        let back: PolicyDocument = serde_json::from_str(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.policy(&model).unwrap(), sol.policy);
        assert!(back.policy(&small_model(2.7e-3)).is_err());
    }
}
