//! Finite MDP of the scheduling problem: states, action sets, micro kernels,
//! the assembled transition kernel and rewards.

mod kernel;
mod micro;
mod reward;
mod state;

pub use kernel::{KernelBuilder, TransitionKernel};
pub use micro::{LevelKernel, MicroMatrices};
pub use reward::RewardConfig;
pub use state::{Action, Decision, State, StateSpace, SuperState};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::energy_model::{
    safety_table, ConvolutionSettings, DeviceParams, HarvestModel, Quantizer, Task, VoltageGrid,
};
use crate::error::ModelError;

/// A finite MDP in kernel + reward-per-pair form. This is all the solvers need.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMdp {
    pub kernel: TransitionKernel,
    pub rewards: Vec<f64>,
}

impl FiniteMdp {
    pub fn new(kernel: TransitionKernel, rewards: Vec<f64>) -> Result<Self, ModelError> {
        if rewards.len() != kernel.n_pairs() {
            return Err(ModelError::Dimension(format!(
                "{} rewards for {} state-action pairs",
                rewards.len(),
                kernel.n_pairs()
            )));
        }
        Ok(FiniteMdp { kernel, rewards })
    }

    pub fn n_states(&self) -> usize {
        self.kernel.n_states()
    }

    pub fn n_pairs(&self) -> usize {
        self.kernel.n_pairs()
    }
}

/// Options controlling how the micro kernels are discretized.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildOptions {
    #[serde(default)]
    pub convolution: ConvolutionSettings,
    #[serde(default)]
    pub quantizer: Quantizer,
    /// Optional uniform mixing weight making every micro entry positive.
    #[serde(default)]
    pub smoothing: Option<f64>,
}

/// Per-level safety probabilities of the two tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetyTables {
    pub sensing: Vec<f64>,
    pub transmitting: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdpModel {
    pub params: DeviceParams,
    pub harvest: HarvestModel,
    pub reward: RewardConfig,
    pub options: BuildOptions,
    pub grid: VoltageGrid,
    pub space: StateSpace,
    pub micro: MicroMatrices,
    pub safety: SafetyTables,
    pub mdp: FiniteMdp,
}

impl MdpModel {
    pub fn build(
        params: &DeviceParams,
        harvest: &HarvestModel,
        reward: RewardConfig,
        options: BuildOptions,
    ) -> Result<Self, ModelError> {
        params.validate()?;
        harvest.validate()?;
        reward.validate()?;
        let grid = params.grid()?;
        let space = StateSpace::new(params)?;
        let mut micro =
            MicroMatrices::build(params, harvest, &grid, options.convolution, options.quantizer)?;
        if let Some(eps) = options.smoothing {
            if !(eps > 0.0 && eps * grid.len() as f64 <= 1.0) {
                return Err(ModelError::InvalidParam {
                    field: "smoothing",
                    reason: format!("must lie in (0, 1/N_v], got {eps}"),
                });
            }
            micro = micro.smoothed(eps);
        }
        let safety = SafetyTables {
            sensing: safety_table(Task::Sensing, params, harvest, &grid, options.convolution)?,
            transmitting: params
                .transmit_duration
                .map(|_| safety_table(Task::Transmitting, params, harvest, &grid, options.convolution))
                .transpose()?,
        };
        Self::assemble(params.clone(), harvest.clone(), reward, options, grid, space, micro, safety)
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        params: DeviceParams,
        harvest: HarvestModel,
        reward: RewardConfig,
        options: BuildOptions,
        grid: VoltageGrid,
        space: StateSpace,
        micro: MicroMatrices,
        safety: SafetyTables,
    ) -> Result<Self, ModelError> {
        let kernel = TransitionKernel::assemble(&space, &micro)?;
        let sense_r = reward.table(&safety.sensing);
        let tx_r = safety.transmitting.as_ref().map(|t| reward.table(t));
        let rewards = (0..kernel.n_pairs())
            .map(|p| {
                let level = space.state(kernel.state_of(p)).level;
                match kernel.action(p) {
                    Action::Sleeping => 0.0,
                    Action::Sensing => sense_r[level],
                    Action::Transmitting => tx_r.as_ref().map(|r| r[level]).unwrap_or(0.0),
                }
            })
            .collect();
        let mdp = FiniteMdp::new(kernel, rewards)?;
        Ok(MdpModel {
            params,
            harvest,
            reward,
            options,
            grid,
            space,
            micro,
            safety,
            mdp,
        })
    }

    pub fn n_states(&self) -> usize {
        self.space.len()
    }

    pub fn kernel(&self) -> &TransitionKernel {
        &self.mdp.kernel
    }

    pub fn allowed_actions(&self, state: State) -> &'static [Action] {
        self.space.allowed_actions(state)
    }

    /// Reward of taking `action` in `state`.
    pub fn reward(&self, state: State, action: Action) -> Result<f64, ModelError> {
        let not_allowed = || ModelError::ActionNotAllowed {
            state: state.to_string(),
            action: action.to_string(),
        };
        let idx = self.space.index(state).ok_or_else(not_allowed)?;
        let pair = self.mdp.kernel.pair(idx, action).ok_or_else(not_allowed)?;
        Ok(self.mdp.rewards[pair])
    }

    /// SHA-256 of the inputs that determine the model, as lowercase hex.
    pub fn fingerprint(&self) -> String {
        let inputs = serde_json::json!({
            "params": self.params,
            "harvest": self.harvest,
            "reward": self.reward,
            "options": self.options,
        });
        hex::encode(Sha256::digest(inputs.to_string().as_bytes()))
    }

    pub fn to_document(&self) -> MdpDocument {
        let kernel = &self.mdp.kernel;
        let (pair, (next, prob)): (Vec<usize>, (Vec<usize>, Vec<f64>)) =
            kernel.triplets().map(|(p, j, v)| (p, (j, v))).unzip();
        MdpDocument {
            format: MDP_FORMAT.to_string(),
            version: MDP_VERSION,
            params: self.params.clone(),
            harvest: self.harvest.clone(),
            reward: self.reward,
            options: self.options,
            grid: self.grid.levels().to_vec(),
            states: self
                .space
                .states()
                .map(|s| [s.level, s.tau, s.flag as usize])
                .collect(),
            pair_state: (0..kernel.n_pairs()).map(|p| kernel.state_of(p)).collect(),
            pair_action: (0..kernel.n_pairs()).map(|p| kernel.action(p)).collect(),
            kernel: CooKernel { pair, next, prob },
            rewards: self.mdp.rewards.clone(),
            micro: self.micro.clone(),
            safety: self.safety.clone(),
        }
    }

    /// Rebuild a model from its document, checking that the stored kernel and
    /// rewards agree with the stored micro matrices and safety tables.
    pub fn from_document(doc: MdpDocument) -> Result<Self, ModelError> {
        if doc.format != MDP_FORMAT || doc.version != MDP_VERSION {
            return Err(ModelError::Dimension(format!(
                "unsupported model document {} v{}",
                doc.format, doc.version
            )));
        }
        doc.params.validate()?;
        let grid = doc.params.grid()?;
        let space = StateSpace::new(&doc.params)?;
        let model = Self::assemble(
            doc.params,
            doc.harvest,
            doc.reward,
            doc.options,
            grid,
            space,
            doc.micro,
            doc.safety,
        )?;
        let k = model.kernel();
        let same_kernel = k.nnz() == doc.kernel.prob.len()
            && k.triplets()
                .zip(doc.kernel.pair.iter().zip(&doc.kernel.next).zip(&doc.kernel.prob))
                .all(|((p, j, v), ((&p2, &j2), &v2))| p == p2 && j == j2 && (v - v2).abs() <= 1e-12);
        let same_rewards = model.mdp.rewards.len() == doc.rewards.len()
            && model
                .mdp
                .rewards
                .iter()
                .zip(&doc.rewards)
                .all(|(a, b)| (a - b).abs() <= 1e-12);
        if !same_kernel || !same_rewards || model.n_states() != doc.states.len() {
            return Err(ModelError::Dimension(
                "model document is internally inconsistent".into(),
            ));
        }
        Ok(model)
    }
}

pub const MDP_FORMAT: &str = "ostb-mdp";
pub const MDP_VERSION: u32 = 1;

/// Sparse kernel in coordinate-list form: entry `k` is
/// `P(next[k] | pair[k]) = prob[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CooKernel {
    pub pair: Vec<usize>,
    pub next: Vec<usize>,
    pub prob: Vec<f64>,
}

/// Versioned, self-describing JSON form of an [`MdpModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpDocument {
    pub format: String,
    pub version: u32,
    pub params: DeviceParams,
    pub harvest: HarvestModel,
    pub reward: RewardConfig,
    pub options: BuildOptions,
    pub grid: Vec<f64>,
    /// `[level, tau, flag]` per state, canonical order.
    pub states: Vec<[usize; 3]>,
    pub pair_state: Vec<usize>,
    pub pair_action: Vec<Action>,
    pub kernel: CooKernel,
    pub rewards: Vec<f64>,
    pub micro: MicroMatrices,
    pub safety: SafetyTables,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_params() -> DeviceParams {
        DeviceParams {
            capacitance: 0.5e-3,
            subintervals: 8,
            sensing_deadline: 3,
            sensing_duration: 3,
            transmit_duration: None,
            grid_levels: 3,
            delta_t: 1.0 / 8.0,
            ..DeviceParams::reference()
        }
    }

    fn reference_model() -> MdpModel {
        MdpModel::build(
            &DeviceParams::reference(),
            &HarvestModel::uniform_ma(3.0),
            RewardConfig::Basic,
            BuildOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn kernel_rows_are_distributions() {
        let m = reference_model();
        assert_eq!(m.n_states(), 3600);
        assert!(m.kernel().max_row_error() < 1e-9);
        assert_eq!(m.mdp.n_pairs(), 3600 + 16 * 30 + 26 * 30);
    }

    #[test]
    fn sleeping_is_never_rewarded_and_rewards_monotone() {
        for reward in [RewardConfig::Basic, RewardConfig::Sigmoid { beta: 25.0, theta: 0.9 }] {
            let m = MdpModel::build(
                &DeviceParams::reference(),
                &HarvestModel::uniform_ma(3.0),
                reward,
                BuildOptions::default(),
            )
            .unwrap();
            for s in m.space.states() {
                assert_eq!(m.reward(s, Action::Sleeping).unwrap(), 0.0);
                for &a in m.allowed_actions(s) {
                    if a.is_task() && s.level > 0 {
                        let lower = State { level: s.level - 1, ..s };
                        assert!(m.reward(lower, a).unwrap() <= m.reward(s, a).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn reward_rejects_disallowed_action() {
        let m = reference_model();
        let s = State { level: 3, tau: 40, flag: 0 };
        assert!(matches!(
            m.reward(s, Action::Sensing),
            Err(ModelError::ActionNotAllowed { .. })
        ));
    }

    #[test]
    fn sigmoid_reward_at_vmax_is_one() {
        let m = MdpModel::build(
            &DeviceParams::reference(),
            &HarvestModel::uniform_ma(3.0),
            RewardConfig::Sigmoid { beta: 15.0, theta: 0.95 },
            BuildOptions::default(),
        )
        .unwrap();
        let s = State { level: 29, tau: 0, flag: 0 };
        assert!((m.reward(s, Action::Sensing).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reset_row_equals_sleep_micro_row() {
        let m = reference_model();
        for level in [0, 13, 29] {
            let s = m.space.index(State { level, tau: 49, flag: 2 }).unwrap();
            let pair = m.kernel().pair(s, Action::Sleeping).unwrap();
            let mut row = vec![0.0; 30];
            for (j, v) in m.kernel().row(pair) {
                let next = m.space.state(j);
                assert_eq!((next.tau, next.flag), (0, 0));
                row[next.level] += v;
            }
            for (a, b) in row.iter().zip(m.micro.sleep.row(level)) {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn sensing_lands_in_single_superstate() {
        let m = reference_model();
        for tau in 0..=15 {
            let s = m.space.index(State { level: 20, tau, flag: 0 }).unwrap();
            let pair = m.kernel().pair(s, Action::Sensing).unwrap();
            for (j, _) in m.kernel().row(pair) {
                let next = m.space.state(j);
                assert_eq!((next.tau, next.flag), (tau + 5, 1));
            }
        }
    }

    #[test]
    fn example_block_pattern() {
        // M = 8, N_v = 3, d_s = 3, n_s = 3: only the first four superstate rows
        // carry both a sleep block and a sensing block.
        let m = MdpModel::build(
            &example_params(),
            &HarvestModel::uniform_ma(3.0),
            RewardConfig::Basic,
            BuildOptions::default(),
        )
        .unwrap();
        assert_eq!(m.n_states(), 39);
        for (k, ss) in m.space.superstates().iter().enumerate() {
            let rows = m.space.superstate_states(*ss).unwrap();
            for s in rows {
                let n_actions = m.kernel().pairs(s).len();
                assert_eq!(n_actions, if k < 4 { 2 } else { 1 }, "superstate {ss:?}");
            }
        }
    }

    #[test]
    fn document_roundtrip() {
        let m = MdpModel::build(
            &example_params(),
            &HarvestModel::uniform_ma(3.0),
            RewardConfig::Sigmoid { beta: 25.0, theta: 0.9 },
            BuildOptions::default(),
        )
        .unwrap();
        let json = serde_json::to_string(&m.to_document()).unwrap();
        let doc: MdpDocument = serde_json::from_str(&json).unwrap();
        let back = MdpModel::from_document(doc.clone()).unwrap();
        assert_eq!(back, m);
        let mut bad = doc;
        bad.rewards[1] += 0.5;
        assert!(MdpModel::from_document(bad).is_err());
    }
}
