use serde::{Deserialize, Serialize};

use crate::energy_model::{quantize, DeviceParams, VoltageGrid};
use crate::mdp::{Action, MdpModel, State, StateSpace};
use crate::solver::Policy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchedulerKind {
    Ostb,
    Alap,
    AsapGreedy,
}

impl std::fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SchedulerKind::Ostb => "ostb",
            SchedulerKind::Alap => "alap",
            SchedulerKind::AsapGreedy => "asap-greedy",
        })
    }
}

/// A decision rule evaluated at sub-interval boundaries.
#[derive(Debug, Clone, PartialEq)]
pub enum Scheduler {
    /// Stationary policy applied to the quantized voltage.
    Ostb {
        policy: Policy,
        space: StateSpace,
        grid: VoltageGrid,
    },
    /// Each task at the last slot of its window, regardless of voltage.
    Alap,
    /// Each task at the first slot of its window, regardless of voltage.
    AsapGreedy,
}

impl Scheduler {
    pub fn ostb(model: &MdpModel, policy: Policy) -> Self {
        Scheduler::Ostb {
            policy,
            space: model.space.clone(),
            grid: model.grid.clone(),
        }
    }

    pub fn kind(&self) -> SchedulerKind {
        match self {
            Scheduler::Ostb { .. } => SchedulerKind::Ostb,
            Scheduler::Alap => SchedulerKind::Alap,
            Scheduler::AsapGreedy => SchedulerKind::AsapGreedy,
        }
    }

    /// Action for observed voltage `v` at clock `tau` with task flag `flag`.
    /// Always an allowed action of the corresponding quantized state.
    pub fn decide(&self, params: &DeviceParams, v: f64, tau: usize, flag: u8) -> Action {
        let m = params.subintervals;
        let sense_window = flag == 0 && tau <= params.sensing_deadline;
        let tx_window = flag == 1
            && tau >= params.sensing_duration
            && params.transmit_duration.is_some_and(|nt| tau + nt <= m);
        match self {
            Scheduler::Ostb {
                policy,
                space,
                grid,
            } => {
                let state = State {
                    level: quantize(v, grid),
                    tau,
                    flag,
                };
                space
                    .index(state)
                    .map_or(Action::Sleeping, |idx| policy.action(idx))
            }
            Scheduler::Alap => {
                if sense_window && tau == params.sensing_deadline {
                    Action::Sensing
                } else if tx_window && params.transmit_duration.is_some_and(|nt| tau + nt == m) {
                    Action::Transmitting
                } else {
                    Action::Sleeping
                }
            }
            Scheduler::AsapGreedy => {
                if sense_window {
                    Action::Sensing
                } else if tx_window {
                    Action::Transmitting
                } else {
                    Action::Sleeping
                }
            }
        }
    }
}
