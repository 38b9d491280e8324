//! Admissible states, superstates and action sets.
//!
//! Canonical order: task flag first, then local clock, then voltage level.
//! Superstates with `f = 1` start at `tau = n_s` and those with `f = 2` at
//! `tau = n_s + n_t`; earlier combinations are unreachable and excluded.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::energy_model::DeviceParams;
use crate::error::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Sleeping,
    Sensing,
    Transmitting,
}

impl Action {
    pub fn is_task(self) -> bool {
        self != Action::Sleeping
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::Sleeping => "sleeping",
            Action::Sensing => "sensing",
            Action::Transmitting => "transmitting",
        })
    }
}

/// A `(tau, f)` group of `N_v` states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SuperState {
    pub tau: usize,
    pub flag: u8,
}

impl SuperState {
    pub const START: SuperState = SuperState { tau: 0, flag: 0 };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct State {
    pub level: usize,
    pub tau: usize,
    pub flag: u8,
}

impl State {
    pub fn superstate(&self) -> SuperState {
        SuperState {
            tau: self.tau,
            flag: self.flag,
        }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(v={}, tau={}, f={})", self.level, self.tau, self.flag)
    }
}

/// Which of the two decision sets a state belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    /// Sensing window with sensing pending.
    Sense,
    /// Transmit window with transmission pending.
    Transmit,
    /// Only sleeping is allowed.
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    subintervals: usize,
    deadline: usize,
    sensing: usize,
    transmit: Option<usize>,
    levels: usize,
    superstates: Vec<SuperState>,
}

impl StateSpace {
    pub fn new(params: &DeviceParams) -> Result<Self, ModelError> {
        params.validate()?;
        let m = params.subintervals;
        let ns = params.sensing_duration;
        let mut superstates: Vec<SuperState> = (0..m).map(|tau| SuperState { tau, flag: 0 }).collect();
        superstates.extend((ns..m).map(|tau| SuperState { tau, flag: 1 }));
        if let Some(nt) = params.transmit_duration {
            superstates.extend((ns + nt..m).map(|tau| SuperState { tau, flag: 2 }));
        }
        Ok(StateSpace {
            subintervals: m,
            deadline: params.sensing_deadline,
            sensing: ns,
            transmit: params.transmit_duration,
            levels: params.grid_levels,
            superstates,
        })
    }

    pub fn len(&self) -> usize {
        self.superstates.len() * self.levels
    }

    pub fn is_empty(&self) -> bool {
        self.superstates.is_empty()
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn subintervals(&self) -> usize {
        self.subintervals
    }

    pub fn superstates(&self) -> &[SuperState] {
        &self.superstates
    }

    /// Position of a superstate in canonical order, if admissible.
    pub fn superstate_index(&self, ss: SuperState) -> Option<usize> {
        let m = self.subintervals;
        let ns = self.sensing;
        if ss.tau >= m {
            return None;
        }
        match ss.flag {
            0 => Some(ss.tau),
            1 if ss.tau >= ns => Some(m + ss.tau - ns),
            2 => {
                let nt = self.transmit?;
                (ss.tau >= ns + nt).then(|| m + (m - ns) + ss.tau - ns - nt)
            }
            _ => None,
        }
    }

    pub fn index(&self, s: State) -> Option<usize> {
        if s.level >= self.levels {
            return None;
        }
        self.superstate_index(s.superstate())
            .map(|k| k * self.levels + s.level)
    }

    pub fn state(&self, idx: usize) -> State {
        let ss = self.superstates[idx / self.levels];
        State {
            level: idx % self.levels,
            tau: ss.tau,
            flag: ss.flag,
        }
    }

    pub fn states(&self) -> impl Iterator<Item = State> + '_ {
        (0..self.len()).map(|i| self.state(i))
    }

    /// Indices of the `N_v` states of a superstate, ordered by level.
    pub fn superstate_states(&self, ss: SuperState) -> Option<std::ops::Range<usize>> {
        self.superstate_index(ss)
            .map(|k| k * self.levels..(k + 1) * self.levels)
    }

    pub fn decision(&self, ss: SuperState) -> Decision {
        match (ss.flag, self.transmit) {
            (0, _) if ss.tau <= self.deadline => Decision::Sense,
            (1, Some(nt)) if ss.tau >= self.sensing && ss.tau + nt <= self.subintervals => {
                Decision::Transmit
            }
            _ => Decision::None,
        }
    }

    pub fn allowed_actions(&self, s: State) -> &'static [Action] {
        match self.decision(s.superstate()) {
            Decision::Sense => &[Action::Sleeping, Action::Sensing],
            Decision::Transmit => &[Action::Sleeping, Action::Transmitting],
            Decision::None => &[Action::Sleeping],
        }
    }

    /// Superstates where a task may be started, in canonical order.
    pub fn decidable_superstates(&self) -> impl Iterator<Item = SuperState> + '_ {
        self.superstates
            .iter()
            .copied()
            .filter(|ss| self.decision(*ss) != Decision::None)
    }

    /// Superstate reached from `ss` under `action`, or `None` when the action
    /// is not allowed there.
    pub fn successor(&self, ss: SuperState, action: Action) -> Option<SuperState> {
        let m = self.subintervals;
        let wrap = |tau: usize, flag: u8| {
            if tau >= m {
                SuperState::START
            } else {
                SuperState { tau, flag }
            }
        };
        match (action, self.decision(ss)) {
            (Action::Sleeping, _) => Some(if ss.tau + 1 >= m {
                SuperState::START
            } else {
                SuperState {
                    tau: ss.tau + 1,
                    flag: ss.flag,
                }
            }),
            (Action::Sensing, Decision::Sense) => Some(wrap(ss.tau + self.sensing, 1)),
            (Action::Transmitting, Decision::Transmit) => {
                let nt = self.transmit?;
                Some(wrap(ss.tau + nt, 2))
            }
            _ => None,
        }
    }
}
