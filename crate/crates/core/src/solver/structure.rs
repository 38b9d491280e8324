use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::SolverError;
use crate::mdp::{Action, Decision, StateSpace, SuperState};

use super::Policy;

/// Lowest grid level (0-based) at which the task is started, or `Never`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "ThresholdRepr", try_from = "ThresholdRepr")]
pub enum Threshold {
    Level(usize),
    /// No level triggers the task; ordered above every level.
    Never,
}

impl Threshold {
    pub fn level(self) -> Option<usize> {
        match self {
            Threshold::Level(l) => Some(l),
            Threshold::Never => None,
        }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Level(l) => write!(f, "{l}"),
            Threshold::Never => f.write_str("never"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ThresholdRepr {
    Level(usize),
    Word(String),
}

impl From<Threshold> for ThresholdRepr {
    fn from(t: Threshold) -> Self {
        match t {
            Threshold::Level(l) => ThresholdRepr::Level(l),
            Threshold::Never => ThresholdRepr::Word("never".into()),
        }
    }
}

impl TryFrom<ThresholdRepr> for Threshold {
    type Error = String;
    fn try_from(r: ThresholdRepr) -> Result<Self, String> {
        match r {
            ThresholdRepr::Level(l) => Ok(Threshold::Level(l)),
            ThresholdRepr::Word(w) if w == "never" => Ok(Threshold::Never),
            ThresholdRepr::Word(w) => Err(format!("invalid threshold `{w}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdEntry {
    pub tau: usize,
    pub threshold: Threshold,
}

/// Per-slot thresholds over the two permissible windows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdTable {
    /// Sensing thresholds for superstates (tau, 0), tau in the sensing window.
    pub sensing: Vec<ThresholdEntry>,
    /// Transmit thresholds for superstates (tau, 1), tau in the transmit window.
    pub transmitting: Vec<ThresholdEntry>,
}

impl ThresholdTable {
    pub fn sensing_at(&self, tau: usize) -> Option<Threshold> {
        self.sensing.iter().find(|e| e.tau == tau).map(|e| e.threshold)
    }

    pub fn transmitting_at(&self, tau: usize) -> Option<Threshold> {
        self.transmitting.iter().find(|e| e.tau == tau).map(|e| e.threshold)
    }
}

/// Action pattern of a superstate by level: `l` sleep, `s`/`t` task.
pub fn superstate_pattern(policy: &Policy, space: &StateSpace, ss: SuperState) -> String {
    space
        .superstate_states(ss)
        .map(|r| {
            r.map(|s| match policy.action(s) {
                Action::Sleeping => 'l',
                Action::Sensing => 's',
                Action::Transmitting => 't',
            })
            .collect()
        })
        .unwrap_or_default()
}

/// Threshold of one decidable superstate, or the violation if the actions
/// are not "sleep below, task at or above" in the level.
fn superstate_threshold(policy: &Policy, space: &StateSpace, ss: SuperState) -> Result<Threshold, SolverError> {
    let range = space.superstate_states(ss).expect("decidable superstate exists");
    let task: Vec<bool> = range.map(|s| policy.action(s).is_task()).collect();
    let first = task.iter().position(|&t| t);
    match first {
        None => Ok(Threshold::Never),
        Some(k) if task[k..].iter().all(|&t| t) => Ok(Threshold::Level(k)),
        Some(_) => Err(SolverError::NotThreshold {
            tau: ss.tau,
            flag: ss.flag,
            pattern: superstate_pattern(policy, space, ss),
        }),
    }
}

/// Every decidable superstate whose action pattern is not a step function
/// of the level.
pub fn threshold_violations(policy: &Policy, space: &StateSpace) -> Vec<SolverError> {
    space
        .decidable_superstates()
        .filter_map(|ss| superstate_threshold(policy, space, ss).err())
        .collect()
}

/// Threshold tables of a step-structured policy; the first violating
/// superstate is reported otherwise.
pub fn extract_thresholds(policy: &Policy, space: &StateSpace) -> Result<ThresholdTable, SolverError> {
    let mut table = ThresholdTable {
        sensing: Vec::new(),
        transmitting: Vec::new(),
    };
    for ss in space.decidable_superstates() {
        let entry = ThresholdEntry {
            tau: ss.tau,
            threshold: superstate_threshold(policy, space, ss)?,
        };
        match space.decision(ss) {
            Decision::Sense => table.sensing.push(entry),
            Decision::Transmit => table.transmitting.push(entry),
            Decision::None => unreachable!("only decidable superstates are visited"),
        }
    }
    Ok(table)
}

/// Lowest level from which every higher level runs the task, per decidable
/// superstate. Coincides with [`extract_thresholds`] on step-structured
/// policies and is defined for any policy.
pub fn upper_thresholds(policy: &Policy, space: &StateSpace) -> ThresholdTable {
    let mut table = ThresholdTable {
        sensing: Vec::new(),
        transmitting: Vec::new(),
    };
    for ss in space.decidable_superstates() {
        let range = space.superstate_states(ss).expect("decidable superstate exists");
        let task: Vec<bool> = range.map(|s| policy.action(s).is_task()).collect();
        let run = task.iter().rev().take_while(|&&t| t).count();
        let threshold = if run == 0 {
            Threshold::Never
        } else {
            Threshold::Level(task.len() - run)
        };
        let entry = ThresholdEntry { tau: ss.tau, threshold };
        match space.decision(ss) {
            Decision::Sense => table.sensing.push(entry),
            Decision::Transmit => table.transmitting.push(entry),
            Decision::None => unreachable!("only decidable superstates are visited"),
        }
    }
    table
}
