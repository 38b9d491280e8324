use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::error::SolverError;
use crate::lp::SparseLu;
use crate::mdp::{Action, FiniteMdp, MdpModel, SuperState};

use super::occupation::pair_column;
use super::Policy;

/// Stationary distribution of the chain induced by `policy`.
///
/// Solves `pi (I - P) = 0`, `sum pi = 1` directly; the system is
/// nonsingular exactly when the induced chain has one closed class.
pub fn stationary_distribution(mdp: &FiniteMdp, policy: &Policy) -> Result<Vec<f64>, SolverError> {
    let pairs = policy.pairs(mdp)?;
    let n = mdp.n_states();
    let cols: Vec<Vec<(usize, f64)>> = pairs.iter().map(|&p| pair_column(mdp, p)).collect();
    let lu = SparseLu::factor(n, &cols)?;
    let mut pi = vec![0.0; n];
    pi[n - 1] = 1.0;
    lu.solve(&mut pi);
    Ok(pi)
}

/// Average reward per epoch of a unichain policy.
pub fn policy_gain(mdp: &FiniteMdp, policy: &Policy) -> Result<f64, SolverError> {
    let pi = stationary_distribution(mdp, policy)?;
    let pairs = policy.pairs(mdp)?;
    Ok(pi.iter().zip(&pairs).map(|(w, &p)| w * mdp.rewards[p]).sum())
}

/// Closed classes and transient states of an induced chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceReport {
    pub n_states: usize,
    /// Number of strongly connected components (communicating classes).
    pub communicating_classes: usize,
    /// Members of each closed class, sorted, classes ordered by first member.
    pub closed_classes: Vec<Vec<usize>>,
    pub transient_states: usize,
    /// Whether a state of superstate (tau=0, f=0) lies in a closed class.
    /// Always `None` for models without the interval structure.
    pub start_recurrent: Option<bool>,
}

impl RecurrenceReport {
    pub fn is_unichain(&self) -> bool {
        self.closed_classes.len() == 1
    }

    /// Unichain and, where applicable, recurrent through the start superstate.
    pub fn passes(&self) -> bool {
        self.is_unichain() && self.start_recurrent != Some(false)
    }
}

/// Communicating-class decomposition of the chain induced by `policy`.
pub fn recurrence(mdp: &FiniteMdp, policy: &Policy) -> Result<RecurrenceReport, SolverError> {
    let pairs = policy.pairs(mdp)?;
    let n = mdp.n_states();
    let mut graph = DiGraph::<(), ()>::with_capacity(n, mdp.kernel.nnz());
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for (s, &p) in pairs.iter().enumerate() {
        for (j, v) in mdp.kernel.row(p) {
            if v > 0.0 {
                graph.add_edge(nodes[s], nodes[j], ());
            }
        }
    }
    let sccs = tarjan_scc(&graph);
    let mut component = vec![0usize; n];
    for (c, members) in sccs.iter().enumerate() {
        for v in members {
            component[v.index()] = c;
        }
    }
    let mut closed = vec![true; sccs.len()];
    for (s, &p) in pairs.iter().enumerate() {
        for (j, v) in mdp.kernel.row(p) {
            if v > 0.0 && component[j] != component[s] {
                closed[component[s]] = false;
            }
        }
    }
    let mut closed_classes: Vec<Vec<usize>> = sccs
        .iter()
        .zip(&closed)
        .filter(|(_, &c)| c)
        .map(|(members, _)| {
            let mut m: Vec<usize> = members.iter().map(|v| v.index()).collect();
            m.sort_unstable();
            m
        })
        .collect();
    closed_classes.sort_by_key(|m| m[0]);
    let recurrent: usize = closed_classes.iter().map(Vec::len).sum();
    Ok(RecurrenceReport {
        n_states: n,
        communicating_classes: sccs.len(),
        closed_classes,
        transient_states: n - recurrent,
        start_recurrent: None,
    })
}

/// [`recurrence`] plus the check that the start superstate is recurrent.
pub fn verify_unichain(model: &MdpModel, policy: &Policy) -> Result<RecurrenceReport, SolverError> {
    let mut report = recurrence(&model.mdp, policy)?;
    let start = model
        .space
        .superstate_states(SuperState::START)
        .expect("start superstate exists");
    report.start_recurrent = Some(
        report
            .closed_classes
            .iter()
            .any(|c| c.iter().any(|s| start.contains(s))),
    );
    Ok(report)
}

/// Long-run performance of a policy on the scheduling model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    /// Average reward per epoch.
    pub gain: f64,
    /// Stationary probability of the start superstate, i.e. main intervals
    /// per epoch.
    pub intervals_per_epoch: f64,
    pub reward_per_interval: f64,
    /// Expected tasks started per main interval.
    pub sensing_started: f64,
    pub transmit_started: f64,
    /// Expected tasks finishing above the turn-off threshold per interval.
    pub sensing_completed: f64,
    pub transmit_completed: f64,
    pub tasks_completed: f64,
    pub stationary: Vec<f64>,
}

pub fn gain_report(model: &MdpModel, policy: &Policy) -> Result<GainReport, SolverError> {
    let mdp = &model.mdp;
    let pi = stationary_distribution(mdp, policy)?;
    let pairs = policy.pairs(mdp)?;
    let gain = pi.iter().zip(&pairs).map(|(w, &p)| w * mdp.rewards[p]).sum();
    let start = model
        .space
        .superstate_states(SuperState::START)
        .expect("start superstate exists");
    let per_epoch = pi[start].iter().sum::<f64>();
    let mut started = [0.0; 2];
    let mut completed = [0.0; 2];
    for (s, &w) in pi.iter().enumerate() {
        let level = model.space.state(s).level;
        match policy.action(s) {
            Action::Sensing => {
                started[0] += w;
                completed[0] += w * model.safety.sensing[level];
            }
            Action::Transmitting => {
                started[1] += w;
                completed[1] += w * model.safety.transmitting.as_ref().map_or(0.0, |t| t[level]);
            }
            Action::Sleeping => {}
        }
    }
    let per_interval = |x: f64| x / per_epoch;
    Ok(GainReport {
        gain,
        intervals_per_epoch: per_epoch,
        reward_per_interval: per_interval(gain),
        sensing_started: per_interval(started[0]),
        transmit_started: per_interval(started[1]),
        sensing_completed: per_interval(completed[0]),
        transmit_completed: per_interval(completed[1]),
        tasks_completed: per_interval(completed[0] + completed[1]),
        stationary: pi,
    })
}
