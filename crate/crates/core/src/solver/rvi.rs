use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::SolverError;
use crate::mdp::{Action, FiniteMdp};

use super::occupation::{greedy_pair, q_value};
use super::Policy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RviOptions {
    /// Stop once the span of the Bellman residual falls below this.
    pub tol: f64,
    pub max_iters: usize,
    /// Weight of the Bellman update in `h <- (1-k) h + k T h`; values below
    /// 1 remove periodicity, which the interval clock otherwise creates.
    pub aperiodicity: f64,
    /// Near-tie slack favouring task actions in the greedy policy.
    pub tie_tol: f64,
}

impl Default for RviOptions {
    fn default() -> Self {
        RviOptions {
            tol: 1e-10,
            max_iters: 1_000_000,
            aperiodicity: 0.5,
            tie_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RviResult {
    /// Midpoint of the final gain bracket.
    pub gain: f64,
    pub gain_bounds: (f64, f64),
    /// Relative values, pinned to 0 at state 0.
    pub bias: Vec<f64>,
    pub policy: Policy,
    pub iterations: usize,
    pub span: f64,
}

/// Relative value iteration with an aperiodicity transform.
pub fn relative_value_iteration(mdp: &FiniteMdp, opts: &RviOptions) -> Result<RviResult, SolverError> {
    let n = mdp.n_states();
    if n == 0 {
        return Err(SolverError::Dimension("MDP has no states".into()));
    }
    if !(opts.aperiodicity > 0.0 && opts.aperiodicity <= 1.0) {
        return Err(SolverError::Dimension(format!(
            "aperiodicity weight must lie in (0, 1], got {}",
            opts.aperiodicity
        )));
    }
    let kappa = opts.aperiodicity;
    let mut h = vec![0.0; n];
    let mut best = vec![0.0; n];
    let mut last_span = f64::INFINITY;
    for iter in 1..=opts.max_iters {
        best.par_iter_mut().enumerate().for_each(|(s, b)| {
            *b = mdp
                .kernel
                .pairs(s)
                .map(|p| q_value(mdp, &h, p))
                .fold(f64::NEG_INFINITY, f64::max);
        });
        let (lo, hi) = best
            .iter()
            .zip(&h)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (b, h)| {
                (lo.min(b - h), hi.max(b - h))
            });
        last_span = hi - lo;
        if last_span < opts.tol {
            let policy = Policy::from_actions_unchecked(
                (0..n)
                    .map(|s| mdp.kernel.action(greedy_pair(mdp, &h, s, opts.tie_tol)))
                    .collect(),
            );
            return Ok(RviResult {
                gain: 0.5 * (lo + hi),
                gain_bounds: (lo, hi),
                bias: h,
                policy,
                iterations: iter,
                span: last_span,
            });
        }
        let pin = (1.0 - kappa) * h[0] + kappa * best[0];
        for (hs, b) in h.iter_mut().zip(&best) {
            *hs = (1.0 - kappa) * *hs + kappa * b - pin;
        }
    }
    Err(SolverError::NotConverged {
        span: last_span,
        iters: opts.max_iters,
    })
}

/// Advantage of each task action over sleeping in `state`:
/// `Q(state, a) - Q(state, sleeping)` with `Q = r + P h`.
pub fn advantage(mdp: &FiniteMdp, bias: &[f64], state: usize) -> Result<Vec<(Action, f64)>, SolverError> {
    if state >= mdp.n_states() || bias.len() != mdp.n_states() {
        return Err(SolverError::Dimension(format!(
            "state {state} / bias of length {} for {} states",
            bias.len(),
            mdp.n_states()
        )));
    }
    let k = &mdp.kernel;
    if k.pairs(state).len() < 2 {
        return Err(SolverError::SingletonActionSet);
    }
    let base = k
        .pair(state, Action::Sleeping)
        .map(|p| q_value(mdp, bias, p))
        .ok_or(SolverError::SingletonActionSet)?;
    Ok(k.pairs(state)
        .filter(|&p| k.action(p) != Action::Sleeping)
        .map(|p| (k.action(p), q_value(mdp, bias, p) - base))
        .collect())
}
