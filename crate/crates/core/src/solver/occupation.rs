use crate::error::SolverError;
use crate::lp::{self, LinearProgram, SimplexOptions};
use crate::mdp::{Action, FiniteMdp};

use super::Policy;

/// Long-run state-action frequencies from the average-reward LP.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationMeasure {
    /// One entry per state-action pair, in kernel pair order.
    pub x: Vec<f64>,
    /// Optimal objective, i.e. the optimal gain per epoch.
    pub gain: f64,
    /// Dual values of the flow rows, normalized so the last state is 0.
    pub bias: Vec<f64>,
    pub iterations: usize,
    pub phase_one_iterations: usize,
}

impl OccupationMeasure {
    pub fn total(&self) -> f64 {
        self.x.iter().sum()
    }

    pub fn state_mass(&self, mdp: &FiniteMdp, state: usize) -> f64 {
        mdp.kernel.pairs(state).map(|p| self.x[p]).sum()
    }

    /// Largest violation of `sum_a x(j,a) = sum_{s,a} P(j|s,a) x(s,a)`.
    pub fn flow_residual(&self, mdp: &FiniteMdp) -> f64 {
        let k = &mdp.kernel;
        let mut r = vec![0.0; k.n_states()];
        for (p, &x) in self.x.iter().enumerate() {
            r[k.state_of(p)] += x;
            for (j, v) in k.row(p) {
                r[j] -= v * x;
            }
        }
        r.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// LP column of pair `p`: flow rows for all states but the last (that row
/// is implied by the others) plus the normalization row.
pub(crate) fn pair_column(mdp: &FiniteMdp, p: usize) -> Vec<(usize, f64)> {
    let last = mdp.n_states() - 1;
    let s = mdp.kernel.state_of(p);
    let mut col = Vec::with_capacity(8);
    if s < last {
        col.push((s, 1.0));
    }
    for (j, v) in mdp.kernel.row(p) {
        if j < last {
            match col.iter_mut().find(|e| e.0 == j) {
                Some(e) => e.1 -= v,
                None => col.push((j, -v)),
            }
        }
    }
    col.push((last, 1.0));
    col
}

/// Solve the occupation-measure LP
/// `max sum x r` s.t. flow balance, `sum x = 1`, `x >= 0`.
///
/// The simplex starts from the basis of the policy that takes each
/// state's first action; if that policy's chain is not unichain the solver
/// falls back to phase one.
pub fn solve_lp(mdp: &FiniteMdp, opts: &SimplexOptions) -> Result<OccupationMeasure, SolverError> {
    solve_lp_from(mdp, opts, None)
}

/// [`solve_lp`] starting from the basis of `start` instead. Any unichain
/// policy gives a feasible basis; optimality is still decided by the
/// simplex's own reduced costs.
pub fn solve_lp_from(
    mdp: &FiniteMdp,
    opts: &SimplexOptions,
    start: Option<&Policy>,
) -> Result<OccupationMeasure, SolverError> {
    let n = mdp.n_states();
    if n == 0 {
        return Err(SolverError::Dimension("MDP has no states".into()));
    }
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = 1.0;
    let mut program = LinearProgram::new(rhs);
    for p in 0..mdp.n_pairs() {
        program.add_column(mdp.rewards[p], pair_column(mdp, p))?;
    }
    let crash: Vec<usize> = match start {
        Some(policy) => policy.pairs(mdp)?,
        None => (0..n).map(|s| mdp.kernel.pairs(s).start).collect(),
    };
    let sol = lp::solve(&program, opts, Some(&crash))?;
    let mut bias = sol.duals.clone();
    let gain_dual = bias[n - 1];
    bias[n - 1] = 0.0;
    debug_assert!((gain_dual - sol.objective).abs() < 1e-6);
    Ok(OccupationMeasure {
        x: sol.x,
        gain: sol.objective,
        bias,
        iterations: sol.iterations,
        phase_one_iterations: sol.phase_one_iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractOptions {
    /// Occupation mass at or below this is treated as zero.
    pub mass_tol: f64,
    /// Slack within which a task action counts as tying with sleeping
    /// during the greedy fill-in.
    pub tie_tol: f64,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            mass_tol: 1e-9,
            tie_tol: 1e-9,
        }
    }
}

/// `r(s,a) + sum_j P(j|s,a) h(j)` for pair `p`.
pub(crate) fn q_value(mdp: &FiniteMdp, bias: &[f64], p: usize) -> f64 {
    mdp.rewards[p] + mdp.kernel.row(p).map(|(j, v)| v * bias[j]).sum::<f64>()
}

/// Greedy pair of a state under `bias`, preferring task actions on near-ties.
pub(crate) fn greedy_pair(mdp: &FiniteMdp, bias: &[f64], state: usize, tie_tol: f64) -> usize {
    let mut best: Option<(usize, f64)> = None;
    for p in mdp.kernel.pairs(state) {
        let q = q_value(mdp, bias, p);
        let task = mdp.kernel.action(p).is_task();
        best = match best {
            None => Some((p, q)),
            Some((bp, bq)) => {
                let best_task = mdp.kernel.action(bp).is_task();
                let wins = if task && !best_task {
                    q >= bq - tie_tol
                } else if !task && best_task {
                    q > bq + tie_tol
                } else {
                    q > bq
                };
                Some(if wins { (p, q) } else { (bp, bq) })
            }
        };
    }
    best.expect("every state has an action").0
}

/// Turn an occupation measure into a deterministic policy.
///
/// States carrying mass take an action with positive mass (task actions
/// first, then the larger `x`). States without mass take the greedy action
/// under `bias`.
pub fn extract_policy(
    mdp: &FiniteMdp,
    occupation: &OccupationMeasure,
    bias: &[f64],
    opts: ExtractOptions,
) -> Policy {
    let k = &mdp.kernel;
    let actions = (0..mdp.n_states())
        .map(|s| {
            let supported = k.pairs(s).filter(|&p| occupation.x[p] > opts.mass_tol);
            let chosen = supported.max_by(|&a, &b| {
                let ta = k.action(a).is_task();
                let tb = k.action(b).is_task();
                ta.cmp(&tb)
                    .then(occupation.x[a].total_cmp(&occupation.x[b]))
                    .then(b.cmp(&a))
            });
            let p = chosen.unwrap_or_else(|| greedy_pair(mdp, bias, s, opts.tie_tol));
            k.action(p)
        })
        .collect::<Vec<Action>>();
    Policy::from_actions_unchecked(actions)
}
