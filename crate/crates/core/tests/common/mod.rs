//! Independent reference implementations shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use ostb::energy_model::DeviceParams;
use ostb::mdp::{Action, FiniteMdp, MdpModel};
use ostb::solver::{policy_gain, Policy};
use rand::Rng;

/// One RC step: discharge through `E / I` while charging with `i`.
pub fn rc_step(p: &DeviceParams, load_amps: f64, v: f64, i: f64) -> f64 {
    let e = p.nominal_voltage.unwrap_or(p.v_max);
    let r = e / load_amps;
    let d = (-p.delta_t / (r * p.capacitance)).exp();
    v * d + r * (1.0 - d) * i
}

pub fn final_voltage<R: Rng>(p: &DeviceParams, load: f64, v0: f64, n: usize, hi: f64, rng: &mut R) -> f64 {
    (0..n).fold(v0, |v, _| rc_step(p, load, v, rng.gen::<f64>() * hi))
}

/// Stationary distribution by Gaussian elimination with partial pivoting on
/// `pi (P - I) = 0`, with the last equation replaced by `sum pi = 1`.
/// Returns `None` when the system is singular (more than one closed class).
pub fn dense_stationary(p: &[Vec<f64>]) -> Option<Vec<f64>> {
    let n = p.len();
    let mut a = vec![vec![0.0; n + 1]; n];
    for (i, row) in a.iter_mut().enumerate().take(n - 1) {
        for j in 0..n {
            row[j] = p[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        a[n - 1][j] = 1.0;
    }
    a[n - 1][n] = 1.0;
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..=n {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

/// Gain of the policy choosing `actions[s]` in every state.
pub fn dense_gain(mdp: &FiniteMdp, actions: &[Action]) -> Option<f64> {
    let n = mdp.n_states();
    let mut p = vec![vec![0.0; n]; n];
    let mut r = vec![0.0; n];
    for s in 0..n {
        let pair = mdp.kernel.pair(s, actions[s]).unwrap();
        r[s] = mdp.rewards[pair];
        for (t, w) in mdp.kernel.row(pair) {
            p[s][t] += w;
        }
    }
    let pi = dense_stationary(&p)?;
    Some(pi.iter().zip(&r).map(|(a, b)| a * b).sum())
}

/// States with a real choice, and the task action available there.
pub fn choice_states(model: &MdpModel) -> Vec<(usize, Action)> {
    (0..model.n_states())
        .filter_map(|s| {
            let acts = model.allowed_actions(model.space.state(s));
            (acts.len() > 1).then(|| (s, acts[1]))
        })
        .collect()
}

pub struct Enumeration {
    pub best: f64,
    pub best_actions: Vec<Action>,
    pub evaluated: usize,
    pub singular: usize,
}

pub fn enumerate(model: &MdpModel) -> Enumeration {
    let choices = choice_states(model);
    assert!(choices.len() <= 16, "{} choices is too many to enumerate", choices.len());
    let mut out = Enumeration {
        best: f64::NEG_INFINITY,
        best_actions: Vec::new(),
        evaluated: 0,
        singular: 0,
    };
    for mask in 0u32..(1 << choices.len()) {
        let mut actions = vec![Action::Sleeping; model.n_states()];
        for (bit, &(s, task)) in choices.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                actions[s] = task;
            }
        }
        out.evaluated += 1;
        match dense_gain(&model.mdp, &actions) {
            Some(g) => {
                // the crate's own evaluation must agree policy by policy
                let policy = Policy::new(&model.mdp, actions.clone()).unwrap();
                let lib = policy_gain(&model.mdp, &policy).unwrap();
                assert!((lib - g).abs() < 1e-10, "mask {mask:b}: dense {g} vs library {lib}");
                if g > out.best {
                    out.best = g;
                    out.best_actions = actions;
                }
            }
            None => out.singular += 1,
        }
    }
    out
}

pub fn successors(mdp: &FiniteMdp, actions: &[Action]) -> Vec<Vec<usize>> {
    (0..mdp.n_states())
        .map(|s| {
            let pair = mdp.kernel.pair(s, actions[s]).unwrap();
            mdp.kernel.row(pair).filter(|&(_, w)| w > 0.0).map(|(t, _)| t).collect()
        })
        .collect()
}

/// Closed classes via Kosaraju: finish order on the graph, then components
/// on the reversed graph; a component is closed when no edge leaves it.
pub fn closed_classes(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut stack = vec![(root, 0usize)];
        while let Some(&mut (v, ref mut k)) = stack.last_mut() {
            if *k < adj[v].len() {
                let w = adj[v][*k];
                *k += 1;
                if !seen[w] {
                    seen[w] = true;
                    stack.push((w, 0));
                }
            } else {
                order.push(v);
                stack.pop();
            }
        }
    }
    let mut radj = vec![Vec::new(); n];
    for (v, out) in adj.iter().enumerate() {
        for &w in out {
            radj[w].push(v);
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut count = 0;
    for &root in order.iter().rev() {
        if comp[root] != usize::MAX {
            continue;
        }
        comp[root] = count;
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            for &w in &radj[v] {
                if comp[w] == usize::MAX {
                    comp[w] = count;
                    stack.push(w);
                }
            }
        }
        count += 1;
    }
    let mut closed = vec![true; count];
    for (v, out) in adj.iter().enumerate() {
        if out.iter().any(|&w| comp[w] != comp[v]) {
            closed[comp[v]] = false;
        }
    }
    let mut classes: Vec<Vec<usize>> = (0..count)
        .filter(|&c| closed[c])
        .map(|c| (0..n).filter(|&v| comp[v] == c).collect())
        .collect();
    classes.sort_by_key(|c| c[0]);
    classes
}

