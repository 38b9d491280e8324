use super::{BasisFactor, LinearProgram, LpSolution, Pricing, SimplexOptions, SparseLu};
use crate::error::SolverError;

const NONBASIC: usize = usize::MAX;

/// Solve `lp` to optimality.
///
/// `start` is an optional list of `n_rows` column indices used as the
/// initial basis. If it is singular or primal infeasible the solver falls
/// back to a phase-one start on artificial variables.
pub fn solve(
    lp: &LinearProgram,
    opts: &SimplexOptions,
    start: Option<&[usize]>,
) -> Result<LpSolution, SolverError> {
    let m = lp.n_rows();
    let n = lp.n_cols();
    let artificials: Vec<Vec<(usize, f64)>> = (0..m)
        .map(|i| vec![(i, if lp.rhs()[i] < 0.0 { -1.0 } else { 1.0 })])
        .collect();
    let mut s = Simplex {
        lp,
        opts,
        artificials,
        basis: Vec::new(),
        position: vec![NONBASIC; n + m],
        xb: vec![0.0; m],
        factor: None,
        iterations: 0,
    };

    let warm = start.map(|b| s.try_start(b)).transpose()?.unwrap_or(false);
    let mut phase_one_iterations = 0;
    if !warm {
        s.set_basis((n..n + m).collect())?;
        let mut cost = vec![0.0; n + m];
        cost[n..].iter_mut().for_each(|c| *c = -1.0);
        let enter: Vec<bool> = (0..n + m).map(|j| j < n).collect();
        s.run(&cost, &enter, false)?;
        let infeasibility: f64 = s
            .basis
            .iter()
            .zip(&s.xb)
            .filter(|(&j, _)| j >= n)
            .map(|(_, &x)| x.max(0.0))
            .sum();
        let scale = lp.rhs().iter().fold(1.0_f64, |a, b| a.max(b.abs()));
        if infeasibility > 1e-9 * scale {
            return Err(SolverError::Infeasible(infeasibility));
        }
        s.drive_out_artificials()?;
        phase_one_iterations = s.iterations;
    }

    let mut cost = lp.cost().to_vec();
    cost.resize(n + m, 0.0);
    let enter: Vec<bool> = (0..n + m).map(|j| j < n).collect();
    s.run(&cost, &enter, true)?;
    s.refactor()?;

    let mut x = vec![0.0; n];
    for (&j, &v) in s.basis.iter().zip(&s.xb) {
        if j < n {
            x[j] = v.max(0.0);
        }
    }
    let duals = s.duals(&cost);
    Ok(LpSolution {
        objective: lp.objective(&x),
        x,
        duals,
        basis: s.basis.clone(),
        iterations: s.iterations,
        phase_one_iterations,
    })
}

struct Simplex<'a> {
    lp: &'a LinearProgram,
    opts: &'a SimplexOptions,
    artificials: Vec<Vec<(usize, f64)>>,
    basis: Vec<usize>,
    position: Vec<usize>,
    xb: Vec<f64>,
    factor: Option<BasisFactor>,
    iterations: usize,
}

impl Simplex<'_> {
    fn column(&self, j: usize) -> &[(usize, f64)] {
        let n = self.lp.n_cols();
        if j < n {
            self.lp.column(j)
        } else {
            &self.artificials[j - n]
        }
    }

    fn factor(&self) -> &BasisFactor {
        self.factor.as_ref().expect("basis factored")
    }

    fn set_basis(&mut self, basis: Vec<usize>) -> Result<(), SolverError> {
        self.position.iter_mut().for_each(|p| *p = NONBASIC);
        for (i, &j) in basis.iter().enumerate() {
            self.position[j] = i;
        }
        self.basis = basis;
        self.refactor()
    }

    fn refactor(&mut self) -> Result<(), SolverError> {
        let m = self.lp.n_rows();
        let cols: Vec<Vec<(usize, f64)>> =
            self.basis.iter().map(|&j| self.column(j).to_vec()).collect();
        self.factor = Some(BasisFactor::new(SparseLu::factor(m, &cols)?));
        let mut xb = self.lp.rhs().to_vec();
        self.factor().ftran(&mut xb);
        self.xb = xb;
        Ok(())
    }

    /// Install a caller-supplied basis; `Ok(false)` if it cannot be used.
    fn try_start(&mut self, start: &[usize]) -> Result<bool, SolverError> {
        let m = self.lp.n_rows();
        let n = self.lp.n_cols();
        if start.len() != m {
            return Err(SolverError::Dimension(format!(
                "start basis has {} columns, expected {m}",
                start.len()
            )));
        }
        let mut seen = vec![false; n];
        for &j in start {
            if j >= n || seen[j] {
                return Err(SolverError::Dimension(format!(
                    "start basis column {j} out of range or repeated"
                )));
            }
            seen[j] = true;
        }
        match self.set_basis(start.to_vec()) {
            Ok(()) => Ok(self.xb.iter().all(|&v| v >= -self.opts.primal_tol)),
            Err(SolverError::SingularBasis(_)) => Ok(false),
            Err(e) => Err(e),
        }
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.basis.iter().map(|&j| cost[j]).collect();
        self.factor().btran(&mut y);
        y
    }

    fn entering(&self, cost: &[f64], enter: &[bool], y: &[f64]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..cost.len() {
            if !enter[j] || self.position[j] != NONBASIC {
                continue;
            }
            let d = cost[j] - self.column(j).iter().map(|&(i, a)| y[i] * a).sum::<f64>();
            if d <= self.opts.dual_tol {
                continue;
            }
            match self.opts.pricing {
                Pricing::Bland => return Some(j),
                Pricing::Dantzig => {
                    if best.is_none_or(|(_, bd)| d > bd) {
                        best = Some((j, d));
                    }
                }
            }
        }
        best.map(|b| b.0)
    }

    fn dense_column(&self, j: usize) -> Vec<f64> {
        let mut w = vec![0.0; self.lp.n_rows()];
        for &(i, a) in self.column(j) {
            w[i] += a;
        }
        self.factor().ftran(&mut w);
        w
    }

    /// Two-pass ratio test. The first pass finds the largest step that
    /// keeps every basic variable above `-primal_tol`; the second picks,
    /// among rows blocking within that step, one with a pivot no smaller
    /// than a tenth of the largest candidate, lowest variable index first.
    /// Basic artificials must stay at zero in phase two, so any nonzero
    /// entry in their row blocks the step outright.
    fn leaving(&self, w: &[f64], pin_artificials: bool) -> Option<(usize, f64)> {
        let n = self.lp.n_cols();
        let scale = w.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
        let tol = self.opts.pivot_tol * scale;
        if pin_artificials {
            let blocked = (0..w.len())
                .filter(|&i| self.basis[i] >= n && w[i].abs() > tol)
                .max_by(|&a, &b| w[a].abs().total_cmp(&w[b].abs()).then(b.cmp(&a)));
            if let Some(i) = blocked {
                return Some((i, 0.0));
            }
        }
        let delta = self.opts.primal_tol;
        let bound = w
            .iter()
            .zip(&self.xb)
            .filter(|(&wi, _)| wi > tol)
            .map(|(&wi, &x)| (x.max(0.0) + delta) / wi)
            .fold(f64::INFINITY, f64::min);
        if !bound.is_finite() {
            return None;
        }
        let ratio = |i: usize| self.xb[i].max(0.0) / w[i];
        let candidates: Vec<usize> = (0..w.len())
            .filter(|&i| w[i] > tol && ratio(i) <= bound)
            .collect();
        let biggest = candidates.iter().map(|&i| w[i]).fold(0.0, f64::max);
        let p = candidates
            .into_iter()
            .filter(|&i| w[i] >= 0.1 * biggest)
            .min_by_key(|&i| self.basis[i])?;
        Some((p, ratio(p)))
    }

    fn pivot(&mut self, q: usize, p: usize, theta: f64, w: &[f64]) {
        for (i, (x, &wi)) in self.xb.iter_mut().zip(w).enumerate() {
            if i != p {
                *x -= theta * wi;
                if x.abs() < self.opts.primal_tol {
                    *x = 0.0;
                }
            }
        }
        self.xb[p] = theta;
        self.position[self.basis[p]] = NONBASIC;
        self.position[q] = p;
        self.basis[p] = q;
        self.factor.as_mut().expect("basis factored").update(p, w);
        self.iterations += 1;
    }

    fn run(&mut self, cost: &[f64], enter: &[bool], pin_artificials: bool) -> Result<(), SolverError> {
        loop {
            if self.factor().updates() >= self.opts.refactor_every {
                self.refactor()?;
            }
            let y = self.duals(cost);
            let Some(q) = self.entering(cost, enter, &y) else {
                return Ok(());
            };
            if self.iterations >= self.opts.max_iters {
                return Err(SolverError::IterationLimit(self.opts.max_iters));
            }
            let w = self.dense_column(q);
            let Some((p, theta)) = self.leaving(&w, pin_artificials) else {
                return Err(SolverError::Unbounded(q));
            };
            self.pivot(q, p, theta, &w);
        }
    }

    /// Replace zero-level artificials left after phase one by real columns
    /// where possible; the rest sit on redundant rows.
    fn drive_out_artificials(&mut self) -> Result<(), SolverError> {
        let n = self.lp.n_cols();
        let m = self.lp.n_rows();
        for p in 0..m {
            if self.basis[p] < n {
                continue;
            }
            let mut rho = vec![0.0; m];
            rho[p] = 1.0;
            self.factor().btran(&mut rho);
            let candidate = (0..n).filter(|&j| self.position[j] == NONBASIC).find(|&j| {
                let alpha: f64 = self.column(j).iter().map(|&(i, a)| rho[i] * a).sum();
                alpha.abs() > 1e-7
            });
            if let Some(q) = candidate {
                let w = self.dense_column(q);
                self.pivot(q, p, 0.0, &w);
                if self.factor().updates() >= self.opts.refactor_every {
                    self.refactor()?;
                }
            }
        }
        Ok(())
    }
}
