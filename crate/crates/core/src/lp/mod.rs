//! A small, deterministic revised-simplex solver for equality-form LPs:
//! maximize `c^T x` subject to `A x = b`, `x >= 0`.

mod lu;
mod simplex;

pub use lu::{BasisFactor, SparseLu};
pub use simplex::solve;

use serde::{Deserialize, Serialize};

use crate::error::SolverError;

/// Entering-variable rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pricing {
    /// Lowest-index improving column; cycling-free.
    #[default]
    Bland,
    /// Largest reduced cost, ties to the lowest index.
    Dantzig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimplexOptions {
    pub pricing: Pricing,
    /// Reduced costs above this value are treated as improving.
    pub dual_tol: f64,
    /// Basic values above `-primal_tol` are treated as feasible.
    pub primal_tol: f64,
    /// Smallest acceptable pivot, relative to the largest entry of the
    /// entering column.
    pub pivot_tol: f64,
    pub max_iters: usize,
    /// Product-form updates allowed before the basis is refactored.
    pub refactor_every: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            pricing: Pricing::Bland,
            dual_tol: 1e-11,
            primal_tol: 1e-9,
            pivot_tol: 1e-7,
            max_iters: 1_000_000,
            refactor_every: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    n_rows: usize,
    rhs: Vec<f64>,
    cost: Vec<f64>,
    columns: Vec<Vec<(usize, f64)>>,
}

impl LinearProgram {
    pub fn new(rhs: Vec<f64>) -> Self {
        LinearProgram {
            n_rows: rhs.len(),
            rhs,
            cost: Vec::new(),
            columns: Vec::new(),
        }
    }

    /// Append a column; duplicate row entries are summed. Returns its index.
    pub fn add_column(
        &mut self,
        cost: f64,
        entries: impl IntoIterator<Item = (usize, f64)>,
    ) -> Result<usize, SolverError> {
        let mut col: Vec<(usize, f64)> = Vec::new();
        for (i, v) in entries {
            if i >= self.n_rows {
                return Err(SolverError::Dimension(format!(
                    "row {i} out of range for {} rows",
                    self.n_rows
                )));
            }
            if !v.is_finite() {
                return Err(SolverError::Dimension(format!("non-finite coefficient in row {i}")));
            }
            match col.iter_mut().find(|e| e.0 == i) {
                Some(e) => e.1 += v,
                None => col.push((i, v)),
            }
        }
        col.retain(|e| e.1 != 0.0);
        col.sort_by_key(|e| e.0);
        self.cost.push(cost);
        self.columns.push(col);
        Ok(self.columns.len() - 1)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn column(&self, j: usize) -> &[(usize, f64)] {
        &self.columns[j]
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    /// Largest absolute violation of `A x = b`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let mut r: Vec<f64> = self.rhs.iter().map(|b| -b).collect();
        for (col, &xj) in self.columns.iter().zip(x) {
            for &(i, v) in col {
                r[i] += v * xj;
            }
        }
        r.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Row duals `y` with `c_j - y^T a_j <= 0` for every column at optimum.
    pub duals: Vec<f64>,
    /// Final basic variables by position; indices `>= n_cols` are
    /// artificials kept on redundant rows.
    pub basis: Vec<usize>,
    pub iterations: usize,
    /// Iterations spent finding a feasible basis (0 when the start basis was feasible).
    pub phase_one_iterations: usize,
}
