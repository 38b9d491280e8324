use crate::error::ModelError;
use crate::mdp::micro::MicroMatrices;
use crate::mdp::state::{Action, StateSpace};

/// Sparse `P(s' | s, a)` stored row-per-(state, action) pair.
///
/// Pairs are numbered in canonical state order, and within a state in
/// `Action` order (sleeping first).
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    pair_start: Vec<usize>,
    pair_action: Vec<Action>,
    pair_state: Vec<usize>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl TransitionKernel {
    pub fn assemble(space: &StateSpace, micro: &MicroMatrices) -> Result<Self, ModelError> {
        if micro.dim() != space.levels() {
            return Err(ModelError::Dimension(format!(
                "micro matrices are {0}x{0} but the grid has {1} levels",
                micro.dim(),
                space.levels()
            )));
        }
        let mut builder = KernelBuilder::with_states(space.len());
        for s in space.states() {
            for &a in space.allowed_actions(s) {
                let next = space
                    .successor(s.superstate(), a)
                    .expect("allowed action has a successor");
                let block = space
                    .superstate_states(next)
                    .expect("successor superstate is admissible");
                let kernel = match a {
                    Action::Sleeping => &micro.sleep,
                    Action::Sensing => &micro.sensing,
                    Action::Transmitting => micro
                        .transmitting
                        .as_ref()
                        .ok_or(ModelError::NoTransmitTask)?,
                };
                let row = kernel.row(s.level);
                builder.push_pair(
                    a,
                    row.iter()
                        .enumerate()
                        .filter(|(_, &p)| p > 0.0)
                        .map(|(j, &p)| (block.start + j, p)),
                );
            }
            builder.finish_state();
        }
        Ok(builder.build())
    }

    pub fn n_states(&self) -> usize {
        self.pair_start.len() - 1
    }

    pub fn n_pairs(&self) -> usize {
        self.pair_action.len()
    }

    pub fn pairs(&self, state: usize) -> std::ops::Range<usize> {
        self.pair_start[state]..self.pair_start[state + 1]
    }

    pub fn action(&self, pair: usize) -> Action {
        self.pair_action[pair]
    }

    pub fn state_of(&self, pair: usize) -> usize {
        self.pair_state[pair]
    }

    pub fn pair(&self, state: usize, action: Action) -> Option<usize> {
        self.pairs(state).find(|&p| self.pair_action[p] == action)
    }

    /// `(next_state, probability)` entries of a pair.
    pub fn row(&self, pair: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[pair]..self.row_ptr[pair + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Largest deviation of a row sum from 1.
    pub fn max_row_error(&self) -> f64 {
        (0..self.n_pairs())
            .map(|p| (self.row(p).map(|(_, v)| v).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `(pair, next_state, probability)` triplets in storage order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_pairs()).flat_map(move |p| self.row(p).map(move |(j, v)| (p, j, v)))
    }
}

/// Incremental construction of a [`TransitionKernel`].
#[derive(Debug, Default)]
pub struct KernelBuilder {
    pair_start: Vec<usize>,
    pair_action: Vec<Action>,
    pair_state: Vec<usize>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl KernelBuilder {
    pub fn with_states(n: usize) -> Self {
        let mut b = KernelBuilder::default();
        b.pair_start.reserve(n + 1);
        b.pair_start.push(0);
        b.row_ptr.push(0);
        b
    }

    pub fn push_pair(&mut self, action: Action, row: impl IntoIterator<Item = (usize, f64)>) {
        for (j, v) in row {
            self.cols.push(j);
            self.vals.push(v);
        }
        self.row_ptr.push(self.cols.len());
        self.pair_action.push(action);
        self.pair_state.push(self.pair_start.len() - 1);
    }

    pub fn finish_state(&mut self) {
        self.pair_start.push(self.pair_action.len());
    }

    pub fn build(self) -> TransitionKernel {
        TransitionKernel {
            pair_start: self.pair_start,
            pair_action: self.pair_action,
            pair_state: self.pair_state,
            row_ptr: self.row_ptr,
            cols: self.cols,
            vals: self.vals,
        }
    }
}
