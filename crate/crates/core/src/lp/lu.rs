//! Sparse LU factorization of a square basis matrix plus product-form updates.
//!
//! The factorization is right-looking Gaussian elimination with Markowitz
//! pivot selection and threshold partial pivoting. Entries that cancel to
//! zero are kept as explicit zeros so the row/column patterns stay exact.

use crate::error::SolverError;

/// Relative threshold for accepting a pivot within its column.
const THRESHOLD: f64 = 0.1;
/// Absolute magnitude below which a column is treated as numerically zero.
const ABS_PIVOT_TOL: f64 = 1e-13;
/// Number of shortest columns examined per pivot search.
const SEARCH_COLUMNS: usize = 4;

#[derive(Debug, Clone)]
struct Pivot {
    row: usize,
    col: usize,
    value: f64,
    /// Multipliers `(row, l)` applied as `row -= l * pivot_row`.
    lower: Vec<(usize, f64)>,
    /// Off-diagonal entries of the pivot row, in columns pivoted later.
    upper: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct SparseLu {
    n: usize,
    pivots: Vec<Pivot>,
}

impl SparseLu {
    /// Factor the `n x n` matrix given by its sparse columns `(row, value)`.
    pub fn factor(n: usize, columns: &[Vec<(usize, f64)>]) -> Result<Self, SolverError> {
        if columns.len() != n {
            return Err(SolverError::Dimension(format!(
                "{} columns for an {n} x {n} matrix",
                columns.len()
            )));
        }
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (j, col) in columns.iter().enumerate() {
            for &(i, v) in col {
                if i >= n {
                    return Err(SolverError::Dimension(format!("row index {i} out of range")));
                }
                if let Some(e) = rows[i].iter_mut().find(|e| e.0 == j) {
                    e.1 += v;
                } else {
                    rows[i].push((j, v));
                    cols[j].push(i);
                }
            }
        }
        let mut col_count: Vec<usize> = cols.iter().map(Vec::len).collect();
        let mut row_done = vec![false; n];
        let mut col_done = vec![false; n];
        let mut slot = vec![usize::MAX; n];
        let mut pivots = Vec::with_capacity(n);

        for step in 0..n {
            let (r, c) = select_pivot(&rows, &cols, &col_count, &row_done, &col_done)
                .ok_or(SolverError::SingularBasis(step))?;
            let pos = rows[r].iter().position(|e| e.0 == c).expect("pivot entry");
            let pivot_row = std::mem::take(&mut rows[r]);
            let value = pivot_row[pos].1;
            let upper: Vec<(usize, f64)> = pivot_row
                .iter()
                .copied()
                .filter(|&(j, _)| j != c)
                .collect();
            row_done[r] = true;
            col_done[c] = true;
            for &(j, _) in &upper {
                col_count[j] -= 1;
            }

            let mut lower = Vec::new();
            let targets = std::mem::take(&mut cols[c]);
            for &i in &targets {
                if row_done[i] {
                    continue;
                }
                let row = &mut rows[i];
                let Some(k) = row.iter().position(|e| e.0 == c) else {
                    continue;
                };
                let l = row.swap_remove(k).1 / value;
                lower.push((i, l));
                if l == 0.0 {
                    continue;
                }
                for (k, e) in row.iter().enumerate() {
                    slot[e.0] = k;
                }
                for &(j, u) in &upper {
                    let k = slot[j];
                    if k != usize::MAX && k < row.len() && row[k].0 == j {
                        row[k].1 -= l * u;
                    } else {
                        row.push((j, -l * u));
                        cols[j].push(i);
                        col_count[j] += 1;
                    }
                }
                for e in row.iter() {
                    slot[e.0] = usize::MAX;
                }
            }
            pivots.push(Pivot {
                row: r,
                col: c,
                value,
                lower,
                upper,
            });
        }
        Ok(SparseLu { n, pivots })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored nonzeros of both factors.
    pub fn nnz(&self) -> usize {
        self.pivots
            .iter()
            .map(|p| 1 + p.lower.len() + p.upper.len())
            .sum()
    }

    /// Solve `B x = b` in place: `b` is indexed by row on entry and by
    /// column on exit.
    pub fn solve(&self, b: &mut [f64]) {
        for p in &self.pivots {
            let v = b[p.row];
            if v != 0.0 {
                for &(i, l) in &p.lower {
                    b[i] -= l * v;
                }
            }
        }
        let mut x = vec![0.0; self.n];
        for p in self.pivots.iter().rev() {
            let mut acc = b[p.row];
            for &(j, u) in &p.upper {
                acc -= u * x[j];
            }
            x[p.col] = acc / p.value;
        }
        b.copy_from_slice(&x);
    }

    /// Solve `B^T y = d` in place: `d` is indexed by column on entry and by
    /// row on exit.
    pub fn solve_transpose(&self, d: &mut [f64]) {
        let mut z = vec![0.0; self.n];
        for p in &self.pivots {
            let v = d[p.col] / p.value;
            z[p.row] = v;
            if v != 0.0 {
                for &(j, u) in &p.upper {
                    d[j] -= u * v;
                }
            }
        }
        for p in self.pivots.iter().rev() {
            let mut acc = 0.0;
            for &(i, l) in &p.lower {
                acc += l * z[i];
            }
            z[p.row] -= acc;
        }
        d.copy_from_slice(&z);
    }
}

fn select_pivot(
    rows: &[Vec<(usize, f64)>],
    cols: &[Vec<usize>],
    col_count: &[usize],
    row_done: &[bool],
    col_done: &[bool],
) -> Option<(usize, usize)> {
    // Shortest active columns first.
    let mut candidates: Vec<(usize, usize)> = Vec::with_capacity(SEARCH_COLUMNS + 1);
    for (j, &cnt) in col_count.iter().enumerate() {
        if col_done[j] {
            continue;
        }
        if cnt == 0 {
            return None;
        }
        if candidates.len() < SEARCH_COLUMNS || cnt < candidates[candidates.len() - 1].0 {
            let at = candidates.partition_point(|&(c, _)| c <= cnt);
            candidates.insert(at, (cnt, j));
            candidates.truncate(SEARCH_COLUMNS);
        }
    }
    let mut best: Option<(usize, f64, usize, usize)> = None;
    for &(cnt, j) in &candidates {
        let entries = cols[j].iter().filter(|&&i| !row_done[i]).filter_map(|&i| {
            rows[i]
                .iter()
                .find(|e| e.0 == j)
                .map(|e| (i, e.1.abs()))
        });
        let col_max = entries.clone().map(|e| e.1).fold(0.0, f64::max);
        if col_max < ABS_PIVOT_TOL {
            continue;
        }
        for (i, a) in entries {
            if a < THRESHOLD * col_max {
                continue;
            }
            let cost = (rows[i].len() - 1) * (cnt - 1);
            let better = match best {
                None => true,
                Some((bc, ba, _, _)) => cost < bc || (cost == bc && a > ba),
            };
            if better {
                best = Some((cost, a, i, j));
            }
        }
    }
    best.map(|(_, _, i, j)| (i, j))
}

#[derive(Debug, Clone)]
struct Eta {
    pos: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

/// A basis factorization: sparse LU of a reference basis followed by a file
/// of column-replacement etas.
#[derive(Debug, Clone)]
pub struct BasisFactor {
    lu: SparseLu,
    etas: Vec<Eta>,
}

impl BasisFactor {
    pub fn new(lu: SparseLu) -> Self {
        BasisFactor {
            lu,
            etas: Vec::new(),
        }
    }

    pub fn updates(&self) -> usize {
        self.etas.len()
    }

    /// `B x = b`; rows in, positions out.
    pub fn ftran(&self, b: &mut [f64]) {
        self.lu.solve(b);
        for eta in &self.etas {
            let xp = b[eta.pos] / eta.pivot;
            if xp != 0.0 {
                for &(i, w) in &eta.entries {
                    b[i] -= w * xp;
                }
            }
            b[eta.pos] = xp;
        }
    }

    /// `B^T y = d`; positions in, rows out.
    pub fn btran(&self, d: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut acc = d[eta.pos];
            for &(i, w) in &eta.entries {
                acc -= w * d[i];
            }
            d[eta.pos] = acc / eta.pivot;
        }
        self.lu.solve_transpose(d);
    }

    /// Record that basis position `pos` is replaced by a column whose
    /// FTRAN image is `w`.
    pub fn update(&mut self, pos: usize, w: &[f64]) {
        let entries = w
            .iter()
            .enumerate()
            .filter(|&(i, &v)| i != pos && v != 0.0)
            .map(|(i, &v)| (i, v))
            .collect();
        self.etas.push(Eta {
            pos,
            pivot: w[pos],
            entries,
        });
    }
}
