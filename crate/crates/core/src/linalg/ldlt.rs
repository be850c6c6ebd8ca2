//! Envelope (skyline) LDLᵀ factorization for symmetric, possibly indefinite,
//! sparse matrices bordered by a few dense rows.
//!
//! The sparse block is reordered by reverse Cuthill-McKee; border rows are
//! eliminated last so they only cost one dense row each. No pivoting is done:
//! a pivot below `tol · max|a_ii|` is reported as [`Error::Singular`]. Since
//! the factorization is a congruence, the signs of `D` give the inertia.

use std::collections::VecDeque;

use super::sparse::CsrMatrix;
use crate::{Error, Result};

/// Symmetric matrix
///
/// ```text
///   [ A    Bᵀ ]
///   [ B    C  ]
/// ```
///
/// with sparse `A` (n×n), dense border rows `B` (m×n) and a dense symmetric
/// corner `C` (m×m).
pub struct Bordered<'a> {
    pub sparse: &'a CsrMatrix,
    pub borders: Vec<Vec<f64>>,
    pub corner: Vec<Vec<f64>>,
}

impl<'a> Bordered<'a> {
    pub fn plain(sparse: &'a CsrMatrix) -> Self {
        Bordered {
            sparse,
            borders: Vec::new(),
            corner: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.sparse.dim() + self.borders.len()
    }
}

#[derive(Debug, Clone)]
pub struct Ldlt {
    n: usize,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    /// Row `i` holds `L[i][first[i]..i]` followed by `D[i]`.
    vals: Vec<f64>,
}

const PIVOT_TOL: f64 = 1e-13;

impl Ldlt {
    pub fn factor(a: &CsrMatrix) -> Result<Ldlt> {
        Self::factor_bordered(&Bordered::plain(a))
    }

    pub fn factor_bordered(sys: &Bordered<'_>) -> Result<Ldlt> {
        let ns = sys.sparse.dim();
        let m = sys.borders.len();
        let n = ns + m;
        for b in &sys.borders {
            if b.len() != ns {
                return Err(Error::Dimension {
                    expected: ns,
                    got: b.len(),
                });
            }
        }
        let mut perm = rcm(sys.sparse);
        perm.extend(ns..n);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        // Envelope: first nonzero column of each permuted row.
        let mut first: Vec<usize> = (0..n).collect();
        for old in 0..ns {
            let i = inv[old];
            for (j_old, _) in sys.sparse.row(old) {
                let j = inv[j_old];
                if j < i {
                    first[i] = first[i].min(j);
                }
            }
        }
        for r in 0..m {
            first[ns + r] = 0;
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i]) + 1;
        }
        let mut vals = vec![0.0; start[n]];
        let mut diag_scale: f64 = 0.0;
        for old in 0..ns {
            let i = inv[old];
            for (j_old, v) in sys.sparse.row(old) {
                let j = inv[j_old];
                if j <= i {
                    vals[start[i] + (j - first[i])] += v;
                }
                if j == i {
                    diag_scale = diag_scale.max(v.abs());
                }
            }
        }
        for (r, row) in sys.borders.iter().enumerate() {
            let i = ns + r;
            for (old, &v) in row.iter().enumerate() {
                vals[start[i] + inv[old]] = v;
            }
            for (c, &v) in sys.corner[r].iter().enumerate().take(r + 1) {
                vals[start[i] + ns + c] = v;
            }
        }
        for r in 0..m {
            for old in 0..ns {
                diag_scale = diag_scale.max(sys.borders[r][old].abs());
            }
        }
        let tol = PIVOT_TOL * diag_scale.max(f64::MIN_POSITIVE);

        let mut g = vec![0.0; n];
        for i in 0..n {
            let fi = first[i];
            let row_i = start[i];
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let row_j = start[j];
                let mut w = vals[row_i + (j - fi)];
                for k in lo..j {
                    w -= g[k] * vals[row_j + (k - fj)];
                }
                g[j] = w;
                let dj = vals[start[j + 1] - 1];
                vals[row_i + (j - fi)] = w / dj;
            }
            let mut d = vals[start[i + 1] - 1];
            for k in fi..i {
                d -= g[k] * vals[row_i + (k - fi)];
            }
            if !(d.abs() > tol) {
                return Err(Error::Singular { row: i, pivot: d });
            }
            vals[start[i + 1] - 1] = d;
        }
        Ok(Ldlt {
            n,
            perm,
            first,
            start,
            vals,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn d(&self, i: usize) -> f64 {
        self.vals[self.start[i + 1] - 1]
    }

    /// (negative, positive) pivot counts.
    pub fn inertia(&self) -> (usize, usize) {
        let neg = (0..self.n).filter(|&i| self.d(i) < 0.0).count();
        (neg, self.n - neg)
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n, "rhs dimension");
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..self.n {
            let fi = self.first[i];
            let row = self.start[i];
            let mut s = y[i];
            for k in fi..i {
                s -= self.vals[row + (k - fi)] * y[k];
            }
            y[i] = s;
        }
        for (i, yi) in y.iter_mut().enumerate() {
            *yi /= self.d(i);
        }
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let row = self.start[i];
            let yi = y[i];
            for k in fi..i {
                y[k] -= self.vals[row + (k - fi)] * yi;
            }
        }
        let mut x = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    /// Number of stored factor entries.
    pub fn envelope_size(&self) -> usize {
        self.vals.len()
    }
}

/// Reverse Cuthill-McKee ordering (`perm[new] = old`) of the graph of `a`.
pub fn rcm(a: &CsrMatrix) -> Vec<usize> {
    let n = a.dim();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| a.row(i).map(|(j, _)| j).filter(|&j| j != i).collect())
        .collect();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let seed = (0..n)
            .filter(|&v| !visited[v])
            .min_by_key(|&v| degree[v])
            .expect("unvisited vertex");
        let root = peripheral(&adj, seed, &visited);
        let mut queue = VecDeque::from([root]);
        visited[root] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nb: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            nb.sort_by_key(|&w| (degree[w], w));
            for w in nb {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(adj: &[Vec<usize>], root: usize, blocked: &[bool]) -> Vec<usize> {
    let mut level = vec![usize::MAX; adj.len()];
    level[root] = 0;
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if !blocked[w] && level[w] == usize::MAX {
                level[w] = level[v] + 1;
                queue.push_back(w);
            }
        }
    }
    level
}

fn peripheral(adj: &[Vec<usize>], seed: usize, blocked: &[bool]) -> usize {
    let mut root = seed;
    let mut ecc = 0;
    for _ in 0..8 {
        let lv = bfs_levels(adj, root, blocked);
        let (far, &d) = lv
            .iter()
            .enumerate()
            .filter(|(_, &l)| l != usize::MAX)
            .max_by_key(|(v, &l)| (l, std::cmp::Reverse(adj[*v].len())))
            .expect("root is reachable");
        if d <= ecc {
            break;
        }
        ecc = d;
        root = far;
    }
    root
}
