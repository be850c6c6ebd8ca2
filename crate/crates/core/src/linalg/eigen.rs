//! Generalized symmetric eigenproblems `A x = λ M x` restricted to the
//! hyperplane `Z = {x : cᵀx = 0}`.
//!
//! Large problems use block shift-invert subspace iteration with
//! Rayleigh-Ritz in the `M` inner product; small ones are solved densely on an
//! explicit basis of `Z`.

use nalgebra::DMatrix;

use super::sparse::{axpy, dot, norm2, CsrMatrix};
use crate::exec::Exec;
use crate::{Error, Result};

/// Which end of the spectrum the Ritz values are sorted by.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// Smallest eigenvalues (the shift lies below the spectrum).
    Lowest,
    /// Eigenvalues closest to the shift.
    Nearest,
}

pub struct ConstrainedEigen<'a> {
    /// `x ↦ A x` on the full space.
    pub apply: &'a (dyn Fn(&[f64]) -> Vec<f64> + Sync),
    pub mass: &'a CsrMatrix,
    /// The constraint vector `c`.
    pub constraint: &'a [f64],
    /// Solves `(A − σM) x = r` on `Z`, returning `x ∈ Z`.
    pub shifted_solve: &'a (dyn Fn(&[f64]) -> Vec<f64> + Sync),
    pub shift: f64,
}

#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

/// Projects `x` onto `Z` along the constant vector.
pub fn project_out_constant(x: &mut [f64], c: &[f64]) {
    let total: f64 = c.iter().sum();
    let alpha = dot(c, x) / total;
    for xi in x.iter_mut() {
        *xi -= alpha;
    }
}

/// Minimal-norm representative of the functional `r` restricted to `Z`.
fn restrict_residual(r: &mut [f64], c: &[f64]) {
    let alpha = dot(c, r) / dot(c, c);
    axpy(-alpha, c, r);
}

struct SplitMix(u64);

impl SplitMix {
    fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }
}

fn m_orthonormalize(
    vs: &mut [Vec<f64>],
    mass: &CsrMatrix,
    c: &[f64],
    rng: &mut SplitMix,
) {
    for k in 0..vs.len() {
        for attempt in 0..3 {
            for _ in 0..2 {
                let mk = mass.mul_vec(&vs[k]);
                for j in 0..k {
                    let proj = dot(&vs[j], &mk);
                    let vj = vs[j].clone();
                    axpy(-proj, &vj, &mut vs[k]);
                }
            }
            let nk = mass.bilinear(&vs[k], &vs[k]).sqrt();
            if nk > 1e-10 {
                for x in vs[k].iter_mut() {
                    *x /= nk;
                }
                break;
            }
            assert!(attempt < 2, "could not extend the subspace basis");
            vs[k] = (0..c.len()).map(|_| rng.next_f64()).collect();
            project_out_constant(&mut vs[k], c);
        }
    }
}

impl ConstrainedEigen<'_> {
    pub fn solve(
        &self,
        count: usize,
        target: Target,
        tol: f64,
        max_iter: usize,
        exec: Exec,
    ) -> Result<Eigenpairs> {
        let n = self.mass.dim();
        if count == 0 {
            return Ok(Eigenpairs {
                values: Vec::new(),
                vectors: Vec::new(),
                residuals: Vec::new(),
                iterations: 0,
            });
        }
        if count >= n {
            return Err(Error::InsufficientEigenpairs {
                requested: count,
                available: n.saturating_sub(1),
            });
        }
        let p = (2 * count).max(count + 8).min(n - 1);
        let c = self.constraint;
        let mut rng = SplitMix(0x5EED_u64 ^ n as u64);
        let mut basis: Vec<Vec<f64>> = (0..p)
            .map(|_| {
                let mut v: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
                project_out_constant(&mut v, c);
                v
            })
            .collect();
        let mut worst = f64::INFINITY;
        for it in 1..=max_iter {
            let mut ys: Vec<Vec<f64>> = exec.map(&basis, |x| {
                let mut y = (self.shifted_solve)(&self.mass.mul_vec(x));
                project_out_constant(&mut y, c);
                y
            });
            m_orthonormalize(&mut ys, self.mass, c, &mut rng);
            let ays: Vec<Vec<f64>> = exec.map(&ys, |y| (self.apply)(y));
            let mut small = DMatrix::<f64>::zeros(p, p);
            for i in 0..p {
                for j in 0..=i {
                    let v = 0.5 * (dot(&ys[i], &ays[j]) + dot(&ys[j], &ays[i]));
                    small[(i, j)] = v;
                    small[(j, i)] = v;
                }
            }
            let eig = small.symmetric_eigen();
            let mut order: Vec<usize> = (0..p).collect();
            match target {
                Target::Lowest => {
                    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
                }
                Target::Nearest => order.sort_by(|&a, &b| {
                    (eig.eigenvalues[a] - self.shift)
                        .abs()
                        .total_cmp(&(eig.eigenvalues[b] - self.shift).abs())
                }),
            }
            let combine = |src: &[Vec<f64>], col: usize| {
                let mut out = vec![0.0; n];
                for (k, s) in src.iter().enumerate() {
                    axpy(eig.eigenvectors[(k, col)], s, &mut out);
                }
                out
            };
            basis = order.iter().map(|&col| combine(&ys, col)).collect();
            let values: Vec<f64> = order.iter().map(|&col| eig.eigenvalues[col]).collect();
            let residuals: Vec<f64> = (0..count)
                .map(|k| {
                    let ax = combine(&ays, order[k]);
                    let mx = self.mass.mul_vec(&basis[k]);
                    let mut r = ax;
                    axpy(-values[k], &mx, &mut r);
                    restrict_residual(&mut r, c);
                    let scale = values[k].abs().max(1e-3 * (1.0 + self.shift.abs()));
                    norm2(&r) / (scale * norm2(&mx))
                })
                .collect();
            worst = residuals.iter().copied().fold(0.0, f64::max);
            if worst <= tol {
                basis.truncate(count);
                return Ok(Eigenpairs {
                    values: values[..count].to_vec(),
                    vectors: basis,
                    residuals,
                    iterations: it,
                });
            }
        }
        Err(Error::EigenNoConvergence {
            iterations: max_iter,
            residual: worst,
        })
    }
}

/// All eigenpairs of `A x = λ M x` on `Z`, ascending, by dense linear algebra.
pub fn dense_constrained_eigen(
    a: &DMatrix<f64>,
    m: &DMatrix<f64>,
    c: &[f64],
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = a.nrows();
    let pivot = (0..n)
        .max_by(|&i, &j| c[i].abs().total_cmp(&c[j].abs()))
        .ok_or(Error::EmptySupport)?;
    // Columns e_i − (c_i / c_p) e_p span Z.
    let mut z = DMatrix::<f64>::zeros(n, n - 1);
    let mut col = 0;
    for i in 0..n {
        if i == pivot {
            continue;
        }
        z[(i, col)] = 1.0;
        z[(pivot, col)] = -c[i] / c[pivot];
        col += 1;
    }
    let az = z.transpose() * a * &z;
    let mz = z.transpose() * m * &z;
    let chol = mz
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv_a = l
        .solve_lower_triangular(&az)
        .ok_or(Error::Singular { row: 0, pivot: 0.0 })?;
    let sym = l
        .solve_lower_triangular(&linv_a.transpose())
        .ok_or(Error::Singular { row: 0, pivot: 0.0 })?;
    let sym = 0.5 * (&sym + sym.transpose());
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n - 1).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let lt = l.transpose();
    let mut values = Vec::with_capacity(n - 1);
    let mut vectors = Vec::with_capacity(n - 1);
    for k in order {
        let w = eig.eigenvectors.column(k).into_owned();
        let y = lt
            .solve_upper_triangular(&w)
            .ok_or(Error::Singular { row: 0, pivot: 0.0 })?;
        let x = &z * y;
        values.push(eig.eigenvalues[k]);
        vectors.push(x.iter().copied().collect());
    }
    Ok((values, vectors))
}
