//! Critical points of the energy: gradient flow, Newton refinement, Morse
//! indices, blow-up diagnostics and parameter continuation.
//!
//! Newton steps solve the Hessian system on the zero-mean space through one
//! symmetric indefinite factorization of
//!
//! ```text
//!   [ A    b̂     c ]   [δ]   [−r]
//!   [ b̂ᵀ  −1/ρ   0 ] · [z] = [ 0]
//!   [ cᵀ   0     0 ]   [λ]   [ 0]
//! ```
//!
//! where `A` is the sparse part of the Hessian and `b̂` the normalized load.
//! Eliminating `z` recovers the rank-one term `ρ b̂ b̂ᵀ`.

mod blowup;
mod continuation;
mod seeding;

pub use blowup::{local_mass, BlowupDiagnostic, Candidate, Interpretation};
pub use continuation::{continuation, Continuation, StopReason};
pub use seeding::{solve, SolveOptions, SolveReport};

use serde::{Deserialize, Serialize};

use crate::energy::{energy, residual_norm, residual_vector, Field, Hessian, Parameters};
use crate::linalg::{dense_constrained_eigen, Bordered, ConstrainedEigen, CsrMatrix, Ldlt, Target};
use crate::spectrum::{FeSpace, DENSE_LIMIT};
use crate::testfn::TestConfig;
use crate::{Error, Result};

/// Newton stops once the residual falls below this fraction of its initial value.
pub const NEWTON_TOL: f64 = 1e-10;
/// Roundoff floor for the Newton stopping test.
pub const NEWTON_ABS_FLOOR: f64 = 1e-9;
pub const NEWTON_MAX_ITER: usize = 30;
pub const FLOW_TOL: f64 = 1e-6;
/// Sup norm beyond which an iterate counts as blowing up.
pub const BLOWUP_NORM_CAP: f64 = 1e3;
/// Two solutions closer than this in `H¹` are the same.
pub const DEDUP_TOL: f64 = 1e-3;
/// Smallest admissible `|μ|` for a Hessian eigenvalue at a Morse point.
pub const MORSE_GAP: f64 = 1e-8;

/// `‖u‖_{H¹}` below this classifies `u` as trivial.
pub fn triviality_tol(p: Parameters) -> f64 {
    1e-4 * (1.0 + p.beta.abs() + p.rho.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Trivial,
    Nontrivial,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub parameters: Parameters,
    pub residual: f64,
    pub energy: f64,
    pub classification: Classification,
    pub morse_index: Option<usize>,
    pub iterations: usize,
    pub seed: Option<TestConfig>,
    pub u: Field,
}

fn classify(space: &FeSpace, u: &Field, p: Parameters, converged: bool) -> Classification {
    if !u.is_finite() || u.sup_norm() > BLOWUP_NORM_CAP {
        Classification::Diverged
    } else if space.h1_norm(u.values()) < triviality_tol(p) {
        Classification::Trivial
    } else if converged {
        Classification::Nontrivial
    } else {
        Classification::Diverged
    }
}

/// Explicit descent along the `H¹` gradient `(K + M)⁻¹ J'(u)`, with the step
/// halved on energy increase and grown by 1.2 on decrease.
pub fn flow(space: &FeSpace, seed: &Field, p: Parameters, step_budget: usize) -> Result<SolveResult> {
    let precond = Ldlt::factor(&CsrMatrix::linear_combination(&[
        (1.0, space.stiffness()),
        (1.0, space.mass()),
    ]))?;
    let mut u = seed.clone();
    let mut e = energy(space, &u, p)?;
    let mut res = residual_norm(space, &u, p)?;
    let mut tau = 1.0;
    let mut steps = 0;
    let mut diverged = !e.is_finite();
    while steps < step_budget && res >= FLOW_TOL && !diverged {
        let r = residual_vector(space, &u, p)?;
        let dir = space.field(precond.solve(&r))?;
        let accepted = loop {
            let trial = u.add_scaled(-tau, &dir);
            let et = energy(space, &trial, p)?;
            if et.is_finite() && et <= e {
                tau *= 1.2;
                break Some((trial, et));
            }
            tau *= 0.5;
            if tau < 1e-14 {
                break None;
            }
        };
        let Some((next, et)) = accepted else { break };
        debug_assert!(et <= e);
        u = next;
        e = et;
        res = residual_norm(space, &u, p)?;
        steps += 1;
        diverged = u.sup_norm() > BLOWUP_NORM_CAP;
    }
    let classification = classify(space, &u, p, res < FLOW_TOL);
    Ok(SolveResult {
        parameters: p,
        residual: res,
        energy: e,
        classification,
        morse_index: None,
        iterations: steps,
        seed: None,
        u,
    })
}

/// Factorization of the bordered Hessian system at `u`.
fn bordered_factor(h: &Hessian, c: &[f64]) -> Result<Ldlt> {
    let n = c.len();
    let mut borders = Vec::with_capacity(2);
    let mut corner = Vec::with_capacity(2);
    if h.rho != 0.0 {
        borders.push(h.load.clone());
        corner.push(vec![-1.0 / h.rho, 0.0]);
        corner.push(vec![0.0, 0.0]);
    } else {
        corner.push(vec![0.0]);
    }
    borders.push(c.to_vec());
    debug_assert!(borders.iter().all(|b| b.len() == n));
    Ldlt::factor_bordered(&Bordered {
        sparse: &h.sparse,
        borders,
        corner,
    })
}

/// Solves `H δ = rhs` on the zero-mean space with a bordered factorization.
fn bordered_solve(f: &Ldlt, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut full = rhs.to_vec();
    full.resize(f.dim(), 0.0);
    let mut x = f.solve(&full);
    x.truncate(n);
    x
}

/// Damped Newton iteration from `u0`, backtracking on the residual norm.
pub fn newton(space: &FeSpace, u0: &Field, p: Parameters) -> Result<SolveResult> {
    newton_deflated(space, u0, p, &[])
}

/// Deflation factor `Π_k (1/‖u − u_k‖²_{H¹} + 1)` and the derivative of its
/// logarithm along `dir`.
fn deflation(space: &FeSpace, u: &Field, known: &[Field], dir: Option<&Field>) -> (f64, f64) {
    let mut m = 1.0;
    let mut dlog = 0.0;
    for k in known {
        let d = u.add_scaled(-1.0, k);
        let d2 = space.h1_norm(d.values()).powi(2);
        let mk = 1.0 / d2 + 1.0;
        m *= mk;
        if let Some(dir) = dir {
            let inner = space.stiffness().bilinear(d.values(), dir.values())
                + space.mass_inner(d.values(), dir.values());
            dlog += -2.0 * inner / (d2 * d2 * mk);
        }
    }
    (m, dlog)
}

/// Newton iteration on the residual deflated by the `known` solutions, which
/// repels iterates from them. The limit is a critical point of the energy; with
/// `known` empty this is plain damped Newton. Starting points beyond
/// [`BLOWUP_NORM_CAP`] are rejected.
pub fn newton_deflated(space: &FeSpace, u0: &Field, p: Parameters, known: &[Field]) -> Result<SolveResult> {
    let mut u = u0.clone();
    let mut res = residual_norm(space, &u, p)?;
    if u.sup_norm() > BLOWUP_NORM_CAP {
        return Err(Error::NewtonNoConvergence { iterations: 0, residual: res });
    }
    let tol = (NEWTON_TOL * res).max(NEWTON_ABS_FLOOR);
    let mut merit = res * deflation(space, &u, known, None).0;
    let mut iterations = 0;
    while res > tol {
        if iterations == NEWTON_MAX_ITER || !res.is_finite() {
            return Err(Error::NewtonNoConvergence { iterations, residual: res });
        }
        iterations += 1;
        let h = Hessian::at(space, &u, p)?;
        let f = bordered_factor(&h, space.mass_ones())?;
        let r = residual_vector(space, &u, p)?;
        let minus_r: Vec<f64> = r.iter().map(|x| -x).collect();
        let mut step = space.field(bordered_solve(&f, &minus_r))?;
        if !known.is_empty() {
            let (_, dlog) = deflation(space, &u, known, Some(&step));
            step = step.scaled(1.0 / (1.0 - dlog));
        }
        let mut alpha = 1.0;
        loop {
            let trial = u.add_scaled(alpha, &step);
            if trial.sup_norm() <= BLOWUP_NORM_CAP {
                let rt = residual_norm(space, &trial, p)?;
                let mt = rt * deflation(space, &trial, known, None).0;
                if mt < (1.0 - 1e-4 * alpha) * merit {
                    u = trial;
                    res = rt;
                    merit = mt;
                    break;
                }
            }
            alpha *= 0.5;
            if alpha < 1.0 / 1024.0 {
                return Err(Error::NewtonNoConvergence { iterations, residual: res });
            }
        }
    }
    let morse_index = match morse_index_at(space, &u, p, usize::MAX) {
        Ok(m) => Some(m),
        Err(Error::DegenerateCriticalPoint(_)) | Err(Error::Singular { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(SolveResult {
        parameters: p,
        residual: res,
        energy: energy(space, &u, p)?,
        classification: classify(space, &u, p, true),
        morse_index,
        iterations,
        seed: None,
        u,
    })
}

/// Number of negative eigenvalues (with respect to `M`) of the Hessian on the
/// zero-mean space, among the lowest `count`.
///
/// Fails with [`Error::DegenerateCriticalPoint`] when an eigenvalue lies
/// within [`MORSE_GAP`] of zero.
pub fn morse_index_at(space: &FeSpace, u: &Field, p: Parameters, count: usize) -> Result<usize> {
    let h = Hessian::at(space, u, p)?;
    let c = space.mass_ones();
    let n = space.dim();
    if n <= DENSE_LIMIT {
        let mut a = h.sparse.to_dense();
        if p.rho != 0.0 {
            a += p.rho * nalgebra::DVector::from_column_slice(&h.load) * nalgebra::RowDVector::from_row_slice(&h.load);
        }
        let (values, _) = dense_constrained_eigen(&a, &space.mass().to_dense(), c)?;
        if let Some(&closest) = values.iter().min_by(|x, y| x.abs().total_cmp(&y.abs())) {
            if closest.abs() < MORSE_GAP {
                return Err(Error::DegenerateCriticalPoint(closest));
            }
        }
        return Ok(values.iter().filter(|&&v| v < 0.0).count().min(count));
    }
    let f = bordered_factor(&h, c)?;
    // The −1/ρ pivot and the constraint border add ρ > 0 ? 2 : 1 negatives.
    let extra = if p.rho > 0.0 { 2 } else { 1 };
    let negatives = f.inertia().0.checked_sub(extra).ok_or_else(|| {
        Error::InvalidArgument("inertia of the bordered Hessian is inconsistent".into())
    })?;
    let apply = |x: &[f64]| h.apply(x);
    let solve = |r: &[f64]| bordered_solve(&f, r);
    let nearest = ConstrainedEigen {
        apply: &apply,
        mass: space.mass(),
        constraint: c,
        shifted_solve: &solve,
        shift: 0.0,
    }
    .solve(1, Target::Nearest, 1e-8, 300, space.exec())?;
    if nearest.values[0].abs() < MORSE_GAP {
        return Err(Error::DegenerateCriticalPoint(nearest.values[0]));
    }
    Ok(negatives.min(count))
}

/// Keeps the first of any group of results within [`DEDUP_TOL`] in `H¹`.
pub fn dedup(space: &FeSpace, results: Vec<SolveResult>) -> Vec<SolveResult> {
    let mut out: Vec<SolveResult> = Vec::new();
    for r in results {
        let seen = out.iter().any(|o| {
            let d = r.u.add_scaled(-1.0, &o.u);
            space.h1_norm(d.values()) < DEDUP_TOL
        });
        if !seen {
            out.push(r);
        }
    }
    out
}
