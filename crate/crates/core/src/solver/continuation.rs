use serde::{Deserialize, Serialize};

use super::{newton, Classification, SolveResult, BLOWUP_NORM_CAP};
use crate::energy::{Field, Parameters};
use crate::spectrum::{bracket_index, SpectralBasis};
use crate::topology::rho_index;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum StopReason {
    /// `ρ` reaches or crosses `4πN`.
    RhoQuantized { step: usize, rho: f64 },
    /// `β − ρ/|Ω|` crosses `−λ_j` while on the trivial branch.
    TrivialBifurcation { step: usize, rho: f64, beta: f64 },
    /// `residual` is absent when the Hessian was singular.
    NewtonFailed { step: usize, residual: Option<f64> },
    Blowup { step: usize, sup_norm: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Continuation {
    /// Step 0 is the solution at the start parameters.
    pub steps: Vec<SolveResult>,
    pub stopped: Option<StopReason>,
}

/// Follows a branch along the straight parameter path from `p_start` to
/// `p_end` in `steps` equal increments, warm-starting Newton at each step.
pub fn continuation(
    basis: &SpectralBasis,
    start: &Field,
    p_start: Parameters,
    p_end: Parameters,
    steps: usize,
) -> Result<Continuation> {
    if steps == 0 {
        return Err(Error::InvalidArgument("continuation needs at least one step".into()));
    }
    let space = basis.space();
    let area = space.area();
    let eig = basis.eigenvalues();
    let mut out = Continuation {
        steps: Vec::with_capacity(steps + 1),
        stopped: None,
    };
    let mut k_prev = match rho_index(p_start.rho) {
        Ok(k) => k,
        Err(_) => {
            out.stopped = Some(StopReason::RhoQuantized { step: 0, rho: p_start.rho });
            return Ok(out);
        }
    };
    let mut j_prev = bracket_index(eig, p_start.trivial_shift(area)).ok();
    let mut u = start.clone();
    for step in 0..=steps {
        let p = p_start.lerp(&p_end, step as f64 / steps as f64);
        match rho_index(p.rho) {
            Ok(k) if k == k_prev => {}
            _ => {
                out.stopped = Some(StopReason::RhoQuantized { step, rho: p.rho });
                break;
            }
        }
        let j = bracket_index(eig, p.trivial_shift(area)).ok();
        let trivial_branch = out
            .steps
            .last()
            .map_or(false, |r| r.classification == Classification::Trivial);
        if trivial_branch && (j.is_none() || j != j_prev) {
            out.stopped = Some(StopReason::TrivialBifurcation {
                step,
                rho: p.rho,
                beta: p.beta,
            });
            break;
        }
        let result = match newton(space, &u, p) {
            Ok(r) => r,
            Err(Error::NewtonNoConvergence { residual, .. }) => {
                out.stopped = Some(StopReason::NewtonFailed {
                    step,
                    residual: Some(residual),
                });
                break;
            }
            Err(Error::Singular { .. }) => {
                out.stopped = Some(StopReason::NewtonFailed {
                    step,
                    residual: None,
                });
                break;
            }
            Err(e) => return Err(e),
        };
        let sup = result.u.sup_norm();
        u = result.u.clone();
        out.steps.push(result);
        if sup > BLOWUP_NORM_CAP {
            out.stopped = Some(StopReason::Blowup { step, sup_norm: sup });
            break;
        }
        k_prev = rho_index(p.rho).unwrap_or(k_prev);
        j_prev = j;
    }
    Ok(out)
}
