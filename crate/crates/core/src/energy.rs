//! The energy `J(u) = ½(uᵀKu + β uᵀMu) − ρ log ∫ e^u` on zero-mean P1 fields,
//! with its gradient and Hessian returned as mass representers.

use serde::{Deserialize, Serialize};

use crate::linalg::{axpy, CsrMatrix};
use crate::quadrature::ExpMoments;
use crate::spectrum::{FeSpace, SpectralBasis};
use crate::{Error, Result};

/// Zero-mean vertex coefficients. Built through [`FeSpace::field`].
/// Serializes as the bare vertex array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Field {
    values: Vec<f64>,
}

impl Field {
    pub(crate) fn from_projected(values: Vec<f64>) -> Field {
        Field { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `self + alpha · other`.
    pub fn add_scaled(&self, alpha: f64, other: &Field) -> Field {
        let mut values = self.values.clone();
        axpy(alpha, &other.values, &mut values);
        Field { values }
    }

    pub fn scaled(&self, alpha: f64) -> Field {
        Field {
            values: self.values.iter().map(|x| alpha * x).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub beta: f64,
    pub rho: f64,
}

impl Parameters {
    pub fn new(beta: f64, rho: f64) -> Self {
        Parameters { beta, rho }
    }

    /// `β − ρ/|Ω|`: the coefficient of the Hessian at `u ≡ 0`.
    pub fn trivial_shift(&self, area: f64) -> f64 {
        self.beta - self.rho / area
    }

    /// Straight-line interpolation between two parameter sets.
    pub fn lerp(&self, other: &Parameters, s: f64) -> Parameters {
        Parameters {
            beta: self.beta + s * (other.beta - self.beta),
            rho: self.rho + s * (other.rho - self.rho),
        }
    }
}

fn check_dim(space: &FeSpace, u: &Field) -> Result<()> {
    if u.len() != space.dim() {
        return Err(Error::Dimension {
            expected: space.dim(),
            got: u.len(),
        });
    }
    Ok(())
}

/// `log ∫ e^u` with the log-sum-exp shift.
pub fn log_exp_integral(space: &FeSpace, u: &[f64]) -> f64 {
    ExpMoments::new(space.mesh(), space.quad(), u, space.exec()).log_total()
}

/// Value of the functional.
pub fn energy(space: &FeSpace, u: &Field, p: Parameters) -> Result<f64> {
    check_dim(space, u)?;
    let quadratic = 0.5 * (space.dirichlet(&u.values) + p.beta * space.mass_inner(&u.values, &u.values));
    let nonlinear = if p.rho == 0.0 {
        0.0
    } else {
        p.rho * log_exp_integral(space, &u.values)
    };
    Ok(quadratic - nonlinear)
}

/// Weak residual `r_a = J'(u)[φ_a]` (dual vector).
pub fn residual_vector(space: &FeSpace, u: &Field, p: Parameters) -> Result<Vec<f64>> {
    check_dim(space, u)?;
    let mut r = space.stiffness().mul_vec(&u.values);
    let mu = space.mass().mul_vec(&u.values);
    axpy(p.beta, &mu, &mut r);
    if p.rho != 0.0 {
        let e = ExpMoments::new(space.mesh(), space.quad(), &u.values, space.exec());
        let load = e.normalized_load();
        let area = space.area();
        for (ri, (bi, ci)) in r.iter_mut().zip(load.iter().zip(space.mass_ones())) {
            *ri -= p.rho * (bi - ci / area);
        }
    }
    Ok(r)
}

/// Mass representer `G` of the derivative: `⟨G, v⟩_M = J'(u)[v]` for zero-mean `v`.
pub fn gradient(space: &FeSpace, u: &Field, p: Parameters) -> Result<Field> {
    let r = residual_vector(space, u, p)?;
    space.field(space.solve_mass(&r))
}

/// `‖G‖_M`, the mass norm of the gradient representer.
pub fn residual_norm(space: &FeSpace, u: &Field, p: Parameters) -> Result<f64> {
    let g = gradient(space, u, p)?;
    Ok(space.mass_norm(g.values()))
}

/// Second derivative at a field, split as a sparse part plus a rank-one term:
/// `H = K + βM − (ρ/Q) M_e + ρ b̂ b̂ᵀ`, where `M_e` is the `e^u`-weighted mass
/// matrix, `Q = ∫ e^u` and `b̂_a = ∫ e^u φ_a / Q`.
#[derive(Debug, Clone)]
pub struct Hessian {
    pub sparse: CsrMatrix,
    pub load: Vec<f64>,
    pub rho: f64,
    /// `max(e^u)/∫ e^u`, a bound on the weight of `M_e/Q` relative to `M`.
    pub peak_density: f64,
}

impl Hessian {
    pub fn at(space: &FeSpace, u: &Field, p: Parameters) -> Result<Hessian> {
        check_dim(space, u)?;
        let mesh = space.mesh();
        let n = space.dim();
        let (weighted, load, peak) = if p.rho != 0.0 {
            let e = ExpMoments::new(mesh, space.quad(), &u.values, space.exec());
            let mut trip = Vec::with_capacity(9 * mesh.triangles().len());
            for (q, &w) in space.quad().iter().zip(&e.point_mass) {
                let tri = mesh.triangles()[q.triangle];
                let wq = w / e.shifted_total;
                for i in 0..3 {
                    for j in 0..3 {
                        trip.push((tri[i], tri[j], wq * q.bary[i] * q.bary[j]));
                    }
                }
            }
            (
                CsrMatrix::from_triplets(n, &trip),
                e.normalized_load(),
                1.0 / e.shifted_total,
            )
        } else {
            (CsrMatrix::from_triplets(n, &[]), vec![0.0; n], 0.0)
        };
        let sparse = CsrMatrix::linear_combination(&[
            (1.0, space.stiffness()),
            (p.beta, space.mass()),
            (-p.rho, &weighted),
        ]);
        Ok(Hessian {
            sparse,
            load,
            rho: p.rho,
            peak_density: peak,
        })
    }

    /// Dual action `H v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = self.sparse.mul_vec(v);
        if self.rho != 0.0 {
            let s: f64 = self.load.iter().zip(v).map(|(a, b)| a * b).sum();
            axpy(self.rho * s, &self.load, &mut out);
        }
        out
    }

    pub fn form(&self, v: &[f64], w: &[f64]) -> f64 {
        self.apply(v).iter().zip(w).map(|(a, b)| a * b).sum()
    }
}

/// Mass representer of the Hessian action on `v`.
pub fn hessian_apply(space: &FeSpace, u: &Field, p: Parameters, v: &Field) -> Result<Field> {
    check_dim(space, v)?;
    let h = Hessian::at(space, u, p)?;
    space.field(space.solve_mass(&h.apply(&v.values)))
}

/// `Π_I u = (∫ u φ_1, …, ∫ u φ_I)`.
pub fn project_pi(u: &Field, basis: &SpectralBasis, count: usize) -> Result<Vec<f64>> {
    if count > basis.len() {
        return Err(Error::InsufficientEigenpairs {
            requested: count,
            available: basis.len(),
        });
    }
    let mu = basis.mass().mul_vec(&u.values);
    Ok(basis.eigenvectors()[..count]
        .iter()
        .map(|phi| phi.values().iter().zip(&mu).map(|(a, b)| a * b).sum())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_builtin, Builtin};
    use crate::exec::Exec;
    use crate::spectrum::eigenpairs;
    use std::sync::Arc;

    fn space(kind: Builtin, n: usize) -> Arc<FeSpace> {
        Arc::new(FeSpace::new(Arc::new(build_builtin(kind, n).unwrap()), Exec::default()).unwrap())
    }

    #[test]
    fn zero_field_energy() {
        let sq = space(Builtin::UnitSquare, 8);
        let e = energy(&sq, &sq.zero(), Parameters::new(3.0, 7.0)).unwrap();
        assert!(e.abs() < 1e-12, "{e}");
        let d = space(Builtin::Disk, 64);
        let e = energy(&d, &d.zero(), Parameters::new(-2.0, 13.0)).unwrap();
        let expected = -13.0 * (32.0 * (std::f64::consts::PI / 32.0).sin()).ln();
        assert!((e - expected).abs() < 1e-12);
        assert!((e + 14.8606).abs() < 1e-3);
    }

    #[test]
    fn constants_do_not_change_energy() {
        let s = space(Builtin::Disk, 24);
        let raw: Vec<f64> = s.mesh().vertices().iter().map(|v| v[0] * v[1] + v[0]).collect();
        let shifted: Vec<f64> = raw.iter().map(|x| x + 4.2).collect();
        let p = Parameters::new(-1.0, 5.0);
        let a = energy(&s, &s.field(raw).unwrap(), p).unwrap();
        let b = energy(&s, &s.field(shifted).unwrap(), p).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn gradient_vanishes_at_zero() {
        let s = space(Builtin::Annulus, 24);
        for p in [Parameters::new(1.0, 1.0), Parameters::new(-7.0, 30.0)] {
            let g = gradient(&s, &s.zero(), p).unwrap();
            assert!(g.sup_norm() < 1e-12);
        }
    }

    #[test]
    fn eigenfunction_gradient_and_energy() {
        let s = space(Builtin::UnitSquare, 16);
        let b = eigenpairs(Arc::clone(&s), 3).unwrap();
        let phi = b.phi(1);
        let l1 = b.eigenvalues()[0];
        let e = energy(&s, phi, Parameters::new(0.0, 0.0)).unwrap();
        assert!((e - 0.5 * l1).abs() < 1e-10);
        let beta = -2.5;
        let g = gradient(&s, phi, Parameters::new(beta, 0.0)).unwrap();
        let expected = phi.scaled(l1 + beta);
        let diff = g.add_scaled(-1.0, &expected);
        assert!(s.mass_norm(diff.values()) < 1e-8);
    }

    #[test]
    fn projection_examples() {
        let s = space(Builtin::Disk, 24);
        let b = eigenpairs(Arc::clone(&s), 4).unwrap();
        let pi = project_pi(b.phi(1), &b, 3).unwrap();
        assert!((pi[0] - 1.0).abs() < 1e-10 && pi[1].abs() < 1e-10 && pi[2].abs() < 1e-10);
        assert_eq!(project_pi(&s.zero(), &b, 2).unwrap(), vec![0.0, 0.0]);
        let u = b.phi(1).scaled(2.0).add_scaled(-1.0, b.phi(2));
        let pi = project_pi(&u, &b, 2).unwrap();
        assert!((pi[0] - 2.0).abs() < 1e-10 && (pi[1] + 1.0).abs() < 1e-10);
        assert!(matches!(
            project_pi(&u, &b, 5),
            Err(Error::InsufficientEigenpairs { .. })
        ));
    }

    #[test]
    fn hessian_at_zero_is_diagonal_in_eigenbasis() {
        let s = space(Builtin::Disk, 24);
        let b = eigenpairs(Arc::clone(&s), 6).unwrap();
        let p = Parameters::new(-3.0, 9.0);
        let shift = p.trivial_shift(s.area());
        for i in 1..=6 {
            let hv = hessian_apply(&s, &s.zero(), p, b.phi(i)).unwrap();
            let expected = b.phi(i).scaled(b.eigenvalues()[i - 1] + shift);
            let diff = hv.add_scaled(-1.0, &expected);
            assert!(s.mass_norm(diff.values()) < 1e-8);
        }
    }
}
