//! P1 assembly and the Neumann spectrum on the zero-mean space.
//!
//! The constant mode is removed by restricting every solve and iterate to
//! `{u : ∫ u = 0}` (a bordered system with the constraint row `M·1`), so the
//! returned eigenvalues are the nonconstant ones, `0 < λ_1 ≤ λ_2 ≤ …`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::Mesh;
use crate::energy::Field;
use crate::exec::Exec;
use crate::linalg::{
    dense_constrained_eigen, dot, project_out_constant, Bordered, ConstrainedEigen, CsrMatrix,
    Ldlt, Target,
};
use crate::quadrature::{quad_points, QuadPoint};
use crate::{Error, Result};

/// Problems with at most this many unknowns are solved densely.
pub const DENSE_LIMIT: usize = 500;

/// Relative residual targeted by the iterative eigensolver.
pub const EIGEN_TOL: f64 = 1e-10;

const EIGEN_MAX_ITER: usize = 1000;

/// Element stiffness and mass matrices of one P1 triangle.
pub fn element_matrices(p: [[f64; 2]; 3]) -> ([[f64; 3]; 3], [[f64; 3]; 3]) {
    let area = crate::domain::signed_area(p[0], p[1], p[2]);
    let grads: [[f64; 2]; 3] = std::array::from_fn(|k| {
        let (a, b) = (p[(k + 1) % 3], p[(k + 2) % 3]);
        [(a[1] - b[1]) / (2.0 * area), (b[0] - a[0]) / (2.0 * area)]
    });
    let mut k = [[0.0; 3]; 3];
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = area * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
            m[i][j] = area / 12.0 * if i == j { 2.0 } else { 1.0 };
        }
    }
    (k, m)
}

/// Global stiffness (Dirichlet form) and consistent mass matrices.
pub fn assemble(mesh: &Mesh, exec: Exec) -> Result<(CsrMatrix, CsrMatrix)> {
    let v = mesh.vertices();
    let elems = exec.map(mesh.triangles(), |t| {
        element_matrices([v[t[0]], v[t[1]], v[t[2]]])
    });
    let mut kt = Vec::with_capacity(9 * elems.len());
    let mut mt = Vec::with_capacity(9 * elems.len());
    for (t, (ke, me)) in mesh.triangles().iter().zip(&elems) {
        if !ke.iter().flatten().all(|x| x.is_finite()) {
            return Err(Error::InvalidMesh("degenerate triangle".into()));
        }
        for i in 0..3 {
            for j in 0..3 {
                kt.push((t[i], t[j], ke[i][j]));
                mt.push((t[i], t[j], me[i][j]));
            }
        }
    }
    let n = mesh.num_vertices();
    Ok((
        CsrMatrix::from_triplets(n, &kt),
        CsrMatrix::from_triplets(n, &mt),
    ))
}

/// Discrete function space: mesh, assembled matrices and quadrature.
#[derive(Debug)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    stiffness: CsrMatrix,
    mass: CsrMatrix,
    mass_ones: Vec<f64>,
    mass_factor: Ldlt,
    quad: Vec<QuadPoint>,
    exec: Exec,
}

impl FeSpace {
    pub fn new(mesh: Arc<Mesh>, exec: Exec) -> Result<FeSpace> {
        let (stiffness, mass) = assemble(&mesh, exec)?;
        let mass_ones = mass.row_sums();
        let mass_factor = Ldlt::factor(&mass)?;
        let quad = quad_points(&mesh);
        Ok(FeSpace {
            mesh,
            stiffness,
            mass,
            mass_ones,
            mass_factor,
            quad,
            exec,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> Arc<Mesh> {
        Arc::clone(&self.mesh)
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    /// `M·1`, i.e. `∫ φ_a`.
    pub fn mass_ones(&self) -> &[f64] {
        &self.mass_ones
    }

    pub fn area(&self) -> f64 {
        self.mesh.area()
    }

    pub fn dim(&self) -> usize {
        self.mass.dim()
    }

    pub fn quad(&self) -> &[QuadPoint] {
        &self.quad
    }

    pub fn exec(&self) -> Exec {
        self.exec
    }

    /// `∫ u`.
    pub fn integral(&self, u: &[f64]) -> f64 {
        dot(&self.mass_ones, u)
    }

    /// `M⁻¹ r`.
    pub fn solve_mass(&self, r: &[f64]) -> Vec<f64> {
        self.mass_factor.solve(r)
    }

    /// Zero-mean field from vertex values (the mean is subtracted).
    pub fn field(&self, mut coeffs: Vec<f64>) -> Result<Field> {
        if coeffs.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: coeffs.len(),
            });
        }
        project_out_constant(&mut coeffs, &self.mass_ones);
        Ok(Field::from_projected(coeffs))
    }

    pub fn zero(&self) -> Field {
        Field::from_projected(vec![0.0; self.dim()])
    }

    /// `⟨u, v⟩_M`.
    pub fn mass_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.mass.bilinear(u, v)
    }

    pub fn mass_norm(&self, u: &[f64]) -> f64 {
        self.mass_inner(u, u).max(0.0).sqrt()
    }

    /// `∫ |∇u|²`.
    pub fn dirichlet(&self, u: &[f64]) -> f64 {
        self.stiffness.bilinear(u, u)
    }

    /// `(∫ |∇u|² + u²)^{1/2}`.
    pub fn h1_norm(&self, u: &[f64]) -> f64 {
        (self.dirichlet(u) + self.mass_inner(u, u)).max(0.0).sqrt()
    }
}

/// Lowest nonconstant Neumann eigenpairs, mass-orthonormal and zero-mean.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    space: Arc<FeSpace>,
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<Field>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct EigenRow {
    pub index: usize,
    pub lambda: f64,
}

impl SpectralBasis {
    pub fn space(&self) -> &FeSpace {
        &self.space
    }

    pub fn space_arc(&self) -> Arc<FeSpace> {
        Arc::clone(&self.space)
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        self.space.stiffness()
    }

    pub fn mass(&self) -> &CsrMatrix {
        self.space.mass()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &[Field] {
        &self.eigenvectors
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// 1-based `φ_i`.
    pub fn phi(&self, i: usize) -> &Field {
        &self.eigenvectors[i - 1]
    }

    pub fn rows(&self) -> Vec<EigenRow> {
        self.eigenvalues
            .iter()
            .enumerate()
            .map(|(i, &lambda)| EigenRow {
                index: i + 1,
                lambda,
            })
            .collect()
    }

    /// `‖Kφ − λMφ‖ / ‖λMφ‖` for each pair.
    pub fn residuals(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .zip(&self.eigenvectors)
            .map(|(&lam, phi)| {
                let k = self.space.stiffness.mul_vec(phi.values());
                let m = self.space.mass.mul_vec(phi.values());
                let r: f64 = k.iter().zip(&m).map(|(a, b)| (a - lam * b).powi(2)).sum();
                let d: f64 = m.iter().map(|b| (lam * b).powi(2)).sum();
                (r / d).sqrt()
            })
            .collect()
    }
}

/// The `count` lowest nonconstant Neumann eigenpairs of the space.
pub fn eigenpairs(space: Arc<FeSpace>, count: usize) -> Result<SpectralBasis> {
    let n = space.dim();
    if count + 1 >= n {
        return Err(Error::InsufficientEigenpairs {
            requested: count,
            available: n.saturating_sub(2),
        });
    }
    let c = space.mass_ones().to_vec();
    let (values, vectors) = if n <= DENSE_LIMIT {
        let (vals, vecs) =
            dense_constrained_eigen(&space.stiffness.to_dense(), &space.mass.to_dense(), &c)?;
        (vals[..count].to_vec(), vecs[..count].to_vec())
    } else {
        let shift = -1.0;
        let shifted = CsrMatrix::linear_combination(&[(1.0, &space.stiffness), (-shift, &space.mass)]);
        let factor = Ldlt::factor_bordered(&Bordered {
            sparse: &shifted,
            borders: vec![c.clone()],
            corner: vec![vec![0.0]],
        })?;
        let solve = |r: &[f64]| {
            let mut rhs = r.to_vec();
            rhs.push(0.0);
            let mut x = factor.solve(&rhs);
            x.truncate(n);
            x
        };
        let apply = |x: &[f64]| space.stiffness.mul_vec(x);
        let problem = ConstrainedEigen {
            apply: &apply,
            mass: &space.mass,
            constraint: &c,
            shifted_solve: &solve,
            shift,
        };
        let pairs = problem.solve(count, Target::Lowest, EIGEN_TOL, EIGEN_MAX_ITER, space.exec())?;
        (pairs.values, pairs.vectors)
    };
    let mut fields = Vec::with_capacity(count);
    for mut v in vectors {
        project_out_constant(&mut v, &c);
        let norm = space.mass_norm(&v);
        let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let first = v.iter().position(|x| x.abs() > 1e-8 * scale).unwrap_or(0);
        let sign = if v[first] < 0.0 { -1.0 } else { 1.0 };
        for x in v.iter_mut() {
            *x *= sign / norm;
        }
        fields.push(Field::from_projected(v));
    }
    if let Some(&l1) = values.first() {
        if !(l1 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "first nonconstant eigenvalue {l1} is not positive"
            )));
        }
    }
    Ok(SpectralBasis {
        space,
        eigenvalues: values,
        eigenvectors: fields,
    })
}

/// Default resonance tolerance around `threshold`.
pub fn resonance_tol(threshold: f64) -> f64 {
    1e-6 * (1.0 + threshold.abs())
}

/// The unique `n` with `−λ_{n+1} < threshold < −λ_n` (`λ_0 = 0`), i.e. the
/// number of eigenvalues strictly below `−threshold`.
pub fn bracket_index(eigenvalues: &[f64], threshold: f64) -> Result<usize> {
    bracket_index_with_tol(eigenvalues, threshold, resonance_tol(threshold))
}

pub fn bracket_index_with_tol(eigenvalues: &[f64], threshold: f64, tol: f64) -> Result<usize> {
    if let Some(i) = eigenvalues.iter().position(|&l| (threshold + l).abs() < tol) {
        return Err(Error::Resonance {
            threshold,
            index: i + 1,
            tol,
        });
    }
    let count = eigenvalues.iter().filter(|&&l| l < -threshold).count();
    if count == eigenvalues.len() && count > 0 {
        return Err(Error::BracketOutOfRange(threshold));
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_builtin, Builtin};
    use std::f64::consts::PI;

    fn space(kind: Builtin, n: usize) -> Arc<FeSpace> {
        Arc::new(FeSpace::new(Arc::new(build_builtin(kind, n).unwrap()), Exec::default()).unwrap())
    }

    #[test]
    fn reference_element_stiffness() {
        let (k, m) = element_matrices([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let expected = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[i][j] - expected[i][j]).abs() < 1e-15);
            }
        }
        let total: f64 = m.iter().flatten().sum();
        assert!((total - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constants_are_in_the_kernel() {
        let s = space(Builtin::Annulus, 32);
        let k1 = s.stiffness().mul_vec(&vec![1.0; s.dim()]);
        assert!(k1.iter().all(|x| x.abs() < 1e-12));
        assert!(s.stiffness().is_symmetric(1e-14));
    }

    #[test]
    fn mass_rows_are_patch_areas_over_three() {
        let s = space(Builtin::UnitSquare, 8);
        assert!((s.mass().total_sum() - 1.0).abs() < 1e-14);
        let mut patch = vec![0.0; s.dim()];
        for (t, a) in s.mesh().triangles().iter().zip(s.mesh().triangle_areas()) {
            for &v in t {
                patch[v] += a / 3.0;
            }
        }
        for (r, p) in s.mass().row_sums().iter().zip(&patch) {
            assert!((r - p).abs() < 1e-15);
        }
    }

    #[test]
    fn assembly_is_policy_independent() {
        let mesh = build_builtin(Builtin::Disk, 48).unwrap();
        let (k1, m1) = assemble(&mesh, Exec::Sequential).unwrap();
        let (k2, m2) = assemble(&mesh, Exec::Parallel).unwrap();
        assert_eq!(k1, k2);
        assert_eq!(m1, m2);
    }

    #[test]
    fn dense_and_iterative_paths_agree() {
        // 21×21 grid: above the dense limit.
        let s = space(Builtin::UnitSquare, 24);
        assert!(s.dim() > DENSE_LIMIT);
        let it = eigenpairs(Arc::clone(&s), 5).unwrap();
        let c = s.mass_ones().to_vec();
        let (dense, _) =
            dense_constrained_eigen(&s.stiffness().to_dense(), &s.mass().to_dense(), &c).unwrap();
        for i in 0..5 {
            assert!(
                (it.eigenvalues()[i] - dense[i]).abs() < 1e-8 * dense[i],
                "{i}: {} vs {}",
                it.eigenvalues()[i],
                dense[i]
            );
        }
    }

    #[test]
    fn eigenvectors_are_orthonormal_zero_mean() {
        for (kind, n) in [(Builtin::Disk, 20), (Builtin::UnitSquare, 30)] {
            let b = eigenpairs(space(kind, n), 6).unwrap();
            let s = b.space();
            for i in 0..6 {
                assert!(s.integral(b.eigenvectors()[i].values()).abs() < 1e-10);
                for j in 0..6 {
                    let g = s.mass_inner(b.eigenvectors()[i].values(), b.eigenvectors()[j].values());
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((g - e).abs() < 1e-10, "({i},{j}) {g}");
                }
            }
            assert!(b.residuals().iter().all(|&r| r < 1e-8), "{:?}", b.residuals());
            assert!(b.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn square_eigenvalues_decrease_under_refinement() {
        let mut prev = f64::INFINITY;
        for n in [8, 16, 32] {
            let b = eigenpairs(space(Builtin::UnitSquare, n), 1).unwrap();
            let l = b.eigenvalues()[0];
            assert!(l > PI * PI && l < prev);
            prev = l;
        }
    }

    #[test]
    fn bracket_index_examples() {
        let sq = [9.87, 9.87, 19.74];
        assert_eq!(bracket_index(&sq, 1.0).unwrap(), 0);
        assert_eq!(bracket_index(&sq, -15.0).unwrap(), 2);
        let disk = [3.39, 3.39, 9.33];
        assert_eq!(bracket_index(&disk, -5.0 - 13.0 / PI).unwrap(), 2);
        assert!(matches!(
            bracket_index(&sq, -9.87),
            Err(Error::Resonance { index: 1, .. })
        ));
        assert!(matches!(
            bracket_index(&sq, -25.0),
            Err(Error::BracketOutOfRange(_))
        ));
    }

    #[test]
    fn bracket_index_is_monotone() {
        let l = [1.0, 2.0, 2.0, 5.0, 7.5, 11.0];
        let mut prev = usize::MAX;
        let mut t = -10.9;
        while t < 3.0 {
            if let Ok(k) = bracket_index(&l, t) {
                assert!(k <= prev);
                if t >= 0.0 {
                    assert_eq!(k, 0);
                }
                prev = k;
            }
            t += 0.0137;
        }
    }
}
