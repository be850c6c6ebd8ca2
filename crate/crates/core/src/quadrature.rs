//! Three-point Gauss rule on triangles applied to the linear interpolant.
//!
//! All nonlinear integrals (`∫ e^u`, `∫ e^u v`, `∫ e^u v w`) use this rule, and
//! exponentials are evaluated with the log-sum-exp shift `max(u)`.

use crate::domain::{Mesh, Point};
use crate::exec::Exec;

/// Barycentric coordinates of the degree-2 Gauss rule (weights `|T|/3`).
pub const GAUSS3: [[f64; 3]; 3] = [
    [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
    [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
    [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
];

/// A weighted sample point of the rule.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    pub pos: Point,
    pub weight: f64,
    pub triangle: usize,
    pub bary: [f64; 3],
}

pub fn quad_points(mesh: &Mesh) -> Vec<QuadPoint> {
    let v = mesh.vertices();
    let mut out = Vec::with_capacity(3 * mesh.triangles().len());
    for (t, (tri, &area)) in mesh.triangles().iter().zip(mesh.triangle_areas()).enumerate() {
        for bary in GAUSS3 {
            let pos = [
                bary[0] * v[tri[0]][0] + bary[1] * v[tri[1]][0] + bary[2] * v[tri[2]][0],
                bary[0] * v[tri[0]][1] + bary[1] * v[tri[1]][1] + bary[2] * v[tri[2]][1],
            ];
            out.push(QuadPoint {
                pos,
                weight: area / 3.0,
                triangle: t,
                bary,
            });
        }
    }
    out
}

/// Value of the P1 interpolant of `u` at a quadrature point.
pub fn interpolate(mesh: &Mesh, u: &[f64], q: &QuadPoint) -> f64 {
    let tri = mesh.triangles()[q.triangle];
    q.bary[0] * u[tri[0]] + q.bary[1] * u[tri[1]] + q.bary[2] * u[tri[2]]
}

/// Shifted exponential moments of a field.
///
/// With `s = max(u)`: `shifted_total = ∫ e^{u−s}`, `shifted_load[a] = ∫ e^{u−s} φ_a`
/// and `point_mass[q] = w_q e^{u(ξ_q)−s}`.
#[derive(Debug, Clone)]
pub struct ExpMoments {
    pub shift: f64,
    pub shifted_total: f64,
    pub shifted_load: Vec<f64>,
    pub point_mass: Vec<f64>,
}

impl ExpMoments {
    pub fn new(mesh: &Mesh, quad: &[QuadPoint], u: &[f64], exec: Exec) -> ExpMoments {
        let shift = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let point_mass = exec.map(quad, |q| q.weight * (interpolate(mesh, u, q) - shift).exp());
        let shifted_total = point_mass.iter().sum();
        let mut shifted_load = vec![0.0; u.len()];
        for (q, &w) in quad.iter().zip(&point_mass) {
            let tri = mesh.triangles()[q.triangle];
            for k in 0..3 {
                shifted_load[tri[k]] += w * q.bary[k];
            }
        }
        ExpMoments {
            shift,
            shifted_total,
            shifted_load,
            point_mass,
        }
    }

    /// `log ∫ e^u`.
    pub fn log_total(&self) -> f64 {
        self.shift + self.shifted_total.ln()
    }

    /// `∫ e^u φ_a / ∫ e^u`.
    pub fn normalized_load(&self) -> Vec<f64> {
        self.shifted_load.iter().map(|b| b / self.shifted_total).collect()
    }
}
