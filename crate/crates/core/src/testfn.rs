//! The concentrating test family
//!
//! ```text
//!   Φ^Λ(μ, σ, t) = φ^{Λ(1−t)} − ⨍ φ^{Λ(1−t)} + ψ^{Λt},
//!   φ^s = log Σ_k t_k / (1 + s²|x − x_k|²)²,    ψ^s = √(log⁺ s) Σ_i σ_i φ_i,
//! ```
//!
//! and numerical probes of its energy estimates.

use serde::{Deserialize, Serialize};

use crate::barycenter::{Atom, AtomTag, BarycenterMeasure, JoinPoint};
use crate::domain::{refine_near, Mesh};
use crate::energy::{energy, log_exp_integral, Field, Parameters};
use crate::spectrum::{FeSpace, SpectralBasis};
use crate::{Error, Result};

// Frozen constants of the Λ-grid statistics. Calibrated once on the disk at
// resolution 64 graded by `probe_mesh`, over Λ = 10·2^k, k ≤ 7, and all
// `probe_join_points`: the lower statistic bottomed out at −1.13 and the upper
// one peaked at 16.14. The √ coefficient of the L² bound is twice the largest
// L² norm of a projected fixture bubble (about 4).
pub const EXP_LOWER_C: f64 = 1.0;
pub const EXP_LOWER_BOUND: f64 = -2.0;
pub const L2_UPPER_C: f64 = 8.0;
pub const L2_UPPER_BOUND: f64 = 17.0;

/// `max(0, log s)`.
pub fn log_plus(s: f64) -> f64 {
    if s > 1.0 {
        s.ln()
    } else {
        0.0
    }
}

/// Vertex values of `φ^scale` before the mean is removed.
pub fn bubble_raw(mesh: &Mesh, mu: &BarycenterMeasure, scale: f64) -> Vec<f64> {
    let s2 = scale * scale;
    mesh.vertices()
        .iter()
        .map(|v| {
            let logs = mu.atoms().iter().map(|a| {
                let r2 = (v[0] - a.x).powi(2) + (v[1] - a.y).powi(2);
                a.w.ln() - 2.0 * (s2 * r2).ln_1p()
            });
            let top = logs.clone().fold(f64::NEG_INFINITY, f64::max);
            top + logs.map(|l| (l - top).exp()).sum::<f64>().ln()
        })
        .collect()
}

/// Zero-mean bubble.
pub fn bubble(space: &FeSpace, mu: &BarycenterMeasure, scale: f64) -> Field {
    space
        .field(bubble_raw(space.mesh(), mu, scale))
        .expect("bubble has the space dimension")
}

/// `ψ^{t_scale} = √(log⁺ t_scale) Σ σ_i φ_i`.
pub fn eigen_tail(sigma: &[f64], t_scale: f64, basis: &SpectralBasis) -> Result<Field> {
    if sigma.len() > basis.len() {
        return Err(Error::InsufficientEigenpairs {
            requested: sigma.len(),
            available: basis.len(),
        });
    }
    let amp = log_plus(t_scale).sqrt();
    let mut out = basis.space().zero();
    if amp > 0.0 {
        for (i, s) in sigma.iter().enumerate() {
            out = out.add_scaled(amp * s, basis.phi(i + 1));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub lambda: f64,
    pub join_point: JoinPoint,
}

impl TestConfig {
    pub fn new(lambda: f64, join_point: JoinPoint) -> Result<Self> {
        if !(lambda >= 1.0) {
            return Err(Error::InvalidArgument(format!("Λ = {lambda} < 1")));
        }
        Ok(TestConfig { lambda, join_point })
    }

    pub fn bubble_scale(&self) -> f64 {
        self.lambda * (1.0 - self.join_point.t)
    }

    pub fn tail_scale(&self) -> f64 {
        self.lambda * self.join_point.t
    }
}

/// `Φ^Λ(ζ)`.
pub fn phi_lambda(cfg: &TestConfig, basis: &SpectralBasis) -> Result<Field> {
    let space = basis.space();
    let z = &cfg.join_point;
    let head = match (&z.measure, z.t < 1.0) {
        (Some(mu), true) => bubble(space, mu, cfg.bubble_scale()),
        (None, true) => return Err(Error::InvalidArgument("measure required for t < 1".into())),
        (_, false) => space.zero(),
    };
    let tail = eigen_tail(&z.sphere, cfg.tail_scale(), basis)?;
    Ok(head.add_scaled(1.0, &tail))
}

fn check_resolution(mesh: &Mesh, scale: f64) -> Result<()> {
    let core = 1.0 / scale;
    let min_edge = mesh.min_edge_length();
    if core < 2.0 * min_edge {
        return Err(Error::Underresolved {
            scale,
            core,
            min_edge,
        });
    }
    Ok(())
}

/// `(scale, ∫|∇φ^scale|²)` for each scale, after the resolution check.
pub fn dirichlet_series(space: &FeSpace, mu: &BarycenterMeasure, scales: &[f64]) -> Result<Vec<(f64, f64)>> {
    if let Some(&max) = scales.iter().max_by(|a, b| a.total_cmp(b)) {
        check_resolution(space.mesh(), max)?;
    }
    Ok(scales
        .iter()
        .map(|&s| (s, space.dirichlet(&bubble_raw(space.mesh(), mu, s))))
        .collect())
}

fn check_geometric(scales: &[f64]) -> Result<()> {
    if scales.len() < 3 || scales.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::InvalidArgument("need at least 3 positive scales".into()));
    }
    let q = scales[1] / scales[0];
    let geometric = q > 1.0 && scales.windows(2).all(|w| ((w[1] / w[0]) / q - 1.0).abs() < 1e-9);
    if !geometric {
        return Err(Error::InvalidArgument("scales must form an increasing geometric progression".into()));
    }
    Ok(())
}

/// Least-squares slope of `y` against `log x`.
pub fn log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0.ln()).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0.ln() - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0.ln() - mx).powi(2)).sum();
    sxy / sxx
}

/// Slope of the bubble's Dirichlet energy against `log scale`.
pub fn dirichlet_slope(space: &FeSpace, mu: &BarycenterMeasure, scales: &[f64]) -> Result<f64> {
    check_geometric(scales)?;
    Ok(log_slope(&dirichlet_series(space, mu, scales)?))
}

/// Mean of the bubble before projection.
pub fn bubble_mean(space: &FeSpace, mu: &BarycenterMeasure, scale: f64) -> f64 {
    space.integral(&bubble_raw(space.mesh(), mu, scale)) / space.area()
}

/// Slope of the bubble mean against `log scale`.
pub fn mean_slope(space: &FeSpace, mu: &BarycenterMeasure, scales: &[f64]) -> Result<f64> {
    check_geometric(scales)?;
    let pts: Vec<(f64, f64)> = scales.iter().map(|&s| (s, bubble_mean(space, mu, s))).collect();
    Ok(log_slope(&pts))
}

/// `log ∫ e^u − c ∫|∇u|²` with `c = 1/(8π)`, or `1/(16π)` for functions
/// vanishing on the boundary. Takes raw vertex values since a compactly
/// supported function is generally not zero-mean.
pub fn mt_probe(space: &FeSpace, u: &[f64], compactly_supported: bool) -> f64 {
    let c = if compactly_supported {
        1.0 / (16.0 * std::f64::consts::PI)
    } else {
        1.0 / (8.0 * std::f64::consts::PI)
    };
    log_exp_integral(space, u) - c * space.dirichlet(u)
}

/// `log ∫ e^Φ − 2 log⁺(Λ(1−t)) + C √(log⁺(Λt))`, bounded below.
pub fn exp_lower_statistic(cfg: &TestConfig, logint: f64) -> f64 {
    logint - 2.0 * log_plus(cfg.bubble_scale()) + EXP_LOWER_C * log_plus(cfg.tail_scale()).sqrt()
}

/// `∫ Φ² − log⁺(Λt) − C √(log⁺(Λt))`, bounded above.
pub fn l2_upper_statistic(cfg: &TestConfig, l2: f64) -> f64 {
    let lt = log_plus(cfg.tail_scale());
    l2 - lt - L2_UPPER_C * lt.sqrt()
}

/// Atom configurations for the probes on `mesh`: a boundary atom (the
/// boundary vertex furthest along `+x`, ties going to the one nearest the
/// middle in `y`), the deepest interior vertex, and a half-half mix of that
/// boundary atom with a deep vertex far from it.
pub fn probe_fixtures(mesh: &Mesh) -> Vec<BarycenterMeasure> {
    let v = mesh.vertices();
    let (lo, hi) = mesh.bounding_box();
    let mid = 0.5 * (lo[1] + hi[1]);
    let bnd = (0..v.len())
        .filter(|&i| mesh.is_boundary_vertex(i))
        .max_by(|&a, &b| {
            let off = |i: usize| (v[i][1] - mid).abs();
            v[a][0].total_cmp(&v[b][0]).then(off(b).total_cmp(&off(a)))
        })
        .expect("mesh has a boundary");
    let depth: Vec<f64> = v.iter().map(|p| mesh.nearest_boundary_point(*p).0).collect();
    let deep = (0..v.len()).max_by(|&a, &b| depth[a].total_cmp(&depth[b])).expect("nonempty mesh");
    let far = (0..v.len())
        .filter(|&i| depth[i] >= 0.5 * depth[deep])
        .max_by(|&a, &b| {
            let da = (v[a][0] - v[bnd][0]).hypot(v[a][1] - v[bnd][1]);
            let db = (v[b][0] - v[bnd][0]).hypot(v[b][1] - v[bnd][1]);
            da.total_cmp(&db)
        })
        .expect("deep vertex exists");
    let atom = |i: usize, w: f64, tag| Atom { x: v[i][0], y: v[i][1], w, tag };
    vec![
        BarycenterMeasure::dirac(v[bnd], AtomTag::Boundary),
        BarycenterMeasure::dirac(v[deep], AtomTag::Interior),
        BarycenterMeasure::new(vec![atom(far, 0.5, AtomTag::Interior), atom(bnd, 0.5, AtomTag::Boundary)])
            .expect("weights sum to one"),
    ]
}

/// Join points for the Λ-grid statistics: every fixture measure with
/// `σ ∈ {e_1, (e_1 + e_2)/√2, −e_2}` and `t ∈ {0, ¼, ½, ¾, 1}`.
pub fn probe_join_points(mesh: &Mesh) -> Vec<JoinPoint> {
    let h = 0.5f64.sqrt();
    let sigmas = [vec![1.0, 0.0], vec![h, h], vec![0.0, -1.0]];
    let mut out = Vec::new();
    for mu in probe_fixtures(mesh) {
        for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
            for sigma in &sigmas {
                out.push(JoinPoint::new(Some(mu.clone()), sigma.clone(), t).expect("valid join point"));
            }
        }
    }
    out
}

/// Grades `mesh` towards the probe atoms so that bubble scales up to
/// `max_scale` pass the resolution check.
pub fn probe_mesh(mesh: &Mesh, max_scale: f64) -> Result<Mesh> {
    let atoms: Vec<_> = probe_fixtures(mesh)
        .iter()
        .flat_map(|m| m.atoms().iter().map(|a| a.point()).collect::<Vec<_>>())
        .collect();
    refine_near(mesh, &atoms, 0.5 / max_scale, 0.25)
}

/// One row of the Λ-grid table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaRow {
    pub lambda: f64,
    /// `∫ |∇Φ|²`.
    pub dirichlet: f64,
    /// Mean of the unprojected bubble (zero when `t = 1`).
    pub mean: f64,
    /// `log ∫ e^Φ`.
    pub logint: f64,
    pub energy: f64,
    /// `∫ Φ²`.
    pub l2: f64,
}

pub fn lambda_row(cfg: &TestConfig, basis: &SpectralBasis, p: Parameters) -> Result<LambdaRow> {
    let space = basis.space();
    let phi = phi_lambda(cfg, basis)?;
    let mean = match (&cfg.join_point.measure, cfg.join_point.t < 1.0) {
        (Some(mu), true) => bubble_mean(space, mu, cfg.bubble_scale()),
        _ => 0.0,
    };
    Ok(LambdaRow {
        lambda: cfg.lambda,
        dirichlet: space.dirichlet(phi.values()),
        mean,
        logint: log_exp_integral(space, phi.values()),
        energy: energy(space, &phi, p)?,
        l2: space.mass_inner(phi.values(), phi.values()),
    })
}

/// Rows for `Λ ∈ grid` at a fixed join point.
pub fn lambda_grid(join_point: &JoinPoint, grid: &[f64], basis: &SpectralBasis, p: Parameters) -> Result<Vec<LambdaRow>> {
    grid.iter()
        .map(|&l| lambda_row(&TestConfig::new(l, join_point.clone())?, basis, p))
        .collect()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use super::*;
    use crate::domain::{build_builtin, Builtin};
    use crate::exec::Exec;
    use crate::spectrum::eigenpairs;

    fn space_of(mesh: Mesh) -> Arc<FeSpace> {
        Arc::new(FeSpace::new(Arc::new(mesh), Exec::default()).unwrap())
    }

    #[test]
    fn bubble_pointwise_values() {
        let mesh = build_builtin(Builtin::UnitSquare, 4).unwrap();
        let mu = BarycenterMeasure::dirac([0.5, 0.5], AtomTag::Interior);
        assert!(bubble_raw(&mesh, &mu, 0.0).iter().all(|v| *v == 0.0));
        let raw = bubble_raw(&mesh, &mu, 4.0);
        let at = |x: f64, y: f64| mesh.vertices().iter().position(|v| *v == [x, y]).unwrap();
        assert_eq!(raw[at(0.5, 0.5)], 0.0);
        assert!((raw[at(0.75, 0.5)] - 0.25f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn log_plus_and_tail() {
        assert_eq!(log_plus(0.5), 0.0);
        assert_eq!(log_plus(1.0), 0.0);
        let s = space_of(build_builtin(Builtin::Disk, 24).unwrap());
        let b = eigenpairs(Arc::clone(&s), 3).unwrap();
        assert!(eigen_tail(&[1.0, 0.0], 0.9, &b).unwrap().sup_norm() == 0.0);
        let t = eigen_tail(&[1.0], std::f64::consts::E.powi(2), &b).unwrap();
        let diff = t.add_scaled(-2f64.sqrt(), b.phi(1));
        assert!(diff.sup_norm() < 1e-12);
        let sigma = [0.6, -0.8];
        let t = eigen_tail(&sigma, 50.0, &b).unwrap();
        let expected = log_plus(50.0) * (0.36 * b.eigenvalues()[0] + 0.64 * b.eigenvalues()[1]);
        assert!((s.dirichlet(t.values()) - expected).abs() < 1e-8);
        assert!(s.dirichlet(t.values()) <= b.eigenvalues()[1] * log_plus(50.0) + 1e-8);
        assert!(eigen_tail(&[0.0; 4], 5.0, &b).is_err());
    }

    #[test]
    fn phi_lambda_endpoints() {
        let s = space_of(build_builtin(Builtin::Disk, 24).unwrap());
        let b = eigenpairs(Arc::clone(&s), 2).unwrap();
        let mu = BarycenterMeasure::dirac([1.0, 0.0], AtomTag::Boundary);
        let cfg = TestConfig::new(30.0, JoinPoint::new(Some(mu.clone()), vec![1.0, 0.0], 0.0).unwrap()).unwrap();
        assert_eq!(phi_lambda(&cfg, &b).unwrap(), bubble(&s, &mu, 30.0));
        let cfg = TestConfig::new(30.0, JoinPoint::new(Some(mu), vec![0.0, 1.0], 1.0).unwrap()).unwrap();
        let tail = eigen_tail(&[0.0, 1.0], 30.0, &b).unwrap();
        assert!(phi_lambda(&cfg, &b).unwrap().add_scaled(-1.0, &tail).sup_norm() < 1e-12);
    }

    #[test]
    fn resolution_guard() {
        let s = space_of(build_builtin(Builtin::Disk, 32).unwrap());
        let mu = BarycenterMeasure::dirac([0.0, 0.0], AtomTag::Interior);
        assert!(matches!(
            dirichlet_slope(&s, &mu, &[10.0, 20.0, 40.0, 80.0]),
            Err(Error::Underresolved { .. })
        ));
        assert!(dirichlet_slope(&s, &mu, &[10.0, 20.0]).is_err());
        assert!(dirichlet_slope(&s, &mu, &[1.0, 2.0, 5.0]).is_err());
    }

    fn graded(points: &[[f64; 2]]) -> Arc<FeSpace> {
        graded_res(points, 64)
    }

    fn graded_res(points: &[[f64; 2]], res: usize) -> Arc<FeSpace> {
        let coarse = build_builtin(Builtin::Disk, res).unwrap();
        space_of(refine_near(&coarse, points, 1.0 / 200.0, 0.25).unwrap())
    }

    fn graded_square(points: &[[f64; 2]]) -> Arc<FeSpace> {
        let coarse = build_builtin(Builtin::UnitSquare, 32).unwrap();
        space_of(refine_near(&coarse, points, 1.0 / 200.0, 0.25).unwrap())
    }

    const SCALES: [f64; 4] = [10.0, 20.0, 40.0, 80.0];

    #[test]
    fn slopes_on_the_square() {
        let s = graded_square(&[[0.5, 0.5], [0.5, 0.0], [0.3, 0.7], [1.0, 0.3]]);
        let interior = BarycenterMeasure::dirac([0.5, 0.5], AtomTag::Interior);
        let slope = dirichlet_slope(&s, &interior, &SCALES).unwrap();
        assert!((slope / (32.0 * PI) - 1.0).abs() < 0.03, "{slope}");
        let boundary = BarycenterMeasure::dirac([0.5, 0.0], AtomTag::Boundary);
        let slope = dirichlet_slope(&s, &boundary, &SCALES).unwrap();
        assert!((slope / (16.0 * PI) - 1.0).abs() < 0.03, "{slope}");
        let mixed = BarycenterMeasure::new(vec![
            Atom { x: 0.3, y: 0.7, w: 0.5, tag: AtomTag::Interior },
            Atom { x: 1.0, y: 0.3, w: 0.5, tag: AtomTag::Boundary },
        ])
        .unwrap();
        let slope = dirichlet_slope(&s, &mixed, &SCALES).unwrap();
        assert!((slope / (48.0 * PI) - 1.0).abs() < 0.04, "{slope}");
    }

    /// Exact energy of a boundary bubble on the unit disk, by quadrature in
    /// the polar angle around the atom (the disk is `r < −2 cos θ`).
    fn disk_boundary_energy(scale: f64) -> f64 {
        let n = 20_000;
        let h = PI / n as f64;
        (0..n)
            .map(|k| {
                let th = 0.5 * PI + (k as f64 + 0.5) * h;
                let x = (scale * 2.0 * th.cos()).powi(2);
                8.0 * (x.ln_1p() + 1.0 / (1.0 + x) - 1.0) * h
            })
            .sum()
    }

    #[test]
    fn disk_slopes_match_exact_integrals() {
        let s = graded_res(&[[1.0, 0.0]], 256);
        let mu = BarycenterMeasure::dirac([1.0, 0.0], AtomTag::Boundary);
        let slope = dirichlet_slope(&s, &mu, &SCALES).unwrap();
        let pts: Vec<(f64, f64)> = SCALES.iter().map(|&l| (l, disk_boundary_energy(l))).collect();
        let exact = log_slope(&pts);
        assert!((slope / exact - 1.0).abs() < 0.005, "{slope} vs {exact}");
        // The boundary curves away from the tangent, so at these scales the
        // slope sits about 3% under 16π.
        assert!((exact / (16.0 * PI) - 0.969).abs() < 0.001);
        let s = graded(&[[0.0, 0.0]]);
        let mu = BarycenterMeasure::dirac([0.0, 0.0], AtomTag::Interior);
        let slope = dirichlet_slope(&s, &mu, &SCALES).unwrap();
        assert!((slope / (32.0 * PI) - 1.0).abs() < 0.03, "{slope}");
    }

    #[test]
    fn mean_slope_is_minus_four() {
        let s = graded(&[[0.0, 0.0]]);
        let mu = BarycenterMeasure::dirac([0.0, 0.0], AtomTag::Interior);
        let slope = mean_slope(&s, &mu, &[10.0, 20.0, 40.0, 80.0]).unwrap();
        assert!((slope + 4.0).abs() < 0.2, "{slope}");
    }

    #[test]
    fn bubble_density_concentrates() {
        let s = graded(&[[0.2, 0.1]]);
        let mu = BarycenterMeasure::dirac([0.2, 0.1], AtomTag::Interior);
        let f = crate::barycenter::Density::exp_of(&s, bubble(&s, &mu, 200.0).values());
        assert!(f.ball_mass([0.2, 0.1], 0.2) >= 0.99);
    }

    #[test]
    fn mt_probe_examples() {
        let s = space_of(build_builtin(Builtin::Disk, 32).unwrap());
        assert!((mt_probe(&s, &vec![0.0; s.dim()], false) - s.area().ln()).abs() < 1e-12);
        let mixed = BarycenterMeasure::new(vec![
            Atom { x: 0.0, y: 0.0, w: 0.5, tag: AtomTag::Interior },
            Atom { x: 1.0, y: 0.0, w: 0.5, tag: AtomTag::Boundary },
        ])
        .unwrap();
        assert_eq!(mixed.weighted_count(), 3);
    }

    #[test]
    fn mt_statistic_stays_bounded() {
        let grid = [10.0, 20.0, 40.0, 80.0];
        let edge = [1.0, 0.0];
        let s = graded(&[edge]);
        let mu = BarycenterMeasure::dirac(edge, AtomTag::Boundary);
        let stats: Vec<f64> = grid.iter().map(|&l| mt_probe(&s, bubble(&s, &mu, l).values(), false)).collect();
        assert!(stats.iter().all(|x| *x <= stats[0] + 1.0), "{stats:?}");

        let centre = [0.0, 0.0];
        let s = graded(&[centre]);
        let mu = BarycenterMeasure::dirac(centre, AtomTag::Interior);
        let mesh = s.mesh();
        let stats: Vec<f64> = grid
            .iter()
            .map(|&l| {
                let raw = bubble_raw(mesh, &mu, l);
                let rim = (0..raw.len())
                    .filter(|&i| mesh.is_boundary_vertex(i))
                    .map(|i| raw[i])
                    .fold(f64::NEG_INFINITY, f64::max);
                let cut: Vec<f64> = raw.iter().map(|x| (x - rim).max(0.0)).collect();
                mt_probe(&s, &cut, true)
            })
            .collect();
        assert!(stats.iter().all(|x| *x <= stats[0] + 1.0), "{stats:?}");
    }

    #[test]
    fn square_boundary_fixture_is_mid_edge() {
        let m = build_builtin(Builtin::UnitSquare, 16).unwrap();
        let f = probe_fixtures(&m);
        assert_eq!(f[0].atoms()[0].point(), [1.0, 0.5]);
        assert_eq!(f[1].atoms()[0].point(), [0.5, 0.5]);
    }
}
