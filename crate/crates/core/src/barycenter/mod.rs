//! Barycenter measures, join coordinates and the bounded-Lipschitz distance.
//!
//! A barycenter measure of order `K` is a probability measure with finitely
//! many atoms where interior atoms count twice and boundary atoms once, so
//! `2·#interior + #boundary ≤ K`.

mod cover;
mod density;
mod lipschitz;

use serde::{Deserialize, Serialize};

use crate::domain::{Mesh, Point};
use crate::energy::{project_pi, Field};
use crate::spectrum::SpectralBasis;
use crate::{Error, Result};

pub use cover::{project_to_barycenters, spread_points, Spread, TaggedPoint};
pub use density::Density;
pub use lipschitz::bl_distance;

const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomTag {
    Interior,
    Boundary,
}

impl AtomTag {
    /// Contribution to the weighted count `2l + m`.
    pub fn weight(self) -> usize {
        match self {
            AtomTag::Interior => 2,
            AtomTag::Boundary => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub tag: AtomTag,
}

impl Atom {
    pub fn point(&self) -> Point {
        [self.x, self.y]
    }
}

/// Finitely supported probability measure with tagged atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarycenterMeasure {
    atoms: Vec<Atom>,
}

impl BarycenterMeasure {
    /// Checks positivity of the weights and that they sum to one.
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptySupport);
        }
        if let Some(a) = atoms.iter().find(|a| !(a.w > 0.0) || !a.x.is_finite() || !a.y.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad atom {a:?}")));
        }
        let total: f64 = atoms.iter().map(|a| a.w).sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidArgument(format!("weights sum to {total}")));
        }
        Ok(BarycenterMeasure { atoms })
    }

    /// Rescales positive weights to unit total.
    pub fn normalized(mut atoms: Vec<Atom>) -> Result<Self> {
        let total: f64 = atoms.iter().map(|a| a.w).sum();
        if !(total > 0.0) {
            return Err(Error::EmptySupport);
        }
        for a in &mut atoms {
            a.w /= total;
        }
        Self::new(atoms)
    }

    pub fn dirac(p: Point, tag: AtomTag) -> Self {
        BarycenterMeasure {
            atoms: vec![Atom {
                x: p[0],
                y: p[1],
                w: 1.0,
                tag,
            }],
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// `2l + m`.
    pub fn weighted_count(&self) -> usize {
        self.atoms.iter().map(|a| a.tag.weight()).sum()
    }

    pub fn weighted_points(&self) -> Vec<(Point, f64)> {
        self.atoms.iter().map(|a| (a.point(), a.w)).collect()
    }

    /// Geometric consistency of the tags with `mesh`, plus `2l + m ≤ k`.
    pub fn validate(&self, mesh: &Mesh, k: usize) -> Result<()> {
        let tol = 1e-9 * mesh.diameter().max(1.0);
        for a in &self.atoms {
            let p = a.point();
            let (d, _) = mesh.nearest_boundary_point(p);
            let ok = match a.tag {
                AtomTag::Boundary => d < tol,
                AtomTag::Interior => mesh.contains(p) && d > 0.0,
            };
            if !ok {
                return Err(Error::InvalidArgument(format!(
                    "{:?} atom at ({}, {}) has boundary distance {d:e}",
                    a.tag, a.x, a.y
                )));
            }
        }
        if self.weighted_count() > k {
            return Err(Error::InvalidArgument(format!(
                "weighted count {} exceeds K = {k}",
                self.weighted_count()
            )));
        }
        Ok(())
    }
}

/// Point `(μ, σ, t)` of the join of the barycenter space with `S^{I−1}`.
///
/// At `t = 0` the sphere coordinate is irrelevant, at `t = 1` the measure is.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JoinPoint {
    pub measure: Option<BarycenterMeasure>,
    pub sphere: Vec<f64>,
    pub t: f64,
}

impl JoinPoint {
    pub fn new(measure: Option<BarycenterMeasure>, sphere: Vec<f64>, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidArgument(format!("t = {t} outside [0, 1]")));
        }
        if t > 0.0 {
            let n = sphere.iter().map(|s| s * s).sum::<f64>().sqrt();
            if (n - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!("|σ| = {n}, expected 1")));
            }
        }
        if t < 1.0 && measure.is_none() {
            return Err(Error::InvalidArgument("measure required for t < 1".into()));
        }
        Ok(JoinPoint { measure, sphere, t })
    }

    pub fn from_measure(measure: BarycenterMeasure) -> Self {
        JoinPoint {
            measure: Some(measure),
            sphere: Vec::new(),
            t: 0.0,
        }
    }
}

impl PartialEq for JoinPoint {
    fn eq(&self, other: &Self) -> bool {
        if self.t != other.t {
            return false;
        }
        if self.t == 0.0 {
            self.measure == other.measure
        } else if self.t == 1.0 {
            self.sphere == other.sphere
        } else {
            self.measure == other.measure && self.sphere == other.sphere
        }
    }
}

/// `Ψ(u) = (μ(u), σ(u), t(u))` with `t = min(1, |Π_I u|)`.
///
/// The measure is the projection of `e^u / ∫ e^u` and is only computed when
/// `t < 1`; failure to project there is reported as
/// [`Error::NotInLowSublevel`].
pub fn psi_map(u: &Field, basis: &SpectralBasis, i: usize, k: usize, eps: f64) -> Result<JoinPoint> {
    let coeffs = project_pi(u, basis, i)?;
    let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    let t = norm.min(1.0);
    let sphere = if norm > 0.0 {
        coeffs.iter().map(|c| c / norm).collect()
    } else {
        vec![0.0; i]
    };
    let measure = if t < 1.0 {
        let f = Density::exp_of(basis.space(), u.values());
        match project_to_barycenters(&f, eps, k) {
            Ok(m) => Some(m),
            Err(Error::NotConcentrated { .. }) => return Err(Error::NotInLowSublevel),
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    Ok(JoinPoint { measure, sphere, t })
}
