use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::barycenter::{AtomTag, Density};
use crate::domain::{dist, Point};
use crate::energy::{Field, Parameters};
use crate::spectrum::FeSpace;

/// Relative window around `8π` and `4π` for the interpretation.
pub const QUANTUM_WINDOW: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpretation {
    InteriorLike,
    BoundaryLike,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub point: Point,
    /// `ρ ∫_{B_r} e^u / ∫ e^u`.
    pub local_mass: f64,
    pub tag: AtomTag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupDiagnostic {
    /// Sorted by decreasing local mass.
    pub candidate_points: Vec<Candidate>,
    pub interpretation: Interpretation,
}

impl Interpretation {
    pub fn of_mass(m: f64) -> Interpretation {
        if (m - 8.0 * PI).abs() <= QUANTUM_WINDOW * 8.0 * PI {
            Interpretation::InteriorLike
        } else if (m - 4.0 * PI).abs() <= QUANTUM_WINDOW * 4.0 * PI {
            Interpretation::BoundaryLike
        } else {
            Interpretation::None
        }
    }
}

/// Strict local maxima of `u` whose `radius`-ball carries at least twice its
/// share of a uniform density, with the local mass of each. The
/// interpretation is read off the heaviest candidate.
pub fn local_mass(space: &FeSpace, u: &Field, p: Parameters, radius: f64) -> BlowupDiagnostic {
    let mesh = space.mesh();
    let v = mesh.vertices();
    let vals = u.values();
    let density = Density::exp_of(space, vals);
    let area = space.area();
    let mut peaks: Vec<usize> = (0..v.len())
        .filter(|&a| mesh.neighbors(a).iter().all(|&b| vals[a] > vals[b]))
        .collect();
    peaks.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let mut candidates: Vec<Candidate> = Vec::new();
    for a in peaks {
        if candidates.iter().any(|c| dist(c.point, v[a]) < radius) {
            continue;
        }
        let fraction = density.ball_mass(v[a], radius);
        let (bdist, _) = mesh.nearest_boundary_point(v[a]);
        let uniform = ball_area_in_domain(bdist, radius) / area;
        if fraction < 2.0 * uniform {
            continue;
        }
        let tag = if bdist < radius { AtomTag::Boundary } else { AtomTag::Interior };
        candidates.push(Candidate {
            point: v[a],
            local_mass: p.rho * fraction,
            tag,
        });
    }
    candidates.sort_by(|a, b| b.local_mass.total_cmp(&a.local_mass));
    let interpretation = candidates
        .first()
        .map_or(Interpretation::None, |c| Interpretation::of_mass(c.local_mass));
    BlowupDiagnostic {
        candidate_points: candidates,
        interpretation,
    }
}

/// Area of a disk of radius `r` cut by a straight boundary at distance `d`.
fn ball_area_in_domain(d: f64, r: f64) -> f64 {
    if d >= r {
        return PI * r * r;
    }
    let cap = r * r * (d / r).acos() - d * (r * r - d * d).sqrt();
    PI * r * r - cap
}
