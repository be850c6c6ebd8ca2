use serde::Serialize;

use super::{Atom, AtomTag, BarycenterMeasure, Density};
use crate::domain::{Mesh, Point};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TaggedPoint {
    pub point: Point,
    pub tag: AtomTag,
}

/// Outcome of [`spread_points`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Spread {
    /// Separated points carrying mass, with `2l̃ + m̃ ≥ K + 1`.
    Spread {
        points: Vec<TaggedPoint>,
        /// Mass threshold `ε̃ = eps / L`.
        wt_eps: f64,
        /// Ball radius `r̃ = eps / 6`.
        wt_r: f64,
        /// Size `L` of the net.
        net_size: usize,
    },
    /// An admissible family whose `radius`-balls hold at least `1 − eps`.
    Concentrated {
        witness: Vec<TaggedPoint>,
        radius: f64,
        captured: f64,
    },
}

const TOP_CLOUD: usize = 32;
const EXHAUSTIVE: usize = 10;

fn weight(points: &[TaggedPoint]) -> usize {
    points.iter().map(|p| p.tag.weight()).sum()
}

/// Hexagonal lattice points of spacing `h` inside the closed domain.
fn hex_lattice(mesh: &Mesh, h: f64) -> Vec<Point> {
    let (lo, hi) = mesh.bounding_box();
    let dy = h * 3f64.sqrt() / 2.0;
    let rows = ((hi[1] - lo[1]) / dy).floor() as usize + 1;
    let cols = ((hi[0] - lo[0]) / h).floor() as usize + 2;
    let mut out = Vec::new();
    for j in 0..rows {
        let y = lo[1] + j as f64 * dy;
        let shift = if j % 2 == 1 { 0.5 * h } else { 0.0 };
        for i in 0..cols {
            let p = [lo[0] + shift + i as f64 * h, y];
            if mesh.contains(p) {
                out.push(p);
            }
        }
    }
    out
}

/// Points along every boundary edge with spacing at most `h`, vertices included.
fn boundary_samples(mesh: &Mesh, h: f64) -> Vec<Point> {
    let v = mesh.vertices();
    let mut out = Vec::new();
    for e in mesh.boundary_edges() {
        let (a, b) = (v[e[0]], v[e[1]]);
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        let n = (len / h).ceil().max(1.0) as usize;
        for k in 0..n {
            let s = k as f64 / n as f64;
            out.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
        }
    }
    out
}

fn boundary_tol(mesh: &Mesh) -> f64 {
    1e-9 * mesh.diameter().max(1.0)
}

struct Candidates {
    points: Vec<TaggedPoint>,
    members: Vec<Vec<usize>>,
    mass: Vec<f64>,
}

impl Candidates {
    fn build(f: &Density, eps: f64) -> Candidates {
        let mesh = f.mesh();
        let tol = boundary_tol(mesh);
        let mut points = Vec::new();
        // Heaviest cloud points first so that discrete densities are
        // recovered exactly on ties.
        let mut order: Vec<usize> = (0..f.cloud_len()).collect();
        order.sort_by(|&a, &b| f.cloud_mass_at(b).total_cmp(&f.cloud_mass_at(a)).then(a.cmp(&b)));
        let (cloud, _) = f.cloud();
        for &i in order.iter().take(TOP_CLOUD) {
            if f.cloud_mass_at(i) <= 0.0 {
                break;
            }
            let p = cloud[i];
            let (d, q) = mesh.nearest_boundary_point(p);
            let tag = if d < tol { AtomTag::Boundary } else { AtomTag::Interior };
            let point = if d < tol { q } else { p };
            if tag == AtomTag::Boundary || mesh.contains(p) {
                points.push(TaggedPoint { point, tag });
            }
        }
        for p in hex_lattice(mesh, eps / 3.0) {
            if mesh.nearest_boundary_point(p).0 > tol {
                points.push(TaggedPoint { point: p, tag: AtomTag::Interior });
            }
        }
        for p in boundary_samples(mesh, eps / 3.0) {
            points.push(TaggedPoint { point: p, tag: AtomTag::Boundary });
        }
        let members: Vec<Vec<usize>> = points.iter().map(|c| f.ball_members(c.point, eps)).collect();
        let mass = members
            .iter()
            .map(|m| m.iter().map(|&i| f.cloud_mass_at(i)).sum())
            .collect();
        Candidates { points, members, mass }
    }

    fn union(&self, f: &Density, chosen: &[usize]) -> f64 {
        let mut hit = vec![false; f.cloud_len()];
        let mut s = 0.0;
        for &c in chosen {
            for &i in &self.members[c] {
                if !hit[i] {
                    hit[i] = true;
                    s += f.cloud_mass_at(i);
                }
            }
        }
        s
    }

    /// Greedy family by marginal gain per unit of weight.
    fn greedy(&self, f: &Density, k: usize) -> Vec<usize> {
        let mut hit = vec![false; f.cloud_len()];
        let mut chosen = Vec::new();
        let mut budget = k;
        loop {
            let mut best: Option<(usize, f64)> = None;
            for (c, p) in self.points.iter().enumerate() {
                let w = p.tag.weight();
                if w > budget {
                    continue;
                }
                let gain: f64 = self.members[c].iter().filter(|&&i| !hit[i]).map(|&i| f.cloud_mass_at(i)).sum();
                let score = gain / w as f64;
                if score > 0.0 && best.map_or(true, |(_, s)| score > s) {
                    best = Some((c, score));
                }
            }
            let Some((c, _)) = best else { break };
            for &i in &self.members[c] {
                hit[i] = true;
            }
            budget -= self.points[c].tag.weight();
            chosen.push(c);
        }
        chosen
    }

    /// Best admissible subset of a few well-separated heavy candidates.
    fn exhaustive(&self, f: &Density, k: usize, eps: f64) -> (Vec<usize>, f64) {
        let mut order: Vec<usize> = (0..self.points.len()).collect();
        order.sort_by(|&a, &b| self.mass[b].total_cmp(&self.mass[a]).then(a.cmp(&b)));
        let mut top: Vec<usize> = Vec::new();
        for c in order {
            if top.len() == EXHAUSTIVE || self.mass[c] <= 0.0 {
                break;
            }
            let p = self.points[c].point;
            let far = top.iter().all(|&t| {
                let q = self.points[t].point;
                (p[0] - q[0]).hypot(p[1] - q[1]) > eps || self.points[t].tag != self.points[c].tag
            });
            if far {
                top.push(c);
            }
        }
        let mut best = (Vec::new(), 0.0);
        for mask in 1u32..(1 << top.len()) {
            let set: Vec<usize> = (0..top.len()).filter(|b| mask >> b & 1 == 1).map(|b| top[b]).collect();
            let w: usize = set.iter().map(|&c| self.points[c].tag.weight()).sum();
            if w > k {
                continue;
            }
            let m = self.union(f, &set);
            if m > best.1 {
                best = (set, m);
            }
        }
        best
    }
}

/// Searches for an admissible family capturing `1 − eps` of the mass in
/// `eps`-balls.
fn direct_capture(f: &Density, eps: f64, k: usize) -> Option<(Vec<TaggedPoint>, f64)> {
    let need = 1.0 - eps;
    if k == 0 {
        return (0.0 >= need).then(|| (Vec::new(), 0.0));
    }
    let cands = Candidates::build(f, eps);
    let g = cands.greedy(f, k);
    let gm = cands.union(f, &g);
    let (e, em) = if gm >= need { (Vec::new(), 0.0) } else { cands.exhaustive(f, k, eps) };
    let (set, m) = if gm >= need || gm >= em { (g, gm) } else { (e, em) };
    (m >= need).then(|| (set.iter().map(|&c| cands.points[c]).collect(), m))
}

/// Either `eps`-captures the density by an admissible family of order `k`,
/// or produces spread points.
///
/// The spread alternative uses the covering argument with `r̃ = eps/6`: an
/// `r̃`-net of size `L` (hexagonal lattice plus boundary samples), heavy balls
/// of mass at least `ε̃ = eps/L`, and heaviest-first selection with pairwise
/// separation `4r̃`. Selected points closer than `r̃` to the boundary are
/// tagged boundary. If they do not reach weight `k + 1`, the projected
/// selection captures the mass in `eps`-balls and is returned as the witness.
pub fn spread_points(f: &Density, eps: f64, k: usize) -> Spread {
    if let Some((witness, captured)) = direct_capture(f, eps, k) {
        return Spread::Concentrated {
            witness,
            radius: eps,
            captured,
        };
    }
    let mesh = f.mesh();
    let r = eps / 6.0;
    let mut net = hex_lattice(mesh, r);
    net.extend(boundary_samples(mesh, 0.5 * r));
    let l = net.len();
    let wt_eps = eps / l as f64;
    let masses: Vec<f64> = net.iter().map(|&p| f.ball_mass(p, r)).collect();
    let mut heavy: Vec<usize> = (0..l).filter(|&i| masses[i] >= wt_eps).collect();
    heavy.sort_by(|&a, &b| masses[b].total_cmp(&masses[a]).then(a.cmp(&b)));
    let mut chosen: Vec<TaggedPoint> = Vec::new();
    for i in heavy {
        let p = net[i];
        if chosen.iter().all(|c| (c.point[0] - p[0]).hypot(c.point[1] - p[1]) >= 4.0 * r) {
            let d = mesh.nearest_boundary_point(p).0;
            let tag = if d < r { AtomTag::Boundary } else { AtomTag::Interior };
            chosen.push(TaggedPoint { point: p, tag });
        }
    }
    if weight(&chosen) > k {
        return Spread::Spread {
            points: chosen,
            wt_eps,
            wt_r: r,
            net_size: l,
        };
    }
    let witness: Vec<TaggedPoint> = chosen
        .into_iter()
        .map(|c| match c.tag {
            AtomTag::Boundary => TaggedPoint {
                point: mesh.nearest_boundary_point(c.point).1,
                tag: AtomTag::Boundary,
            },
            AtomTag::Interior => c,
        })
        .collect();
    let pts: Vec<Point> = witness.iter().map(|w| w.point).collect();
    let captured = f.union_mass(&pts, eps);
    Spread::Concentrated {
        witness,
        radius: eps,
        captured,
    }
}

/// Projects a density captured at scale `eps/3` onto the barycenter space
/// of order `k`.
///
/// Atoms sit at the capturing family; each weight is the mass of its ball
/// minus the earlier balls, plus an equal share of the uncaptured mass. The
/// share is taken per atom so that the weights sum to one.
pub fn project_to_barycenters(f: &Density, eps: f64, k: usize) -> Result<BarycenterMeasure> {
    let Spread::Concentrated { witness, radius, .. } = spread_points(f, eps / 3.0, k) else {
        return Err(Error::NotConcentrated { eps, k });
    };
    if witness.is_empty() {
        return Err(Error::NotConcentrated { eps, k });
    }
    let mut hit = vec![false; f.cloud_len()];
    let mut parts = Vec::with_capacity(witness.len());
    for w in &witness {
        let mut m = 0.0;
        for i in f.ball_members(w.point, radius) {
            if !hit[i] {
                hit[i] = true;
                m += f.cloud_mass_at(i);
            }
        }
        parts.push(m);
    }
    let total = f.total_mass();
    let residual = (total - parts.iter().sum::<f64>()).max(0.0);
    let keep: Vec<usize> = (0..witness.len()).filter(|&i| parts[i] > 0.0 || residual > 0.0).collect();
    if keep.is_empty() {
        return Err(Error::EmptySupport);
    }
    let share = residual / keep.len() as f64;
    let atoms = keep
        .into_iter()
        .map(|i| Atom {
            x: witness[i].point[0],
            y: witness[i].point[1],
            w: parts[i] + share,
            tag: witness[i].tag,
        })
        .collect();
    BarycenterMeasure::normalized(atoms)
}
