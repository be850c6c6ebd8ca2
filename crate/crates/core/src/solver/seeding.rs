use serde::{Deserialize, Serialize};

use super::{dedup, flow, newton, Classification, SolveResult};
use crate::barycenter::{Atom, AtomTag, BarycenterMeasure, JoinPoint};
use crate::domain::{Mesh, Point};
use crate::energy::{Field, Parameters};
use crate::spectrum::SpectralBasis;
use crate::testfn::{phi_lambda, TestConfig};
use crate::topology::{indices, Indices};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub lambdas: Vec<f64>,
    pub ts: Vec<f64>,
    /// Gradient-flow steps before Newton takes over.
    pub flow_budget: usize,
    pub boundary_candidates: usize,
    pub interior_candidates: usize,
    /// At most this many atom configurations are tried.
    pub max_configurations: usize,
    /// Amplitudes `s` of the fallback seeds `s φ_i`.
    pub fallback_amplitudes: Vec<f64>,
    /// Keep going after the first nontrivial solution.
    pub exhaustive: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            lambdas: vec![30.0, 100.0],
            ts: vec![0.0, 0.5, 1.0],
            flow_budget: 20,
            boundary_candidates: 4,
            interior_candidates: 3,
            max_configurations: 24,
            fallback_amplitudes: vec![1.0, -1.0, 3.0, -3.0],
            exhaustive: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub parameters: Parameters,
    pub indices: Option<Indices>,
    /// Distinct critical points found; the trivial one comes first.
    pub solutions: Vec<SolveResult>,
    pub seeds_tried: usize,
}

impl SolveReport {
    pub fn nontrivial(&self) -> impl Iterator<Item = &SolveResult> {
        self.solutions
            .iter()
            .filter(|r| r.classification == Classification::Nontrivial)
    }
}

/// Seeds per parallel batch; fixed so results do not depend on the thread count.
const SEED_BATCH: usize = 8;

struct Seed {
    u: Field,
    config: Option<TestConfig>,
}

/// Boundary points equally spaced in arclength over all boundary loops.
fn boundary_samples(mesh: &Mesh, count: usize) -> Vec<Point> {
    let v = mesh.vertices();
    let loops = mesh.boundary_loops();
    let perimeter: f64 = loops
        .iter()
        .map(|l| (0..l.len()).map(|i| seg_len(v[l[i]], v[l[(i + 1) % l.len()]])).sum::<f64>())
        .sum();
    let mut out = Vec::with_capacity(count);
    let spacing = perimeter / count as f64;
    let mut next = 0.0;
    let mut walked = 0.0;
    for l in loops {
        for i in 0..l.len() {
            if out.len() < count && walked >= next {
                out.push(v[l[i]]);
                next += spacing;
            }
            walked += seg_len(v[l[i]], v[l[(i + 1) % l.len()]]);
        }
    }
    out
}

fn seg_len(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Deep vertices chosen by farthest-point sampling among those at least half
/// as deep as the deepest.
fn interior_samples(mesh: &Mesh, count: usize) -> Vec<Point> {
    let v = mesh.vertices();
    let depth: Vec<f64> = v.iter().map(|p| mesh.nearest_boundary_point(*p).0).collect();
    let max = depth.iter().copied().fold(0.0, f64::max);
    let pool: Vec<usize> = (0..v.len()).filter(|&i| depth[i] >= 0.5 * max).collect();
    let Some(&first) = pool.iter().max_by(|&&a, &&b| depth[a].total_cmp(&depth[b])) else {
        return Vec::new();
    };
    let mut out = vec![v[first]];
    while out.len() < count {
        let far = pool.iter().copied().max_by(|&a, &b| {
            let da = out.iter().map(|q| seg_len(v[a], *q)).fold(f64::INFINITY, f64::min);
            let db = out.iter().map(|q| seg_len(v[b], *q)).fold(f64::INFINITY, f64::min);
            da.total_cmp(&db)
        });
        match far {
            Some(i) if !out.contains(&v[i]) => out.push(v[i]),
            _ => break,
        }
    }
    out
}

fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    if r == 0 {
        return vec![Vec::new()];
    }
    if n < r {
        return Vec::new();
    }
    let mut out = Vec::new();
    for mut c in combinations(n - 1, r - 1) {
        c.push(n - 1);
        out.push(c);
    }
    out.extend(combinations(n - 1, r));
    out
}

/// Equal-weight measures with `l` interior and `m` boundary atoms,
/// `1 ≤ 2l + m ≤ k`, lightest configurations first.
fn configurations(mesh: &Mesh, k: usize, opts: &SolveOptions) -> Vec<BarycenterMeasure> {
    let bnd = boundary_samples(mesh, opts.boundary_candidates);
    let int = interior_samples(mesh, opts.interior_candidates);
    let mut shapes: Vec<(usize, usize)> = Vec::new();
    for l in 0..=k / 2 {
        for m in 0..=(k - 2 * l) {
            if l + m > 0 {
                shapes.push((l, m));
            }
        }
    }
    shapes.sort_by_key(|&(l, m)| (2 * l + m, l));
    let mut out = Vec::new();
    for (l, m) in shapes {
        let w = 1.0 / (l + m) as f64;
        for ci in combinations(int.len(), l) {
            for cb in combinations(bnd.len(), m) {
                let atoms = ci
                    .iter()
                    .map(|&i| (int[i], AtomTag::Interior))
                    .chain(cb.iter().map(|&i| (bnd[i], AtomTag::Boundary)))
                    .map(|(p, tag)| Atom { x: p[0], y: p[1], w, tag })
                    .collect();
                if let Ok(mu) = BarycenterMeasure::normalized(atoms) {
                    out.push(mu);
                }
                if out.len() == opts.max_configurations {
                    return out;
                }
            }
        }
    }
    out
}

fn phi_seeds(basis: &SpectralBasis, ind: Indices, opts: &SolveOptions) -> Result<Vec<Seed>> {
    let mesh = basis.space().mesh();
    let measures = if ind.k > 0 {
        configurations(mesh, ind.k, opts)
    } else {
        Vec::new()
    };
    let sigmas: Vec<Vec<f64>> = (0..ind.i)
        .flat_map(|i| {
            [1.0, -1.0].map(|s| {
                let mut e = vec![0.0; ind.i];
                e[i] = s;
                e
            })
        })
        .collect();
    let mut points = Vec::new();
    for &t in &opts.ts {
        if t == 0.0 {
            for mu in &measures {
                points.push(JoinPoint::new(Some(mu.clone()), vec![0.0; ind.i], 0.0)?);
            }
        } else if t == 1.0 {
            for s in &sigmas {
                points.push(JoinPoint::new(None, s.clone(), 1.0)?);
            }
        } else {
            for mu in &measures {
                for s in &sigmas {
                    points.push(JoinPoint::new(Some(mu.clone()), s.clone(), t)?);
                }
            }
        }
    }
    let mut seeds = Vec::new();
    for &lambda in &opts.lambdas {
        for z in &points {
            let cfg = TestConfig::new(lambda, z.clone())?;
            seeds.push(Seed {
                u: phi_lambda(&cfg, basis)?,
                config: Some(cfg),
            });
        }
    }
    Ok(seeds)
}

fn fallback_seeds(basis: &SpectralBasis, modes: usize, opts: &SolveOptions) -> Vec<Seed> {
    let mut seeds = Vec::new();
    for i in 1..=modes.min(basis.len()) {
        for &s in &opts.fallback_amplitudes {
            seeds.push(Seed {
                u: basis.phi(i).scaled(s),
                config: None,
            });
        }
    }
    seeds
}

/// Flow then Newton from one seed. Seeds that fail to converge give `None`.
fn refine_seed(basis: &SpectralBasis, seed: &Seed, p: Parameters, opts: &SolveOptions) -> Result<Option<SolveResult>> {
    let space = basis.space();
    let flowed = flow(space, &seed.u, p, opts.flow_budget)?;
    let start = if flowed.classification == Classification::Diverged && flowed.u.sup_norm() > super::BLOWUP_NORM_CAP {
        &seed.u
    } else {
        &flowed.u
    };
    match newton(space, start, p) {
        Ok(mut r) => {
            r.iterations += flowed.iterations;
            r.seed = seed.config.clone();
            Ok(Some(r))
        }
        Err(Error::NewtonNoConvergence { .. }) | Err(Error::Singular { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Searches for critical points: the trivial one, then Newton refinements of
/// flowed test-function seeds `Φ^Λ(μ, σ, t)` and of fallback seeds `s φ_i`.
///
/// Seeds are processed in parallel batches; unless `opts.exhaustive`, the
/// search stops after the first batch containing a nontrivial solution.
pub fn solve(basis: &SpectralBasis, p: Parameters, opts: &SolveOptions) -> Result<SolveReport> {
    let space = basis.space();
    let ind = indices(p, space.area(), basis.eigenvalues()).ok();
    let mut found = vec![newton(space, &space.zero(), p)?];
    let mut seeds = match ind {
        Some(ind) if ind.k + ind.i > 0 => phi_seeds(basis, ind, opts)?,
        _ => Vec::new(),
    };
    let modes = ind.map_or(2, |ind| ind.i.max(ind.j).max(2));
    seeds.extend(fallback_seeds(basis, modes, opts));
    let mut tried = 0;
    for chunk in seeds.chunks(SEED_BATCH) {
        let results = space.exec().map(chunk, |s| refine_seed(basis, s, p, opts));
        tried += chunk.len();
        for r in results {
            if let Some(r) = r? {
                found.push(r);
            }
        }
        found = dedup(space, found);
        let done = found.iter().any(|r| r.classification == Classification::Nontrivial);
        if done && !opts.exhaustive {
            break;
        }
    }
    Ok(SolveReport {
        parameters: p,
        indices: ind,
        solutions: found,
        seeds_tried: tried,
    })
}
