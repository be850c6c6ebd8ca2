use std::sync::Arc;

use super::BarycenterMeasure;
use crate::domain::{Mesh, Point};
use crate::quadrature::{interpolate, ExpMoments};
use crate::spectrum::FeSpace;
use crate::{Error, Result};

/// Bucket grid over a point cloud for ball-mass queries.
#[derive(Debug, Clone)]
struct PointIndex {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl PointIndex {
    fn new(points: &[Point]) -> PointIndex {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in points {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let w = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
        let side = ((points.len() as f64 / 4.0).sqrt().ceil() as usize).clamp(1, 1024);
        let cell = w / side as f64 * (1.0 + 1e-9);
        let nx = (((hi[0] - lo[0]) / cell) as usize + 1).min(side + 1);
        let ny = (((hi[1] - lo[1]) / cell) as usize + 1).min(side + 1);
        let mut buckets = vec![Vec::new(); nx * ny];
        let mut index = PointIndex {
            origin: lo,
            cell,
            nx,
            ny,
            buckets: Vec::new(),
        };
        for (i, p) in points.iter().enumerate() {
            let (cx, cy) = index.cell_of(*p);
            buckets[cy * nx + cx].push(i as u32);
        }
        index.buckets = buckets;
        index
    }

    fn cell_of(&self, p: Point) -> (usize, usize) {
        let cx = ((p[0] - self.origin[0]) / self.cell).floor().clamp(0.0, (self.nx - 1) as f64);
        let cy = ((p[1] - self.origin[1]) / self.cell).floor().clamp(0.0, (self.ny - 1) as f64);
        (cx as usize, cy as usize)
    }

    fn for_each_in_ball(&self, points: &[Point], c: Point, r: f64, mut f: impl FnMut(usize)) {
        let (x0, y0) = self.cell_of([c[0] - r, c[1] - r]);
        let (x1, y1) = self.cell_of([c[0] + r, c[1] + r]);
        let r2 = r * r;
        for cy in y0..=y1 {
            for cx in x0..=x1 {
                for &i in &self.buckets[cy * self.nx + cx] {
                    let p = points[i as usize];
                    let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
                    if dx * dx + dy * dy <= r2 {
                        f(i as usize);
                    }
                }
            }
        }
    }
}

/// A probability density on a mesh.
///
/// Ball masses are evaluated on a weighted point cloud (the quadrature
/// points of the integration rule, or the atoms of a discrete measure); the
/// bounded-Lipschitz distance uses the density lumped to the mesh vertices.
#[derive(Debug, Clone)]
pub struct Density {
    mesh: Arc<Mesh>,
    cloud: Vec<Point>,
    cloud_mass: Vec<f64>,
    support: Vec<(Point, f64)>,
    index: PointIndex,
}

impl Density {
    fn build(mesh: Arc<Mesh>, cloud: Vec<Point>, cloud_mass: Vec<f64>, support: Vec<(Point, f64)>) -> Density {
        let index = PointIndex::new(&cloud);
        Density {
            mesh,
            cloud,
            cloud_mass,
            support,
            index,
        }
    }

    /// `e^u / ∫ e^u`.
    pub fn exp_of(space: &FeSpace, u: &[f64]) -> Density {
        let m = ExpMoments::new(space.mesh(), space.quad(), u, space.exec());
        let cloud = space.quad().iter().map(|q| q.pos).collect();
        let cloud_mass = m.point_mass.iter().map(|w| w / m.shifted_total).collect();
        let support = space
            .mesh()
            .vertices()
            .iter()
            .copied()
            .zip(m.normalized_load())
            .collect();
        Density::build(space.mesh_arc(), cloud, cloud_mass, support)
    }

    /// Nonnegative vertex values, normalized to unit integral.
    pub fn from_vertex_values(space: &FeSpace, f: &[f64]) -> Result<Density> {
        if f.len() != space.dim() {
            return Err(Error::Dimension {
                expected: space.dim(),
                got: f.len(),
            });
        }
        if f.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidArgument("density must be finite and nonnegative".into()));
        }
        let total = space.integral(f);
        if !(total > 0.0) {
            return Err(Error::EmptySupport);
        }
        let mesh = space.mesh();
        let cloud = space.quad().iter().map(|q| q.pos).collect();
        let cloud_mass = space
            .quad()
            .iter()
            .map(|q| q.weight * interpolate(mesh, f, q) / total)
            .collect();
        let lumped = space.mass().mul_vec(f);
        let support = mesh
            .vertices()
            .iter()
            .copied()
            .zip(lumped.into_iter().map(|m| m / total))
            .collect();
        Ok(Density::build(space.mesh_arc(), cloud, cloud_mass, support))
    }

    /// The discrete density of a barycenter measure.
    pub fn from_measure(mesh: Arc<Mesh>, measure: &BarycenterMeasure) -> Density {
        let support = measure.weighted_points();
        let cloud = support.iter().map(|a| a.0).collect();
        let cloud_mass = support.iter().map(|a| a.1).collect();
        Density::build(mesh, cloud, cloud_mass, support)
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> Arc<Mesh> {
        Arc::clone(&self.mesh)
    }

    /// Atoms used by [`super::bl_distance`].
    pub fn weighted_points(&self) -> &[(Point, f64)] {
        &self.support
    }

    pub fn cloud(&self) -> (&[Point], &[f64]) {
        (&self.cloud, &self.cloud_mass)
    }

    pub fn total_mass(&self) -> f64 {
        self.cloud_mass.iter().sum()
    }

    /// Mass of the closed ball `B_r(c)`.
    pub fn ball_mass(&self, c: Point, r: f64) -> f64 {
        let mut s = 0.0;
        self.index.for_each_in_ball(&self.cloud, c, r, |i| s += self.cloud_mass[i]);
        s
    }

    /// Indices of cloud points in `B_r(c)`.
    pub(crate) fn ball_members(&self, c: Point, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.index.for_each_in_ball(&self.cloud, c, r, |i| out.push(i));
        out
    }

    pub(crate) fn cloud_mass_at(&self, i: usize) -> f64 {
        self.cloud_mass[i]
    }

    pub(crate) fn cloud_len(&self) -> usize {
        self.cloud.len()
    }

    /// Mass of the union of the balls `B_r(c)`.
    pub fn union_mass(&self, centers: &[Point], r: f64) -> f64 {
        let mut hit = vec![false; self.cloud.len()];
        for &c in centers {
            self.index.for_each_in_ball(&self.cloud, c, r, |i| hit[i] = true);
        }
        hit.iter().zip(&self.cloud_mass).filter(|(h, _)| **h).map(|(_, m)| m).sum()
    }
}
