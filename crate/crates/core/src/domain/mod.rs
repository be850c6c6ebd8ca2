//! Triangulated planar domains with Neumann boundary.
//!
//! A [`Mesh`] is validated on construction: counterclockwise non-degenerate
//! triangles, manifold edges, a connected domain and boundary loops matching
//! the Euler characteristic. The genus is the number of holes, so
//! `genus = 1 − (V − E + F)` and there are `genus + 1` boundary loops.

mod builtin;
mod io;
mod locate;
mod refine;

use std::collections::HashMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use builtin::build_builtin;
pub use io::{load_mesh, write_mesh};
pub use refine::{refine, refine_near};
use locate::TriangleGrid;

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    UnitSquare,
    Disk,
    Annulus,
}

impl FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit_square" | "square" => Ok(Builtin::UnitSquare),
            "disk" => Ok(Builtin::Disk),
            "annulus" => Ok(Builtin::Annulus),
            other => Err(Error::UnsupportedDomain(other.to_string())),
        }
    }
}

impl std::fmt::Display for Builtin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Builtin::UnitSquare => "unit_square",
            Builtin::Disk => "disk",
            Builtin::Annulus => "annulus",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<[usize; 2]>,
    boundary_flags: Vec<bool>,
    boundary_loops: Vec<Vec<usize>>,
    tri_areas: Vec<f64>,
    area: f64,
    genus: usize,
    edge_count: usize,
    min_edge: f64,
    diameter: f64,
    neighbors: Vec<Vec<usize>>,
    grid: TriangleGrid,
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Distance from `p` to the segment `[a, b]` and the closest point on it.
pub(crate) fn segment_projection(p: Point, a: Point, b: Point) -> (f64, Point) {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let s = if len2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [a[0] + s * d[0], a[1] + s * d[1]];
    (dist(p, q), q)
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

impl Mesh {
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Mesh> {
        let nv = vertices.len();
        if nv < 3 || triangles.is_empty() {
            return Err(Error::InvalidMesh("need at least one triangle".into()));
        }
        let scale = bbox_diagonal(&vertices).max(f64::MIN_POSITIVE);
        let mut used = vec![false; nv];
        let mut tri_areas = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= nv {
                    return Err(Error::InvalidMesh(format!(
                        "triangle {t} references vertex {v} (only {nv} vertices)"
                    )));
                }
                used[v] = true;
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvertedTriangle(t));
            }
            let a = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if !(a > 1e-14 * scale * scale) {
                return Err(Error::InvertedTriangle(t));
            }
            tri_areas.push(a);
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::InvalidMesh(format!("vertex {v} is not used by any triangle")));
        }

        // Undirected edge -> directed occurrences.
        let mut edges: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        for tri in &triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                edges.entry((a.min(b), a.max(b))).or_default().push((a, b));
            }
        }
        let mut boundary_edges = Vec::new();
        for (&(lo, hi), occ) in &edges {
            match occ.len() {
                1 => boundary_edges.push([occ[0].0, occ[0].1]),
                2 => {
                    if occ[0] == occ[1] {
                        return Err(Error::InvalidMesh(format!(
                            "edge ({lo}, {hi}) has inconsistent orientation"
                        )));
                    }
                }
                _ => return Err(Error::NonManifoldEdge(lo, hi)),
            }
        }
        boundary_edges.sort_unstable();

        let mut next: HashMap<usize, usize> = HashMap::new();
        for e in &boundary_edges {
            if next.insert(e[0], e[1]).is_some() {
                return Err(Error::PinchedVertex(e[0]));
            }
        }
        let mut boundary_flags = vec![false; nv];
        for e in &boundary_edges {
            boundary_flags[e[0]] = true;
            boundary_flags[e[1]] = true;
        }
        let mut visited: HashMap<usize, bool> = HashMap::new();
        let mut boundary_loops = Vec::new();
        for e in &boundary_edges {
            if visited.contains_key(&e[0]) {
                continue;
            }
            let start = e[0];
            let mut lp = vec![start];
            visited.insert(start, true);
            let mut cur = next[&start];
            while cur != start {
                if visited.insert(cur, true).is_some() {
                    return Err(Error::PinchedVertex(cur));
                }
                lp.push(cur);
                cur = *next
                    .get(&cur)
                    .ok_or_else(|| Error::InvalidMesh("open boundary chain".into()))?;
            }
            boundary_loops.push(lp);
        }

        // Connectivity over triangle edges.
        let mut parent: Vec<usize> = (0..nv).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(a, b) in edges.keys() {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        }
        let root = find(&mut parent, 0);
        if (0..nv).any(|v| find(&mut parent, v) != root) {
            return Err(Error::Disconnected);
        }

        let chi = nv as i64 - edges.len() as i64 + triangles.len() as i64;
        let genus = 1 - chi;
        if genus < 0 || boundary_loops.len() as i64 != genus + 1 {
            return Err(Error::InvalidMesh(format!(
                "Euler characteristic {chi} does not match {} boundary loops",
                boundary_loops.len()
            )));
        }

        let mut neighbors = vec![Vec::new(); nv];
        for &(a, b) in edges.keys() {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for n in &mut neighbors {
            n.sort_unstable();
        }
        let min_edge = edges
            .keys()
            .map(|&(a, b)| dist(vertices[a], vertices[b]))
            .fold(f64::INFINITY, f64::min);
        let mut diameter: f64 = 0.0;
        for e1 in &boundary_edges {
            for e2 in &boundary_edges {
                diameter = diameter.max(dist(vertices[e1[0]], vertices[e2[0]]));
            }
        }
        let area = compensated_sum(tri_areas.iter().copied());
        let grid = TriangleGrid::new(&vertices, &triangles);

        Ok(Mesh {
            vertices,
            triangles,
            boundary_edges,
            boundary_flags,
            boundary_loops,
            tri_areas,
            area,
            genus: genus as usize,
            edge_count: edges.len(),
            min_edge,
            diameter,
            neighbors,
            grid,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Boundary edges, oriented so that the domain lies on their left.
    pub fn boundary_edges(&self) -> &[[usize; 2]] {
        &self.boundary_edges
    }

    pub fn boundary_vertex_flags(&self) -> &[bool] {
        &self.boundary_flags
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_flags[v]
    }

    pub fn boundary_loops(&self) -> &[Vec<usize>] {
        &self.boundary_loops
    }

    pub fn triangle_areas(&self) -> &[f64] {
        &self.tri_areas
    }

    /// |Ω|.
    pub fn area(&self) -> f64 {
        self.area
    }

    /// Number of holes.
    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edge_count
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_count as i64 + self.triangles.len() as i64
    }

    pub fn min_edge_length(&self) -> f64 {
        self.min_edge
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_degrees(&self) -> f64 {
        let mut best = 180.0f64;
        for tri in &self.triangles {
            for k in 0..3 {
                let a = self.vertices[tri[k]];
                let b = self.vertices[tri[(k + 1) % 3]];
                let c = self.vertices[tri[(k + 2) % 3]];
                let u = [b[0] - a[0], b[1] - a[1]];
                let w = [c[0] - a[0], c[1] - a[1]];
                let cos = (u[0] * w[0] + u[1] * w[1]) / (u[0].hypot(u[1]) * w[0].hypot(w[1]));
                best = best.min(cos.clamp(-1.0, 1.0).acos().to_degrees());
            }
        }
        best
    }

    /// Triangle containing `p` and its barycentric coordinates, if any.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        let tol = 1e-10;
        self.grid.candidates(p).find_map(|t| {
            let [i, j, k] = self.triangles[t];
            let (a, b, c) = (self.vertices[i], self.vertices[j], self.vertices[k]);
            let area = self.tri_areas[t];
            let l0 = signed_area(p, b, c) / area;
            let l1 = signed_area(a, p, c) / area;
            let l2 = 1.0 - l0 - l1;
            (l0 >= -tol && l1 >= -tol && l2 >= -tol).then_some((t, [l0, l1, l2]))
        })
    }

    /// Whether `p` lies in the closure of the meshed domain.
    pub fn contains(&self, p: Point) -> bool {
        self.locate(p).is_some()
    }

    /// Closest boundary point to `p` and its distance (no containment check).
    pub fn nearest_boundary_point(&self, p: Point) -> (f64, Point) {
        self.boundary_edges
            .iter()
            .map(|e| segment_projection(p, self.vertices[e[0]], self.vertices[e[1]]))
            .fold((f64::INFINITY, p), |best, cur| if cur.0 < best.0 { cur } else { best })
    }

    /// Distance from `p` to ∂Ω for `p` in the closed domain.
    pub fn boundary_distance(&self, p: Point) -> Result<f64> {
        if !self.contains(p) {
            return Err(Error::OutsideDomain(p[0], p[1]));
        }
        Ok(self.nearest_boundary_point(p).0)
    }

    /// Linear interpolation of vertex values at `p`, if `p` is in the domain.
    pub fn interpolate(&self, values: &[f64], p: Point) -> Option<f64> {
        self.locate(p).map(|(t, l)| {
            let tri = self.triangles[t];
            l[0] * values[tri[0]] + l[1] * values[tri[1]] + l[2] * values[tri[2]]
        })
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        bbox(&self.vertices)
    }
}

fn bbox(vertices: &[Point]) -> (Point, Point) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for v in vertices {
        for d in 0..2 {
            lo[d] = lo[d].min(v[d]);
            hi[d] = hi[d].max(v[d]);
        }
    }
    (lo, hi)
}

fn bbox_diagonal(vertices: &[Point]) -> f64 {
    let (lo, hi) = bbox(vertices);
    dist(lo, hi)
}
