use std::collections::HashMap;
use std::f64::consts::PI;

use super::{signed_area, Builtin, Mesh, Point};
use crate::{Error, Result};

const MIN_RESOLUTION: usize = 4;

/// Builds one of the builtin domains.
///
/// * `UnitSquare`: structured `res × res` grid on `[0, 1]²`.
/// * `Disk`: inscribed regular `res`-gon of the unit disk, filled by
///   concentric rings.
/// * `Annulus`: radii `1/2` and `1` with `res` outer and `res/2` inner
///   boundary vertices.
///
/// Ring meshes are made Delaunay by edge flips.
pub fn build_builtin(kind: Builtin, resolution: usize) -> Result<Mesh> {
    let min = match kind {
        Builtin::Annulus => 8,
        _ => MIN_RESOLUTION,
    };
    if resolution < min {
        return Err(Error::ResolutionTooSmall {
            got: resolution,
            min,
        });
    }
    let (vertices, triangles) = match kind {
        Builtin::UnitSquare => unit_square(resolution),
        Builtin::Disk => disk(resolution),
        Builtin::Annulus => annulus(resolution),
    };
    let triangles = match kind {
        Builtin::UnitSquare => triangles,
        _ => delaunay_flips(&vertices, triangles),
    };
    Mesh::new(vertices, triangles)
}

fn unit_square(n: usize) -> (Vec<Point>, Vec<[usize; 3]>) {
    let h = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let x = if i == n { 1.0 } else { i as f64 * h };
            let y = if j == n { 1.0 } else { j as f64 * h };
            vertices.push([x, y]);
        }
    }
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v01, v11) = (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    (vertices, triangles)
}

fn ring(radius: f64, count: usize, offset: f64) -> Vec<(f64, Point)> {
    (0..count)
        .map(|k| {
            let theta = 2.0 * PI * (k as f64 + offset) / count as f64;
            (theta, [radius * theta.cos(), radius * theta.sin()])
        })
        .collect()
}

/// Triangulates the band between two concentric rings, given as vertex
/// indices with angles in `[0, 2π)` sorted ascending.
fn stitch(inner: &[(f64, usize)], outer: &[(f64, usize)], out: &mut Vec<[usize; 3]>) {
    let (ma, mb) = (inner.len(), outer.len());
    let a0 = inner[0].0;
    let start_b = (0..mb)
        .min_by(|&x, &y| {
            let dx = angle_gap(outer[x].0, a0);
            let dy = angle_gap(outer[y].0, a0);
            dx.total_cmp(&dy)
        })
        .unwrap_or(0);
    let a_ang = |i: usize| inner[i % ma].0 + 2.0 * PI * (i / ma) as f64;
    let b_base = outer[start_b].0;
    let mut b_start = b_base - a0;
    if b_start > PI {
        b_start -= 2.0 * PI;
    } else if b_start <= -PI {
        b_start += 2.0 * PI;
    }
    let b_start = a0 + b_start;
    let b_ang = |j: usize| {
        let k = (start_b + j) % mb;
        let mut t = b_start + (outer[k].0 - b_base).rem_euclid(2.0 * PI);
        if j == mb {
            t += 2.0 * PI;
        }
        t
    };
    let a_idx = |i: usize| inner[i % ma].1;
    let b_idx = |j: usize| outer[(start_b + j) % mb].1;
    let (mut i, mut j) = (0, 0);
    while i < ma || j < mb {
        let advance_a = if i == ma {
            false
        } else if j == mb {
            true
        } else {
            a_ang(i + 1) <= b_ang(j + 1)
        };
        if advance_a {
            out.push([a_idx(i), a_idx(i + 1), b_idx(j)]);
            i += 1;
        } else {
            out.push([a_idx(i), b_idx(j + 1), b_idx(j)]);
            j += 1;
        }
    }
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

fn push_ring(vertices: &mut Vec<Point>, pts: Vec<(f64, Point)>) -> Vec<(f64, usize)> {
    pts.into_iter()
        .map(|(theta, p)| {
            vertices.push(p);
            (theta.rem_euclid(2.0 * PI), vertices.len() - 1)
        })
        .collect()
}

fn orient(vertices: &[Point], triangles: &mut [[usize; 3]]) {
    for t in triangles {
        if signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]) < 0.0 {
            t.swap(1, 2);
        }
    }
}

fn disk(n: usize) -> (Vec<Point>, Vec<[usize; 3]>) {
    let rings = ((n as f64 / (2.0 * PI)).round() as usize).max(1);
    let mut vertices = vec![[0.0, 0.0]];
    let mut triangles = Vec::new();
    let mut prev: Option<Vec<(f64, usize)>> = None;
    for j in 1..=rings {
        let count = if j == rings {
            n
        } else {
            ((n as f64 * j as f64 / rings as f64).round() as usize).max(3)
        };
        let offset = if j == rings { 0.0 } else { 0.5 * (j % 2) as f64 };
        let mut cur = push_ring(&mut vertices, ring(j as f64 / rings as f64, count, offset));
        cur.sort_by(|a, b| a.0.total_cmp(&b.0));
        match &prev {
            None => {
                for k in 0..count {
                    triangles.push([0, cur[k].1, cur[(k + 1) % count].1]);
                }
            }
            Some(inner) => stitch(inner, &cur, &mut triangles),
        }
        prev = Some(cur);
    }
    orient(&vertices, &mut triangles);
    (vertices, triangles)
}

fn annulus(n: usize) -> (Vec<Point>, Vec<[usize; 3]>) {
    let (r_in, r_out) = (0.5, 1.0);
    let rings = (((r_out - r_in) * n as f64 / (2.0 * PI)).round() as usize).max(1);
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut prev: Option<Vec<(f64, usize)>> = None;
    for j in 0..=rings {
        let r = r_in + (r_out - r_in) * j as f64 / rings as f64;
        let count = if j == rings {
            n
        } else {
            ((n as f64 * r).round() as usize).max(3)
        };
        let offset = if j == rings { 0.0 } else { 0.5 * (j % 2) as f64 };
        let mut cur = push_ring(&mut vertices, ring(r, count, offset));
        cur.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(inner) = &prev {
            stitch(inner, &cur, &mut triangles);
        }
        prev = Some(cur);
    }
    orient(&vertices, &mut triangles);
    (vertices, triangles)
}

/// Lawson flips until every interior edge is locally Delaunay.
fn delaunay_flips(vertices: &[Point], mut triangles: Vec<[usize; 3]>) -> Vec<[usize; 3]> {
    for _ in 0..100 {
        let mut edge_tris: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                edge_tris.entry((a.min(b), a.max(b))).or_default().push(t);
            }
        }
        let mut touched = vec![false; triangles.len()];
        let mut flipped = 0;
        let mut keys: Vec<_> = edge_tris.keys().copied().collect();
        keys.sort_unstable();
        for (a, b) in keys {
            let ts = &edge_tris[&(a, b)];
            if ts.len() != 2 || touched[ts[0]] || touched[ts[1]] {
                continue;
            }
            let (t1, t2) = (ts[0], ts[1]);
            let c = opposite(&triangles[t1], a, b);
            let d = opposite(&triangles[t2], a, b);
            if in_circumcircle(vertices, &triangles[t1], vertices[d]) {
                let n1 = [c, d, b];
                let n2 = [d, c, a];
                let ok = |t: &[usize; 3]| {
                    signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]).abs() > 1e-14
                };
                if !(ok(&n1) && ok(&n2)) {
                    continue;
                }
                triangles[t1] = n1;
                triangles[t2] = n2;
                orient(vertices, &mut triangles[t1..=t1]);
                orient(vertices, &mut triangles[t2..=t2]);
                touched[t1] = true;
                touched[t2] = true;
                flipped += 1;
            }
        }
        if flipped == 0 {
            break;
        }
    }
    triangles
}

fn opposite(tri: &[usize; 3], a: usize, b: usize) -> usize {
    *tri.iter().find(|&&v| v != a && v != b).expect("triangle has a third vertex")
}

fn in_circumcircle(vertices: &[Point], tri: &[usize; 3], p: Point) -> bool {
    let [a, b, c] = tri.map(|v| vertices[v]);
    let (a, b, c) = if signed_area(a, b, c) > 0.0 { (a, b, c) } else { (a, c, b) };
    let m = |q: Point| [q[0] - p[0], q[1] - p[1], (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)];
    let (ra, rb, rc) = (m(a), m(b), m(c));
    let det = ra[0] * (rb[1] * rc[2] - rb[2] * rc[1]) - ra[1] * (rb[0] * rc[2] - rb[2] * rc[0])
        + ra[2] * (rb[0] * rc[1] - rb[1] * rc[0]);
    let scale = ra[2].max(rb[2]).max(rc[2]);
    det > 1e-12 * scale * scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_area_is_exact() {
        let m = build_builtin(Builtin::UnitSquare, 16).unwrap();
        assert_eq!(m.area(), 1.0);
        assert_eq!(m.genus(), 0);
        assert_eq!(m.boundary_edges().len(), 64);
    }

    #[test]
    fn disk_area_matches_inscribed_polygon() {
        let m = build_builtin(Builtin::Disk, 64).unwrap();
        let expected = 32.0 * (PI / 32.0).sin();
        assert!((m.area() - expected).abs() < 1e-12);
        assert!((m.area() - 3.13655).abs() < 1e-5);
        assert_eq!(m.boundary_edges().len(), 64);
        assert_eq!(m.genus(), 0);
    }

    #[test]
    fn annulus_has_genus_one() {
        let m = build_builtin(Builtin::Annulus, 64).unwrap();
        assert_eq!(m.genus(), 1);
        assert_eq!(m.boundary_loops().len(), 2);
        let outer = 32.0 * (PI / 32.0).sin();
        let inner = 0.25 * 16.0 * (PI / 16.0).sin();
        assert!((m.area() - (outer - inner)).abs() < 1e-12);
    }

    #[test]
    fn builtins_satisfy_quality_and_euler() {
        for kind in [Builtin::UnitSquare, Builtin::Disk, Builtin::Annulus] {
            for n in [8, 12, 17, 32, 64, 100, 128] {
                let m = build_builtin(kind, n).unwrap();
                assert!(
                    m.min_angle_degrees() >= 20.0,
                    "{kind} {n}: min angle {}",
                    m.min_angle_degrees()
                );
                let holes = 1 - m.euler_characteristic();
                assert_eq!(m.boundary_loops().len() as i64 - 1, holes);
            }
        }
    }

    #[test]
    fn disk_area_converges_monotonically() {
        let mut prev = f64::INFINITY;
        for n in [16, 32, 48, 64, 96, 128, 256] {
            let m = build_builtin(Builtin::Disk, n).unwrap();
            let err = PI - m.area();
            assert!(err > 0.0 && err < prev);
            if n >= 32 {
                assert!(err < PI * (2.0 * PI * PI / (n * n) as f64) * 1.1);
            }
            prev = err;
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            build_builtin(Builtin::Disk, 3),
            Err(Error::ResolutionTooSmall { .. })
        ));
        assert!("torus".parse::<Builtin>().is_err());
    }
}
