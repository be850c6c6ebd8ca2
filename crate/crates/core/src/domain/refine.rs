use std::collections::{HashMap, HashSet};

use super::{dist, Mesh, Point};
use crate::Result;

const MAX_PASSES: usize = 80;

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Rotates `t` so that its longest edge is `t[0]–t[1]`; ties go to the
/// lexicographically smallest edge key.
fn longest_first(v: &[Point], t: [usize; 3]) -> [usize; 3] {
    let mut best = 0;
    let mut best_len = -1.0;
    let mut best_key = (usize::MAX, usize::MAX);
    for k in 0..3 {
        let (a, b) = (t[k], t[(k + 1) % 3]);
        let len = dist(v[a], v[b]);
        if len > best_len || (len == best_len && key(a, b) < best_key) {
            best = k;
            best_len = len;
            best_key = key(a, b);
        }
    }
    [t[best], t[(best + 1) % 3], t[(best + 2) % 3]]
}

/// Conforming longest-edge bisection until `too_big` rejects no triangle.
///
/// New boundary vertices are edge midpoints, so the refined mesh covers the
/// same polygon.
pub fn refine(mesh: &Mesh, too_big: impl Fn([Point; 3]) -> bool) -> Result<Mesh> {
    let mut v = mesh.vertices().to_vec();
    let mut tris = mesh.triangles().to_vec();
    for _ in 0..MAX_PASSES {
        let mut marked: HashSet<(usize, usize)> = HashSet::new();
        for t in &tris {
            if too_big([v[t[0]], v[t[1]], v[t[2]]]) {
                let l = longest_first(&v, *t);
                marked.insert(key(l[0], l[1]));
            }
        }
        if marked.is_empty() {
            break;
        }
        loop {
            let mut changed = false;
            for t in &tris {
                let l = longest_first(&v, *t);
                let lk = key(l[0], l[1]);
                if !marked.contains(&lk) && (0..3).any(|k| marked.contains(&key(t[k], t[(k + 1) % 3]))) {
                    marked.insert(lk);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let mut keys: Vec<_> = marked.into_iter().collect();
        keys.sort_unstable();
        let mut mid: HashMap<(usize, usize), usize> = HashMap::with_capacity(keys.len());
        for (a, b) in keys {
            v.push([0.5 * (v[a][0] + v[b][0]), 0.5 * (v[a][1] + v[b][1])]);
            mid.insert((a, b), v.len() - 1);
        }
        let mut next = Vec::with_capacity(2 * tris.len());
        for t in &tris {
            let [p, q, r] = longest_first(&v, *t);
            let Some(&m) = mid.get(&key(p, q)) else {
                next.push(*t);
                continue;
            };
            match mid.get(&key(r, p)) {
                Some(&m2) => {
                    next.push([p, m, m2]);
                    next.push([m, r, m2]);
                }
                None => next.push([p, m, r]),
            }
            match mid.get(&key(q, r)) {
                Some(&m3) => {
                    next.push([m, q, m3]);
                    next.push([m, m3, r]);
                }
                None => next.push([m, q, r]),
            }
        }
        tris = next;
    }
    Mesh::new(v, tris)
}

/// Grades the mesh towards `points`: edge length at most
/// `max(h_min, grading · distance)`.
pub fn refine_near(mesh: &Mesh, points: &[Point], h_min: f64, grading: f64) -> Result<Mesh> {
    refine(mesh, |t| {
        let longest = dist(t[0], t[1]).max(dist(t[1], t[2])).max(dist(t[2], t[0]));
        let c = [(t[0][0] + t[1][0] + t[2][0]) / 3.0, (t[0][1] + t[1][1] + t[2][1]) / 3.0];
        let d = points
            .iter()
            .map(|p| (dist(*p, c) - longest).max(0.0))
            .fold(f64::INFINITY, f64::min);
        longest > h_min.max(grading * d)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_builtin, Builtin};

    #[test]
    fn uniform_refinement_preserves_area_and_topology() {
        let m = build_builtin(Builtin::Annulus, 16).unwrap();
        let r = refine(&m, |t| dist(t[0], t[1]).max(dist(t[1], t[2])).max(dist(t[2], t[0])) > 0.1).unwrap();
        assert!(r.min_edge_length() > 0.02);
        assert!((r.area() - m.area()).abs() < 1e-12);
        assert_eq!(r.genus(), 1);
        assert!(r.num_vertices() > m.num_vertices());
    }

    #[test]
    fn graded_refinement_reaches_target() {
        let m = build_builtin(Builtin::Disk, 32).unwrap();
        let r = refine_near(&m, &[[1.0, 0.0]], 1e-3, 0.3).unwrap();
        assert!((r.area() - m.area()).abs() < 1e-12);
        assert!(r.min_edge_length() <= 1e-3);
        assert!(r.num_vertices() < 20 * m.num_vertices(), "{}", r.num_vertices());
        assert!(r.min_angle_degrees() > 0.5 * m.min_angle_degrees() - 1e-9);
        assert!(r.boundary_vertex_flags().iter().filter(|b| **b).count() > 32);
    }
}
