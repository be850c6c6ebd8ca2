//! Plain-text mesh format.
//!
//! ```text
//! # comment
//! V T
//! x y        (V lines)
//! i j k      (T lines, 0-based, counterclockwise)
//! ```

use std::fmt::Write as _;

use super::Mesh;
use crate::{Error, Result};

pub fn load_mesh(text: &str) -> Result<Mesh> {
    let mut lines = text.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("").trim();
        (!body.is_empty()).then_some((i + 1, body))
    });
    let parse_err = |line: usize, msg: String| Error::Parse { line, msg };

    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(0, "missing header".into()))?;
    let counts: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| parse_err(hline, format!("bad header: {e}")))?;
    let [nv, nt] = counts[..] else {
        return Err(parse_err(hline, "header must be `V T`".into()));
    };

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, body) = lines
            .next()
            .ok_or_else(|| parse_err(0, format!("expected {nv} vertex lines")))?;
        let xs: Vec<f64> = body
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(ln, format!("bad vertex: {e}")))?;
        match xs[..] {
            [x, y] if x.is_finite() && y.is_finite() => vertices.push([x, y]),
            _ => return Err(parse_err(ln, "vertex line must be `x y`".into())),
        }
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, body) = lines
            .next()
            .ok_or_else(|| parse_err(0, format!("expected {nt} triangle lines")))?;
        let ix: Vec<usize> = body
            .split_whitespace()
            .map(str::parse::<usize>)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(ln, format!("bad triangle: {e}")))?;
        match ix[..] {
            [i, j, k] => {
                if i.max(j).max(k) >= nv {
                    return Err(parse_err(ln, format!("vertex index out of range (V = {nv})")));
                }
                triangles.push([i, j, k]);
            }
            _ => return Err(parse_err(ln, "triangle line must be `i j k`".into())),
        }
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "trailing content".into()));
    }
    Mesh::new(vertices, triangles)
}

pub fn write_mesh(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} {}", mesh.num_vertices(), mesh.triangles().len());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{:?} {:?}", v[0], v[1]);
    }
    for t in mesh.triangles() {
        let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_with_two_triangles() {
        let m = load_mesh("# unit square\n4 2\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 2 3\n").unwrap();
        assert_eq!(m.area(), 1.0);
        assert_eq!(m.boundary_edges().len(), 4);
        assert_eq!(m.genus(), 0);
    }

    /// 3×3 block square with the centre cell removed: 16 vertices,
    /// 16 triangles, 32 edges, so V − E + F = 0 and the genus is 1.
    #[test]
    fn square_with_square_hole() {
        let mut text = String::from("16 16\n");
        for j in 0..4 {
            for i in 0..4 {
                text.push_str(&format!("{i} {j}\n"));
            }
        }
        for j in 0..3 {
            for i in 0..3 {
                if (i, j) == (1, 1) {
                    continue;
                }
                let v = |a: usize, b: usize| b * 4 + a;
                text.push_str(&format!("{} {} {}\n", v(i, j), v(i + 1, j), v(i + 1, j + 1)));
                text.push_str(&format!("{} {} {}\n", v(i, j), v(i + 1, j + 1), v(i, j + 1)));
            }
        }
        let m = load_mesh(&text).unwrap();
        assert_eq!(m.num_vertices(), 16);
        assert_eq!(m.num_edges(), 32);
        assert_eq!(m.euler_characteristic(), 0);
        assert_eq!(m.genus(), 1);
        assert_eq!(m.boundary_loops().len(), 2);
        assert_eq!(m.area(), 8.0);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match load_mesh("3 1\n0 0\n1 zero\n0 1\n0 1 2\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(load_mesh(""), Err(Error::Parse { .. })));
        assert!(matches!(
            load_mesh("3 1\n0 0\n1 0\n0 1\n0 1 7\n"),
            Err(Error::Parse { line: 5, .. })
        ));
    }

    #[test]
    fn inverted_triangle_is_reported() {
        assert!(matches!(
            load_mesh("3 1\n0 0\n1 0\n0 1\n0 2 1\n"),
            Err(Error::InvertedTriangle(0))
        ));
    }

    #[test]
    fn write_then_load_preserves_mesh() {
        let m = super::super::build_builtin(super::super::Builtin::Annulus, 24).unwrap();
        let back = load_mesh(&write_mesh(&m)).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.triangles(), m.triangles());
        assert_eq!(back.genus(), 1);
    }
}
