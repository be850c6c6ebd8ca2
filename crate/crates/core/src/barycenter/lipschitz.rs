use std::collections::HashMap;

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use crate::domain::{dist, Point};
use crate::{Error, Result};

/// Bounded-Lipschitz distance between two finite signed measures.
///
/// Computes `max Σ h_a (μ − ν)_a` over node values with `|h_a| ≤ 1` and
/// `|h_a − h_b| ≤ |p_a − p_b|`, by solving the dual transport problem:
/// surplus mass moves to deficit nodes at Euclidean cost or is created or
/// destroyed at unit cost.
pub fn bl_distance(mu: &[(Point, f64)], nu: &[(Point, f64)]) -> Result<f64> {
    if mu.is_empty() || nu.is_empty() {
        return Err(Error::EmptySupport);
    }
    let mut nodes: HashMap<(u64, u64), usize> = HashMap::new();
    let mut points: Vec<Point> = Vec::new();
    let mut net: Vec<f64> = Vec::new();
    for (list, sign) in [(mu, 1.0), (nu, -1.0)] {
        for &(p, m) in list {
            if !m.is_finite() || !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::InvalidArgument("non-finite atom".into()));
            }
            let key = (p[0].to_bits(), p[1].to_bits());
            let k = *nodes.entry(key).or_insert_with(|| {
                points.push(p);
                net.push(0.0);
                points.len() - 1
            });
            net[k] += sign * m;
        }
    }
    let scale = net.iter().fold(0.0f64, |a, m| a.max(m.abs()));
    let cut = 1e-15 * scale.max(f64::MIN_POSITIVE);
    let supply: Vec<usize> = (0..net.len()).filter(|&i| net[i] > cut).collect();
    let demand: Vec<usize> = (0..net.len()).filter(|&i| net[i] < -cut).collect();
    if supply.is_empty() && demand.is_empty() {
        return Ok(0.0);
    }
    // Each row of the transport problem gets one destroy/create slack.
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let slack_s: Vec<_> = supply.iter().map(|_| lp.add_var(1.0, (0.0, f64::INFINITY))).collect();
    let slack_d: Vec<_> = demand.iter().map(|_| lp.add_var(1.0, (0.0, f64::INFINITY))).collect();
    let mut rows_s: Vec<Vec<_>> = slack_s.iter().map(|&v| vec![(v, 1.0)]).collect();
    let mut rows_d: Vec<Vec<_>> = slack_d.iter().map(|&v| vec![(v, 1.0)]).collect();
    for (a, &i) in supply.iter().enumerate() {
        for (b, &j) in demand.iter().enumerate() {
            let c = dist(points[i], points[j]);
            // Routes longer than a destroy-create pair are never used.
            if c < 2.0 {
                let v = lp.add_var(c, (0.0, f64::INFINITY));
                rows_s[a].push((v, 1.0));
                rows_d[b].push((v, 1.0));
            }
        }
    }
    for (row, &i) in rows_s.into_iter().zip(&supply) {
        lp.add_constraint(row, ComparisonOp::Eq, net[i]);
    }
    for (row, &j) in rows_d.into_iter().zip(&demand) {
        lp.add_constraint(row, ComparisonOp::Eq, -net[j]);
    }
    let sol = lp.solve().map_err(|e| Error::Lp(e.to_string()))?;
    Ok(sol.objective().max(0.0))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Dense tableau simplex (Bland's rule) for `max cᵀx, Ax ≤ b, x ≥ 0, b ≥ 0`.
    pub(crate) fn simplex_max(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> f64 {
        let (m, n) = (a.len(), c.len());
        let width = n + m + 1;
        let mut t = vec![vec![0.0; width]; m + 1];
        for i in 0..m {
            t[i][..n].copy_from_slice(&a[i]);
            t[i][n + i] = 1.0;
            t[i][width - 1] = b[i];
        }
        for j in 0..n {
            t[m][j] = -c[j];
        }
        loop {
            let Some(col) = (0..width - 1).find(|&j| t[m][j] < -1e-12) else {
                return t[m][width - 1];
            };
            let mut row = None;
            let mut best = f64::INFINITY;
            for i in 0..m {
                if t[i][col] > 1e-12 {
                    let ratio = t[i][width - 1] / t[i][col];
                    if ratio < best - 1e-15 {
                        best = ratio;
                        row = Some(i);
                    }
                }
            }
            let r = row.expect("unbounded");
            let piv = t[r][col];
            for v in t[r].iter_mut() {
                *v /= piv;
            }
            for i in 0..=m {
                if i != r && t[i][col] != 0.0 {
                    let f = t[i][col];
                    for j in 0..width {
                        t[i][j] -= f * t[r][j];
                    }
                }
            }
        }
    }

    /// The Lipschitz-function program solved directly, with `g = h + 1 ∈ [0, 2]`.
    pub(crate) fn primal_oracle(mu: &[(Point, f64)], nu: &[(Point, f64)]) -> f64 {
        let mut pts: Vec<Point> = Vec::new();
        let mut m: Vec<f64> = Vec::new();
        for (list, s) in [(mu, 1.0), (nu, -1.0)] {
            for &(p, w) in list {
                match pts.iter().position(|q| *q == p) {
                    Some(k) => m[k] += s * w,
                    None => {
                        pts.push(p);
                        m.push(s * w);
                    }
                }
            }
        }
        let n = pts.len();
        let mut a = Vec::new();
        let mut b = Vec::new();
        for i in 0..n {
            let mut row = vec![0.0; n];
            row[i] = 1.0;
            a.push(row);
            b.push(2.0);
            for j in 0..n {
                if i != j {
                    let mut row = vec![0.0; n];
                    row[i] = 1.0;
                    row[j] = -1.0;
                    a.push(row);
                    b.push(dist(pts[i], pts[j]));
                }
            }
        }
        simplex_max(&a, &b, &m) - m.iter().sum::<f64>()
    }

    #[test]
    fn dirac_examples() {
        let x = [0.2, 0.3];
        assert_eq!(bl_distance(&[(x, 1.0)], &[(x, 1.0)]).unwrap(), 0.0);
        let d = bl_distance(&[(x, 1.0)], &[([0.3, 0.3], 1.0)]).unwrap();
        assert!((d - 0.1).abs() < 1e-9);
        let d = bl_distance(&[(x, 1.0)], &[([5.2, 0.3], 1.0)]).unwrap();
        assert!((d - 2.0).abs() < 1e-9);
        assert!(matches!(bl_distance(&[], &[(x, 1.0)]), Err(Error::EmptySupport)));
    }

    #[test]
    fn unequal_masses() {
        // Missing mass costs one per unit.
        let d = bl_distance(&[([0.0, 0.0], 1.0)], &[([0.0, 0.0], 0.25)]).unwrap();
        assert!((d - 0.75).abs() < 1e-9);
        let d = bl_distance(&[([0.0, 0.0], 0.5), ([1.0, 0.0], 0.5)], &[([0.5, 0.0], 0.3)]).unwrap();
        assert!((d - primal_oracle(&[([0.0, 0.0], 0.5), ([1.0, 0.0], 0.5)], &[([0.5, 0.0], 0.3)])).abs() < 1e-9);
    }

    fn atoms(max: usize) -> impl Strategy<Value = Vec<(Point, f64)>> {
        prop::collection::vec(((-1.5f64..1.5, -1.5f64..1.5), 0.01f64..1.0), 1..max)
            .prop_map(|v| v.into_iter().map(|((x, y), w)| ([x, y], w)).collect())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn matches_primal_program(mu in atoms(5), nu in atoms(5)) {
            let d = bl_distance(&mu, &nu).unwrap();
            let o = primal_oracle(&mu, &nu);
            prop_assert!((d - o).abs() < 1e-9, "{} vs {}", d, o);
        }

        #[test]
        fn symmetric(mu in atoms(6), nu in atoms(6)) {
            let a = bl_distance(&mu, &nu).unwrap();
            let b = bl_distance(&nu, &mu).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
