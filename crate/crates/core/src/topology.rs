//! Index and homology arithmetic behind the existence criterion.
//!
//! For `4Kπ < ρ < 4(K+1)π`, `−λ_{I+1} < β < −λ_I` and
//! `−λ_{J+1} < β − ρ/|Ω| < −λ_J`, a nontrivial solution is guaranteed when
//! `2K + I ≠ J` (simply connected domains) or `(K, I) ≠ (0, J)` (domains with
//! holes). All binomials are exact integers.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::energy::Parameters;
use crate::spectrum::{bracket_index, resonance_tol};
use crate::{Error, Result};

/// Exact `C(n, k)`; `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k as u128 {
        acc = acc.checked_mul(n as u128 - k as u128 + i)? / i;
    }
    u64::try_from(acc).ok()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResonanceFlags {
    /// `ρ ∈ 4πℕ` (within tolerance).
    pub rho_quantized: bool,
    /// `β = −λ_i` for some `i`.
    pub beta_eigenvalue: bool,
    /// `β − ρ/|Ω| = −λ_i` for some `i`.
    pub shifted_eigenvalue: bool,
    /// `ρ ≤ 0`: outside the range covered by the criterion.
    pub out_of_theorem: bool,
}

impl ResonanceFlags {
    pub fn any(&self) -> bool {
        self.rho_quantized || self.beta_eigenvalue || self.shifted_eigenvalue || self.out_of_theorem
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Indices {
    pub k: usize,
    pub i: usize,
    pub j: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    GuaranteedNontrivial,
    NotGuaranteed,
    Degenerate,
}

/// `K = ⌊ρ/4π⌋`, or the resonance flags when `ρ` is quantized or nonpositive.
pub fn rho_index(rho: f64) -> std::result::Result<usize, ResonanceFlags> {
    let mut flags = ResonanceFlags::default();
    if !(rho > 0.0) {
        flags.out_of_theorem = true;
        return Err(flags);
    }
    let k = (rho / (4.0 * PI)).floor();
    let tol = resonance_tol(rho);
    if (rho - 4.0 * PI * k).abs() < tol || (rho - 4.0 * PI * (k + 1.0)).abs() < tol {
        flags.rho_quantized = true;
        return Err(flags);
    }
    Ok(k as usize)
}

fn classify(flags: &mut ResonanceFlags, res: Result<usize>, shifted: bool) -> Result<Option<usize>> {
    match res {
        Ok(v) => Ok(Some(v)),
        Err(Error::Resonance { .. }) => {
            if shifted {
                flags.shifted_eigenvalue = true;
            } else {
                flags.beta_eigenvalue = true;
            }
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// `(K, I, J)` for the given parameters; resonances are collected into
/// [`Error::Degenerate`].
pub fn indices(p: Parameters, area: f64, eigenvalues: &[f64]) -> Result<Indices> {
    let (k, mut flags) = match rho_index(p.rho) {
        Ok(k) => (Some(k), ResonanceFlags::default()),
        Err(f) => (None, f),
    };
    let i = classify(&mut flags, bracket_index(eigenvalues, p.beta), false)?;
    let j = classify(
        &mut flags,
        bracket_index(eigenvalues, p.trivial_shift(area)),
        true,
    )?;
    match (k, i, j) {
        (Some(k), Some(i), Some(j)) => Ok(Indices { k, i, j }),
        _ => Err(Error::Degenerate(flags)),
    }
}

pub fn existence_verdict(k: usize, i: usize, j: usize, genus: usize) -> Verdict {
    let guaranteed = if genus == 0 {
        2 * k + i != j
    } else {
        (k, i) != (0, j)
    };
    if guaranteed {
        Verdict::GuaranteedNontrivial
    } else {
        Verdict::NotGuaranteed
    }
}

/// Degree `2K + I − 1` and rank `C(K + g, g)` of the only nonzero reduced
/// homology group of the join of the barycenter space with `S^{I−1}`.
pub fn homology_rank(k: usize, i: usize, genus: usize) -> Result<(i64, u64)> {
    if k == 0 && i == 0 {
        return Err(Error::EmptySublevel);
    }
    let degree = 2 * k as i64 + i as i64 - 1;
    let rank = binomial((k + genus) as u64, genus as u64)
        .ok_or_else(|| Error::InvalidArgument("binomial overflow".into()))?;
    Ok((degree, rank))
}

/// Rank of `H̃_q` of the barycenters of order `K` of `g` disjoint circles:
/// `C(g + q − K + 1, g) · C(g, 2K − q − 1)` for
/// `max(K − 1, 2K − g − 1) ≤ q ≤ 2K − 1`, zero otherwise.
pub fn boundary_barycenter_homology(q: i64, k: u64, circles: u64) -> u64 {
    let (k, g) = (k as i64, circles as i64);
    let lo = (k - 1).max(2 * k - g - 1);
    if q < lo || q > 2 * k - 1 {
        return 0;
    }
    let a = binomial((g + q - k + 1) as u64, g as u64).unwrap_or(0);
    let b = binomial(g as u64, (2 * k - q - 1) as u64).unwrap_or(0);
    a * b
}

/// `χ` of the barycenter space of order `K ≥ 2`:
/// `1 − (1/n!) Π_{k=1}^{n} (k − χ(Ω))` with `n = ⌊K/2⌋` and `χ(Ω) = 1 − g`.
pub fn euler_characteristic(k: usize, genus: usize) -> Result<i64> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need K ≥ 2, got {k}")));
    }
    let n = (k / 2) as i128;
    let chi_omega = 1 - genus as i128;
    let mut num: i128 = 1;
    let mut fact: i128 = 1;
    for j in 1..=n {
        num = num
            .checked_mul(j - chi_omega)
            .ok_or_else(|| Error::InvalidArgument("overflow".into()))?;
        fact *= j;
    }
    Ok((1 - num / fact) as i64)
}

/// Morse index of `u ≡ 0`: the number of `i` with `λ_i + β − ρ/|Ω| < 0`.
pub fn trivial_morse_index(p: Parameters, area: f64, eigenvalues: &[f64]) -> Result<usize> {
    bracket_index(eigenvalues, p.trivial_shift(area))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub beta: f64,
    pub rho: f64,
    pub area: f64,
    pub genus: usize,
    pub k: Option<usize>,
    pub i: Option<usize>,
    pub j: Option<usize>,
    pub resonant: ResonanceFlags,
    pub verdict: Verdict,
    /// `K = I = 0`: the functional is coercive and the low sublevel is empty.
    pub coercive: bool,
    pub homology_degree: Option<i64>,
    pub homology_rank: Option<u64>,
}

impl ConditionReport {
    pub fn evaluate(p: Parameters, area: f64, genus: usize, eigenvalues: &[f64]) -> Result<Self> {
        let mut report = ConditionReport {
            beta: p.beta,
            rho: p.rho,
            area,
            genus,
            k: None,
            i: None,
            j: None,
            resonant: ResonanceFlags::default(),
            verdict: Verdict::Degenerate,
            coercive: false,
            homology_degree: None,
            homology_rank: None,
        };
        match indices(p, area, eigenvalues) {
            Ok(ix) => {
                report.k = Some(ix.k);
                report.i = Some(ix.i);
                report.j = Some(ix.j);
                report.verdict = existence_verdict(ix.k, ix.i, ix.j, genus);
                match homology_rank(ix.k, ix.i, genus) {
                    Ok((d, r)) => {
                        report.homology_degree = Some(d);
                        report.homology_rank = Some(r);
                    }
                    Err(Error::EmptySublevel) => report.coercive = true,
                    Err(e) => return Err(e),
                }
            }
            Err(Error::Degenerate(flags)) => {
                report.resonant = flags;
                report.k = rho_index(p.rho).ok();
                report.i = bracket_index(eigenvalues, p.beta).ok();
                report.j = bracket_index(eigenvalues, p.trivial_shift(area)).ok();
            }
            Err(e) => return Err(e),
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), Some(10));
        assert_eq!(binomial(0, 0), Some(1));
        assert_eq!(binomial(3, 5), Some(0));
        assert_eq!(binomial(60, 30), Some(118264581564861424));
    }

    #[test]
    fn rho_index_examples() {
        assert_eq!(rho_index(13.0), Ok(1));
        assert_eq!(rho_index(1.0), Ok(0));
        assert!(rho_index(12.566370614).unwrap_err().rho_quantized);
        assert!(rho_index(-1.0).unwrap_err().out_of_theorem);
        assert!(rho_index(0.0).unwrap_err().out_of_theorem);
    }

    #[test]
    fn disk_indices() {
        let area = 3.1366;
        let l = [3.390, 3.390, 9.328, 9.328, 14.68];
        let ix = indices(Parameters::new(-5.0, 13.0), area, &l).unwrap();
        assert_eq!(ix, Indices { k: 1, i: 2, j: 2 });
        assert_eq!(
            existence_verdict(ix.k, ix.i, ix.j, 0),
            Verdict::GuaranteedNontrivial
        );
        assert_eq!(trivial_morse_index(Parameters::new(-5.0, 13.0), area, &l).unwrap(), 2);
    }

    #[test]
    fn square_coercive() {
        let l = [9.87, 9.87, 19.74];
        let ix = indices(Parameters::new(1.0, 1.0), 1.0, &l).unwrap();
        assert_eq!(ix, Indices { k: 0, i: 0, j: 0 });
        let r = ConditionReport::evaluate(Parameters::new(1.0, 1.0), 1.0, 0, &l).unwrap();
        assert_eq!(r.verdict, Verdict::NotGuaranteed);
        assert!(r.coercive);
    }

    #[test]
    fn degenerate_report_sets_flags() {
        let l = [9.87, 9.87, 19.74, 39.48, 39.48];
        let r = ConditionReport::evaluate(Parameters::new(-9.87, 4.0 * PI), 1.0, 0, &l).unwrap();
        assert_eq!(r.verdict, Verdict::Degenerate);
        assert!(r.resonant.rho_quantized && r.resonant.beta_eigenvalue);
    }

    #[test]
    fn verdict_examples() {
        assert_eq!(existence_verdict(1, 2, 2, 0), Verdict::GuaranteedNontrivial);
        assert_eq!(existence_verdict(0, 0, 0, 0), Verdict::NotGuaranteed);
        assert_eq!(existence_verdict(1, 0, 2, 1), Verdict::GuaranteedNontrivial);
        assert_eq!(existence_verdict(0, 2, 2, 1), Verdict::NotGuaranteed);
    }

    #[test]
    fn homology_examples() {
        assert_eq!(homology_rank(2, 1, 0).unwrap(), (4, 1));
        assert_eq!(homology_rank(1, 0, 2).unwrap(), (1, 3));
        for g in 0..4 {
            assert_eq!(homology_rank(0, 3, g).unwrap(), (2, 1));
        }
        assert!(matches!(homology_rank(0, 0, 1), Err(Error::EmptySublevel)));
    }

    #[test]
    fn boundary_homology_examples() {
        for k in 1..5u64 {
            for g in 1..4u64 {
                assert_eq!(
                    boundary_barycenter_homology(2 * k as i64 - 1, k, g),
                    binomial(k + g, g).unwrap()
                );
                assert_eq!(boundary_barycenter_homology(2 * k as i64, k, g), 0);
            }
        }
        assert_eq!(boundary_barycenter_homology(2, 2, 1), 2);
    }

    #[test]
    fn euler_examples() {
        assert_eq!(euler_characteristic(3, 1).unwrap(), 0);
        assert_eq!(euler_characteristic(4, 2).unwrap(), -2);
        assert_eq!(euler_characteristic(2, 0).unwrap(), 1);
        assert!(euler_characteristic(1, 0).is_err());
    }
}
