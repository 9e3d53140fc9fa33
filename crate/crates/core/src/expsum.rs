//! Weyl sums of polynomial phases, exact discrepancy of `{g(n)/m}`, and the
//! Erdős–Turán and Weyl-bound checkers.

use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::mulmod64;
use crate::error::{domain, Result};
use crate::modpoly;
use crate::polynomial::IntPolynomial;

/// `η(k)`: `2^{1-k}` for `2 <= k <= 5`, `1/(k(k-1))` beyond.
pub fn eta(k: u32) -> Result<Ratio<u64>> {
    match k {
        0 | 1 => domain("η(k) needs k >= 2"),
        2..=5 => Ok(Ratio::new(1, 1 << (k - 1))),
        _ => Ok(Ratio::new(1, k as u64 * (k as u64 - 1))),
    }
}

pub fn eta_f64(k: u32) -> Result<f64> {
    let e = eta(k)?;
    Ok(*e.numer() as f64 / *e.denom() as f64)
}

/// Points `r_n / m` with integer numerators `0 <= r_n < m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PointSet {
    pub m: u64,
    pub numerators: Vec<u64>,
}

impl PointSet {
    pub fn new(m: u64, numerators: Vec<u64>) -> Result<Self> {
        if m == 0 {
            return domain("denominator must be positive");
        }
        if numerators.iter().any(|&r| r >= m) {
            return domain("numerators must lie in [0, m)");
        }
        Ok(PointSet { m, numerators })
    }

    /// `{g(n)/m}` for `1 <= n <= N`.
    pub fn from_polynomial(g: &IntPolynomial, m: u64, n_max: u64) -> Result<Self> {
        let gm = g.reduce_mod(m)?;
        let numerators = (1..=n_max).map(|n| modpoly::eval(&gm, n % m, m)).collect();
        PointSet::new(m, numerators)
    }

    pub fn len(&self) -> usize {
        self.numerators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.numerators.is_empty()
    }
}

/// `sup_{α ∈ [0,1)} |#{ξ_n <= α} - αN|`, exactly.
///
/// Between consecutive point values the count is constant, so the supremum is
/// attained at a point value or approached from its left.
pub fn discrepancy_exact(points: &PointSet) -> Result<Ratio<i128>> {
    let n = points.len() as i128;
    if n == 0 {
        return domain("empty point set");
    }
    let m = points.m as i128;
    let mut sorted = points.numerators.clone();
    sorted.sort_unstable();
    let mut best = 0i128;
    let mut below = 0i128;
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == v {
            j += 1;
        }
        let target = v as i128 * n;
        // Scaled by m: count·m - v·N.
        best = best.max((below * m - target).abs());
        below = j as i128;
        best = best.max((below * m - target).abs());
        i = j;
    }
    Ok(Ratio::new(best, m))
}

fn pairwise_sum(terms: &[Complex64]) -> Complex64 {
    if terms.len() <= 8 {
        return terms.iter().fold(Complex64::new(0.0, 0.0), |a, &b| a + b);
    }
    let mid = terms.len() / 2;
    pairwise_sum(&terms[..mid]) + pairwise_sum(&terms[mid..])
}

/// `∑_{n <= N} e(h g(n) / m)`.
pub fn weyl_sum(g: &IntPolynomial, m: u64, h: i64, n_max: u64) -> Result<Complex64> {
    if m == 0 {
        return domain("modulus must be positive");
    }
    let gm = g.reduce_mod(m)?;
    let hm = (h as i128).rem_euclid(m as i128) as u64;
    let terms: Vec<Complex64> = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let r = mulmod64(hm, modpoly::eval(&gm, n % m, m), m);
            let theta = std::f64::consts::TAU * (r as f64 / m as f64);
            Complex64::new(theta.cos(), theta.sin())
        })
        .collect();
    Ok(pairwise_sum(&terms))
}

/// `N/L + ∑_{h <= L} |S_h| / h`.
pub fn erdos_turan_rhs(g: &IntPolynomial, m: u64, n_max: u64, l: u64) -> Result<f64> {
    if l == 0 {
        return domain("L must be positive");
    }
    let mags = (1..=l)
        .into_par_iter()
        .map(|h| Ok(weyl_sum(g, m, h as i64, n_max)?.norm() / h as f64))
        .collect::<Result<Vec<f64>>>()?;
    Ok(n_max as f64 / l as f64 + mags.into_iter().sum::<f64>())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeylReport {
    pub lhs: f64,
    pub rhs_core: f64,
    pub ratio: f64,
}

/// `|S_h|` against `N (gcd(h,m)/m + 1/N + m/(gcd(h,m) N^k))^{η(k)}`.
pub fn check_weyl_bound(g: &IntPolynomial, m: u64, h: i64, n_max: u64) -> Result<WeylReport> {
    let k = match g.degree() {
        Some(k) if k >= 2 => k as u32,
        _ => return domain("degree must be at least 2"),
    };
    if n_max == 0 {
        return domain("N must be positive");
    }
    let lhs = weyl_sum(g, m, h, n_max)?.norm();
    let d = (h.unsigned_abs() % m).gcd(&m) as f64;
    let (mf, nf) = (m as f64, n_max as f64);
    let inner = d / mf + 1.0 / nf + mf / (d * nf.powi(k as i32));
    let rhs_core = nf * inner.powf(eta_f64(k)?);
    Ok(WeylReport { lhs, rhs_core, ratio: lhs / rhs_core })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(c: &[i64]) -> IntPolynomial {
        IntPolynomial::from_i64(c)
    }

    #[test]
    fn eta_values() {
        assert_eq!(eta(2).unwrap(), Ratio::new(1, 2));
        assert_eq!(eta(5).unwrap(), Ratio::new(1, 16));
        assert_eq!(eta(6).unwrap(), Ratio::new(1, 30));
        assert_eq!(eta(10).unwrap(), Ratio::new(1, 90));
        assert!(eta(1).is_err());
    }

    #[test]
    fn weyl_examples() {
        let s = weyl_sum(&p(&[0, 0, 3, 1]), 7, 14, 9).unwrap();
        assert_eq!((s.re, s.im), (9.0, 0.0));
        let s = weyl_sum(&p(&[0, 1]), 4, 1, 4).unwrap();
        assert!(s.norm() < 1e-12);
        let s = weyl_sum(&p(&[0, 0, 1]), 5, 1, 5).unwrap();
        assert!((s.norm() - 5f64.sqrt()).abs() <= 1e-9);
        let s = weyl_sum(&p(&[0, 0, 1]), 101, -3, 101).unwrap();
        assert!((s.norm() - 101f64.sqrt()).abs() <= 1e-9);
    }

    #[test]
    fn discrepancy_examples() {
        let d = |m: u64, v: Vec<u64>| discrepancy_exact(&PointSet::new(m, v).unwrap()).unwrap();
        assert_eq!(d(1, vec![0]), Ratio::from_integer(1));
        assert_eq!(d(7, (0..7).collect()), Ratio::from_integer(1));
        assert_eq!(d(2, vec![1, 1, 1, 1]), Ratio::from_integer(2));
        // One point at 3/4: sup approached as α ↑ 3/4.
        assert_eq!(d(4, vec![3]), Ratio::new(3, 4));
    }

    #[test]
    fn erdos_turan_single_term() {
        let g = p(&[0, 0, 1]);
        let s1 = weyl_sum(&g, 11, 1, 20).unwrap().norm();
        assert!((erdos_turan_rhs(&g, 11, 20, 1).unwrap() - (20.0 + s1)).abs() < 1e-12);
        // Points n/1009 for n <= 50 crowd into [0, 0.05): both sides are large.
        let g = p(&[0, 1]);
        let rhs = erdos_turan_rhs(&g, 1009, 50, 50).unwrap();
        let disc = discrepancy_exact(&PointSet::from_polynomial(&g, 1009, 50).unwrap()).unwrap();
        let disc = *disc.numer() as f64 / *disc.denom() as f64;
        assert!(disc > 40.0 && disc <= 10.0 * rhs);
    }

    #[test]
    fn weyl_bound_reports() {
        let r = check_weyl_bound(&p(&[0, 0, 1]), 13, 26, 40).unwrap();
        assert_eq!(r.lhs, 40.0);
        assert!(r.rhs_core >= 40.0);
        let r = check_weyl_bound(&p(&[0, 0, 1]), 101, 1, 101).unwrap();
        assert!((r.lhs - 101f64.sqrt()).abs() < 1e-9);
        assert!(check_weyl_bound(&p(&[0, 1]), 5, 1, 5).is_err());
    }

    /// Dense-grid supremum with grid step dividing every point spacing.
    fn grid_discrepancy(points: &PointSet, grid: u64) -> f64 {
        let n = points.len() as f64;
        (0..grid)
            .map(|j| {
                let count = points.numerators.iter().filter(|&&r| r * grid <= j * points.m).count();
                (count as f64 - j as f64 / grid as f64 * n).abs()
            })
            .fold(0.0, f64::max)
    }

    proptest! {
        #[test]
        fn weyl_sum_bounded(c in prop::collection::vec(-50i64..50, 1..5), m in 1u64..500, h in -100i64..100, n in 0u64..300) {
            let s = weyl_sum(&p(&c), m, h, n).unwrap();
            prop_assert!(s.norm() <= n as f64 * (1.0 + 1e-12));
        }

        #[test]
        fn discrepancy_matches_grid(c in prop::collection::vec(-30i64..30, 1..4), mi in 0usize..6, n in 1u64..120) {
            let m = [8u64, 10, 16, 25, 50, 100][mi];
            let pts = PointSet::from_polynomial(&p(&c), m, n).unwrap();
            let exact = discrepancy_exact(&pts).unwrap();
            let exact = *exact.numer() as f64 / *exact.denom() as f64;
            let grid = grid_discrepancy(&pts, 400);
            prop_assert!((exact - grid).abs() <= n as f64 / 400.0 + 1e-9, "{} vs {}", exact, grid);
            prop_assert!(exact <= n as f64);
        }
    }
}
