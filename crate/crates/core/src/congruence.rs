//! Exact counts of congruence solutions over coefficient boxes:
//! `U_k(m, H, N)` over primitive vectors `(a_0, ..., a_k)` and
//! `W_g(m, H, N)` over shifts `a + g`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{self, invmod64, mulmod64, ratio_string};
use crate::error::{domain, Error, Result};
use crate::expsum::{discrepancy_exact, PointSet};
use crate::modpoly;
use crate::polynomial::IntPolynomial;

/// Upper limit on `k · m² · min(m, N)` for [`count_u`].
pub const U_WORK_BUDGET: u128 = 4_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CongruenceCount {
    pub m: u64,
    #[serde(rename = "H")]
    pub h: u64,
    #[serde(rename = "N")]
    pub n: u64,
    pub value: u128,
    #[serde(serialize_with = "ratio_string")]
    pub main_term: Ratio<i128>,
    #[serde(serialize_with = "ratio_string")]
    pub residual: Ratio<i128>,
}

impl CongruenceCount {
    fn new(m: u64, h: u64, n: u64, value: u128, family: u128) -> Self {
        let main_term = Ratio::new(family as i128 * n as i128, m as i128);
        let residual = Ratio::from_integer(value as i128) - main_term;
        CongruenceCount { m, h, n, value, main_term, residual }
    }
}

/// `#{x ∈ [lo, hi] : x ≡ c (mod q)}`.
fn count_in_class(lo: i128, hi: i128, c: i128, q: i128) -> i128 {
    if hi < lo {
        return 0;
    }
    Integer::div_floor(&(hi - c), &q) - Integer::div_floor(&(lo - 1 - c), &q)
}

/// Squarefree divisors of `g >= 1` with their Möbius signs.
fn squarefree_divisors_big(g: &BigInt) -> Result<Vec<(u64, i8)>> {
    let mut out = vec![(1u64, 1i8)];
    for (p, _) in arith::factorize(g)?.factors {
        let Some(p) = p.to_u64() else {
            // Such a d exceeds every |a| <= H, so only a = 0 sees it; keep it exact.
            return Err(Error::Budget(format!("prime factor {p} of gcd(b) exceeds 64 bits")));
        };
        let extra: Vec<_> = out.iter().map(|&(d, mu)| (d.saturating_mul(p), -mu)).collect();
        out.extend(extra);
    }
    Ok(out)
}

/// `gcd(b_1, ..., b_k)` for `g = ∑ b_i X^i`.
fn coefficient_gcd(g: &IntPolynomial) -> BigInt {
    g.coeffs().iter().skip(1).fold(BigInt::zero(), |acc, b| acc.gcd(b))
}

/// `#I_g(H)`: integers `|a| <= H` with `gcd(a, b_1, ..., b_k) = 1`.
fn family_size_w(divisors: Option<&[(u64, i8)]>, h: u64) -> u128 {
    match divisors {
        None => 2,
        Some(ds) => ds
            .iter()
            .map(|&(d, mu)| mu as i128 * (2 * (h / d) as i128 + 1))
            .sum::<i128>() as u128,
    }
}

/// `#{a ∈ [-H, H] : a ≡ r (mod m), d | a}`.
fn count_shift(r: u64, m: u64, d: u64, h: u64) -> i128 {
    let t = m.gcd(&d);
    if r % t != 0 {
        return 0;
    }
    let (m1, d1) = (m / t, d / t);
    // a = r + m j with (m/t) j ≡ -r/t (mod d/t).
    let j = if d1 == 1 {
        0
    } else {
        let inv = invmod64(m1 % d1, d1).expect("coprime after dividing by the gcd");
        mulmod64((d1 - (r / t) % d1) % d1, inv, d1)
    };
    let l = m as i128 * d1 as i128;
    let a0 = (r as i128 + m as i128 * j as i128).rem_euclid(l);
    count_in_class(-(h as i128), h as i128, a0, l)
}

fn check_positive(m: u64, h: u64, n: u64) -> Result<()> {
    if m == 0 || h == 0 || n == 0 {
        return domain("m, H and N must be positive");
    }
    Ok(())
}

/// `W_g(m, H, N) = #{(a, n) : a ∈ I_g(H), 1 <= n <= N, m | a + g(n)}`.
pub fn count_w(g: &IntPolynomial, m: u64, h: u64, n: u64) -> Result<CongruenceCount> {
    check_positive(m, h, n)?;
    if !g.coeff(0).is_zero() {
        return domain("g(0) must be 0");
    }
    let gcd_b = coefficient_gcd(g);
    let divisors = if gcd_b.is_zero() { None } else { Some(squarefree_divisors_big(&gcd_b)?) };
    let gm = g.reduce_mod(m)?;
    let mut classes: BTreeMap<u64, u64> = BTreeMap::new();
    for x in 1..=n {
        let r = (m - modpoly::eval(&gm, x % m, m)) % m;
        *classes.entry(r).or_insert(0) += 1;
    }
    let mut value: i128 = 0;
    for (&r, &weight) in &classes {
        let per_n: i128 = match &divisors {
            // gcd(a, 0, ..., 0) = |a|.
            None => [-1i128, 1]
                .iter()
                .filter(|&&a| a.rem_euclid(m as i128) as u64 == r)
                .count() as i128,
            Some(ds) => ds.iter().map(|&(d, mu)| mu as i128 * count_shift(r, m, d, h)).sum(),
        };
        value += per_n * weight as i128;
    }
    let family = family_size_w(divisors.as_deref(), h);
    Ok(CongruenceCount::new(m, h, n, value as u128, family))
}

/// `#{a ∈ [-h, h] : a t ≡ r (mod M)}` for every `r`.
fn multiple_histogram(t: u64, modulus: u64, h: u64) -> Vec<u128> {
    let mut hist = vec![0u128; modulus as usize];
    let period = modulus / t.gcd(&modulus);
    for x in 0..period {
        let c = count_in_class(-(h as i128), h as i128, x as i128, period as i128);
        if c > 0 {
            hist[mulmod64(x, t, modulus) as usize] += c as u128;
        }
    }
    hist
}

fn convolve(a: &[u128], b: &[u128]) -> Vec<u128> {
    let m = a.len();
    let mut out = vec![0u128; m];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            if y != 0 {
                let s = if i + j >= m { i + j - m } else { i + j };
                out[s] += x * y;
            }
        }
    }
    out
}

/// `∑_{n <= N} #{a ∈ [-h, h]^{k+1} : a·(1, n, ..., n^k) ≡ 0 (mod M)}`,
/// including `a = 0`, with no gcd condition.
pub fn count_box_congruence(k: u32, modulus: u64, h: u64, n: u64) -> Result<u128> {
    if modulus == 0 || n == 0 {
        return domain("modulus and N must be positive");
    }
    let work = k as u128 * (modulus as u128).pow(2) * modulus.min(n) as u128;
    if work > U_WORK_BUDGET {
        return Err(Error::Budget(format!("k·m²·min(m, N) = {work} exceeds {U_WORK_BUDGET}")));
    }
    let per_class = (1..=modulus.min(n))
        .into_par_iter()
        .map(|first| {
            // Every n <= N congruent to `first` modulo M.
            let weight = (n - first) / modulus + 1;
            let c = first % modulus;
            let mut acc = multiple_histogram(1, modulus, h);
            let mut t = 1u64;
            for _ in 0..k {
                t = mulmod64(t, c, modulus);
                acc = convolve(&acc, &multiple_histogram(t, modulus, h));
            }
            acc[0] * weight as u128
        })
        .collect::<Vec<u128>>();
    Ok(per_class.into_iter().sum())
}

/// `#B_k(H)`.
pub fn family_size_u(k: u32, h: u64) -> Result<u128> {
    let mu = arith::mobius_table(h.max(1))?;
    Ok((1..=h)
        .filter(|&e| mu[e as usize] != 0)
        .map(|e| mu[e as usize] as i128 * ((2 * (h / e) as i128 + 1).pow(k + 1) - 1))
        .sum::<i128>() as u128)
}

/// `U_k(m, H, N)`: Möbius over the common divisor `e` of the coefficients.
pub fn count_u(k: u32, m: u64, h: u64, n: u64) -> Result<CongruenceCount> {
    check_positive(m, h, n)?;
    let mu = arith::mobius_table(h)?;
    let mut value: i128 = 0;
    for e in 1..=h {
        if mu[e as usize] == 0 {
            continue;
        }
        // a = e a' with a' ≠ 0: e (a'·n) ≡ 0 (mod m) iff a'·n ≡ 0 (mod m / gcd(m, e)).
        let modulus = m / m.gcd(&e);
        let all = count_box_congruence(k, modulus, h / e, n)? as i128;
        value += mu[e as usize] as i128 * (all - n as i128);
    }
    Ok(CongruenceCount::new(m, h, n, value as u128, family_size_u(k, h)?))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PolyBoxReport {
    #[serde(rename = "W")]
    pub w: u128,
    #[serde(serialize_with = "ratio_string")]
    pub main: Ratio<i128>,
    #[serde(serialize_with = "ratio_string")]
    pub abs_residual: Ratio<i128>,
    #[serde(serialize_with = "ratio_string")]
    pub discrepancy: Ratio<i128>,
    #[serde(serialize_with = "ratio_string")]
    pub discrepancy_bound: Ratio<i128>,
    pub holds: bool,
}

/// `|W_g(m, H, N) - #I_g(H)·N/m| <= 2 Δ + 2` with `Δ` the exact discrepancy of
/// `{g(n)/m}`.
///
/// For `gcd(b_1, ..., b_k) = 1` the count per `n` is a sum of indicators of
/// arcs of `[0, 1)` with total length `(2H+1)/m`, which gives `2Δ` outright.
pub fn check_poly_box(g: &IntPolynomial, m: u64, h: u64, n: u64) -> Result<PolyBoxReport> {
    check_positive(m, h, n)?;
    if h > m {
        return domain("need H <= m");
    }
    if coefficient_gcd(g) != BigInt::from(1) {
        return domain("need gcd(b_1, ..., b_k) = 1");
    }
    let count = count_w(g, m, h, n)?;
    let disc = discrepancy_exact(&PointSet::from_polynomial(g, m, n)?)?;
    let abs_residual = if count.residual < Ratio::zero() { -count.residual } else { count.residual };
    let bound = disc * 2 + 2;
    Ok(PolyBoxReport {
        w: count.value,
        main: count.main_term,
        abs_residual,
        discrepancy: disc,
        discrepancy_bound: bound,
        holds: abs_residual <= bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AverageUReport {
    pub lhs: u128,
    #[serde(rename = "Z")]
    pub z: f64,
    pub ratio: f64,
    pub moduli: Vec<u64>,
}

/// `Z = H^{k+1}N/Q + NQ + H^k Q + H^k N Q^{2/(k+1)}`.
pub fn z_bound(k: u32, h: u64, n: u64, q: u64) -> f64 {
    let (h, n, q, k) = (h as f64, n as f64, q as f64, k as f64);
    h.powf(k + 1.0) * n / q + n * q + h.powf(k) * q + h.powf(k) * n * q.powf(2.0 / (k + 1.0))
}

/// `∑_{Q < q <= 2Q} μ²(q) U_k(q², H, N)` against `Z`.
pub fn average_u_over_squarefree_q(k: u32, h: u64, n: u64, q: u64) -> Result<AverageUReport> {
    if q == 0 {
        return domain("Q must be positive");
    }
    let moduli: Vec<u64> = (q + 1..=2 * q).filter(|&x| arith::mobius(x).map_or(false, |mu| mu != 0)).collect();
    let counts = moduli
        .par_iter()
        .map(|&x| Ok(count_u(k, x * x, h, n)?.value))
        .collect::<Result<Vec<u128>>>()?;
    let lhs: u128 = counts.into_iter().sum();
    let z = z_bound(k, h, n, q);
    Ok(AverageUReport { lhs, z, ratio: lhs as f64 / z, moduli })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(c: &[i64]) -> IntPolynomial {
        IntPolynomial::from_i64(c)
    }

    fn brute_w(g: &IntPolynomial, m: u64, h: u64, n: u64) -> u128 {
        let b: Vec<i64> = g.coeffs().iter().skip(1).map(|c| c.to_i64().unwrap()).collect();
        let mut count = 0;
        for a in -(h as i64)..=h as i64 {
            if b.iter().fold(a.unsigned_abs(), |acc, &x| acc.gcd(&x.unsigned_abs())) != 1 {
                continue;
            }
            for x in 1..=n {
                let v = g.evaluate(&BigInt::from(x)) + a;
                if (v % BigInt::from(m)).is_zero() {
                    count += 1;
                }
            }
        }
        count
    }

    fn brute_u(k: u32, m: u64, h: u64, n: u64) -> u128 {
        let side = 2 * h as i64 + 1;
        let total = side.pow(k + 1);
        let mut count = 0;
        for idx in 0..total {
            let mut rest = idx;
            let a: Vec<i64> = (0..=k)
                .map(|_| {
                    let v = rest % side - h as i64;
                    rest /= side;
                    v
                })
                .collect();
            if a.iter().fold(0u64, |acc, &x| acc.gcd(&x.unsigned_abs())) != 1 {
                continue;
            }
            for x in 1..=n as i64 {
                let v: i64 = a.iter().rev().fold(0, |acc, &c| acc * x + c);
                if v.rem_euclid(m as i64) == 0 {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn w_examples() {
        assert_eq!(count_w(&p(&[0, 0, 1]), 3, 3, 3).unwrap().value, 7);
        let g = p(&[0, 3, 0, 1]);
        assert_eq!(count_w(&g, 1, 5, 4).unwrap().value, 11 * 4);
        assert_eq!(count_w(&p(&[0, 2]), 2, 2, 2).unwrap().value, 0);
        assert!(count_w(&p(&[1, 1]), 2, 2, 2).is_err());
        // g = 0: only a = ±1.
        assert_eq!(count_w(&p(&[0]), 1, 3, 5).unwrap().value, 10);
        assert_eq!(count_w(&p(&[0]), 2, 3, 5).unwrap().value, 0);
    }

    #[test]
    fn w_main_term_uses_family_size() {
        let c = count_w(&p(&[0, 6, 0, 4]), 7, 12, 10).unwrap();
        // #I = #{|a| <= 12 : gcd(a, 2) = 1} = 12.
        assert_eq!(c.main_term, Ratio::new(12 * 10, 7));
        assert_eq!(c.value, brute_w(&p(&[0, 6, 0, 4]), 7, 12, 10));
    }

    #[test]
    fn u_examples() {
        assert_eq!(count_u(1, 2, 1, 1).unwrap().value, 4);
        let c = count_u(2, 1, 2, 3).unwrap();
        assert_eq!(c.value, family_size_u(2, 2).unwrap() * 3);
        assert_eq!(count_u(2, 4, 2, 3).unwrap().value, brute_u(2, 4, 2, 3));
    }

    #[test]
    fn exhaustive_small_u() {
        for k in 1..=2 {
            for m in 1..=8 {
                for h in 1..=3 {
                    for n in 1..=5 {
                        assert_eq!(count_u(k, m, h, n).unwrap().value, brute_u(k, m, h, n), "{k} {m} {h} {n}");
                    }
                }
            }
        }
    }

    #[test]
    fn histogram_count_matches_box_scan() {
        for (k, m, h, n) in [(1u32, 6u64, 2u64, 7u64), (2, 5, 1, 9), (3, 4, 2, 3), (2, 9, 3, 4)] {
            let side = 2 * h as i64 + 1;
            let mut brute = 0u128;
            for x in 1..=n as i64 {
                for idx in 0..side.pow(k + 1) {
                    let mut rest = idx;
                    let mut v = 0i64;
                    let mut pw = 1i64;
                    for _ in 0..=k {
                        v += (rest % side - h as i64) * pw;
                        rest /= side;
                        pw *= x;
                    }
                    brute += u128::from(v.rem_euclid(m as i64) == 0);
                }
            }
            assert_eq!(count_box_congruence(k, m, h, n).unwrap(), brute);
        }
    }

    #[test]
    fn poly_box_examples() {
        let r = check_poly_box(&p(&[0, 0, 1]), 100, 10, 50).unwrap();
        assert!(r.holds, "{r:?}");
        let r = check_poly_box(&p(&[0, 0, 1]), 30, 30, 40).unwrap();
        assert!(r.holds);
        assert_eq!(r.main, Ratio::new(61 * 40, 30));
        assert!(check_poly_box(&p(&[0, 0, 1]), 7, 3, 1).unwrap().holds);
        assert!(check_poly_box(&p(&[0, 0, 1]), 7, 8, 1).is_err());
        assert!(check_poly_box(&p(&[0, 2, 2]), 7, 3, 1).is_err());
    }

    #[test]
    fn average_u_window() {
        let r = average_u_over_squarefree_q(2, 3, 5, 1).unwrap();
        assert_eq!(r.moduli, vec![2]);
        assert_eq!(r.lhs, count_u(2, 4, 3, 5).unwrap().value);
        let r = average_u_over_squarefree_q(2, 3, 5, 2).unwrap();
        assert_eq!(r.moduli, vec![3]);
        assert_eq!(r.lhs, brute_u(2, 9, 3, 5));
        assert!(r.ratio > 0.0);
    }

    fn g_strategy() -> impl Strategy<Value = IntPolynomial> {
        prop::collection::vec(-12i64..=12, 1..=3).prop_map(|mut b| {
            b.insert(0, 0);
            IntPolynomial::from_i64(&b)
        })
    }

    proptest! {
        #[test]
        fn w_matches_brute_force(g in g_strategy(), m in 1u64..=30, h in 1u64..=30, n in 1u64..=30) {
            let c = count_w(&g, m, h, n).unwrap();
            prop_assert_eq!(c.value, brute_w(&g, m, h, n));
            // Trivial bound with constant 3.
            prop_assert!(c.value as f64 <= 3.0 * (h as f64 / m as f64 + 1.0) * n as f64);
        }

        #[test]
        fn poly_box_bound_holds(b in prop::collection::vec(-40i64..=40, 1..=3), lead in 1i64..=9, m in 1u64..=400, n in 1u64..=300, frac in 0.0f64..=1.0) {
            let mut c = vec![0i64];
            c.extend(b);
            c.push(lead);
            let g = IntPolynomial::from_i64(&c);
            prop_assume!(coefficient_gcd(&g) == BigInt::from(1));
            let h = ((m as f64 * frac) as u64).clamp(1, m);
            let r = check_poly_box(&g, m, h, n).unwrap();
            prop_assert!(r.holds, "{:?}", r);
        }
    }
}
