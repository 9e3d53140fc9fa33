//! Root counting modulo primes, prime powers and composite moduli.
//!
//! `ρ_f(m) = #{n mod m : f(n) ≡ 0 mod m}` is multiplicative in `m`; each prime
//! power is handled by recursive lifting. A root `r` mod `p` with
//! `f'(r) ≢ 0` lifts uniquely. A singular root is followed through
//! `f(r + p t) / p^e`, whose exponent `j` strictly decreases, so the recursion
//! depth is at most `j` and each level spawns at most `k` branches.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::arith::{self, factorize_u128, mulmod64};
use crate::error::{domain, Error, Result};
use crate::modpoly;
use crate::polynomial::IntPolynomial;

/// Primes below this bound have their roots listed by scanning every residue.
pub const SCAN_PRIME_LIMIT: u64 = 1 << 16;

/// Root counts for primes below this bound scan residues; above it they use
/// gcd with the Frobenius even when the roots themselves are not needed.
const COUNT_SCAN_LIMIT: u64 = 64;

/// Largest residue list any listing operation will materialize.
pub const MAX_LISTED_ROOTS: u64 = 1 << 24;

/// Residues `r` in `[0, modulus)` with `f(r) ≡ 0 (mod modulus)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RootSet {
    pub modulus: u64,
    pub residues: Vec<u64>,
}

impl RootSet {
    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }
}

fn require_prime(p: u64) -> Result<()> {
    if arith::is_prime(p as u128) {
        Ok(())
    } else {
        domain(format!("{p} is not prime"))
    }
}

fn prime_power(p: u64, j: u32) -> Result<u64> {
    match p.checked_pow(j) {
        Some(q) if q < 1 << 63 => Ok(q),
        _ => Err(Error::Budget(format!("{p}^{j} exceeds 63 bits"))),
    }
}

/// All roots of `f` modulo the prime `p`.
pub fn roots_mod_prime(f: &IntPolynomial, p: u64) -> Result<RootSet> {
    require_prime(p)?;
    let fp = f.mod_prime(p);
    let residues = if fp.is_empty() {
        if p > MAX_LISTED_ROOTS {
            return Err(Error::Budget(format!("f vanishes identically modulo {p}")));
        }
        (0..p).collect()
    } else if p < SCAN_PRIME_LIMIT {
        modpoly::roots_scan(&fp, p)
    } else {
        modpoly::roots_frobenius(&fp, p)
    };
    Ok(RootSet { modulus: p, residues })
}

fn valuation_capped(c: u64, p: u64, cap: u32) -> u32 {
    if c == 0 {
        return cap;
    }
    let mut v = 0;
    let mut c = c;
    while c % p == 0 && v < cap {
        c /= p;
        v += 1;
    }
    v
}

/// `g(r + step·t)` as a polynomial in `t`, coefficients modulo `modulus`.
fn shift_scale(g: &[u64], r: u64, step: u64, modulus: u64) -> Vec<u64> {
    let mut h: Vec<u64> = Vec::with_capacity(g.len());
    let r = r % modulus;
    let step = step % modulus;
    for &c in g.iter().rev() {
        // h <- h·(r + step·t) + c
        let mut next = vec![0u64; h.len() + 1];
        for (i, &hc) in h.iter().enumerate() {
            next[i] = (next[i] + mulmod64(hc, r, modulus)) % modulus;
            next[i + 1] = (next[i + 1] + mulmod64(hc, step, modulus)) % modulus;
        }
        next[0] = (next[0] + c % modulus) % modulus;
        h = next;
    }
    h
}

/// `#{x mod p^j : g(x) ≡ 0 mod p^j}` for `g` given by residues modulo `p^j`.
fn count_prime_power(g: &[u64], p: u64, j: u32) -> u64 {
    let pj = p.pow(j);
    let c = g.iter().map(|&a| valuation_capped(a, p, j)).min().unwrap_or(j);
    if c >= j {
        return pj;
    }
    if c > 0 {
        let pc = p.pow(c);
        let reduced: Vec<u64> = g.iter().map(|&a| a / pc).collect();
        return pc * count_prime_power(&reduced, p, j - c);
    }
    let gp = modpoly::trim(g.iter().map(|&a| a % p).collect());
    if j == 1 {
        return if p < COUNT_SCAN_LIMIT {
            modpoly::roots_scan(&gp, p).len() as u64
        } else {
            let split = modpoly::split_part(&gp, p);
            modpoly::degree(&split).unwrap_or(0) as u64
        };
    }
    let deriv = modpoly::derivative(&gp, p);
    let (nonsingular, singular) = if p < COUNT_SCAN_LIMIT {
        let roots = modpoly::roots_scan(&gp, p);
        let (sing, nons): (Vec<u64>, Vec<u64>) =
            roots.into_iter().partition(|&r| modpoly::eval(&deriv, r, p) == 0);
        (nons.len() as u64, sing)
    } else {
        let split = modpoly::split_part(&gp, p);
        let s = modpoly::gcd(&split, &deriv, p);
        let ds = modpoly::degree(&s).unwrap_or(0);
        let dsplit = modpoly::degree(&split).unwrap_or(0);
        let sing = if ds > 0 { modpoly::roots_frobenius(&s, p) } else { Vec::new() };
        ((dsplit - ds) as u64, sing)
    };
    let mut total = nonsingular;
    for r in singular {
        // t ranges modulo p^(j-1); the condition is h(t) ≡ 0 mod p^j.
        let h = shift_scale(g, r, p, pj);
        let e = h.iter().map(|&a| valuation_capped(a, p, j)).min().unwrap_or(j);
        debug_assert!(e >= 1);
        if e >= j {
            total += p.pow(j - 1);
            continue;
        }
        let pe = p.pow(e);
        let h1: Vec<u64> = h.iter().map(|&a| a / pe).collect();
        total += p.pow(e - 1) * count_prime_power(&h1, p, j - e);
    }
    total
}

/// `ρ_f(p^j)` by recursive lifting.
pub fn count_roots_prime_power(f: &IntPolynomial, p: u64, j: u32) -> Result<u64> {
    require_prime(p)?;
    if j == 0 {
        return domain("exponent must be positive");
    }
    if j == 2 && prime_power(p, 2).is_err() {
        return count_roots_square_big(f, p);
    }
    let pj = prime_power(p, j)?;
    Ok(count_prime_power(&f.reduce_mod(pj)?, p, j))
}

/// `ρ_f(p²)` when `p²` overflows: a root `r` modulo `p` lifts once if
/// `f'(r) ≢ 0`, and otherwise `p` times or not at all as `p² | f(r)` or not.
fn count_roots_square_big(f: &IntPolynomial, p: u64) -> Result<u64> {
    let roots = roots_mod_prime(f, p)?;
    let (pb, p2) = (BigInt::from(p), BigInt::from(p) * BigInt::from(p));
    let df = f.derivative();
    let mut total = 0u64;
    for r in roots.residues {
        let r = BigInt::from(r);
        let lifts = if !(df.evaluate(&r) % &pb).is_zero() {
            1
        } else if (f.evaluate(&r) % &p2).is_zero() {
            p
        } else {
            0
        };
        total = total.checked_add(lifts).ok_or_else(|| Error::Budget(format!("ρ({p}²) exceeds 64 bits")))?;
    }
    Ok(total)
}

/// Residues modulo `p^j` solving `f ≡ 0`, by lifting level by level.
pub fn roots_mod_prime_power(f: &IntPolynomial, p: u64, j: u32) -> Result<RootSet> {
    if j == 0 {
        return domain("exponent must be positive");
    }
    let pj = prime_power(p, j)?;
    let mut roots = roots_mod_prime(f, p)?.residues;
    let g = f.reduce_mod(pj)?;
    let gp = f.mod_prime(p);
    let deriv = modpoly::derivative(&gp, p);
    let mut pi = p;
    for _ in 1..j {
        let next_mod = pi * p;
        let mut next = Vec::new();
        for &r in &roots {
            let val = modpoly::eval(&g, r, pj) % next_mod;
            let d = modpoly::eval(&deriv, r % p, p);
            if d != 0 {
                // f(r + t p^i) ≡ f(r) + t p^i f'(r) (mod p^(i+1))
                let quotient = (val / pi) % p;
                let inv = arith::invmod64(d, p).expect("nonzero mod prime");
                let t = mulmod64((p - quotient) % p, inv, p);
                next.push(r + t * pi);
            } else if val == 0 {
                if next.len() as u64 + p > MAX_LISTED_ROOTS {
                    return Err(Error::Budget(format!("more than {MAX_LISTED_ROOTS} roots")));
                }
                next.extend((0..p).map(|t| r + t * pi));
            }
        }
        next.sort_unstable();
        roots = next;
        pi = next_mod;
    }
    Ok(RootSet { modulus: pj, residues: roots })
}

/// All roots of `f` modulo `m`, combined across prime powers by CRT.
pub fn roots_mod(f: &IntPolynomial, m: u64) -> Result<RootSet> {
    if m == 0 {
        return domain("modulus must be positive");
    }
    let mut acc = RootSet { modulus: 1, residues: vec![0] };
    for (p, e) in factorize_u128(m as u128)? {
        let part = roots_mod_prime_power(f, p as u64, e)?;
        if (acc.len() as u64).saturating_mul(part.len() as u64) > MAX_LISTED_ROOTS {
            return Err(Error::Budget(format!("more than {MAX_LISTED_ROOTS} roots modulo {m}")));
        }
        acc = crt_combine(&acc, &part);
    }
    Ok(acc)
}

fn crt_combine(a: &RootSet, b: &RootSet) -> RootSet {
    let (m1, m2) = (a.modulus, b.modulus);
    let m = m1 * m2;
    // x = r1 + m1 · ((r2 - r1) · m1^{-1} mod m2)
    let inv = if m2 == 1 { 0 } else { arith::invmod64(m1 % m2, m2).expect("coprime moduli") };
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &r1 in &a.residues {
        for &r2 in &b.residues {
            let diff = (r2 + m2 - r1 % m2) % m2;
            let t = mulmod64(diff, inv, m2);
            out.push(r1 + m1 * t);
        }
    }
    out.sort_unstable();
    RootSet { modulus: m, residues: out }
}

/// `ρ_f(m)`; `ρ_f(1) = 1`.
pub fn rho(f: &IntPolynomial, m: u64) -> Result<u64> {
    if m == 0 {
        return domain("modulus must be positive");
    }
    let mut acc = 1u64;
    for (p, e) in factorize_u128(m as u128)? {
        let p = p as u64;
        let pe = p.pow(e);
        acc *= count_prime_power(&f.reduce_mod(pe)?, p, e);
    }
    Ok(acc)
}

/// `#{1 <= n <= N : m | f(n)}`, from the residue classes modulo `m`.
pub fn rho_interval(f: &IntPolynomial, m: u64, n: u64) -> Result<u64> {
    if m == 0 || n == 0 {
        return domain("modulus and range must be positive");
    }
    if m == 1 {
        return Ok(n);
    }
    let roots = roots_mod(f, m)?;
    Ok(count_in_classes(&roots, n))
}

/// `#{1 <= n <= N : n mod m ∈ roots}`.
pub(crate) fn count_in_classes(roots: &RootSet, n: u64) -> u64 {
    let m = roots.modulus;
    let (q, rem) = (n / m, n % m);
    let partial = roots.residues.iter().filter(|&&r| r >= 1 && r <= rem).count() as u64;
    q * roots.len() as u64 + partial
}

/// Outcome of comparing `ρ_f(p^j)` with `k·min(p^{j(1-1/k)}, p^{j-1})`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StewartReport {
    pub lhs: u64,
    pub rhs: f64,
    pub holds: bool,
}

fn require_primitive_separable(f: &IntPolynomial) -> Result<()> {
    let k = match f.degree() {
        Some(k) if k >= 1 => k,
        _ => return domain("polynomial must have degree >= 1"),
    };
    if k >= 2 && f.discriminant()?.is_zero() {
        return domain("discriminant vanishes");
    }
    Ok(())
}

/// Checks `ρ_f(p^j) <= k·min(p^{j(1-1/k)}, p^{j-1})`, comparing the fractional
/// power exactly through `ρ^k <= k^k p^{j(k-1)}`.
pub fn check_stewart_bound(f: &IntPolynomial, p: u64, j: u32) -> Result<StewartReport> {
    require_primitive_separable(f)?;
    require_prime(p)?;
    if (f.content()? % BigInt::from(p)).is_zero() {
        return domain(format!("{p} divides the content"));
    }
    let k = f.degree().expect("checked") as u32;
    let lhs = count_roots_prime_power(f, p, j)?;
    let pb = BigInt::from(p);
    let kb = BigInt::from(k);
    let l = BigInt::from(lhs);
    let under_second = l <= &kb * pb.pow(j - 1);
    let under_first = l.pow(k) <= kb.pow(k) * pb.pow(j * (k - 1));
    let pf = p as f64;
    let rhs = k as f64 * pf.powf(j as f64 * (1.0 - 1.0 / k as f64)).min(pf.powi(j as i32 - 1));
    Ok(StewartReport { lhs, rhs, holds: under_first && under_second })
}

/// `∑_{m <= M} ρ_f(m)` through a smallest-prime-factor sieve.
pub fn sum_rho(f: &IntPolynomial, m_max: u64) -> Result<u64> {
    require_primitive_separable(f)?;
    if !f.content()?.is_one() {
        return domain("content must be 1");
    }
    Ok(rho_table(f, m_max)?.iter().skip(1).sum())
}

/// `ρ_f(m)` for every `0 <= m <= M` (index 0 unused, set to 0).
pub fn rho_table(f: &IntPolynomial, m_max: u64) -> Result<Vec<u64>> {
    if m_max == 0 {
        return domain("M must be positive");
    }
    if m_max > 1 << 28 {
        return Err(Error::Capacity(format!("table size {m_max}")));
    }
    let n = m_max as usize;
    let mut spf = vec![0u32; n + 1];
    for i in 2..=n {
        if spf[i] == 0 {
            let mut j = i;
            while j <= n {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
                j += i;
            }
        }
    }
    let mut cache: HashMap<(u64, u32), u64> = HashMap::new();
    let mut table = vec![0u64; n + 1];
    table[1] = 1;
    for i in 2..=n {
        let p = spf[i] as usize;
        let mut rest = i;
        let mut e = 0u32;
        while rest % p == 0 {
            rest /= p;
            e += 1;
        }
        let p = p as u64;
        let local = match cache.get(&(p, e)) {
            Some(&v) => v,
            None => {
                let v = count_prime_power(&f.reduce_mod(p.pow(e))?, p, e);
                cache.insert((p, e), v);
                v
            }
        };
        table[i] = local * table[rest];
    }
    Ok(table)
}

/// `ρ_f(m)` by scanning all residues; independent of the lifting machinery.
pub fn rho_scan(f: &IntPolynomial, m: u64) -> u64 {
    let g = f.reduce_mod(m).expect("positive modulus");
    (0..m).filter(|&x| modpoly::eval(&g, x, m) == 0).count() as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_integer::Integer;
    use proptest::prelude::*;

    fn p(c: &[i64]) -> IntPolynomial {
        IntPolynomial::from_i64(c)
    }

    #[test]
    fn square_counts_past_63_bits() {
        let big = (1u64 << 61) - 1;
        // (X - 5)^2: a double root with f(5) = 0 lifts to every residue.
        assert_eq!(count_roots_prime_power(&p(&[25, -10, 1]), big, 2).unwrap(), big);
        let shifted = IntPolynomial::new(vec![BigInt::from(25u64 + big), BigInt::from(-10), BigInt::from(1)]);
        assert_eq!(count_roots_prime_power(&shifted, big, 2).unwrap(), 0);
        // 2 is a square modulo q: two simple roots.
        let q = 4_294_967_311u64;
        assert_eq!(count_roots_prime_power(&p(&[-2, 0, 1]), q, 2).unwrap(), 2);
    }

    #[test]
    fn roots_mod_prime_examples() {
        assert_eq!(roots_mod_prime(&p(&[1, 0, 1]), 5).unwrap().residues, vec![2, 3]);
        assert!(roots_mod_prime(&p(&[1, 0, 1]), 3).unwrap().is_empty());
        let f = p(&[2, 0, 0, 1]);
        let scan: Vec<u64> = (0..31).filter(|&x| (x * x * x + 2) % 31 == 0).collect();
        assert_eq!(roots_mod_prime(&f, 31).unwrap().residues, scan);
        assert!(roots_mod_prime(&f, 33).is_err());
        // Frobenius route above the scan threshold.
        let q = 1_000_003;
        let big = roots_mod_prime(&p(&[-6, 5, 0, 0, 0, 0, 1]), q).unwrap();
        for r in &big.residues {
            assert!((p(&[-6, 5, 0, 0, 0, 0, 1]).evaluate(&BigInt::from(*r)) % BigInt::from(q)).is_zero());
        }
        assert!(big.residues.contains(&1));
    }

    #[test]
    fn prime_power_examples() {
        assert_eq!(count_roots_prime_power(&p(&[0, 0, 1]), 2, 2).unwrap(), 2);
        assert_eq!(count_roots_prime_power(&p(&[1, 0, 1]), 5, 2).unwrap(), 2);
        assert_eq!(count_roots_prime_power(&p(&[-5, 0, 1]), 5, 2).unwrap(), 0);
        assert_eq!(rho_scan(&p(&[1, 0, 1]), 25), 2);
        assert_eq!(rho_scan(&p(&[-5, 0, 1]), 25), 0);
    }

    #[test]
    fn rho_examples() {
        assert_eq!(rho(&p(&[3, 1, 4]), 1).unwrap(), 1);
        assert_eq!(rho(&p(&[1, 0, 1]), 25).unwrap(), 2);
        assert_eq!(rho(&p(&[1, 0, 1]), 65).unwrap(), 4);
        assert_eq!(rho_scan(&p(&[1, 0, 1]), 65), 4);
    }

    #[test]
    fn rho_interval_examples() {
        assert_eq!(rho_interval(&p(&[0, 1]), 4, 10).unwrap(), 2);
        assert_eq!(rho_interval(&p(&[1, 0, 1]), 5, 10).unwrap(), 4);
        assert_eq!(rho_interval(&p(&[7, 3]), 1, 7).unwrap(), 7);
    }

    #[test]
    fn stewart_examples() {
        let r = check_stewart_bound(&p(&[1, 0, 1]), 5, 2).unwrap();
        assert_eq!(r.lhs, 2);
        assert!(r.holds && r.rhs >= 2.0);
        assert!(check_stewart_bound(&p(&[2, 0, 0, 1]), 3, 1).unwrap().holds);
        assert!(matches!(check_stewart_bound(&p(&[0, 0, 1]), 2, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn stewart_bound_grid() {
        for f in [p(&[2, 0, 0, 1]), p(&[1, 0, 1]), p(&[-2, 0, 0, 0, 1]), p(&[4, 0, 0, 0, 0, 0, 0, 0, 1])] {
            for &q in &[2u64, 3, 5, 7, 11, 13] {
                for j in 1..=6 {
                    if prime_power(q, j).is_err() {
                        continue;
                    }
                    let r = check_stewart_bound(&f, q, j).unwrap();
                    assert!(r.holds, "f = {f}, p = {q}, j = {j}: {r:?}");
                }
            }
        }
    }

    #[test]
    fn sum_rho_examples() {
        assert_eq!(sum_rho(&p(&[0, 1]), 5).unwrap(), 5);
        let f = p(&[1, 0, 1]);
        let brute: u64 = (1..=10).map(|m| rho_scan(&f, m)).sum();
        assert_eq!(brute, 6);
        assert_eq!(sum_rho(&f, 10).unwrap(), brute);
        let f = p(&[2, 0, 0, 1]);
        let oracle: u64 = (1..=100u64)
            .map(|m| (0..m).filter(|&n| ((n as u128).pow(3) + 2) % m as u128 == 0).count() as u64)
            .sum();
        assert_eq!(sum_rho(&f, 100).unwrap(), oracle);
        assert!(sum_rho(&p(&[0, 0, 1]), 10).is_err());
    }

    #[test]
    fn listing_matches_counting_on_singular_examples() {
        // Singular roots at 0 for X^2 and X^2 + X^3 across many prime powers.
        for f in [p(&[0, 0, 1]), p(&[0, 0, 1, 1]), p(&[4, 0, 1]), p(&[0, 0, 0, 8])] {
            for &q in &[2u64, 3, 5] {
                for j in 1..=7 {
                    let listed = roots_mod_prime_power(&f, q, j).unwrap();
                    let counted = count_roots_prime_power(&f, q, j).unwrap();
                    assert_eq!(listed.len() as u64, counted, "f = {f}, p^{j} = {q}^{j}");
                    assert_eq!(counted, rho_scan(&f, q.pow(j)));
                }
            }
        }
    }

    #[test]
    fn growth_of_average_root_count() {
        // ∑_{m<=M} ρ(m)/M grows at most like a power of log M; one constant
        // for the whole suite, with the three sizes checked.
        const C: f64 = 2.0;
        for f in [p(&[2, 0, 0, 1]), p(&[1, 0, 1]), p(&[1, 1, 0, 0, 1])] {
            let k = f.degree().unwrap() as i32;
            for m in [1_000u64, 10_000, 100_000] {
                let avg = sum_rho(&f, m).unwrap() as f64 / m as f64;
                assert!(avg <= C * (m as f64).ln().powi(k), "f = {f}, M = {m}, avg = {avg}");
            }
        }
    }

    fn small_poly() -> impl Strategy<Value = IntPolynomial> {
        prop::collection::vec(-50i64..=50, 2..=6).prop_map(|c| IntPolynomial::from_i64(&c))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn rho_matches_scan(f in small_poly(), m in 1u64..2000) {
            prop_assume!(!f.is_zero());
            prop_assert_eq!(rho(&f, m).unwrap(), rho_scan(&f, m));
        }

        #[test]
        fn rho_is_multiplicative(f in small_poly(), a in 1u64..300, b in 1u64..300) {
            prop_assume!(a.gcd(&b) == 1 && !f.is_zero());
            prop_assert_eq!(rho(&f, a * b).unwrap(), rho(&f, a).unwrap() * rho(&f, b).unwrap());
        }

        #[test]
        fn listing_agrees_with_counting(f in small_poly(), m in 1u64..3000) {
            prop_assume!(!f.is_zero());
            let listed = roots_mod(&f, m).unwrap();
            prop_assert_eq!(listed.len() as u64, rho(&f, m).unwrap());
            let g = f.reduce_mod(m).unwrap();
            for &r in &listed.residues {
                prop_assert_eq!(modpoly::eval(&g, r, m), 0);
            }
        }

        #[test]
        fn interval_count_is_periodic(f in small_poly(), m in 1u64..500, t in 1u64..20) {
            prop_assume!(!f.is_zero());
            prop_assert_eq!(rho_interval(&f, m, t * m).unwrap(), t * rho(&f, m).unwrap());
        }

        #[test]
        fn hensel_regular_primes(f in small_poly(), idx in 0usize..60) {
            let k = f.degree().unwrap_or(0);
            prop_assume!(k >= 2);
            let disc = f.discriminant().unwrap();
            prop_assume!(!disc.is_zero());
            let q = arith::sieve_primes(300).unwrap()[idx];
            let qb = BigInt::from(q);
            prop_assume!(!(&disc % &qb).is_zero() && !(f.content().unwrap() % &qb).is_zero());
            let r1 = roots_mod_prime(&f, q).unwrap().len() as u64;
            prop_assert_eq!(count_roots_prime_power(&f, q, 2).unwrap(), r1);
            prop_assert!(r1 <= k as u64);
        }
    }
}
