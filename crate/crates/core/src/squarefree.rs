//! Exact counts of square-free polynomial values and related sums.
//!
//! Conventions: `f(n) = 0` is not square-free, `|f(n)| = 1` is.

use num_bigint::BigInt;
use num_integer::Roots;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{self, factorize_u128, rough_is_squarefree};
use crate::density::{compute_cf, Enclosure};
use crate::error::{domain, Error, Result};
use crate::modpoly;
use crate::polynomial::IntPolynomial;
use crate::roots::{count_roots_prime_power, rho_interval};

/// The sieve never uses primes beyond this bound.
pub const MAX_SIEVE_PRIME: u64 = 1_000_000;
/// Primes up to at least this bound are sieved even when `N` is smaller.
pub const SIEVE_PRIME_FLOOR: u64 = 1 << 12;
const CHUNK: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sieve,
    Naive,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sieve" => Ok(Method::Sieve),
            "naive" => Ok(Method::Naive),
            other => domain(format!("unknown method {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SquarefreeReport {
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "S_f")]
    pub s_f: u64,
    pub c_f_enclosure: Enclosure,
    pub abs_error_lo: f64,
    pub abs_error_hi: f64,
    pub method: Method,
}

/// `|S - c·N|` over all `c` in the enclosure.
pub fn abs_error_interval(s_f: u64, cf: &Enclosure, n: u64) -> (f64, f64) {
    let (s, n) = (s_f as f64, n as f64);
    let a = s - cf.hi * n;
    let b = s - cf.lo * n;
    if a <= 0.0 && b >= 0.0 {
        (0.0, (-a).max(b))
    } else {
        (a.abs().min(b.abs()), a.abs().max(b.abs()))
    }
}

/// `|f(n)|` for `1 <= n <= N` as 128-bit integers.
fn abs_values(f: &IntPolynomial, n_max: u64) -> Result<Vec<u128>> {
    let small = f.coeffs_i128();
    (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let fast = small.as_ref().and_then(|c| {
                let x = n as i128;
                c.iter().rev().try_fold(0i128, |acc, &a| acc.checked_mul(x)?.checked_add(a))
            });
            match fast {
                Some(v) => Ok(v.unsigned_abs()),
                None => f.evaluate(&BigInt::from(n)).abs().to_u128().ok_or_else(|| {
                    Error::Budget(format!("|f({n})| exceeds 128 bits"))
                }),
            }
        })
        .collect()
}

/// `S_f(N)` by factoring every value.
pub fn count_squarefree_naive(f: &IntPolynomial, n_max: u64) -> Result<u64> {
    if f.is_zero() {
        return Ok(0);
    }
    let flags = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let v = f.evaluate(&BigInt::from(n));
            if v.is_zero() {
                Ok(false)
            } else {
                arith::is_squarefree(&v)
            }
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(flags.into_iter().filter(|&b| b).count() as u64)
}

fn roots_mod_small_prime(f: &IntPolynomial, p: u64) -> Vec<u64> {
    let fp = f.mod_prime(p);
    if p <= 64 {
        modpoly::roots_scan(&fp, p)
    } else {
        modpoly::roots_frobenius(&fp, p)
    }
}

/// `S_f(N)` by sieving small primes along root progressions and certifying
/// the rough cofactors.
pub fn count_squarefree_sieve(f: &IntPolynomial, n_max: u64) -> Result<u64> {
    if f.is_zero() || !f.content()?.is_one() {
        return domain("sieve requires content 1");
    }
    if n_max == 0 {
        return Ok(0);
    }
    let values = abs_values(f, n_max)?;
    let vmax = values.iter().copied().max().unwrap_or(0);
    let bound = (vmax.sqrt() as u64)
        .min(n_max.max(SIEVE_PRIME_FLOOR))
        .min(MAX_SIEVE_PRIME)
        .max(2);
    let progressions: Vec<(u64, Vec<u64>)> = arith::sieve_primes(bound)?
        .into_par_iter()
        .map(|p| (p, roots_mod_small_prime(f, p)))
        .filter(|(_, r)| !r.is_empty())
        .collect();

    let counts = values
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(ci, chunk)| {
            let start = (ci * CHUNK) as u64 + 1;
            let mut rest = chunk.to_vec();
            let mut bad: Vec<bool> = chunk.iter().map(|&v| v == 0).collect();
            for (p, roots) in &progressions {
                let p = *p;
                for &r in roots {
                    let mut i = ((r + p - start % p) % p) as usize;
                    while i < rest.len() {
                        if !bad[i] {
                            let c = rest[i] / p as u128;
                            if c % p as u128 == 0 {
                                bad[i] = true;
                            } else {
                                rest[i] = c;
                            }
                        }
                        i += p as usize;
                    }
                }
            }
            let mut count = 0u64;
            for (i, &c) in rest.iter().enumerate() {
                if !bad[i] && rough_is_squarefree(c, bound as u128)? {
                    count += 1;
                }
            }
            Ok(count)
        })
        .collect::<Result<Vec<u64>>>()?;
    Ok(counts.into_iter().sum())
}

/// `S_f(N)` by the chosen method, with `c_f` and the error interval.
pub fn squarefree_report(
    f: &IntPolynomial,
    n_max: u64,
    method: Method,
    tolerance: f64,
) -> Result<SquarefreeReport> {
    let s_f = match method {
        Method::Sieve => count_squarefree_sieve(f, n_max)?,
        Method::Naive => count_squarefree_naive(f, n_max)?,
    };
    let cf = compute_cf(f, tolerance)?;
    let (abs_error_lo, abs_error_hi) = abs_error_interval(s_f, &cf, n_max);
    Ok(SquarefreeReport { n: n_max, s_f, c_f_enclosure: cf, abs_error_lo, abs_error_hi, method })
}

/// `∑_{d <= D} μ(d)·ρ_f(d², N)`.
pub fn sieve_main_term(f: &IntPolynomial, n_max: u64, d_max: u64) -> Result<i128> {
    if f.is_zero() || n_max == 0 || d_max == 0 {
        return domain("need nonzero f and positive N, D");
    }
    if d_max > u32::MAX as u64 {
        return Err(Error::Capacity(format!("D = {d_max} exceeds 2^32")));
    }
    let mu = arith::mobius_table(d_max)?;
    let terms = (1..=d_max)
        .into_par_iter()
        .filter(|&d| mu[d as usize] != 0)
        .map(|d| Ok(mu[d as usize] as i128 * rho_interval(f, d * d, n_max)? as i128))
        .collect::<Result<Vec<i128>>>()?;
    Ok(terms.into_iter().sum())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MobiusReport {
    #[serde(rename = "S_f")]
    pub s_f: u64,
    pub full_sum: i128,
    pub d_max: u64,
    pub equal: bool,
}

/// Checks `S_f(N) = ∑_d μ(d)·#{n <= N : d² | f(n) ≠ 0}` with `d` up to
/// `√max |f(n)|`.
pub fn mobius_identity_check(f: &IntPolynomial, n_max: u64) -> Result<MobiusReport> {
    if f.is_zero() || n_max == 0 {
        return domain("need nonzero f and positive N");
    }
    let values = abs_values(f, n_max)?;
    let zeros = values.iter().filter(|&&v| v == 0).count() as i128;
    let d_max = (values.iter().copied().max().unwrap_or(0).sqrt() as u64).max(1);
    if d_max > u32::MAX as u64 {
        return Err(Error::Capacity(format!("√max|f| = {d_max} exceeds 2^32")));
    }
    let mu = arith::mobius_table(d_max)?;
    // Squarefree d containing a prime without roots modulo p² contribute 0.
    let primes = arith::sieve_primes(d_max.max(2))?;
    let dead: Vec<u64> = primes
        .par_iter()
        .map(|&p| Ok((p, count_roots_prime_power(f, p, 2)? == 0)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter_map(|(p, none)| none.then_some(p))
        .collect();
    let mut alive = vec![true; d_max as usize + 1];
    for p in dead {
        for m in (p..=d_max).step_by(p as usize) {
            alive[m as usize] = false;
        }
    }
    let terms = (1..=d_max)
        .into_par_iter()
        .filter(|&d| mu[d as usize] != 0 && alive[d as usize])
        .map(|d| Ok(mu[d as usize] as i128 * (rho_interval(f, d * d, n_max)? as i128 - zeros)))
        .collect::<Result<Vec<i128>>>()?;
    let full_sum: i128 = terms.into_iter().sum();
    let s_f = count_squarefree_naive(f, n_max)?;
    Ok(MobiusReport { s_f, full_sum, d_max, equal: full_sum == s_f as i128 })
}

/// `Q_f(S, N) = #{(n, r, s) : n <= N, s <= S, f(n) = s r²}`.
pub fn count_qf(f: &IntPolynomial, s_max: u64, n_max: u64) -> Result<u64> {
    if s_max == 0 || n_max == 0 {
        return Ok(0);
    }
    let counts = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let v = f.evaluate(&BigInt::from(n));
            if !v.is_positive() {
                return Ok(0);
            }
            let v = v.to_u128().ok_or_else(|| Error::Budget(format!("f({n}) exceeds 128 bits")))?;
            // r² | v with v / r² <= S.
            let mut rs = vec![1u128];
            for (p, e) in factorize_u128(v)? {
                let mut next = Vec::with_capacity(rs.len() * (e as usize / 2 + 1));
                for &r in &rs {
                    let mut pr = r;
                    for _ in 0..=e / 2 {
                        next.push(pr);
                        pr *= p;
                    }
                }
                rs = next;
            }
            Ok(rs.into_iter().filter(|&r| v / (r * r) <= s_max as u128).count() as u64)
        })
        .collect::<Result<Vec<u64>>>()?;
    Ok(counts.into_iter().sum())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LargeSquareReport {
    #[serde(rename = "Q")]
    pub q: u64,
    pub bound_value: f64,
    pub ratio: f64,
}

/// `Q_f(S, N)` against `N^{1/2} S^{1/2} + S` for irreducible `f`.
pub fn check_large_square_bound(f: &IntPolynomial, s_max: u64, n_max: u64) -> Result<LargeSquareReport> {
    if !f.is_irreducible()? {
        return domain("f must be irreducible");
    }
    let q = count_qf(f, s_max, n_max)?;
    let bound_value = (n_max as f64).sqrt() * (s_max as f64).sqrt() + s_max as f64;
    let ratio = if bound_value == 0.0 { 0.0 } else { q as f64 / bound_value };
    Ok(LargeSquareReport { q, bound_value, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(c: &[i64]) -> IntPolynomial {
        IntPolynomial::from_i64(c)
    }

    #[test]
    fn naive_examples() {
        assert_eq!(count_squarefree_naive(&p(&[0, 1]), 10).unwrap(), 7);
        assert_eq!(count_squarefree_naive(&p(&[0, 0, 1]), 10).unwrap(), 1);
        assert_eq!(count_squarefree_naive(&p(&[1, 0, 1]), 5).unwrap(), 5);
        assert_eq!(count_squarefree_naive(&p(&[1, 2]), 10).unwrap(), 9);
        // f(3) = 0 is not square-free, f(4) = 1 is.
        assert_eq!(count_squarefree_naive(&p(&[-3, 1]), 4).unwrap(), 3);
    }

    #[test]
    fn sieve_examples() {
        assert_eq!(count_squarefree_sieve(&p(&[0, 1]), 1000).unwrap(), 608);
        let cubic = p(&[2, 0, 0, 1]);
        assert_eq!(
            count_squarefree_sieve(&cubic, 100).unwrap(),
            count_squarefree_naive(&cubic, 100).unwrap()
        );
        assert_eq!(count_squarefree_sieve(&p(&[1, 2]), 10).unwrap(), 9);
        assert_eq!(count_squarefree_sieve(&p(&[-3, 1]), 4).unwrap(), 3);
        assert!(count_squarefree_sieve(&p(&[2, 4]), 4).is_err());
    }

    #[test]
    fn sieve_handles_large_values() {
        // Values near 2^90 force cofactor factorization.
        let f = IntPolynomial::from_i64(&[7, 0, 0, 0, 0, 0, 1 << 30]);
        assert_eq!(count_squarefree_sieve(&f, 300).unwrap(), count_squarefree_naive(&f, 300).unwrap());
    }

    #[test]
    fn main_term_examples() {
        assert_eq!(sieve_main_term(&p(&[0, 1]), 100, 1).unwrap(), 100);
        assert_eq!(sieve_main_term(&p(&[0, 1]), 100, 10).unwrap(), 61);
        let f = p(&[1, 0, 1]);
        let direct: i128 = (1..=7u64)
            .map(|d| {
                let count = (1..=50u64).filter(|&n| (n * n + 1) % (d * d) == 0).count() as i128;
                arith::mobius(d).unwrap() as i128 * count
            })
            .sum();
        assert_eq!(sieve_main_term(&f, 50, 7).unwrap(), direct);
    }

    #[test]
    fn mobius_identity_examples() {
        for (f, n) in [(p(&[0, 1]), 30), (p(&[1, 0, 1]), 20), (p(&[-3, 1]), 12), (p(&[-1, 1]), 5)] {
            let r = mobius_identity_check(&f, n).unwrap();
            assert!(r.equal, "{f}: {r:?}");
        }
        let r = mobius_identity_check(&p(&[0, 0, 1, 2, 1]), 10).unwrap();
        assert_eq!(r.s_f, 0);
        assert!(r.equal);
    }

    #[test]
    fn qf_examples() {
        let x = p(&[0, 1]);
        assert_eq!(count_qf(&x, 1, 9).unwrap(), 3);
        assert_eq!(count_qf(&x, 2, 8).unwrap(), 4);
        assert_eq!(count_qf(&x, 0, 8).unwrap(), 0);
        // S past every value: each value contributes its square divisors.
        let f = p(&[1, 0, 1]);
        let all: u64 = (1..=30u64)
            .map(|n| {
                let v = n * n + 1;
                (1..=v).filter(|r| v % (r * r) == 0).count() as u64
            })
            .sum();
        assert_eq!(count_qf(&f, 1000, 30).unwrap(), all);
        // Negative values never contribute.
        assert_eq!(count_qf(&p(&[-100, 0, 0, -1]), 1000, 10).unwrap(), 0);
    }

    #[test]
    fn large_square_report() {
        let r = check_large_square_bound(&p(&[2, 0, 0, 1]), 10, 100).unwrap();
        assert!(r.ratio > 0.0 && r.q > 0);
        let r = check_large_square_bound(&p(&[2, 0, 0, 1]), 0, 100).unwrap();
        assert_eq!((r.q, r.ratio), (0, 0.0));
        assert!(check_large_square_bound(&p(&[0, 0, 1]), 5, 5).is_err());
    }

    #[test]
    fn report_error_interval() {
        let r = squarefree_report(&p(&[0, 1]), 1000, Method::Sieve, 1e-9).unwrap();
        assert_eq!(r.s_f, 608);
        let expect = (608.0 - 1000.0 * 0.607_927_101_854_026_6f64).abs();
        assert!(r.abs_error_lo <= expect && expect <= r.abs_error_hi);
        assert!(r.abs_error_hi - r.abs_error_lo < 1e-5);
    }

    fn small_poly() -> impl Strategy<Value = IntPolynomial> {
        (1usize..=5)
            .prop_flat_map(|k| (prop::collection::vec(-20i64..=20, k), 1i64..=20, any::<bool>()))
            .prop_map(|(mut c, lead, neg)| {
                c.push(if neg { -lead } else { lead });
                IntPolynomial::from_i64(&c)
            })
            .prop_filter("content 1", |f| f.content().map_or(false, |c| c == BigInt::from(1)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn sieve_equals_naive(f in small_poly(), n in 1u64..600) {
            prop_assert_eq!(count_squarefree_sieve(&f, n).unwrap(), count_squarefree_naive(&f, n).unwrap());
        }

        #[test]
        fn count_steps_by_at_most_one(f in small_poly(), n in 1u64..300) {
            let a = count_squarefree_naive(&f, n).unwrap();
            let b = count_squarefree_naive(&f, n + 1).unwrap();
            prop_assert!(a <= b && b <= a + 1);
        }

        #[test]
        fn qf_monotone(f in small_poly(), s in 0u64..30, n in 1u64..80) {
            let q = count_qf(&f, s, n).unwrap();
            prop_assert!(q <= count_qf(&f, s + 1, n).unwrap());
            prop_assert!(q <= count_qf(&f, s, n + 1).unwrap());
        }

        #[test]
        fn identity_exact(c in prop::collection::vec(-6i64..=6, 1..=3), lead in 1i64..=4, n in 1u64..120) {
            let mut c = c;
            c.push(lead);
            let f = IntPolynomial::from_i64(&c);
            prop_assert!(mobius_identity_check(&f, n).unwrap().equal);
        }
    }
}
