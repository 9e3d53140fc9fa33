//! Certified enclosures of the density constant `c_f = ∏_p (1 - ρ_f(p²)/p²)`.
//!
//! Primes up to a small bound enter as exact rationals. Beyond it the partial
//! product is carried in 120-bit fixed point with the lower end rounded down
//! and the upper end rounded up at every step. Primes dividing `Δ_f` are found
//! by factoring `Δ_f` and always enter exactly. The remaining tail over
//! `p > P` uses `ρ_f(p²) = ρ_f(p) <= k`, so it lies in
//! `[1 - k·T(P), 1]` with `T(P) >= ∑_{p>P} p^{-2}`.
//!
//! `T(P) = min(1/P, 2.51012/(P ln P))`. The second form follows from
//! `π(x) < 1.25506 x / ln x` (Rosser–Schoenfeld, valid for all `x > 1`) by
//! partial summation.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::arith::{self, primes_in_range};
use crate::error::{domain, Error, Result};
use crate::modpoly;
use crate::polynomial::IntPolynomial;
use crate::roots::count_roots_prime_power;

const FRAC_BITS: u32 = 120;

/// Tuning knobs for [`compute_cf_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CfConfig {
    /// Primes up to this bound are multiplied as exact rationals.
    pub exact_prime_bound: u64,
    /// First truncation point for the certified product.
    pub initial_prime_bound: u64,
    /// Work budget: the truncation point may not grow past this.
    pub max_prime_bound: u64,
    /// Primes up to this bound are trial-divided out of `Δ_f` before
    /// attempting a full factorization of what remains.
    pub discriminant_trial_bound: u64,
}

impl Default for CfConfig {
    fn default() -> Self {
        CfConfig {
            exact_prime_bound: 100,
            initial_prime_bound: 1 << 10,
            max_prime_bound: 1 << 31,
            discriminant_trial_bound: 1 << 16,
        }
    }
}

/// An interval `[lo, hi]` certified to contain `c_f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Enclosure {
    pub lo: f64,
    pub hi: f64,
    /// Largest prime whose local factor entered exactly.
    pub terms_used: u64,
}

impl Enclosure {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_zero(&self) -> bool {
        self.lo == 0.0 && self.hi == 0.0
    }
}

/// The exact local factor `1 - ρ_f(p²)/p²`.
pub fn local_factor(f: &IntPolynomial, p: u64) -> Result<BigRational> {
    let rho = count_roots_prime_power(f, p, 2)?;
    let p2 = BigInt::from(p) * BigInt::from(p);
    Ok(BigRational::new(&p2 - BigInt::from(rho), p2))
}

fn require_primitive(f: &IntPolynomial) -> Result<usize> {
    let k = match f.degree() {
        Some(k) if k >= 1 => k,
        _ => return domain("polynomial must have degree >= 1"),
    };
    if !f.content()?.is_one() {
        return domain("content must be 1");
    }
    Ok(k)
}

/// The least prime `p` with `p² | f(n)` for every `n`, if any.
///
/// Only `p <= k` can qualify: `p | f(n)` for all `n` makes the reduction of
/// `f` modulo `p` a multiple of `X^p - X`, which needs degree `p`.
pub fn has_fixed_square_divisor(f: &IntPolynomial) -> Result<Option<u64>> {
    let k = require_primitive(f)?;
    for p in arith::sieve_primes(k.max(2) as u64)? {
        if p as usize > k {
            break;
        }
        if count_roots_prime_power(f, p, 2)? == p * p {
            return Ok(Some(p));
        }
    }
    Ok(None)
}

/// Bound on `∑_{p > P} 1/p²`.
pub fn prime_square_tail(p: u64) -> f64 {
    let pf = p as f64;
    let rs = 2.51012 / (pf * pf.ln());
    // Inflate slightly to dominate rounding in the expression above.
    (1.0 / pf).min(rs) * (1.0 + 1e-12)
}

/// `floor(x · num / den)` and `ceil(x · num / den)` for `num <= den < 2^64`.
#[inline]
fn scale_fixed(x: u128, num: u64, den: u64) -> (u128, u128) {
    let (num, den) = (num as u128, den as u128);
    let q = x / den;
    let r = x % den;
    let prod = r * num;
    let base = q * num + prod / den;
    (base, base + u128::from(prod % den != 0))
}

fn rational_to_fixed(r: &BigRational) -> (u128, u128) {
    let scaled = r.numer() << FRAC_BITS;
    let (q, rem) = scaled.div_rem(r.denom());
    let lo = q.to_u128().expect("value in [0, 1]");
    (lo, lo + u128::from(!rem.is_zero()))
}

fn fixed_down(x: u128) -> f64 {
    let v = x as f64 * (-(FRAC_BITS as f64)).exp2();
    if v == 0.0 {
        0.0
    } else {
        v.next_down()
    }
}

fn fixed_up(x: u128) -> f64 {
    let v = x as f64 * (-(FRAC_BITS as f64)).exp2();
    if x == 0 {
        0.0
    } else {
        v.next_up()
    }
}

/// What is known about the prime divisors of `Δ_f`.
#[derive(Debug, Clone)]
struct DiscriminantPrimes {
    known: Vec<u64>,
    /// Unfactored part; all its prime factors exceed `trial_bound`.
    cofactor: Option<BigInt>,
    trial_bound: u64,
}

impl DiscriminantPrimes {
    fn analyse(delta: &BigInt, trial_bound: u64) -> Self {
        let mut rest = delta.abs();
        let mut known = Vec::new();
        if rest.is_zero() {
            return DiscriminantPrimes { known, cofactor: None, trial_bound };
        }
        for p in primes_in_range(2, trial_bound) {
            let pb = BigInt::from(p);
            if (&rest % &pb).is_zero() {
                known.push(p);
                while (&rest % &pb).is_zero() {
                    rest /= &pb;
                }
            }
            if rest.is_one() {
                break;
            }
        }
        let mut cofactor = None;
        if !rest.is_one() {
            // Past 80 bits rho may need ~2^40 steps; leave such parts to the tail bound.
            let feasible = rest.to_u128().filter(|&c| c < 1 << 80 || arith::is_prime(c));
            match feasible.map(arith::factorize_u128) {
                Some(Ok(fs)) if fs.iter().all(|&(p, _)| p < 1 << 63) => {
                    known.extend(fs.iter().map(|&(p, _)| p as u64));
                }
                _ => cofactor = Some(rest),
            }
        }
        known.sort_unstable();
        known.dedup();
        DiscriminantPrimes { known, cofactor, trial_bound }
    }

    fn divides(&self, p: u64, set: &HashSet<u64>) -> bool {
        set.contains(&p)
            || self.cofactor.as_ref().is_some_and(|c| (c % BigInt::from(p)).is_zero())
    }
}

/// Incremental certified product: refining to a larger prime bound never
/// widens the enclosure.
pub struct CfRefiner {
    f: IntPolynomial,
    k: usize,
    config: CfConfig,
    disc: DiscriminantPrimes,
    disc_set: HashSet<u64>,
    lo: u128,
    hi: u128,
    bound: u64,
    last_prime: u64,
    best: Enclosure,
    zero: Option<u64>,
}

impl CfRefiner {
    pub fn new(f: &IntPolynomial, config: CfConfig) -> Result<Self> {
        let k = require_primitive(f)?;
        let delta = if k >= 2 { f.discriminant()? } else { BigInt::one() };
        // A repeated factor g² gives ρ_f(p²) >= p·ρ_g(p), so the product diverges to 0.
        let zero = if delta.is_zero() { Some(0) } else { has_fixed_square_divisor(f)? };
        let disc = DiscriminantPrimes::analyse(&delta, config.discriminant_trial_bound);
        let disc_set: HashSet<u64> = disc.known.iter().copied().collect();
        let mut r = CfRefiner {
            f: f.clone(),
            k,
            config,
            disc,
            disc_set,
            lo: 0,
            hi: 0,
            bound: 1,
            last_prime: 2,
            best: Enclosure { lo: 0.0, hi: 1.0, terms_used: 1 },
            zero,
        };
        if let Some(p) = zero {
            r.best = Enclosure { lo: 0.0, hi: 0.0, terms_used: p };
            return Ok(r);
        }
        // Exact head, plus every known prime divisor of the discriminant.
        let head = config.exact_prime_bound.max(2);
        let mut prod = BigRational::one();
        for p in primes_in_range(2, head) {
            prod *= local_factor(f, p)?;
            r.last_prime = p;
        }
        for &q in r.disc.known.iter().filter(|&&q| q > head) {
            prod *= local_factor(f, q)?;
        }
        (r.lo, r.hi) = rational_to_fixed(&prod);
        r.bound = head;
        r.best = r.current();
        Ok(r)
    }

    /// `ρ_f(p²)` for a prime `p` above the exact head.
    fn rho_p2(&self, p: u64) -> Result<u64> {
        if p as usize <= self.k || self.disc.divides(p, &self.disc_set) {
            return count_roots_prime_power(&self.f, p, 2);
        }
        // p ∤ Δ_f: every root modulo p is simple and lifts uniquely.
        let fp = self.f.mod_prime(p);
        Ok(match modpoly::degree(&fp) {
            None => unreachable!("content 1"),
            Some(0) => 0,
            Some(1) => 1,
            Some(_) if p < 1 << 32 => modpoly::count_roots_small(&fp, p) as u64,
            Some(_) => modpoly::degree(&modpoly::split_part(&fp, p)).unwrap_or(0) as u64,
        })
    }

    /// Extends the exact product to all primes up to `bound`.
    pub fn refine_to(&mut self, bound: u64) -> Result<Enclosure> {
        if self.zero.is_some() || bound <= self.bound {
            return Ok(self.best);
        }
        if bound > self.config.max_prime_bound {
            return Err(Error::Budget(format!(
                "prime bound {bound} exceeds {}",
                self.config.max_prime_bound
            )));
        }
        for p in primes_in_range(self.bound + 1, bound) {
            if self.disc_set.contains(&p) {
                continue;
            }
            let rho = self.rho_p2(p)?;
            let p2 = p * p;
            (self.lo, _) = scale_fixed(self.lo, p2 - rho, p2);
            (_, self.hi) = scale_fixed(self.hi, p2 - rho, p2);
            self.last_prime = p;
        }
        self.bound = bound;
        let now = self.current();
        self.best = Enclosure {
            lo: self.best.lo.max(now.lo),
            hi: self.best.hi.min(now.hi),
            terms_used: now.terms_used,
        };
        Ok(self.best)
    }

    fn current(&self) -> Enclosure {
        let k = self.k as f64;
        let bound = self.bound.max(2);
        let mut tail = 1.0 - k * prime_square_tail(bound);
        // Prime divisors of an unfactored discriminant part above the bound:
        // each local factor is at least 1 - k/p.
        if let Some(c) = &self.disc.cofactor {
            let floor_p = bound.max(self.disc.trial_bound) as f64;
            let count = (c.bits() as f64 / floor_p.log2()).floor() + 1.0;
            tail *= (1.0 - k / floor_p).max(0.0).powf(count);
        }
        let lo = (fixed_down(self.lo) * tail.max(0.0)).next_down().max(0.0);
        let hi = fixed_up(self.hi).min(1.0);
        Enclosure { lo, hi, terms_used: self.last_prime }
    }

    pub fn enclosure(&self) -> Enclosure {
        self.best
    }
}

/// [`compute_cf_with`] under the default configuration.
pub fn compute_cf(f: &IntPolynomial, tolerance: f64) -> Result<Enclosure> {
    compute_cf_with(f, tolerance, CfConfig::default())
}

/// An enclosure of `c_f` no wider than `tolerance`; `[0, 0]` when `f` has a
/// fixed square divisor or a repeated factor.
pub fn compute_cf_with(f: &IntPolynomial, tolerance: f64, config: CfConfig) -> Result<Enclosure> {
    Ok(*compute_cf_trace(f, tolerance, config)?.last().expect("at least one step"))
}

/// Every intermediate enclosure of [`compute_cf_with`], one per prime bound.
pub fn compute_cf_trace(f: &IntPolynomial, tolerance: f64, config: CfConfig) -> Result<Vec<Enclosure>> {
    if !(tolerance > 0.0) {
        return domain("tolerance must be positive");
    }
    let mut refiner = CfRefiner::new(f, config)?;
    let mut trace = vec![refiner.refine_to(config.initial_prime_bound)?];
    while trace[trace.len() - 1].width() > tolerance {
        let next = refiner.bound.saturating_mul(2);
        if next > config.max_prime_bound {
            return Err(Error::Budget(format!(
                "tolerance {tolerance} not reached below prime bound {}",
                config.max_prime_bound
            )));
        }
        trace.push(refiner.refine_to(next)?);
    }
    Ok(trace)
}
