//! Exact integer arithmetic: prime sieves, factorization, Möbius and divisor
//! functions, square-freeness.
//!
//! Factorization works on magnitudes below 2^128. Small factors are removed by
//! trial division, cofactors are certified prime by Miller–Rabin (a
//! deterministic witness set below 3.3·10^24, fixed extra witnesses above) and
//! composite cofactors are split with Brent's variant of Pollard's rho using
//! fixed, deterministic parameters.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest sieve limit accepted by [`sieve_primes`] (odd-only bitset of 128 MiB).
pub const MAX_SIEVE_LIMIT: u64 = 1 << 31;

/// Primes below this bound are removed by trial division before rho is tried.
const TRIAL_LIMIT: u64 = 1 << 12;

/// Iterations allowed per rho attempt before switching the polynomial constant.
const RHO_ITERATIONS: u64 = 1 << 24;
const RHO_ATTEMPTS: u64 = 8;

/// Witnesses that make Miller–Rabin deterministic below 3.3·10^24.
const MR_BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
/// Additional fixed witnesses used above that range.
const MR_EXTRA_BASES: [u64; 8] = [
    0x2545_f491_4f6c_dd1d,
    0x9e37_79b9_7f4a_7c15,
    0xbf58_476d_1ce4_e5b9,
    0x94d0_49bb_1331_11eb,
    0x6a09_e667_f3bc_c909,
    0xbb67_ae85_84ca_a73b,
    0x3c6e_f372_fe94_f82b,
    0xa54f_f53a_5f1d_36f1,
];
const MR_DETERMINISTIC_LIMIT: u128 = 3_317_044_064_679_887_385_961_981;

/// Complete factorization of a nonzero integer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Factorization {
    #[serde(serialize_with = "serialize_bigint")]
    pub value: BigInt,
    /// `(prime, exponent)` pairs, primes strictly increasing.
    pub factors: Vec<(u128, u32)>,
}

fn serialize_bigint<S: serde::Serializer>(v: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

impl Factorization {
    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    pub fn mobius(&self) -> i8 {
        if !self.is_squarefree() {
            0
        } else if self.factors.len() % 2 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn divisor_count(&self) -> u64 {
        self.factors.iter().map(|&(_, e)| u64::from(e) + 1).product()
    }

    /// Product of `prime^exponent` over all factors, i.e. `|value|`.
    pub fn recompose(&self) -> BigInt {
        let mut acc = BigInt::one();
        for &(p, e) in &self.factors {
            acc *= BigInt::from(p).pow(e);
        }
        acc
    }
}

/// All primes `<= limit`, ascending.
pub fn sieve_primes(limit: u64) -> Result<Vec<u64>> {
    if limit < 2 {
        return Err(Error::Domain(format!("sieve limit {limit} < 2")));
    }
    if limit > MAX_SIEVE_LIMIT {
        return Err(Error::Capacity(format!(
            "sieve limit {limit} exceeds {MAX_SIEVE_LIMIT}"
        )));
    }
    Ok(primes_in_range(2, limit))
}

/// Primes in `[lo, hi]` by a segmented odd-only sieve.
pub fn primes_in_range(lo: u64, hi: u64) -> Vec<u64> {
    let mut out = Vec::new();
    if hi < 2 || lo > hi {
        return out;
    }
    if lo <= 2 {
        out.push(2);
    }
    let root = hi.sqrt();
    let base: Vec<u64> = if root < 3 {
        Vec::new()
    } else {
        simple_sieve(root).into_iter().filter(|&p| p > 2).collect()
    };
    // Odd numbers only: index i of a segment starting at odd `start` is start + 2i.
    const SEG: u64 = 1 << 18;
    let mut start = lo.max(3) | 1;
    let mut seg = vec![true; SEG as usize];
    while start <= hi {
        let end = (start + 2 * (SEG - 1)).min(hi);
        let len = ((end - start) / 2 + 1) as usize;
        seg[..len].iter_mut().for_each(|b| *b = true);
        for &p in &base {
            if p * p > end {
                break;
            }
            let mut first = (start.div_ceil(p) * p).max(p * p);
            if first % 2 == 0 {
                first += p;
            }
            let mut j = first;
            while j <= end {
                seg[((j - start) / 2) as usize] = false;
                j += 2 * p;
            }
        }
        for (i, &is_p) in seg[..len].iter().enumerate() {
            if is_p {
                let v = start + 2 * i as u64;
                if v > 1 {
                    out.push(v);
                }
            }
        }
        if end == hi {
            break;
        }
        start = end + 2;
    }
    out
}

fn simple_sieve(limit: u64) -> Vec<u64> {
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Cached primes below `TRIAL_LIMIT`.
pub(crate) fn small_primes() -> &'static [u64] {
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| simple_sieve(TRIAL_LIMIT))
}

#[inline]
pub(crate) fn mulmod64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn powmod64(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod64(acc, base, m);
        }
        base = mulmod64(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Modular inverse of `a` modulo `m`, if it exists.
pub(crate) fn invmod64(a: u64, m: u64) -> Option<u64> {
    let (g, x, _) = ext_gcd(a as i128 % m as i128, m as i128);
    if g != 1 {
        return None;
    }
    Some(x.rem_euclid(m as i128) as u64)
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &MR_BASES {
        if n % p == 0 {
            return n == p;
        }
    }
    let d = (n - 1) >> (n - 1).trailing_zeros();
    let s = (n - 1).trailing_zeros();
    'witness: for &a in &MR_BASES {
        let mut x = powmod64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod64(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Full 256-bit product of two `u128` values as `(high, low)`.
#[inline]
fn mul_wide(a: u128, b: u128) -> (u128, u128) {
    const MASK: u128 = u64::MAX as u128;
    let (a0, a1) = (a & MASK, a >> 64);
    let (b0, b1) = (b & MASK, b >> 64);
    let p00 = a0 * b0;
    let p01 = a0 * b1;
    let p10 = a1 * b0;
    let p11 = a1 * b1;
    let mid = (p00 >> 64) + (p01 & MASK) + (p10 & MASK);
    let lo = (p00 & MASK) | (mid << 64);
    let hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
    (hi, lo)
}

/// Montgomery arithmetic modulo an odd `u128` with `R = 2^128`.
struct Montgomery {
    n: u128,
    n_neg_inv: u128,
    r2: u128,
}

impl Montgomery {
    fn new(n: u128) -> Self {
        debug_assert!(n % 2 == 1 && n > 1);
        let mut inv = n;
        for _ in 0..7 {
            inv = inv.wrapping_mul(2u128.wrapping_sub(n.wrapping_mul(inv)));
        }
        let r1 = (u128::MAX % n + 1) % n;
        let mut r2 = r1;
        for _ in 0..128 {
            r2 = addmod128(r2, r2, n);
        }
        Montgomery { n, n_neg_inv: inv.wrapping_neg(), r2 }
    }

    #[inline]
    fn redc(&self, hi: u128, lo: u128) -> u128 {
        let m = lo.wrapping_mul(self.n_neg_inv);
        let (mh, ml) = mul_wide(m, self.n);
        let (_, carry) = lo.overflowing_add(ml);
        let (t1, o1) = hi.overflowing_add(mh);
        let (t2, o2) = t1.overflowing_add(carry as u128);
        if o1 || o2 || t2 >= self.n {
            t2.wrapping_sub(self.n)
        } else {
            t2
        }
    }

    #[inline]
    fn mul(&self, a: u128, b: u128) -> u128 {
        let (hi, lo) = mul_wide(a, b);
        self.redc(hi, lo)
    }

    fn to_mont(&self, a: u128) -> u128 {
        self.mul(a % self.n, self.r2)
    }

    fn pow(&self, base: u128, mut exp: u128) -> u128 {
        let mut acc = self.to_mont(1);
        let mut b = base;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            exp >>= 1;
        }
        acc
    }
}

#[inline]
fn addmod128(a: u128, b: u128, n: u128) -> u128 {
    let (s, o) = a.overflowing_add(b);
    if o || s >= n {
        s.wrapping_sub(n)
    } else {
        s
    }
}

fn is_prime_u128(n: u128) -> bool {
    if n <= u64::MAX as u128 {
        return is_prime_u64(n as u64);
    }
    if n % 2 == 0 {
        return false;
    }
    let mont = Montgomery::new(n);
    let one = mont.to_mont(1);
    let minus_one = mont.to_mont(n - 1);
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    let extra: &[u64] = if n < MR_DETERMINISTIC_LIMIT { &[] } else { &MR_EXTRA_BASES };
    'witness: for &a in MR_BASES.iter().chain(extra) {
        let a = a as u128 % n;
        if a < 2 {
            continue;
        }
        let mut x = mont.pow(mont.to_mont(a), d);
        if x == one || x == minus_one {
            continue;
        }
        for _ in 1..s {
            x = mont.mul(x, x);
            if x == minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Primality of a nonnegative integer below 2^128.
pub fn is_prime(n: u128) -> bool {
    is_prime_u128(n)
}

fn gcd_u128(a: u128, b: u128) -> u128 {
    a.gcd(&b)
}

/// One nontrivial factor of an odd composite `n`, by Brent's rho.
fn rho_split(n: u128) -> Result<u128> {
    if n <= u64::MAX as u128 {
        return rho_split_u64(n as u64).map(u128::from);
    }
    let mont = Montgomery::new(n);
    for c in 1..=RHO_ATTEMPTS {
        let c = mont.to_mont(c as u128);
        let step = |v: u128| addmod128(mont.mul(v, v), c, n);
        let mut y = mont.to_mont(2);
        let (mut r, mut q, mut g) = (1u64, mont.to_mont(1), 1u128);
        let mut x = y;
        let mut ys = y;
        let mut iters = 0u64;
        while g == 1 && iters < RHO_ITERATIONS {
            x = y;
            for _ in 0..r {
                y = step(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                let lim = 128.min(r - k);
                for _ in 0..lim {
                    y = step(y);
                    q = mont.mul(q, x.abs_diff(y));
                }
                g = gcd_u128(q, n);
                k += lim;
            }
            iters += r;
            r *= 2;
        }
        if g == n {
            loop {
                ys = step(ys);
                g = gcd_u128(x.abs_diff(ys), n);
                if g > 1 {
                    break;
                }
            }
        }
        if g > 1 && g < n {
            return Ok(g);
        }
    }
    Err(Error::Budget(format!("rho failed to split {n}")))
}

fn rho_split_u64(n: u64) -> Result<u64> {
    for c in 1..=RHO_ATTEMPTS {
        let step = |v: u64| ((v as u128 * v as u128 + c as u128) % n as u128) as u64;
        let mut y = 2u64;
        let (mut r, mut q, mut g) = (1u64, 1u64, 1u64);
        let mut x = y;
        let mut ys = y;
        let mut iters = 0u64;
        while g == 1 && iters < RHO_ITERATIONS {
            x = y;
            for _ in 0..r {
                y = step(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                let lim = 128.min(r - k);
                for _ in 0..lim {
                    y = step(y);
                    q = mulmod64(q, x.abs_diff(y), n);
                }
                g = q.gcd(&n);
                k += lim;
            }
            iters += r;
            r *= 2;
        }
        if g == n {
            loop {
                ys = step(ys);
                g = x.abs_diff(ys).gcd(&n);
                if g > 1 {
                    break;
                }
            }
        }
        if g > 1 && g < n {
            return Ok(g);
        }
    }
    Err(Error::Budget(format!("rho failed to split {n}")))
}

/// Exact square root if `n` is a perfect square.
pub fn exact_sqrt(n: u128) -> Option<u128> {
    let r = n.sqrt();
    (r * r == n).then_some(r)
}

fn push_large(n: u128, out: &mut Vec<u128>) -> Result<()> {
    if n == 1 {
        return Ok(());
    }
    if is_prime_u128(n) {
        out.push(n);
        return Ok(());
    }
    if let Some(r) = exact_sqrt(n) {
        push_large(r, out)?;
        return push_large(r, out);
    }
    let d = rho_split(n)?;
    push_large(d, out)?;
    push_large(n / d, out)
}

/// Prime factorization of `n > 0` below 2^128.
pub fn factorize_u128(n: u128) -> Result<Vec<(u128, u32)>> {
    if n == 0 {
        return Err(Error::Domain("cannot factorize 0".into()));
    }
    let mut out: Vec<(u128, u32)> = Vec::new();
    let mut rest = n;
    for &p in small_primes() {
        let p = p as u128;
        if p * p > rest {
            break;
        }
        if rest % p == 0 {
            let mut e = 0;
            while rest % p == 0 {
                rest /= p;
                e += 1;
            }
            out.push((p, e));
        }
    }
    if rest > 1 {
        let lim = TRIAL_LIMIT as u128;
        if rest < lim * lim {
            out.push((rest, 1));
        } else {
            let mut big = Vec::new();
            push_large(rest, &mut big)?;
            big.sort_unstable();
            for p in big {
                match out.last_mut() {
                    Some((q, e)) if *q == p => *e += 1,
                    _ => out.push((p, 1)),
                }
            }
        }
    }
    Ok(out)
}

/// Complete prime factorization of a nonzero integer.
pub fn factorize(n: &BigInt) -> Result<Factorization> {
    if n.is_zero() {
        return Err(Error::Domain("cannot factorize 0".into()));
    }
    let mag = n.abs();
    let m = mag.to_u128().ok_or_else(|| {
        Error::Budget(format!("{} bits exceeds the 128-bit factorization budget", mag.bits()))
    })?;
    Ok(Factorization { value: n.clone(), factors: factorize_u128(m)? })
}

/// Möbius function of `n >= 1`.
pub fn mobius(n: u64) -> Result<i8> {
    if n == 0 {
        return Err(Error::Domain("mobius(0) is undefined".into()));
    }
    Ok(factorize_u128(n as u128)?.iter().fold(1i8, |acc, &(_, e)| if e > 1 { 0 } else { -acc }))
}

/// True iff no prime square divides `n`. `n` must be nonzero.
pub fn is_squarefree(n: &BigInt) -> Result<bool> {
    if n.is_zero() {
        return Err(Error::Domain("is_squarefree(0) is undefined".into()));
    }
    let m = n.magnitude().to_u128().ok_or_else(|| {
        Error::Budget(format!("{} bits exceeds the 128-bit factorization budget", n.bits()))
    })?;
    is_squarefree_u128(m)
}

/// Square-freeness of a positive `u128`, stopping early on the first repeated prime.
pub fn is_squarefree_u128(n: u128) -> Result<bool> {
    if n == 0 {
        return Err(Error::Domain("is_squarefree(0) is undefined".into()));
    }
    let mut rest = n;
    for &p in small_primes() {
        let p = p as u128;
        if p * p > rest {
            return Ok(true);
        }
        if rest % p == 0 {
            rest /= p;
            if rest % p == 0 {
                return Ok(false);
            }
        }
    }
    rough_is_squarefree(rest, TRIAL_LIMIT as u128)
}

/// `μ(n)` for `0 <= n <= limit` by a linear sieve; entry 0 is 0.
pub fn mobius_table(limit: u64) -> Result<Vec<i8>> {
    if limit > MAX_SIEVE_LIMIT {
        return Err(Error::Capacity(format!("Möbius table up to {limit} exceeds {MAX_SIEVE_LIMIT}")));
    }
    let n = limit as usize;
    let mut mu = vec![1i8; n + 1];
    mu[0] = 0;
    let mut composite = vec![false; n + 1];
    let mut primes: Vec<usize> = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            primes.push(i);
            mu[i] = -1;
        }
        for &p in &primes {
            let ip = i * p;
            if ip > n {
                break;
            }
            composite[ip] = true;
            if i % p == 0 {
                mu[ip] = 0;
                break;
            }
            mu[ip] = -mu[i];
        }
    }
    Ok(mu)
}

/// Serializes a ratio as `"p/q"`, or `"p"` for integers.
pub fn ratio_string<S, T>(r: &num_rational::Ratio<T>, s: S) -> std::result::Result<S::Ok, S::Error>
where
    S: serde::Serializer,
    T: Clone + Integer + std::fmt::Display,
{
    s.collect_str(r)
}

/// Square-freeness of `n` whose prime factors all exceed `bound`.
pub(crate) fn rough_is_squarefree(n: u128, bound: u128) -> Result<bool> {
    if n == 1 {
        return Ok(true);
    }
    // At most one prime factor.
    if bound.checked_mul(bound).map_or(true, |b2| n <= b2) {
        return Ok(true);
    }
    if exact_sqrt(n).is_some() {
        return Ok(false);
    }
    // Exactly two prime factors, and not a square: distinct.
    if bound
        .checked_mul(bound)
        .and_then(|b2| b2.checked_mul(bound))
        .map_or(true, |b3| n <= b3)
    {
        return Ok(true);
    }
    Ok(factorize_u128(n)?.iter().all(|&(_, e)| e == 1))
}

/// Number of positive divisors of `|n|`.
pub fn divisor_count(n: &BigInt) -> Result<u64> {
    Ok(factorize(n)?.divisor_count())
}

/// gcd of the absolute values; 0 only when every entry is 0.
pub fn vector_gcd(values: &[BigInt]) -> Result<BigInt> {
    if values.is_empty() {
        return Err(Error::Domain("vector_gcd of an empty list".into()));
    }
    Ok(values.iter().fold(BigInt::zero(), |acc, v| acc.gcd(v)))
}

/// `i64` convenience wrapper around [`vector_gcd`].
pub fn vector_gcd_i64(values: &[i64]) -> u64 {
    values.iter().fold(0u64, |acc, &v| acc.gcd(&v.unsigned_abs()))
}
