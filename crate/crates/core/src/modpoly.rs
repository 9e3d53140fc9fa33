//! Dense univariate polynomials over Z/pZ, coefficients low to high.

use crate::arith::{invmod64, mulmod64};

pub(crate) type ModPoly = Vec<u64>;

pub(crate) fn trim(mut a: ModPoly) -> ModPoly {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

pub(crate) fn degree(a: &[u64]) -> Option<usize> {
    a.iter().rposition(|&c| c != 0)
}

pub(crate) fn eval(a: &[u64], x: u64, p: u64) -> u64 {
    a.iter().rev().fold(0u64, |acc, &c| (mulmod64(acc, x, p) + c) % p)
}

pub(crate) fn derivative(a: &[u64], p: u64) -> ModPoly {
    trim(a.iter().enumerate().skip(1).map(|(i, &c)| mulmod64(c, i as u64 % p, p)).collect())
}

pub(crate) fn sub(a: &[u64], b: &[u64], p: u64) -> ModPoly {
    let n = a.len().max(b.len());
    trim(
        (0..n)
            .map(|i| {
                let x = a.get(i).copied().unwrap_or(0);
                let y = b.get(i).copied().unwrap_or(0);
                (x + p - y) % p
            })
            .collect(),
    )
}

pub(crate) fn mul(a: &[u64], b: &[u64], p: u64) -> ModPoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u128; a.len() + b.len() - 1];
    let p128 = p as u128;
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x as u128 * y as u128) % p128;
        }
    }
    trim(out.into_iter().map(|c| c as u64).collect())
}

/// Quotient and remainder of `a` by nonzero `b`.
pub(crate) fn divrem(a: &[u64], b: &[u64], p: u64) -> (ModPoly, ModPoly) {
    let db = degree(b).expect("division by the zero polynomial");
    let inv = invmod64(b[db], p).expect("leading coefficient invertible modulo a prime");
    let mut r: ModPoly = trim(a.to_vec());
    if r.len() <= db {
        return (Vec::new(), r);
    }
    let mut q = vec![0u64; r.len() - db];
    while let Some(dr) = degree(&r) {
        if dr < db {
            break;
        }
        let c = mulmod64(r[dr], inv, p);
        let shift = dr - db;
        q[shift] = c;
        for (i, &bc) in b[..=db].iter().enumerate() {
            let t = mulmod64(c, bc, p);
            r[shift + i] = (r[shift + i] + p - t) % p;
        }
        r = trim(r);
    }
    (trim(q), r)
}

pub(crate) fn rem(a: &[u64], b: &[u64], p: u64) -> ModPoly {
    divrem(a, b, p).1
}

pub(crate) fn monic(a: ModPoly, p: u64) -> ModPoly {
    match degree(&a) {
        None => a,
        Some(d) => {
            let inv = invmod64(a[d], p).expect("unit leading coefficient");
            a.into_iter().map(|c| mulmod64(c, inv, p)).collect()
        }
    }
}

/// Monic gcd.
pub(crate) fn gcd(a: &[u64], b: &[u64], p: u64) -> ModPoly {
    let (mut x, mut y) = (trim(a.to_vec()), trim(b.to_vec()));
    while !y.is_empty() {
        let r = rem(&x, &y, p);
        x = y;
        y = r;
    }
    monic(x, p)
}

/// `base^e mod modulus`.
pub(crate) fn powmod(base: &[u64], mut e: u64, modulus: &[u64], p: u64) -> ModPoly {
    let mut acc: ModPoly = rem(&[1], modulus, p);
    let mut b = rem(base, modulus, p);
    while e > 0 {
        if e & 1 == 1 {
            acc = rem(&mul(&acc, &b, p), modulus, p);
        }
        b = rem(&mul(&b, &b, p), modulus, p);
        e >>= 1;
    }
    acc
}

/// The product of the distinct linear factors of `f`: `gcd(f, X^p - X)`.
pub(crate) fn split_part(f: &[u64], p: u64) -> ModPoly {
    if degree(f).unwrap_or(0) == 0 {
        return vec![1];
    }
    let xp = powmod(&[0, 1], p, f, p);
    gcd(f, &sub(&xp, &[0, 1], p), p)
}

/// Number of distinct roots of `f` in Z/pZ for a prime `p < 2^32`.
pub(crate) fn count_roots_small(f: &[u64], p: u64) -> usize {
    debug_assert!(p < 1 << 32);
    let f = monic(trim(f.to_vec()), p);
    let d = match degree(&f) {
        None => return p as usize,
        Some(0) => return 0,
        Some(1) => return 1,
        Some(d) => d,
    };
    // X^p mod f by left-to-right square and multiply-by-X.
    let mut acc = vec![0u64; d];
    acc[0] = 1;
    let mut prod = vec![0u64; 2 * d];
    for bit in (0..64 - p.leading_zeros()).rev() {
        prod.fill(0);
        for i in 0..d {
            if acc[i] == 0 {
                continue;
            }
            for j in 0..d {
                let s = prod[i + j] + acc[i] * acc[j] % p;
                prod[i + j] = if s >= p { s - p } else { s };
            }
        }
        if (p >> bit) & 1 == 1 {
            prod.rotate_right(1);
        }
        for top in (d..2 * d).rev() {
            let c = prod[top];
            if c == 0 {
                continue;
            }
            prod[top] = 0;
            for j in 0..d {
                let t = c * f[j] % p;
                let slot = &mut prod[top - d + j];
                *slot = if *slot >= t { *slot - t } else { *slot + p - t };
            }
        }
        acc.copy_from_slice(&prod[..d]);
    }
    acc[1] = (acc[1] + p - 1) % p;
    degree(&gcd(&f, &trim(acc), p)).unwrap_or(d)
}

/// Roots in Z/pZ of a nonzero `f` that splits into distinct linear factors.
fn roots_of_split(f: ModPoly, p: u64, out: &mut Vec<u64>) {
    match degree(&f) {
        None | Some(0) => {}
        Some(1) => {
            let f = monic(f, p);
            out.push((p - f[0]) % p);
        }
        Some(_) => {
            // Equal-degree splitting with deterministic shifts a = 0, 1, 2, ...
            let half = (p - 1) / 2;
            for a in 0..p {
                let t = powmod(&[a, 1], half, &f, p);
                let g = gcd(&f, &sub(&t, &[1], p), p);
                let dg = degree(&g).unwrap_or(0);
                if dg > 0 && dg < degree(&f).unwrap() {
                    let other = divrem(&f, &g, p).0;
                    roots_of_split(g, p, out);
                    roots_of_split(other, p, out);
                    return;
                }
            }
            unreachable!("equal-degree splitting exhausted all shifts");
        }
    }
}

/// Sorted roots of a nonzero `f` in Z/pZ by gcd with the Frobenius.
pub(crate) fn roots_frobenius(f: &[u64], p: u64) -> Vec<u64> {
    let mut out = Vec::new();
    if p == 2 {
        out.extend((0..2).filter(|&x| eval(f, x, p) == 0));
        return out;
    }
    let s = split_part(f, p);
    roots_of_split(s, p, &mut out);
    out.sort_unstable();
    out
}

/// Sorted roots of `f` in Z/pZ by scanning every residue.
pub(crate) fn roots_scan(f: &[u64], p: u64) -> Vec<u64> {
    (0..p).filter(|&x| eval(f, x, p) == 0).collect()
}

/// Degrees of the irreducible factors of a squarefree `f` (distinct-degree factorization).
pub(crate) fn factor_degrees(f: &[u64], p: u64) -> Vec<usize> {
    let mut g = monic(trim(f.to_vec()), p);
    let mut degs = Vec::new();
    let mut h: ModPoly = vec![0, 1];
    let mut i = 1;
    while let Some(dg) = degree(&g) {
        if dg < 2 * i {
            if dg > 0 {
                degs.push(dg);
            }
            break;
        }
        h = powmod(&h, p, &g, p);
        let d = gcd(&g, &sub(&h, &[0, 1], p), p);
        let dd = degree(&d).unwrap_or(0);
        if dd > 0 {
            degs.extend(std::iter::repeat(i).take(dd / i));
            g = divrem(&g, &d, p).0;
            h = rem(&h, &g, p);
        }
        i += 1;
    }
    degs
}

/// `f` is squarefree over the algebraic closure of Z/pZ.
pub(crate) fn is_squarefree(f: &[u64], p: u64) -> bool {
    let d = derivative(f, p);
    if d.is_empty() {
        return false;
    }
    degree(&gcd(f, &d, p)) == Some(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frobenius_roots_match_scan() {
        for &p in &[3u64, 5, 7, 11, 101, 65_537, 1_000_003] {
            for f in [vec![1, 0, 1], vec![2, 0, 0, 1], vec![p - 1, 0, 0, 0, 1], vec![6, (5 * p - 5) % p, 1]] {
                let f = trim(f.into_iter().map(|c| c % p).collect());
                let got = roots_frobenius(&f, p);
                if p < 2000 {
                    assert_eq!(got, roots_scan(&f, p), "p = {p}, f = {f:?}");
                }
                for &r in &got {
                    assert_eq!(eval(&f, r, p), 0);
                }
            }
        }
        // X^2 - 5X + 6 = (X - 2)(X - 3)
        assert_eq!(roots_frobenius(&[6, 1_000_003 - 5, 1], 1_000_003), vec![2, 3]);
    }

    #[test]
    fn small_prime_count_matches_scan() {
        for &p in &[2u64, 3, 5, 7, 11, 13, 101, 257, 1009] {
            for f in [vec![1, 0, 1], vec![2, 0, 0, 1], vec![0, 1, 0, 0, 1], vec![6, 3, 1, 0, 1], vec![0, 1]] {
                let f = trim(f.into_iter().map(|c| c % p).collect());
                assert_eq!(count_roots_small(&f, p), roots_scan(&f, p).len(), "p = {p}, f = {f:?}");
            }
        }
    }

    #[test]
    fn factor_degree_pattern() {
        // X^4 + 1 over F_3 splits into two quadratics.
        assert_eq!(factor_degrees(&[1, 0, 0, 0, 1], 3), vec![2, 2]);
        // X^2 + 1 irreducible mod 3.
        assert_eq!(factor_degrees(&[1, 0, 1], 3), vec![2]);
        // X^3 - X = X (X - 1)(X + 1) mod 5.
        assert_eq!(factor_degrees(&[0, 4, 0, 1], 5), vec![1, 1, 1]);
    }

    #[test]
    fn division_identity() {
        let p = 13;
        let a = vec![3, 4, 5, 6, 7];
        let b = vec![2, 0, 1];
        let (q, r) = divrem(&a, &b, p);
        let back = trim(
            mul(&q, &b, p)
                .iter()
                .enumerate()
                .map(|(i, &c)| (c + r.get(i).copied().unwrap_or(0)) % p)
                .collect(),
        );
        assert_eq!(back, a);
    }
}
