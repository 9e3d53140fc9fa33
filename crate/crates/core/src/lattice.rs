//! The lattice `Λ_{m,n} = {a ∈ Z^{k+1} : a·(1, n, ..., n^k) ≡ 0 (mod m)}`:
//! basis, exact successive minima, box counts and the classical inequalities.

use num_bigint::BigInt;
use num_traits::{One, Signed};
use serde::Serialize;

use crate::arith::mulmod64;
use crate::error::{domain, Error, Result};
use crate::polynomial::bareiss_determinant;

/// Largest dimension accepted by [`successive_minima`].
pub const MAX_DIMENSION: usize = 8;
/// Largest number of `(a_1, ..., a_k)` tuples scanned by [`count_box_points`].
pub const BOX_BUDGET: u128 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CongruenceLattice {
    pub k: usize,
    pub m: u64,
    pub n: u64,
    pub basis: Vec<Vec<i128>>,
}

/// Rows `(m, 0, ..., 0)` and `(-(n^i mod m), e_i)` for `1 <= i <= k`.
pub fn build_lattice(k: usize, m: u64, n: u64) -> Result<CongruenceLattice> {
    if m == 0 || n == 0 {
        return domain("m and n must be positive");
    }
    let s = k + 1;
    let mut basis = Vec::with_capacity(s);
    let mut first = vec![0i128; s];
    first[0] = m as i128;
    basis.push(first);
    let mut pw = 1 % m;
    for i in 1..=k {
        pw = mulmod64(pw, n % m, m);
        let mut row = vec![0i128; s];
        row[0] = -(pw as i128);
        row[i] = 1;
        basis.push(row);
    }
    let lattice = CongruenceLattice { k, m, n, basis };
    debug_assert_eq!(lattice.determinant().abs(), BigInt::from(m));
    Ok(lattice)
}

impl CongruenceLattice {
    pub fn dimension(&self) -> usize {
        self.k + 1
    }

    /// Exact determinant of the basis.
    pub fn determinant(&self) -> BigInt {
        bareiss_determinant(
            self.basis.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect(),
        )
    }

    /// `a·(1, n, ..., n^k) ≡ 0 (mod m)`.
    pub fn contains(&self, a: &[i128]) -> bool {
        if a.len() != self.dimension() {
            return false;
        }
        let m = self.m as i128;
        let mut pw = 1i128 % m;
        let mut acc = 0i128;
        for &c in a {
            acc = (acc + c.rem_euclid(m) * pw) % m;
            pw = pw * (self.n as i128 % m) % m;
        }
        acc == 0
    }
}

fn norm_sq(v: &[i128]) -> u128 {
    v.iter().map(|&x| (x * x) as u128).sum()
}

struct Gso {
    mu: Vec<Vec<f64>>,
    bstar_sq: Vec<f64>,
}

fn gso(b: &[Vec<i128>]) -> Gso {
    let s = b.len();
    let d = b[0].len();
    let mut bstar: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut mu = vec![vec![0.0; s]; s];
    let mut bstar_sq = vec![0.0; s];
    for i in 0..s {
        let mut v: Vec<f64> = b[i].iter().map(|&x| x as f64).collect();
        for j in 0..i {
            let dot: f64 = (0..d).map(|t| b[i][t] as f64 * bstar[j][t]).sum();
            mu[i][j] = dot / bstar_sq[j];
            for t in 0..d {
                v[t] -= mu[i][j] * bstar[j][t];
            }
        }
        bstar_sq[i] = v.iter().map(|x| x * x).sum();
        bstar.push(v);
        mu[i][i] = 1.0;
    }
    Gso { mu, bstar_sq }
}

fn axpy(target: &mut [i128], q: i128, src: &[i128]) {
    for (t, &x) in target.iter_mut().zip(src) {
        *t -= q * x;
    }
}

/// LLL with δ = 0.99, never moving rows before `frozen`.
fn lll(b: &mut [Vec<i128>], frozen: usize) {
    let s = b.len();
    let mut k = frozen.max(1);
    let mut guard = 0usize;
    while k < s {
        guard += 1;
        assert!(guard < 1_000_000, "LLL failed to terminate");
        for j in (0..k).rev() {
            let g = gso(b);
            let q = g.mu[k][j].round();
            if q != 0.0 {
                let (head, tail) = b.split_at_mut(k);
                axpy(&mut tail[0], q as i128, &head[j]);
            }
        }
        let g = gso(b);
        let lovasz = g.bstar_sq[k] >= (0.99 - g.mu[k][k - 1].powi(2)) * g.bstar_sq[k - 1];
        if k > frozen && !lovasz {
            b.swap(k, k - 1);
            k = (k - 1).max(frozen.max(1));
        } else {
            k += 1;
        }
    }
}

/// Shortest lattice vector whose coordinates at positions `>= frozen` are not
/// all zero. Returns the coordinates and the exact squared norm.
fn shortest_outside(b: &[Vec<i128>], frozen: usize) -> (Vec<i128>, u128) {
    let s = b.len();
    let g = gso(b);
    let (mut best_norm, start) = (frozen..s)
        .map(|i| (norm_sq(&b[i]), i))
        .min()
        .expect("nonempty tail");
    let mut best = vec![0i128; s];
    best[start] = 1;

    struct Search<'a> {
        b: &'a [Vec<i128>],
        g: &'a Gso,
        frozen: usize,
        x: Vec<i128>,
        best: Vec<i128>,
        best_norm: u128,
    }

    impl Search<'_> {
        fn radius(&self) -> f64 {
            self.best_norm as f64 * (1.0 + 1e-9) + 1e-6
        }

        fn go(&mut self, level: usize, partial: f64) {
            let s = self.b.len();
            let center: f64 = -(level + 1..s).map(|l| self.x[l] as f64 * self.g.mu[l][level]).sum::<f64>();
            let base = center.round();
            // Zigzag outward from the nearest integer.
            let mut step = 0i64;
            let mut blocked = [false, false];
            loop {
                let candidates: [(i64, usize); 2] = [(step, 0), (-step - 1, 1)];
                let mut progressed = false;
                for (offset, side) in candidates {
                    if blocked[side] {
                        continue;
                    }
                    let xi = base + offset as f64;
                    let diff = xi - center;
                    let p = partial + diff * diff * self.g.bstar_sq[level];
                    if p > self.radius() {
                        blocked[side] = true;
                        continue;
                    }
                    progressed = true;
                    self.x[level] = xi as i128;
                    // Below the frozen block the tail is fixed; it must be nonzero.
                    if level == self.frozen && self.x[level..].iter().all(|&c| c == 0) {
                        continue;
                    }
                    if level == 0 {
                        self.leaf();
                    } else {
                        self.go(level - 1, p);
                    }
                }
                if !progressed {
                    break;
                }
                step += 1;
            }
            self.x[level] = 0;
        }

        fn leaf(&mut self) {
            if self.x[self.frozen..].iter().all(|&c| c == 0) {
                return;
            }
            let d = self.b[0].len();
            let mut v = vec![0i128; d];
            for (i, &c) in self.x.iter().enumerate() {
                if c != 0 {
                    for t in 0..d {
                        v[t] += c * self.b[i][t];
                    }
                }
            }
            let n = norm_sq(&v);
            if n < self.best_norm {
                self.best_norm = n;
                self.best = self.x.clone();
            }
        }
    }

    let mut search = Search { b, g: &g, frozen, x: vec![0; s], best: best.clone(), best_norm };
    search.go(s - 1, 0.0);
    best = search.best;
    best_norm = search.best_norm;
    (best, best_norm)
}

/// Row operations making row `frozen` a primitive multiple of the tail of
/// `coords`, so rows `..=frozen` span the lattice points of the enlarged
/// subspace.
fn absorb(b: &mut [Vec<i128>], coords: &[i128], frozen: usize) {
    let mut c: Vec<i128> = coords.to_vec();
    loop {
        let nz: Vec<usize> = (frozen..b.len()).filter(|&i| c[i] != 0).collect();
        if nz.len() <= 1 {
            let i = nz[0];
            b.swap(frozen, i);
            c.swap(frozen, i);
            return;
        }
        // Euclid on the two smallest nonzero coordinates.
        let i = *nz.iter().min_by_key(|&&i| c[i].abs()).unwrap();
        let j = *nz.iter().find(|&&j| j != i).unwrap();
        let q = c[j].div_euclid(c[i]);
        // b_i <- b_i + q b_j, c_j <- c_j - q c_i keeps ∑ c_t b_t fixed.
        let bj = b[j].clone();
        axpy(&mut b[i], -q, &bj);
        c[j] -= q * c[i];
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuccessiveMinima {
    /// `λ_j²`, exact.
    pub norms_sq: Vec<u128>,
    /// Linearly independent vectors attaining the minima.
    pub vectors: Vec<Vec<i128>>,
}

impl SuccessiveMinima {
    pub fn lambdas(&self) -> Vec<f64> {
        self.norms_sq.iter().map(|&n| (n as f64).sqrt()).collect()
    }
}

/// Exact Euclidean successive minima.
pub fn successive_minima(lattice: &CongruenceLattice) -> Result<SuccessiveMinima> {
    let s = lattice.dimension();
    if s > MAX_DIMENSION {
        return Err(Error::Budget(format!("dimension {s} exceeds {MAX_DIMENSION}")));
    }
    let mut b = lattice.basis.clone();
    let mut norms_sq = Vec::with_capacity(s);
    let mut vectors = Vec::with_capacity(s);
    for frozen in 0..s {
        lll(&mut b, frozen);
        let (coords, n) = shortest_outside(&b, frozen);
        let d = b[0].len();
        let mut v = vec![0i128; d];
        for (i, &c) in coords.iter().enumerate() {
            for t in 0..d {
                v[t] += c * b[i][t];
            }
        }
        norms_sq.push(n);
        vectors.push(v);
        absorb(&mut b, &coords, frozen);
    }
    Ok(SuccessiveMinima { norms_sq, vectors })
}

/// `#{a ∈ Λ : |a_i| <= H}`, scanning `(a_1, ..., a_k)` and counting `a_0`.
pub fn count_box_points(lattice: &CongruenceLattice, h: u64) -> Result<u128> {
    let k = lattice.k as u32;
    let side = 2 * h as i128 + 1;
    if (side as u128).saturating_pow(k) > BOX_BUDGET {
        return Err(Error::Budget(format!("(2H+1)^k exceeds {BOX_BUDGET}")));
    }
    let m = lattice.m as i128;
    let powers: Vec<i128> = {
        let mut p = Vec::with_capacity(lattice.k);
        let mut x = 1i128 % m;
        for _ in 0..lattice.k {
            x = x * (lattice.n as i128 % m) % m;
            p.push(x);
        }
        p
    };
    let hi = h as i128;
    let mut total = 0u128;
    let mut digits = vec![-hi; lattice.k];
    loop {
        let t: i128 = digits.iter().zip(&powers).map(|(&a, &p)| a * p).sum::<i128>().rem_euclid(m);
        // a_0 ≡ -t (mod m) inside [-H, H].
        let c = (-t).rem_euclid(m);
        total += (num_integer::Integer::div_floor(&(hi - c), &m)
            - num_integer::Integer::div_floor(&(-hi - 1 - c), &m)) as u128;
        let mut i = 0;
        loop {
            if i == lattice.k {
                return Ok(total);
            }
            if digits[i] < hi {
                digits[i] += 1;
                break;
            }
            digits[i] = -hi;
            i += 1;
        }
    }
}

/// Volume of the unit Euclidean ball in dimension `s`.
pub fn unit_ball_volume(s: usize) -> f64 {
    // V_0 = 1, V_1 = 2, V_s = 2π/s · V_{s-2}.
    let mut v = [1.0f64, 2.0];
    for d in 2..=s {
        let next = std::f64::consts::TAU / d as f64 * v[d % 2];
        v[d % 2] = next;
    }
    v[s % 2]
}

/// Constant `(1 + 2√s)^s` in the box-count comparison below.
pub fn schmidt_constant(s: usize) -> f64 {
    (1.0 + 2.0 * (s as f64).sqrt()).powi(s as i32)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchmidtReport {
    pub count: u128,
    pub bound: f64,
    pub ratio: f64,
    pub constant: f64,
    pub holds: bool,
}

/// Box count against `H^s/Δ + (H/λ_1)^{s-1} + 1`.
pub fn check_schmidt_count(lattice: &CongruenceLattice, h: u64) -> Result<SchmidtReport> {
    let count = count_box_points(lattice, h)?;
    let minima = successive_minima(lattice)?;
    let s = lattice.dimension();
    let hf = h as f64;
    let lambda1 = (minima.norms_sq[0] as f64).sqrt();
    let bound = hf.powi(s as i32) / lattice.m as f64 + (hf / lambda1).powi(s as i32 - 1) + 1.0;
    let ratio = count as f64 / bound;
    let constant = schmidt_constant(s);
    Ok(SchmidtReport { count, bound, ratio, constant, holds: ratio <= constant })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinkowskiReport {
    /// `Δ <= λ_1 ⋯ λ_s`, checked as `m² <= ∏ λ_j²` in integers.
    pub lower_holds: bool,
    /// `λ_1 ⋯ λ_s <= 2^s Δ / V_s`.
    pub upper_ratio: f64,
    pub upper_holds: bool,
    /// `λ_1 / m^{1/s}` against `2 V_s^{-1/s}`.
    pub first_ratio: f64,
    pub first_holds: bool,
}

pub fn check_minkowski(lattice: &CongruenceLattice, minima: &SuccessiveMinima) -> MinkowskiReport {
    let s = lattice.dimension();
    let product: BigInt = minima.norms_sq.iter().fold(BigInt::one(), |acc, &n| acc * BigInt::from(n));
    let m2 = BigInt::from(lattice.m) * BigInt::from(lattice.m);
    let lower_holds = m2 <= product;
    let vol = unit_ball_volume(s);
    let prod_f: f64 = minima.lambdas().iter().product();
    let upper_ratio = prod_f * vol / (2f64.powi(s as i32) * lattice.m as f64);
    let first_ratio = minima.lambdas()[0] / (lattice.m as f64).powf(1.0 / s as f64);
    let first_cap = 2.0 * vol.powf(-1.0 / s as f64);
    MinkowskiReport {
        lower_holds,
        upper_ratio,
        upper_holds: upper_ratio <= 1.0 + 1e-9,
        first_ratio,
        first_holds: first_ratio <= first_cap * (1.0 + 1e-9),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_minima(l: &CongruenceLattice, radius: i128) -> Vec<u128> {
        // All lattice vectors in a cube, then greedy rank increase by norm.
        let s = l.dimension();
        let mut pts: Vec<(u128, Vec<i128>)> = Vec::new();
        let side = 2 * radius + 1;
        for idx in 1..side.pow(s as u32) {
            let mut rest = idx;
            let v: Vec<i128> = (0..s)
                .map(|_| {
                    let x = rest % side - radius;
                    rest /= side;
                    x
                })
                .collect();
            if v.iter().any(|&x| x != 0) && l.contains(&v) {
                pts.push((norm_sq(&v), v));
            }
        }
        pts.sort();
        let mut chosen: Vec<Vec<BigInt>> = Vec::new();
        let mut out = Vec::new();
        for (n, v) in pts {
            let mut trial = chosen.clone();
            trial.push(v.iter().map(|&x| BigInt::from(x)).collect());
            if rank(&trial) == trial.len() {
                chosen = trial;
                out.push(n);
                if out.len() == s {
                    break;
                }
            }
        }
        out
    }

    fn rank(rows: &[Vec<BigInt>]) -> usize {
        use num_rational::BigRational;
        use num_traits::Zero;
        let mut a: Vec<Vec<BigRational>> =
            rows.iter().map(|r| r.iter().map(|x| BigRational::from(x.clone())).collect()).collect();
        let cols = a.first().map_or(0, |r| r.len());
        let mut r = 0;
        for c in 0..cols {
            if let Some(p) = (r..a.len()).find(|&i| !a[i][c].is_zero()) {
                a.swap(r, p);
                for i in 0..a.len() {
                    if i != r && !a[i][c].is_zero() {
                        let f = a[i][c].clone() / a[r][c].clone();
                        for t in 0..cols {
                            let sub = f.clone() * a[r][t].clone();
                            a[i][t] -= sub;
                        }
                    }
                }
                r += 1;
            }
        }
        r
    }

    fn brute_box(l: &CongruenceLattice, h: i128) -> u128 {
        let s = l.dimension();
        let side = 2 * h + 1;
        (0..side.pow(s as u32))
            .filter(|&idx| {
                let mut rest = idx;
                let v: Vec<i128> = (0..s)
                    .map(|_| {
                        let x = rest % side - h;
                        rest /= side;
                        x
                    })
                    .collect();
                l.contains(&v)
            })
            .count() as u128
    }

    #[test]
    fn basis_examples() {
        let l = build_lattice(1, 5, 2).unwrap();
        assert_eq!(l.basis, vec![vec![5, 0], vec![-2, 1]]);
        assert_eq!(l.determinant(), BigInt::from(5));
        assert_eq!(build_lattice(2, 9, 3).unwrap().determinant().abs(), BigInt::from(9));
        let l = build_lattice(2, 97, 2).unwrap();
        assert!(l.contains(&[-4, 0, 1]) && l.contains(&[97, 0, 0]));
        assert!(l.basis.iter().all(|r| l.contains(r)));
    }

    #[test]
    fn minima_examples() {
        let z2 = build_lattice(1, 1, 7).unwrap();
        assert_eq!(successive_minima(&z2).unwrap().norms_sq, vec![1, 1]);
        let l = build_lattice(1, 5, 2).unwrap();
        assert_eq!(successive_minima(&l).unwrap().norms_sq, vec![5, 5]);
        // n ≡ 0 (mod m): minima 1, ..., 1, m.
        let l = build_lattice(3, 10_000, 10_000).unwrap();
        assert_eq!(successive_minima(&l).unwrap().norms_sq, vec![1, 1, 1, 100_000_000]);
    }

    #[test]
    fn box_examples() {
        let l = build_lattice(1, 5, 2).unwrap();
        assert_eq!(count_box_points(&l, 0).unwrap(), 1);
        assert_eq!(count_box_points(&l, 5).unwrap(), brute_box(&l, 5));
        let l = build_lattice(2, 1, 3).unwrap();
        assert_eq!(count_box_points(&l, 4).unwrap(), 9u128.pow(3));
    }

    #[test]
    fn schmidt_examples() {
        let r = check_schmidt_count(&build_lattice(2, 1, 3).unwrap(), 6).unwrap();
        assert!(r.holds && r.ratio > 1.0);
        let l = build_lattice(2, 10_007, 1234).unwrap();
        let lambda1 = successive_minima(&l).unwrap().lambdas()[0];
        let h = ((lambda1 / 2.0).floor() as u64).saturating_sub(1);
        let r = check_schmidt_count(&l, h).unwrap();
        assert_eq!(r.count, 1);
        assert!(r.bound >= 1.0 && r.holds);
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-12);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn minima_match_brute_force(k in 1usize..=2, m in 1u64..=24, n in 1u64..=200) {
            let l = build_lattice(k, m, n).unwrap();
            let got = successive_minima(&l).unwrap();
            // λ_s <= m, so a cube of side m holds every minimum.
            prop_assert_eq!(&got.norms_sq, &brute_minima(&l, m as i128));
            for v in &got.vectors {
                prop_assert!(l.contains(v));
            }
        }

        #[test]
        fn determinant_and_minkowski(k in 1usize..=4, m in 1u64..=10_000, n in 1u64..=10_000) {
            let l = build_lattice(k, m, n).unwrap();
            prop_assert_eq!(l.determinant().abs(), BigInt::from(m));
            let minima = successive_minima(&l).unwrap();
            prop_assert!(minima.norms_sq.windows(2).all(|w| w[0] <= w[1]));
            let r = check_minkowski(&l, &minima);
            prop_assert!(r.lower_holds && r.upper_holds && r.first_holds, "{:?} {:?}", minima, r);
        }

        #[test]
        fn box_count_matches_scan(k in 1usize..=2, m in 1u64..=20, n in 1u64..=50, h in 0u64..=10) {
            let l = build_lattice(k, m, n).unwrap();
            prop_assert_eq!(count_box_points(&l, h).unwrap(), brute_box(&l, h as i128));
        }
    }
}
