//! Seeded property grids comparing every counting routine with a direct oracle.

use std::time::Instant;

use clap::ValueEnum;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use sqfree_core::congruence::{check_poly_box, count_u, count_w};
use sqfree_core::density::compute_cf;
use sqfree_core::experiments::{run_average_experiment, theorem_avf_rhs, FamilySpec};
use sqfree_core::expsum::{discrepancy_exact, weyl_sum, PointSet};
use sqfree_core::lattice::{build_lattice, check_minkowski, count_box_points, successive_minima};
use sqfree_core::roots::rho;
use sqfree_core::squarefree::{
    check_large_square_bound, count_qf, count_squarefree_naive, count_squarefree_sieve, mobius_identity_check,
};
use sqfree_core::{IntPolynomial, Result};

pub const SIX_OVER_PI_SQ: f64 = 0.607_927_101_854_026_6;
/// Constant against which the averaged error is compared with the surrogate `N^{0.1}`.
pub const TREND_CONSTANT: f64 = 1.0;
/// Largest single-step increase allowed in the averaged-error trend.
pub const TREND_SLACK: f64 = 0.05;
/// Constant bounding `Q_f(S, N) / (N^{1/2} S^{1/2} + S)` over the oracle grid.
pub const QF_CONSTANT: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Quick,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    RootCounts,
    SquarefreeDensity,
    SieveVsNaive,
    MobiusIdentity,
    CubicConvergence,
    WDiscrepancy,
    LatticeInvariants,
    CongruenceOracles,
    Discrepancy,
    AveragedTrend,
    QfOracle,
}

impl Check {
    pub const ALL: [Check; 11] = [
        Check::RootCounts,
        Check::SquarefreeDensity,
        Check::SieveVsNaive,
        Check::MobiusIdentity,
        Check::CubicConvergence,
        Check::WDiscrepancy,
        Check::LatticeInvariants,
        Check::CongruenceOracles,
        Check::Discrepancy,
        Check::AveragedTrend,
        Check::QfOracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::RootCounts => "root counts vs residue scan",
            Check::SquarefreeDensity => "density of square-free integers",
            Check::SieveVsNaive => "sieve vs factorization",
            Check::MobiusIdentity => "Möbius identity",
            Check::CubicConvergence => "cubic convergence",
            Check::WDiscrepancy => "W count vs discrepancy",
            Check::LatticeInvariants => "lattice invariants",
            Check::CongruenceOracles => "congruence count oracles",
            Check::Discrepancy => "exact discrepancy and Weyl sums",
            Check::AveragedTrend => "averaged error trend",
            Check::QfOracle => "Q_f oracle",
        }
    }

    pub fn run(self, level: Level, seed: u64) -> Result<CheckOutcome> {
        let full = level == Level::Full;
        let start = Instant::now();
        let mut out = match self {
            Check::RootCounts => root_counts(seed, if full { 500 } else { 40 }, if full { 2000 } else { 300 }),
            Check::SquarefreeDensity => squarefree_density(if full { 1e-9 } else { 1e-6 }),
            Check::SieveVsNaive => sieve_vs_naive(seed, if full { 200 } else { 20 }, if full { 2000 } else { 500 }),
            Check::MobiusIdentity => mobius_identity(seed, if full { 50 } else { 10 }, if full { 500 } else { 200 }),
            Check::CubicConvergence => cubic_convergence(if full { 100_000 } else { 10_000 }),
            Check::WDiscrepancy => w_discrepancy(seed, 100),
            Check::LatticeInvariants => lattice_invariants(seed, if full { 200 } else { 40 }, if full { 20 } else { 8 }),
            Check::CongruenceOracles => congruence_oracles(if full { 30 } else { 12 }),
            Check::Discrepancy => discrepancy(seed, if full { 50 } else { 10 }),
            Check::AveragedTrend => {
                let (ns, samples) = if full { (vec![200, 400, 800], 200) } else { (vec![50, 100, 200], 60) };
                averaged_trend(seed, &ns, samples)
            }
            Check::QfOracle => qf_oracle(if full { 20 } else { 10 }, if full { 200 } else { 100 }),
        }?;
        out.check = self;
        out.name = self.name();
        out.seconds = start.elapsed().as_secs_f64();
        Ok(out)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub check: Check,
    pub name: &'static str,
    pub cases: u64,
    pub failures: u64,
    /// A few failing cases, for diagnosis.
    pub examples: Vec<String>,
    /// Largest observed ratio or deviation, where one is meaningful.
    pub metric: Option<f64>,
    pub passed: bool,
    #[serde(skip)]
    pub seconds: f64,
}

impl CheckOutcome {
    fn new() -> Self {
        CheckOutcome {
            check: Check::RootCounts,
            name: "",
            cases: 0,
            failures: 0,
            examples: Vec::new(),
            metric: None,
            passed: true,
            seconds: 0.0,
        }
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            self.passed = false;
            if self.examples.len() < 5 {
                self.examples.push(describe());
            }
        }
    }

    fn metric_max(&mut self, x: f64) {
        self.metric = Some(self.metric.map_or(x, |m| m.max(x)));
    }

    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let metric = self.metric.map(|m| format!(", metric {m:.6}")).unwrap_or_default();
        format!(
            "{verdict} {}: {} cases, {} failures{metric}, {:.1} s",
            self.name, self.cases, self.failures, self.seconds
        )
    }
}

fn random_poly(rng: &mut ChaCha8Rng, max_deg: usize, c: i64, primitive: bool) -> IntPolynomial {
    loop {
        let k = rng.gen_range(1..=max_deg);
        let coeffs: Vec<i64> = (0..=k).map(|_| rng.gen_range(-c..=c)).collect();
        if coeffs[k] == 0 {
            continue;
        }
        if primitive && sqfree_core::arith::vector_gcd_i64(&coeffs) != 1 {
            continue;
        }
        return IntPolynomial::from_i64(&coeffs);
    }
}

fn small_coeffs(f: &IntPolynomial) -> Vec<i64> {
    f.coeffs().iter().map(|c| c.to_i64().expect("small coefficient")).collect()
}

fn scan_roots(c: &[i64], m: u64) -> u64 {
    let m = m as i64;
    let red: Vec<i64> = c.iter().map(|a| a.rem_euclid(m)).collect();
    (0..m).filter(|&x| red.iter().rev().fold(0i64, |acc, &a| (acc * x + a) % m) == 0).count() as u64
}

fn root_counts(seed: u64, polys: usize, m_max: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = CheckOutcome::new();
    for _ in 0..polys {
        let f = random_poly(&mut rng, 5, 50, false);
        let c = small_coeffs(&f);
        for m in 1..=m_max {
            let (got, want) = (rho(&f, m)?, scan_roots(&c, m));
            out.record(got == want, || format!("f = {f}, m = {m}: {got} vs {want}"));
        }
    }
    Ok(out)
}

fn squarefree_density(tol: f64) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new();
    let e = compute_cf(&IntPolynomial::from_i64(&[0, 1]), tol)?;
    out.record(e.contains(SIX_OVER_PI_SQ), || format!("[{}, {}] misses 6/π²", e.lo, e.hi));
    out.record(e.width() <= tol, || format!("width {} > {tol}", e.width()));
    out.metric = Some(e.width());
    Ok(out)
}

fn sieve_vs_naive(seed: u64, polys: usize, n: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5157);
    let mut out = CheckOutcome::new();
    for _ in 0..polys {
        let f = random_poly(&mut rng, 5, 50, true);
        let (a, b) = (count_squarefree_sieve(&f, n)?, count_squarefree_naive(&f, n)?);
        out.record(a == b, || format!("f = {f}: sieve {a}, naive {b}"));
    }
    Ok(out)
}

fn mobius_identity(seed: u64, instances: usize, n_max: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x3b1);
    let mut out = CheckOutcome::new();
    for _ in 0..instances {
        let f = random_poly(&mut rng, 3, 20, false);
        let n = rng.gen_range(1..=n_max);
        let r = mobius_identity_check(&f, n)?;
        out.record(r.equal, || format!("f = {f}, N = {n}: {} vs {}", r.s_f, r.full_sum));
    }
    Ok(out)
}

fn cubic_convergence(n: u64) -> Result<CheckOutcome> {
    let f = IntPolynomial::from_i64(&[2, 0, 0, 1]);
    let mut out = CheckOutcome::new();
    let s = count_squarefree_sieve(&f, n)?;
    let cf = compute_cf(&f, 1e-4)?;
    let dev = (s as f64 / n as f64 - cf.midpoint()).abs();
    out.record(dev <= 0.01, || format!("S_f({n})/N = {}, c_f ≈ {}", s as f64 / n as f64, cf.midpoint()));
    out.metric = Some(dev);
    Ok(out)
}

fn w_discrepancy(seed: u64, points: usize) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xd15c);
    let mut out = CheckOutcome::new();
    while (out.cases as usize) < points {
        let k = rng.gen_range(1..=4);
        let mut c: Vec<i64> = (0..=k).map(|_| rng.gen_range(-20..=20)).collect();
        c[0] = 0;
        if c[k] == 0 || sqfree_core::arith::vector_gcd_i64(&c) != 1 {
            continue;
        }
        let g = IntPolynomial::from_i64(&c);
        let m = rng.gen_range(2..=200);
        let h = rng.gen_range(1..=m);
        let n = rng.gen_range(1..=300);
        let r = check_poly_box(&g, m, h, n)?;
        let excess = r.abs_residual.clone() - r.discrepancy_bound.clone();
        out.metric_max(ratio_f64(&excess));
        out.record(r.holds, || format!("g = {g}, m = {m}, H = {h}, N = {n}: residual {} > {}", r.abs_residual, r.discrepancy_bound));
    }
    Ok(out)
}

fn ratio_f64(r: &Ratio<i128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn norm_sq(v: &[i128]) -> u128 {
    v.iter().map(|x| (x * x) as u128).sum()
}

fn lattice_invariants(seed: u64, cases: usize, box_m: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1a7);
    let mut out = CheckOutcome::new();
    for _ in 0..cases {
        let (k, m, n) = (rng.gen_range(1..=4), rng.gen_range(1..=10_000u64), rng.gen_range(1..=10_000u64));
        let l = build_lattice(k, m, n)?;
        let det = l.determinant().abs();
        out.record(det == BigInt::from(m), || format!("k = {k}, m = {m}, n = {n}: |det| = {det}"));
        let minima = successive_minima(&l)?;
        let ok = minima.vectors.iter().zip(&minima.norms_sq).all(|(v, &q)| l.contains(v) && norm_sq(v) == q);
        out.record(ok, || format!("k = {k}, m = {m}, n = {n}: minima vectors inconsistent"));
        let mk = check_minkowski(&l, &minima);
        out.record(mk.lower_holds, || format!("k = {k}, m = {m}, n = {n}: m² > ∏ λ_j²"));
    }
    for k in 1..=2usize {
        for m in 1..=box_m {
            let n = rng.gen_range(1..=m);
            let l = build_lattice(k, m, n)?;
            for h in [1u64, 2, 5, 10] {
                let fast = count_box_points(&l, h)?;
                let slow = box_scan(&l, h as i128);
                out.record(fast == slow, || format!("k = {k}, m = {m}, n = {n}, H = {h}: {fast} vs {slow}"));
            }
        }
    }
    Ok(out)
}

fn box_scan(l: &sqfree_core::lattice::CongruenceLattice, h: i128) -> u128 {
    let s = l.dimension() as u32;
    let side = 2 * h + 1;
    (0..side.pow(s))
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

fn brute_w(b: &[i64], m: u64, h: u64, n: u64) -> u128 {
    let m = m as i64;
    let gcd_b = b.iter().fold(0u64, |acc, x| acc.gcd(&x.unsigned_abs()));
    let values: Vec<i64> = (1..=n as i64)
        .map(|x| b.iter().rev().fold(0i64, |acc, &c| (acc * x + c).rem_euclid(m)) * x % m)
        .collect();
    let mut count = 0;
    for a in -(h as i64)..=h as i64 {
        if a.unsigned_abs().gcd(&gcd_b) != 1 {
            continue;
        }
        count += values.iter().filter(|&&v| (v + a).rem_euclid(m) == 0).count() as u128;
    }
    count
}

fn brute_u(k: u32, m: u64, h: u64, n: u64) -> u128 {
    let side = 2 * h as i64 + 1;
    let mut count = 0;
    for idx in 0..side.pow(k + 1) {
        let mut rest = idx;
        let a: Vec<i64> = (0..=k)
            .map(|_| {
                let v = rest % side - h as i64;
                rest /= side;
                v
            })
            .collect();
        if sqfree_core::arith::vector_gcd_i64(&a) != 1 {
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

fn congruence_oracles(w_max: u64) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new();
    // g(X) = X·(b_1 + b_2 X + ...), listed by b.
    let bases: [&[i64]; 6] = [&[1], &[0, 1], &[1, 1], &[2, 3], &[0, 0, 1], &[6]];
    for b in bases {
        let mut c = vec![0];
        c.extend_from_slice(b);
        let g = IntPolynomial::from_i64(&c);
        for m in 1..=w_max {
            for h in 1..=w_max {
                for n in 1..=w_max {
                    let fast = count_w(&g, m, h, n)?.value;
                    let slow = brute_w(b, m, h, n);
                    out.record(fast == slow, || format!("W: g = {g}, m = {m}, H = {h}, N = {n}: {fast} vs {slow}"));
                }
            }
        }
    }
    for k in 0..=2u32 {
        for m in 1..=8 {
            for h in 1..=3 {
                for n in 1..=5 {
                    let fast = count_u(k, m, h, n)?.value;
                    let slow = brute_u(k, m, h, n);
                    out.record(fast == slow, || format!("U: k = {k}, m = {m}, H = {h}, N = {n}: {fast} vs {slow}"));
                }
            }
        }
    }
    Ok(out)
}

fn grid_discrepancy(points: &PointSet, grid: u64) -> f64 {
    let n = points.len() as f64;
    let mut sorted = points.numerators.clone();
    sorted.sort_unstable();
    let mut best: f64 = 0.0;
    let (mut open, mut closed) = (0, 0);
    for j in 0..=grid {
        while open < sorted.len() && sorted[open] * grid < j * points.m {
            open += 1;
        }
        while closed < sorted.len() && sorted[closed] * grid <= j * points.m {
            closed += 1;
        }
        let expected = j as f64 / grid as f64 * n;
        best = best.max((open as f64 - expected).abs()).max((closed as f64 - expected).abs());
    }
    best
}

fn discrepancy(seed: u64, sets: usize) -> Result<CheckOutcome> {
    const GRID: u64 = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xe7);
    let moduli = [2u64, 5, 8, 16, 25, 40, 80, 125, 400, 625, 1000, 2500, 10_000];
    let mut out = CheckOutcome::new();
    for _ in 0..sets {
        let g = random_poly(&mut rng, 4, 30, false);
        let m = moduli[rng.gen_range(0..moduli.len())];
        let n = rng.gen_range(1..=200);
        let pts = PointSet::from_polynomial(&g, m, n)?;
        let exact = discrepancy_exact(&pts)?;
        let exact = ratio_f64(&exact);
        let grid = grid_discrepancy(&pts, GRID);
        let tol = n as f64 / GRID as f64 + 1e-9;
        out.metric_max((exact - grid).abs());
        out.record((exact - grid).abs() <= tol, || format!("g = {g}, m = {m}, N = {n}: {exact} vs grid {grid}"));
        for h in [-7i64, -1, 1, 2, 3, 11] {
            let s = weyl_sum(&g, m, h, n)?.norm();
            out.record(s <= n as f64 * (1.0 + 1e-12), || format!("|S| = {s} > N = {n}"));
        }
    }
    let gauss = weyl_sum(&IntPolynomial::from_i64(&[0, 0, 1]), 5, 1, 5)?.norm();
    out.record((gauss - 5f64.sqrt()).abs() <= 1e-9, || format!("quadratic Gauss sum {gauss}"));
    Ok(out)
}

/// Mean `|S_f - c_f N| / N` for `k = 4`, `H = ⌈N^{1.2}⌉`; returns the per-`N` means.
pub fn trend_points(seed: u64, ns: &[u64], samples: usize) -> Result<Vec<TrendPoint>> {
    ns.iter()
        .map(|&n| {
            let h = (n as f64).powf(1.2).ceil() as u64;
            let r = run_average_experiment(&FamilySpec::fk(4, h, seed, samples), n)?;
            let agg = r.aggregates.expect("samples > 0");
            let mean = (agg.mean_lo + agg.mean_hi) / 2.0;
            let rhs = theorem_avf_rhs(4, h as f64, n as f64)?;
            Ok(TrendPoint {
                n,
                h,
                completed: agg.count,
                mean_error: mean,
                mean_over_n: mean / n as f64,
                rhs_ratio: mean / (rhs * (n as f64).powf(0.1)),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct TrendPoint {
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "H")]
    pub h: u64,
    pub completed: usize,
    pub mean_error: f64,
    pub mean_over_n: f64,
    /// Mean error over `rhs · N^{0.1}`.
    pub rhs_ratio: f64,
}

fn averaged_trend(seed: u64, ns: &[u64], samples: usize) -> Result<CheckOutcome> {
    let pts = trend_points(seed, ns, samples)?;
    let mut out = CheckOutcome::new();
    for p in &pts {
        out.record(p.completed == samples, || format!("N = {}: only {} of {samples} samples completed", p.n, p.completed));
        out.record(p.rhs_ratio <= TREND_CONSTANT, || format!("N = {}: ratio {} > C", p.n, p.rhs_ratio));
        out.metric_max(p.rhs_ratio);
    }
    let mut flat_steps = 0;
    for w in pts.windows(2) {
        let (a, b) = (w[0].mean_over_n, w[1].mean_over_n);
        if b >= a {
            flat_steps += 1;
        }
        out.record(b <= a * (1.0 + TREND_SLACK), || format!("mean/N rose from {a} to {b}"));
    }
    out.record(flat_steps <= 1, || format!("{flat_steps} non-decreasing steps"));
    Ok(out)
}

fn brute_qf(f: &IntPolynomial, s_max: u64, n_max: u64) -> Vec<(u64, u64)> {
    let mut hits = Vec::new();
    for n in 1..=n_max {
        let v = f.evaluate(&BigInt::from(n));
        if !v.is_positive() {
            continue;
        }
        let v = v.to_u64().expect("small value");
        for s in 1..=s_max {
            let mut r = 1;
            while s * r * r <= v {
                if s * r * r == v {
                    hits.push((n, s));
                }
                r += 1;
            }
        }
    }
    hits
}

fn qf_oracle(s_max: u64, n_max: u64) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new();
    for c in [&[0i64, 1][..], &[1, 0, 1], &[2, 0, 0, 1]] {
        let f = IntPolynomial::from_i64(c);
        let hits = brute_qf(&f, s_max, n_max);
        for s in 1..=s_max {
            for n in (1..=n_max).filter(|&n| n <= 20 || n % 10 == 0) {
                let slow = hits.iter().filter(|&&(x, t)| x <= n && t <= s).count() as u64;
                let fast = count_qf(&f, s, n)?;
                out.record(fast == slow, || format!("f = {f}, S = {s}, N = {n}: {fast} vs {slow}"));
                let r = check_large_square_bound(&f, s, n)?;
                out.metric_max(r.ratio);
                out.record(r.ratio <= QF_CONSTANT, || format!("f = {f}, S = {s}, N = {n}: ratio {}", r.ratio));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scan_matches_definition() {
        assert_eq!(scan_roots(&[1, 0, 1], 5), 2);
        assert_eq!(scan_roots(&[-4, 0, 1], 8), 2);
        assert_eq!(scan_roots(&[0, 1], 1), 1);
    }

    #[test]
    fn grid_discrepancy_single_point() {
        let pts = PointSet::new(4, vec![3]).unwrap();
        assert!((grid_discrepancy(&pts, 4) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn quick_grid_passes() {
        for c in Check::ALL {
            if c == Check::AveragedTrend {
                continue;
            }
            let r = c.run(Level::Quick, 1).unwrap();
            assert!(r.passed, "{}", r.line());
        }
    }
}
