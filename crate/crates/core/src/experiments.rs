//! Seeded samplers for the families `F_k(H)` and `G_g(H)`, averaged-error
//! experiments for `|S_f(N) - c_f N|`, and evaluators for the averaged bounds.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::density::{compute_cf, Enclosure};
use crate::error::{budget, domain, Error, Result};
use crate::expsum::eta;
use crate::polynomial::IntPolynomial;
use crate::squarefree::{abs_error_interval, count_squarefree_sieve};

/// Draws per accepted sample before giving up.
pub const MAX_DRAWS_PER_SAMPLE: u64 = 1 << 20;
/// Largest family enumerated exactly.
pub const MAX_ENUMERATION: u64 = 1 << 20;
const MAX_HEIGHT: u64 = 1 << 62;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Fk,
    Gg,
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fk" => Ok(FamilyKind::Fk),
            "gg" => Ok(FamilyKind::Gg),
            _ => domain(format!("unknown family {s:?} (expected fk or gg)")),
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyKind::Fk => "fk",
            FamilyKind::Gg => "gg",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub k: usize,
    #[serde(rename = "H")]
    pub h: u64,
    pub g: Option<IntPolynomial>,
    pub seed: u64,
    pub samples: usize,
}

impl FamilySpec {
    pub fn fk(k: usize, h: u64, seed: u64, samples: usize) -> Self {
        FamilySpec { kind: FamilyKind::Fk, k, h, g: None, seed, samples }
    }

    /// `k` is taken from the degree of `g`.
    pub fn gg(g: IntPolynomial, h: u64, seed: u64, samples: usize) -> Self {
        let k = g.degree().unwrap_or(0);
        FamilySpec { kind: FamilyKind::Gg, k, h, g: Some(g), seed, samples }
    }

    pub fn validate(&self) -> Result<()> {
        if self.h == 0 || self.h > MAX_HEIGHT {
            return domain(format!("H must lie in [1, 2^62], got {}", self.h));
        }
        match self.kind {
            FamilyKind::Fk => {
                if self.k == 0 {
                    return domain("F_k(H) needs k >= 1");
                }
                if self.g.is_some() {
                    return domain("F_k(H) takes no base polynomial");
                }
            }
            FamilyKind::Gg => {
                let g = match &self.g {
                    Some(g) => g,
                    None => return domain("G_g(H) needs a base polynomial g"),
                };
                if g.degree() != Some(self.k) || self.k == 0 {
                    return domain("k must equal deg g >= 1");
                }
                if !g.coeff(0).is_zero() {
                    return domain("g must satisfy g(0) = 0");
                }
            }
        }
        Ok(())
    }

    fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }

    /// Sample `index` together with the number of draws it took.
    pub fn draw(&self, index: u64) -> Result<(IntPolynomial, u64)> {
        self.validate()?;
        let h = self.h as i64;
        let mut rng = self.rng(index);
        for attempt in 1..=MAX_DRAWS_PER_SAMPLE {
            let candidate = match self.kind {
                FamilyKind::Fk => {
                    let c: Vec<i64> = (0..=self.k).map(|_| rng.gen_range(-h..=h)).collect();
                    if c[self.k] == 0 || crate::arith::vector_gcd_i64(&c) != 1 {
                        continue;
                    }
                    IntPolynomial::from_i64(&c)
                }
                FamilyKind::Gg => {
                    let g = self.g.as_ref().expect("validated");
                    let a = rng.gen_range(-h..=h);
                    let f = g.with_constant(BigInt::from(a));
                    if !f.content()?.is_one() {
                        continue;
                    }
                    f
                }
            };
            return Ok((candidate, attempt));
        }
        budget(format!("sample {index}: no admissible draw in {MAX_DRAWS_PER_SAMPLE} attempts"))
    }

    pub fn sample(&self, index: u64) -> Result<IntPolynomial> {
        self.draw(index).map(|(f, _)| f)
    }
}

/// The `samples` polynomials of `spec`, in index order.
pub fn sample_family(spec: &FamilySpec) -> impl Iterator<Item = Result<IntPolynomial>> + '_ {
    (0..spec.samples as u64).map(move |i| spec.sample(i))
}

/// Every member of the family, for tiny `H` and `k`.
pub fn enumerate_family(spec: &FamilySpec) -> Result<Vec<IntPolynomial>> {
    spec.validate()?;
    let width = 2 * spec.h + 1;
    let slots = match spec.kind {
        FamilyKind::Fk => spec.k as u32 + 1,
        FamilyKind::Gg => 1,
    };
    match width.checked_pow(slots) {
        Some(v) if v <= MAX_ENUMERATION => {}
        _ => return budget(format!("family too large to enumerate ({width}^{slots} tuples)")),
    }
    let h = spec.h as i64;
    let mut out = Vec::new();
    match spec.kind {
        FamilyKind::Fk => {
            let mut c = vec![-h; spec.k + 1];
            loop {
                if c[spec.k] != 0 && crate::arith::vector_gcd_i64(&c) == 1 {
                    out.push(IntPolynomial::from_i64(&c));
                }
                let mut i = 0;
                while i <= spec.k && c[i] == h {
                    c[i] = -h;
                    i += 1;
                }
                if i > spec.k {
                    break;
                }
                c[i] += 1;
            }
        }
        FamilyKind::Gg => {
            let g = spec.g.as_ref().expect("validated");
            for a in -h..=h {
                let f = g.with_constant(BigInt::from(a));
                if f.content()?.is_one() {
                    out.push(f);
                }
            }
        }
    }
    Ok(out)
}

fn ratio_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn eta_i64(k: usize) -> Result<Ratio<i64>> {
    let e = eta(k as u32)?;
    Ok(Ratio::new(*e.numer() as i64, *e.denom() as i64))
}

fn check_hn(h: f64, n: f64) -> Result<()> {
    if !(h >= 2.0 && n >= 2.0 && h.is_finite() && n.is_finite()) {
        return domain("H and N must be at least 2");
    }
    Ok(())
}

/// `N^{1/2} + N^{(k+1)/4}/H^{1/4} + N^{3/2}/H^{1-3/(2k+2)} + N^{(k-1)/2}/H^{1/2}`.
pub fn theorem_avf_rhs(k: usize, h: f64, n: f64) -> Result<f64> {
    check_hn(h, n)?;
    if k == 0 {
        return domain("k must be positive");
    }
    let k = k as i64;
    let e2 = Ratio::new(k + 1, 4);
    let e3 = Ratio::from_integer(1) - Ratio::new(3, 2 * k + 2);
    let e4 = Ratio::new(k - 1, 2);
    Ok(n.sqrt()
        + n.powf(ratio_f64(e2)) / h.powf(0.25)
        + n.powf(1.5) / h.powf(ratio_f64(e3))
        + n.powf(ratio_f64(e4)) / h.sqrt())
}

/// `N^{1/2} + N/H^{1/2} + N^{(k+1)/2-η}/H + N^{(k+3)/4-(k+1)η/(4+4η)}/H^{1/(2+2η)}`.
pub fn theorem_avg_rhs(k: usize, h: f64, n: f64) -> Result<f64> {
    check_hn(h, n)?;
    let e = eta_i64(k)?;
    let k = k as i64;
    let one = Ratio::from_integer(1);
    let e3 = Ratio::new(k + 1, 2) - e;
    let e4 = Ratio::new(k + 3, 4) - Ratio::from_integer(k + 1) * e / (Ratio::from_integer(4) * (one + e));
    let h4 = one / (Ratio::from_integer(2) * (one + e));
    Ok(n.sqrt() + n / h.sqrt() + n.powf(ratio_f64(e3)) / h + n.powf(ratio_f64(e4)) / h.powf(ratio_f64(h4)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Schedule {
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "F")]
    pub f: f64,
    pub d_floor: u64,
    pub e_floor: u64,
    pub f_floor: u64,
}

/// `D = N^{1/2}`, `E = min(H^{3/4}N^{(k+1)/4}, (HN^k)^{1/2})`,
/// `F = max((H N^{(k-1)/2+kη})^{1/(2+2η)}, N^{(k-1)/2})`.
pub fn parameter_schedule(k: usize, h: f64, n: f64) -> Result<Schedule> {
    check_hn(h, n)?;
    let eta = eta_i64(k)?;
    let one = Ratio::from_integer(1);
    let ki = k as i64;
    let d = n.sqrt();
    let e = (h.powf(0.75) * n.powf(ratio_f64(Ratio::new(ki + 1, 4)))).min((h * n.powi(k as i32)).sqrt());
    let inner = Ratio::new(ki - 1, 2) + Ratio::from_integer(ki) * eta;
    let outer = one / (Ratio::from_integer(2) * (one + eta));
    let f = (h * n.powf(ratio_f64(inner))).powf(ratio_f64(outer)).max(n.powf(ratio_f64(Ratio::new(ki - 1, 2))));
    let fl = |x: f64| x.floor() as u64;
    Ok(Schedule { d, e, f, d_floor: fl(d), e_floor: fl(e), f_floor: fl(f) })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducibleReport {
    pub samples: usize,
    pub reducible: usize,
    pub undecided: usize,
    pub fraction: f64,
}

/// Share of reducible members among `samples` draws from `F_k(H)`.
pub fn reducible_fraction(k: usize, h: u64, samples: usize, seed: u64) -> Result<ReducibleReport> {
    let spec = FamilySpec::fk(k, h, seed, samples);
    spec.validate()?;
    let verdicts = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let f = spec.sample(i)?;
            Ok(match f.is_irreducible() {
                Ok(b) => Some(b),
                Err(Error::Undecided(_)) => None,
                Err(e) => return Err(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let reducible = verdicts.iter().filter(|v| **v == Some(false)).count();
    let undecided = verdicts.iter().filter(|v| v.is_none()).count();
    let fraction = if samples == 0 { 0.0 } else { reducible as f64 / samples as f64 };
    Ok(ReducibleReport { samples, reducible, undecided, fraction })
}

/// One CSV row; numeric cells are empty for skipped samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRow {
    pub sample_index: u64,
    pub coeffs: String,
    pub irreducible: String,
    #[serde(rename = "S_f")]
    pub s_f: Option<u64>,
    pub cf_lo: Option<f64>,
    pub cf_hi: Option<f64>,
    pub err_lo: Option<f64>,
    pub err_hi: Option<f64>,
}

impl SampleRow {
    pub fn cf_midpoint(&self) -> Option<f64> {
        Some(Enclosure { lo: self.cf_lo?, hi: self.cf_hi?, terms_used: 0 }.midpoint())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedSample {
    pub sample_index: u64,
    pub reason: String,
}

/// Statistics of `|S_f - c_f N|` over completed rows, as intervals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregates {
    pub count: usize,
    pub mean_lo: f64,
    pub mean_hi: f64,
    pub median_lo: f64,
    pub median_hi: f64,
    pub max_lo: f64,
    pub max_hi: f64,
    /// Midpoint of the mean interval divided by `N`.
    pub mean_over_n: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Sampled,
    Exact,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sampled" => Ok(Mode::Sampled),
            "exact" => Ok(Mode::Exact),
            _ => domain(format!("unknown mode {s:?} (expected sampled or exact)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub spec: FamilySpec,
    #[serde(rename = "N")]
    pub n: u64,
    pub mode: Mode,
    pub cf_tolerance: f64,
    pub draws: u64,
    pub acceptance_rate: Option<f64>,
    pub rows: Vec<SampleRow>,
    pub skipped: Vec<SkippedSample>,
    pub aggregates: Option<Aggregates>,
    pub aggregates_undefined: bool,
    pub bound_rhs: Option<f64>,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Aggregates recomputed from rows; `None` when no row completed.
pub fn aggregate(rows: &[SampleRow], n: u64) -> Option<Aggregates> {
    let (mut lo, mut hi): (Vec<f64>, Vec<f64>) = rows.iter().filter_map(|r| Some((r.err_lo?, r.err_hi?))).unzip();
    if lo.is_empty() {
        return None;
    }
    let count = lo.len();
    let mean_lo = lo.iter().sum::<f64>() / count as f64;
    let mean_hi = hi.iter().sum::<f64>() / count as f64;
    lo.sort_by(f64::total_cmp);
    hi.sort_by(f64::total_cmp);
    Some(Aggregates {
        count,
        mean_lo,
        mean_hi,
        median_lo: median(&lo),
        median_hi: median(&hi),
        max_lo: lo[count - 1],
        max_hi: hi[count - 1],
        mean_over_n: (mean_lo + mean_hi) / 2.0 / n as f64,
    })
}

fn evaluate(index: u64, f: &IntPolynomial, n: u64, tol: f64) -> (SampleRow, Option<SkippedSample>) {
    let irreducible = match f.is_irreducible() {
        Ok(true) => "true",
        Ok(false) => "false",
        Err(_) => "unknown",
    };
    let mut row = SampleRow {
        sample_index: index,
        coeffs: f.to_string(),
        irreducible: irreducible.into(),
        s_f: None,
        cf_lo: None,
        cf_hi: None,
        err_lo: None,
        err_hi: None,
    };
    let outcome = count_squarefree_sieve(f, n).and_then(|s| Ok((s, compute_cf(f, tol)?)));
    match outcome {
        Ok((s, cf)) => {
            let (lo, hi) = abs_error_interval(s, &cf, n);
            row.s_f = Some(s);
            row.cf_lo = Some(cf.lo);
            row.cf_hi = Some(cf.hi);
            row.err_lo = Some(lo);
            row.err_hi = Some(hi);
            (row, None)
        }
        Err(e) => (row, Some(SkippedSample { sample_index: index, reason: e.to_string() })),
    }
}

fn bound_rhs(spec: &FamilySpec, n: u64) -> Option<f64> {
    let (h, n) = (spec.h as f64, n as f64);
    match spec.kind {
        FamilyKind::Fk => theorem_avf_rhs(spec.k, h, n).ok(),
        FamilyKind::Gg => theorem_avg_rhs(spec.k, h, n).ok(),
    }
}

fn assemble(spec: &FamilySpec, n: u64, mode: Mode, draws: u64, accepted: u64, polys: Vec<(u64, Result<IntPolynomial>)>) -> ExperimentReport {
    let tol = 1.0 / (10.0 * n as f64);
    let results: Vec<(SampleRow, Option<SkippedSample>)> = polys
        .into_par_iter()
        .map(|(i, f)| match f {
            Ok(f) => evaluate(i, &f, n, tol),
            Err(e) => (
                SampleRow {
                    sample_index: i,
                    coeffs: String::new(),
                    irreducible: "unknown".into(),
                    s_f: None,
                    cf_lo: None,
                    cf_hi: None,
                    err_lo: None,
                    err_hi: None,
                },
                Some(SkippedSample { sample_index: i, reason: e.to_string() }),
            ),
        })
        .collect();
    let (rows, skipped): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let skipped: Vec<_> = skipped.into_iter().flatten().collect();
    let aggregates = aggregate(&rows, n);
    ExperimentReport {
        spec: spec.clone(),
        n,
        mode,
        cf_tolerance: tol,
        draws,
        acceptance_rate: (draws > 0).then(|| accepted as f64 / draws as f64),
        aggregates_undefined: aggregates.is_none(),
        aggregates,
        rows,
        skipped,
        bound_rhs: bound_rhs(spec, n),
    }
}

/// Averages `|S_f(N) - c_f N|` over `spec.samples` seeded draws.
pub fn run_average_experiment(spec: &FamilySpec, n: u64) -> Result<ExperimentReport> {
    spec.validate()?;
    if n == 0 {
        return domain("N must be positive");
    }
    let draws: Vec<(u64, Result<(IntPolynomial, u64)>)> =
        (0..spec.samples as u64).into_par_iter().map(|i| (i, spec.draw(i))).collect();
    let total = draws.iter().map(|(_, d)| d.as_ref().map_or(MAX_DRAWS_PER_SAMPLE, |(_, a)| *a)).sum();
    let accepted = draws.iter().filter(|(_, d)| d.is_ok()).count() as u64;
    let polys = draws.into_iter().map(|(i, d)| (i, d.map(|(f, _)| f))).collect();
    Ok(assemble(spec, n, Mode::Sampled, total, accepted, polys))
}

/// The same statistics averaged over the whole family.
pub fn run_exact_average(spec: &FamilySpec, n: u64) -> Result<ExperimentReport> {
    if n == 0 {
        return domain("N must be positive");
    }
    let members = enumerate_family(spec)?;
    let mut spec = spec.clone();
    spec.samples = members.len();
    let polys = members.into_iter().enumerate().map(|(i, f)| (i as u64, Ok(f))).collect();
    Ok(assemble(&spec, n, Mode::Exact, 0, 0, polys))
}

/// Whether `f` lies in the family described by `spec`.
pub fn in_family(spec: &FamilySpec, f: &IntPolynomial) -> Result<bool> {
    spec.validate()?;
    let h = BigInt::from(spec.h);
    if !f.content()?.is_one() || f.coeffs().iter().any(|c| c.abs() > h) {
        return Ok(false);
    }
    Ok(match spec.kind {
        FamilyKind::Fk => f.degree() == Some(spec.k),
        FamilyKind::Gg => {
            let g = spec.g.as_ref().expect("validated");
            f.with_constant(BigInt::zero()) == *g && f.coeff(0).abs() <= h
        }
    })
}

/// Density of coprime tuples `(a_0..a_k)` with `a_k != 0` in `[-H, H]^{k+1}`.
pub fn fk_density_exact(k: usize, h: u64) -> Result<Ratio<u64>> {
    let total = (2 * h + 1).pow(k as u32 + 1);
    let accepted = enumerate_family(&FamilySpec::fk(k, h, 0, 0))?.len() as u64;
    Ok(Ratio::new(accepted, total))
}
