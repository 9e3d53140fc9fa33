use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use proptest::prelude::*;

use sqfree_core::congruence::{count_box_congruence, count_u, family_size_u};
use sqfree_core::density::{compute_cf, local_factor};
use sqfree_core::experiments::{aggregate, run_average_experiment, FamilySpec};
use sqfree_core::expsum::{discrepancy_exact, erdos_turan_rhs, PointSet};
use sqfree_core::lattice::{build_lattice, count_box_points};
use sqfree_core::roots::{rho, rho_table};
use sqfree_core::squarefree::{count_squarefree_sieve, mobius_identity_check, sieve_main_term};
use sqfree_core::IntPolynomial;

fn p(c: &[i64]) -> IntPolynomial {
    IntPolynomial::from_i64(c)
}

#[test]
fn lattice_box_counts_sum_to_congruence_count() {
    for (k, m, h, n) in [(1u32, 7u64, 3u64, 10u64), (2, 12, 2, 9), (3, 5, 1, 6), (2, 1, 2, 3)] {
        let by_lattice: u128 = (1..=n).map(|x| count_box_points(&build_lattice(k as usize, m, x).unwrap(), h).unwrap()).sum();
        assert_eq!(by_lattice, count_box_congruence(k, m, h, n).unwrap(), "k={k} m={m} H={h} N={n}");
    }
}

#[test]
fn u_with_unit_modulus_counts_whole_family() {
    for (k, h, n) in [(1, 4, 3), (2, 3, 5), (3, 2, 2)] {
        assert_eq!(count_u(k, 1, h, n).unwrap().value, family_size_u(k, h).unwrap() * n as u128);
    }
}

#[test]
fn density_head_matches_local_factors() {
    // c_f <= ∏_{p <= 7} local factor, and the enclosure is consistent with it.
    let f = p(&[1, 0, 1]);
    let head: f64 = [2u64, 3, 5, 7].iter().map(|&q| local_factor(&f, q).unwrap().to_f64().unwrap()).product();
    let e = compute_cf(&f, 1e-5).unwrap();
    assert!(e.hi <= head);
    assert!(e.lo > 0.8 * head);
}

#[test]
fn squarefree_count_tracks_density() {
    let f = p(&[1, 0, 1]);
    let n = 20_000;
    let s = count_squarefree_sieve(&f, n).unwrap();
    let c = compute_cf(&f, 1e-5).unwrap();
    assert!((s as f64 / n as f64 - c.midpoint()).abs() < 0.01);
    // Truncated Möbius sum D = N^{1/2} is close to S_f.
    let main = sieve_main_term(&f, n, (n as f64).sqrt() as u64).unwrap();
    assert!((main - s as i128).abs() < (n as i128) / 50);
    assert!(mobius_identity_check(&f, 300).unwrap().equal);
}

#[test]
fn experiment_rows_reproduce_aggregates() {
    let spec = FamilySpec::fk(2, 30, 17, 25);
    let r = run_average_experiment(&spec, 400).unwrap();
    assert_eq!(r.rows.len(), 25);
    assert_eq!(aggregate(&r.rows, 400), r.aggregates);
    for row in &r.rows {
        let f: IntPolynomial = row.coeffs.parse().unwrap();
        assert_eq!(row.s_f, Some(count_squarefree_sieve(&f, 400).unwrap()));
    }
    assert_eq!(run_average_experiment(&spec, 400).unwrap(), r);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rho_is_multiplicative(c in prop::collection::vec(-40i64..40, 2..6), a in 1u64..200, b in 1u64..200) {
        prop_assume!(c.iter().skip(1).any(|&x| x != 0));
        prop_assume!(a.gcd(&b) == 1);
        let f = p(&c);
        prop_assert_eq!(rho(&f, a * b).unwrap(), rho(&f, a).unwrap() * rho(&f, b).unwrap());
        let table = rho_table(&f, a * b).unwrap();
        prop_assert_eq!(table[(a * b) as usize], rho(&f, a * b).unwrap());
    }

    #[test]
    fn erdos_turan_dominates_discrepancy(c in prop::collection::vec(-30i64..30, 2..5), m in 2u64..400, n in 1u64..300, l in 1u64..30) {
        let g = p(&c);
        let d = discrepancy_exact(&PointSet::from_polynomial(&g, m, n).unwrap()).unwrap();
        let d = *d.numer() as f64 / *d.denom() as f64;
        // Explicit form: D <= N/(L+1) + 3 ∑_{h <= L} |S_h|/h.
        prop_assert!(d <= 3.0 * erdos_turan_rhs(&g, m, n, l).unwrap() + 1e-9);
    }

    #[test]
    fn naive_and_direct_evaluation_agree(c in prop::collection::vec(-9i64..9, 1..5), x in 0u64..1000) {
        let f = p(&c);
        let direct: i128 = c.iter().rev().fold(0i128, |acc, &a| acc * x as i128 + a as i128);
        prop_assert_eq!(f.evaluate(&BigInt::from(x)), BigInt::from(direct));
    }
}
