use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::cmp::Ordering;
use symon_core::analysis::{
    cmp_ratio, density_ratio, part_a_series, part_b_exponent_twice, part_b_series, part_b_term, primes_up_to, ratio_to_f64, sub_raw,
};
use symon_core::sympgroup::QParam;

fn pow_ratio(ell: u64, exp: i64) -> BigRational {
    let p = BigRational::from_integer(BigInt::from(ell).pow(exp.unsigned_abs() as u32));
    if exp >= 0 {
        p
    } else {
        p.recip()
    }
}

#[test]
fn density_diagnostic_is_below_one_and_increasing() {
    let rep = part_a_series(2, QParam::Finite(2), 10_000).unwrap();
    assert_eq!(rep.rows.len(), 1228);
    let mut prev = BigRational::zero();
    for row in rep.rows.iter().filter(|r| r.ell >= 100) {
        let diag = &row.term * BigRational::from_integer(row.ell.into());
        assert!(diag > BigRational::zero() && diag < BigRational::one(), "ell {}", row.ell);
        assert!(diag > prev, "not increasing at ell {}", row.ell);
        assert!((ratio_to_f64(&diag) - row.diagnostic).abs() < 1e-12);
        prev = diag;
    }
}

#[test]
fn density_partial_sums_grow_like_half_harmonic() {
    let rep = part_a_series(2, QParam::Infinity, 10_000).unwrap();
    let mut prev = BigRational::zero();
    for row in &rep.rows {
        // consecutive partial sums differ by exactly the term
        let step = sub_raw(&row.partial, &prev);
        assert_eq!(step.numer() * row.term.denom(), row.term.numer() * step.denom());
        assert_eq!(cmp_ratio(&row.partial, &prev), Ordering::Greater);
        prev = row.partial.clone();
    }
    let gained = sub_raw(&rep.partial_through(10_000), &rep.partial_through(1_000));
    let half_harmonic: BigRational = primes_up_to(10_000)
        .into_iter()
        .filter(|&l| l > 1_000)
        .map(|l| BigRational::new(1.into(), (2 * l).into()))
        .sum();
    assert_eq!(cmp_ratio(&gained, &half_harmonic), Ordering::Greater);
    // q only removes its own characteristic
    let rep3 = part_a_series(2, QParam::Finite(3), 100).unwrap();
    assert!(rep3.rows.iter().all(|r| r.ell != 3 && r.ell != 2));
    assert_eq!(rep3.rows[0].term, density_ratio(2, 5, QParam::Finite(3)).unwrap());
}

#[test]
fn bound_terms_follow_their_growth_exponent() {
    for (g, e) in [(2usize, 2u32), (2, 3), (3, 2)] {
        let rep = part_b_series(g, e, 10_000).unwrap();
        let twice = part_b_exponent_twice(g, e);
        for row in rep.rows.iter().filter(|r| r.ell >= 50) {
            assert!(row.diagnostic > 0.5 && row.diagnostic < 1.5, "g={g} e={e} ell={}", row.ell);
            if twice % 2 == 0 {
                let exact = &row.term * pow_ratio(row.ell, -twice / 2);
                assert!((ratio_to_f64(&exact) - row.diagnostic).abs() < 1e-9);
            }
        }
        assert!(rep.tail_bound.unwrap() > 0.0);
    }
}

#[test]
fn bound_series_flattens_and_stays_under_two_over_ell_squared() {
    let rep = part_b_series(2, 2, 10_000).unwrap();
    for row in rep.rows.iter().filter(|r| r.ell >= 5) {
        assert!(row.term < BigRational::new(2.into(), (row.ell * row.ell).into()), "ell {}", row.ell);
    }
    let s2 = rep.partial_through(100);
    let s3 = rep.partial_through(1_000);
    let s4 = rep.partial_through(10_000);
    assert_eq!(cmp_ratio(&sub_raw(&s4, &s3), &sub_raw(&s3, &s2)), Ordering::Less);
    // diagnostic term * ell^2 decreases for ell >= 5
    let diags: Vec<f64> = rep.rows.iter().filter(|r| r.ell >= 5).map(|r| r.diagnostic).collect();
    assert!(diags.windows(2).all(|w| w[1] < w[0]));
    // higher e shrinks every term
    let rep3 = part_b_series(2, 3, 10_000).unwrap();
    for (a, b) in rep.rows.iter().zip(&rep3.rows) {
        assert!(b.term < a.term);
    }
}

#[test]
fn bound_term_is_an_upper_bound() {
    // term^4 >= 156^4 * s^-2 exactly at (g, e, ell) = (2, 2, 5)
    let t = part_b_term(2, 2, 5).unwrap();
    let lower = BigRational::new(BigInt::from(156u32).pow(4), BigInt::from(9_360_000u64).pow(2));
    let t4 = &t * &t * &t * &t;
    assert!(t4 >= lower);
    let excess = ratio_to_f64(&(t4 / lower)) - 1.0;
    assert!(excess < 4e-12);
}
