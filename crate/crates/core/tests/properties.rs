use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use symon_core::analysis::{density_ratio, part_b_term};
use symon_core::modmat::crt_lift;
use symon_core::montecarlo::{event_x, sample_sigma, SigmaTuple};
use symon_core::specialsets::{build_sq, BuildOptions};
use symon_core::sympgroup::{ord_mod, sample_uniform, sp_order, stabilizer_matrix, transvection, StabilizerParams};
use symon_core::{GroupContext, ModMatrix, ModVector, Modulus, Multiplier, QParam, SpecialSet};

const PRIMES: [u64; 6] = [3, 5, 7, 11, 13, 17];

fn ctx(g: usize, ell: u64) -> GroupContext {
    GroupContext::prime(g, ell, QParam::Infinity).unwrap()
}

fn member(c: &GroupContext, lambda: u64, seed: u64, i: u64) -> ModMatrix {
    sample_uniform(c, Multiplier::new(c.modulus(), lambda).unwrap(), seed, i).unwrap()
}

fn sq5() -> &'static SpecialSet {
    static CELL: OnceLock<SpecialSet> = OnceLock::new();
    CELL.get_or_init(|| build_sq(&ctx(2, 5), &BuildOptions::default()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn multipliers_multiply(g in 1usize..4, pi in 0usize..6, l1 in 1u64..100, l2 in 1u64..100, seed: u64) {
        let ell = PRIMES[pi];
        let (l1, l2) = (1 + l1 % (ell - 1), 1 + l2 % (ell - 1));
        let c = ctx(g, ell);
        let a = member(&c, l1, seed, 0);
        let b = member(&c, l2, seed, 1);
        prop_assert_eq!(c.multiplier(&a).unwrap().value(), l1);
        let ab = a.mul(&b).unwrap();
        prop_assert_eq!(c.multiplier(&ab).unwrap().value(), l1 * l2 % ell);
        let inv = a.inverse().unwrap();
        prop_assert_eq!(c.multiplier(&inv).unwrap().value() * l1 % ell, 1);
    }

    #[test]
    fn transvections_are_symplectic(g in 1usize..4, pi in 0usize..6, raw in prop::collection::vec(0u64..1000, 6), beta in 0u64..1000) {
        let ell = PRIMES[pi];
        let c = ctx(g, ell);
        let alpha: Vec<u64> = raw[..2 * g - 2].to_vec();
        let t = transvection(&c, &alpha, beta).unwrap();
        prop_assert_eq!(c.multiplier(&t).unwrap().value(), 1);
        let back = transvection(&c, &alpha, ell - beta % ell).unwrap();
        prop_assert!(t.mul(&back).unwrap().is_identity());
    }

    #[test]
    fn stabilizer_matrices_fix_e1(pi in 0usize..6, lambda in 1u64..100, d in 0u64..100, dv in prop::collection::vec(0u64..100, 2), seed: u64) {
        let ell = PRIMES[pi];
        let c = ctx(2, ell);
        let lambda = 1 + lambda % (ell - 1);
        let b = member(&ctx(1, ell), lambda, seed, 0);
        let params = StabilizerParams {
            lambda: Multiplier::new(c.modulus(), lambda).unwrap(),
            d: d % ell,
            d_vec: dv.iter().map(|x| x % ell).collect(),
            b: Some(b),
        };
        let a = stabilizer_matrix(&c, &params).unwrap();
        let e1 = ModVector::unit(c.modulus(), 4, 0).unwrap();
        prop_assert_eq!(a.mul_vec(&e1).unwrap(), e1);
        prop_assert_eq!(c.multiplier(&a).unwrap().value(), lambda);
    }

    #[test]
    fn structural_test_agrees_with_lookup(lambda in 1u64..5, seed: u64, i in 0u64..1000) {
        let set = sq5();
        let c = set.ctx();
        let a = member(c, lambda, seed, i);
        prop_assert_eq!(set.contains_structurally(&a), set.membership(&a).unwrap());
        // conjugating a stored element by a transvection moves it within the set
        let s = set.sample_element(seed, i).unwrap();
        prop_assert!(set.contains_structurally(&s));
        let t = transvection(c, &[i % 5, seed % 5], 1 + seed % 4).unwrap();
        let t_inv = t.inverse().unwrap();
        let moved = t_inv.mul(&s).unwrap().mul(&t).unwrap();
        prop_assert_eq!(set.membership(&moved).unwrap(), set.contains_structurally(&moved));
    }

    #[test]
    fn every_special_element_fixes_a_vector(seed: u64, i in 0u64..100_000) {
        let s = sq5().sample_element(seed, i).unwrap();
        prop_assert!(s.has_eigenvalue_one().unwrap());
        prop_assert_eq!(s.fixed_space().unwrap().len(), 1);
    }

    #[test]
    fn samples_are_reproducible(seed: u64, i in 0u64..1_000_000) {
        let c = GroupContext::new(2, Modulus::new(15).unwrap(), QParam::Finite(2)).unwrap();
        let a = sample_sigma(&c, 2, seed, i).unwrap();
        let b = sample_sigma(&c, 2, seed, i).unwrap();
        prop_assert_eq!(&a.elements, &b.elements);
        for m in &a.elements {
            prop_assert!(c.is_member(m));
            // per-prime multipliers come from one power of q
            let lam = c.multiplier(m).unwrap().value();
            let k = ord_mod(2, 15).unwrap();
            prop_assert!((1..=k).any(|j| 2u64.pow(j as u32) % 15 == lam));
            let parts = [m.reduce_mod(3).unwrap(), m.reduce_mod(5).unwrap()];
            prop_assert_eq!(&crt_lift(&parts).unwrap(), m);
        }
    }

    #[test]
    fn event_x_ignores_order_and_identity(pi in 0usize..3, seed: u64, i in 0u64..10_000) {
        let ell = PRIMES[pi];
        let c = ctx(2, ell);
        let t = sample_sigma(&c, 2, seed, i).unwrap();
        let swapped = SigmaTuple { elements: vec![t.elements[1].clone(), t.elements[0].clone()], ..t.clone() };
        prop_assert_eq!(event_x(&t, ell).unwrap(), event_x(&swapped, ell).unwrap());
        let mut with_id = t.clone();
        with_id.elements.push(ModMatrix::identity(c.modulus(), 4).unwrap());
        prop_assert_eq!(event_x(&t, ell).unwrap(), event_x(&with_id, ell).unwrap());
        let single = SigmaTuple { elements: vec![t.elements[0].clone()], ..t.clone() };
        prop_assert!(event_x(&single, ell).unwrap() >= event_x(&t, ell).unwrap());
    }

    #[test]
    fn bound_terms_are_tight_upper_bounds(g in 1usize..4, e in 1u32..5, pi in 0usize..6) {
        let ell = PRIMES[pi];
        let term = part_b_term(g, e, ell).unwrap();
        let c = BigRational::new(BigInt::from(ell.pow(2 * g as u32) - 1), BigInt::from(ell - 1));
        let s = BigRational::from_integer(BigInt::from(sp_order(g, ell)));
        // term >= c s^{-e/2g}  <=>  (term / c)^{2g} s^e >= 1
        let k = 2 * g as i32;
        let lhs = (&term / &c).pow(k) * s.pow(e as i32);
        prop_assert!(lhs >= BigRational::from_integer(1.into()));
        let slack = lhs - BigRational::from_integer(1.into());
        prop_assert!(slack < BigRational::new(1.into(), BigInt::from(10u64.pow(11))));
    }

    #[test]
    fn density_matches_closed_form(ell in prop::sample::select(vec![3u64, 5, 7, 11, 13, 101, 1009, 7919])) {
        let l = BigInt::from(ell);
        let expected = BigRational::new(
            (l.pow(3) - l.pow(2) + 1) * (&l - 2),
            &l * (l.pow(4) - 1),
        );
        prop_assert_eq!(density_ratio(2, ell, QParam::Infinity).unwrap(), expected.clone());
        prop_assert_eq!(density_ratio(2, ell, QParam::Finite(2)).unwrap(), expected);
    }
}
