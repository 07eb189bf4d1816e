//! Structural membership: decides `A in S` from the fixed line of `A` without
//! the element list.
//!
//! Every element of `S_lambda(ell)` is `T^{-1} A0 T` with `A0` in
//! `S_lambda(ell)_0` and `T = T_{u_alpha}[beta]`. Its fixed space is the line
//! through `T^{-1} e1 = (1, -beta, -beta alpha)`, which recovers `(alpha, beta)`
//! up to the choice of `alpha` when `beta = 0` (any choice gives the identity).
//! Conjugating back yields `A0`, whose blocks are then checked directly.

use super::build::{excluded_d, stabilizer_parts};
use super::{SetLevel, SpecialSet};
use crate::modmat::{inv_mod, mul_mod, neg_mod, ModMatrix};
use crate::sympgroup::similitude_multiplier;
use crate::sympgroup::stabilizer::transvection_raw;

impl SpecialSet {
    /// Membership from the construction, without materialized elements.
    pub fn contains_structurally(&self, a: &ModMatrix) -> bool {
        let ctx = &self.ctx;
        if a.modulus() != ctx.modulus() || a.dim() != ctx.dim() {
            return false;
        }
        let p = ctx.modulus().value();
        let Some(lambda) = similitude_multiplier(a) else {
            return false;
        };
        let Some(blocks) = self.blocks.get(&lambda) else {
            return false;
        };
        let Ok(fixed) = a.fixed_space() else {
            return false;
        };
        if fixed.len() != 1 {
            return false;
        }
        let v = fixed[0].entries();
        let Some(scale) = inv_mod(v[0], p) else {
            return false;
        };
        let v: Vec<u64> = v.iter().map(|&x| mul_mod(x, scale, p)).collect();
        let beta = neg_mod(v[1], p);
        let m = ctx.dim() - 2;
        let alpha: Vec<u64> = if beta == 0 {
            if v[2..].iter().any(|&x| x != 0) {
                return false;
            }
            vec![0; m]
        } else {
            let beta_inv = inv_mod(beta, p).expect("nonzero in a prime field");
            v[2..].iter().map(|&x| mul_mod(neg_mod(x, p), beta_inv, p)).collect()
        };
        if self.level == SetLevel::S0 && beta != 0 {
            return false;
        }
        let t = transvection_raw(ctx, &alpha, beta);
        let t_inv = transvection_raw(ctx, &alpha, neg_mod(beta, p));
        let a0 = t.mul_unchecked(a).mul_unchecked(&t_inv);
        if a0.column(0).entries().iter().enumerate().any(|(i, &x)| x != u64::from(i == 0)) {
            return false;
        }
        let (d, d_vec, b) = stabilizer_parts(&a0);
        let Some(i) = blocks.position(&b) else {
            return false;
        };
        d != excluded_d(lambda, &d_vec, &blocks.blocks[i], &blocks.resolvents[i], p)
    }
}

#[cfg(test)]
mod tests {
    use crate::modmat::ModMatrix;
    use crate::specialsets::{build_s0, build_sq, BSelectionStrategy, BuildOptions, SetLevel, SpecialSet};
    use crate::sympgroup::{sample_uniform, GroupContext, Multiplier, QParam, DEFAULT_BUDGET};

    #[test]
    fn agrees_with_lookup_on_all_of_gsp4_f3() {
        for q in [QParam::Infinity, QParam::Finite(4)] {
            let c = GroupContext::prime(2, 3, q).unwrap();
            let sq = build_sq(&c, &BuildOptions::default()).unwrap();
            let described = SpecialSet::describe(&c, SetLevel::QUnion, None, BSelectionStrategy::LexCanonical, DEFAULT_BUDGET).unwrap();
            let all = GroupContext::prime(2, 3, QParam::Infinity).unwrap();
            let mut hits = 0u64;
            for a in all.enumerate(None, DEFAULT_BUDGET).unwrap() {
                let lookup = sq.membership(&a).unwrap();
                assert_eq!(lookup, described.contains_structurally(&a), "{a}");
                hits += u64::from(lookup);
            }
            assert_eq!(hits, sq.materialized_len().unwrap());
        }
    }

    #[test]
    fn agrees_with_lookup_at_five() {
        let c = GroupContext::prime(2, 5, QParam::Finite(2)).unwrap();
        for strategy in [BSelectionStrategy::LexCanonical, BSelectionStrategy::RemarkG2] {
            let opts = BuildOptions { strategy, ..BuildOptions::default() };
            let sq = build_sq(&c, &opts).unwrap();
            for i in (0..sq.materialized_len().unwrap() as usize).step_by(997) {
                let a = sq.elements().unwrap().get(i, c.modulus(), 4);
                assert!(sq.contains_structurally(&a));
            }
            for i in 0..4000 {
                let l = Multiplier::new(c.modulus(), 1 + i % 4).unwrap();
                let a = sample_uniform(&c, l, 17, i).unwrap();
                assert_eq!(sq.membership(&a).unwrap(), sq.contains_structurally(&a));
            }
        }
    }

    #[test]
    fn s0_level_requires_fixed_e1() {
        let c = GroupContext::prime(2, 3, QParam::Infinity).unwrap();
        let l = Multiplier::new(c.modulus(), 2).unwrap();
        let s0 = build_s0(&c, l, &BuildOptions::default()).unwrap();
        let all: Vec<ModMatrix> = c.enumerate(Some(l), DEFAULT_BUDGET).unwrap().collect();
        for a in &all {
            assert_eq!(s0.membership(a).unwrap(), s0.contains_structurally(a));
        }
    }
}
