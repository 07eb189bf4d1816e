//! `S^(q)(n)` for squarefree `n`.

use num_bigint::BigUint;

use super::{s_cardinality, BSelectionStrategy, BuildOptions, SetLevel, SpecialSet};
use crate::error::{Error, Result};
use crate::modmat::{pow_mod, ModMatrix, Modulus};
use crate::sympgroup::{ord_mod, GroupContext, QParam};

/// `|S^(q)(n)| = sum_{i=1}^{ord_n q} prod_{ell | n} |S_{q^i}(ell)|`, or
/// `prod_{ell | n} |S^(inf)(ell)|` when `q` is infinite.
pub fn count_sq_composite(g: usize, n: Modulus, q: QParam, strategy: BSelectionStrategy) -> Result<BigUint> {
    let ctx = GroupContext::new(g, n, q)?;
    let primes = n.primes();
    match q {
        QParam::Infinity => {
            let mut total = BigUint::from(1u32);
            for &ell in &primes {
                let units = BigUint::from(ell - 1);
                total *= units * s_cardinality(g, ell, strategy)?;
            }
            Ok(total)
        }
        QParam::Finite(qv) => {
            let order = ord_mod(qv, n.value())?;
            let mut total = BigUint::from(0u32);
            for i in 1..=order {
                let mut term = BigUint::from(1u32);
                for &ell in &primes {
                    let lambda = pow_mod(qv, i, ell);
                    debug_assert!(ctx.restrict(ell)?.allows_multiplier(lambda));
                    term *= s_cardinality(g, ell, strategy)?;
                }
                total += term;
            }
            Ok(total)
        }
    }
}

/// Members of `GSp^(q)(Z/n)` whose reductions all lie in the per-prime `S^(q)(ell)`.
#[derive(Clone, Debug)]
pub struct CompositeSpecialSet {
    ctx: GroupContext,
    parts: Vec<SpecialSet>,
    cardinality: BigUint,
}

impl CompositeSpecialSet {
    pub fn describe(ctx: &GroupContext, strategy: BSelectionStrategy, budget: u64) -> Result<Self> {
        let parts = ctx
            .modulus()
            .primes()
            .into_iter()
            .map(|ell| SpecialSet::describe(&ctx.restrict(ell)?, SetLevel::QUnion, None, strategy, budget))
            .collect::<Result<Vec<_>>>()?;
        let cardinality = count_sq_composite(ctx.g(), ctx.modulus(), ctx.q(), strategy)?;
        Ok(CompositeSpecialSet { ctx: ctx.clone(), parts, cardinality })
    }

    /// Describes and materializes every per-prime part.
    pub fn build(ctx: &GroupContext, opts: &BuildOptions) -> Result<Self> {
        let mut set = Self::describe(ctx, opts.strategy, opts.budget)?;
        for part in &mut set.parts {
            part.materialize(opts.max_ell)?;
        }
        Ok(set)
    }

    pub fn ctx(&self) -> &GroupContext {
        &self.ctx
    }

    pub fn parts(&self) -> &[SpecialSet] {
        &self.parts
    }

    pub fn cardinality(&self) -> &BigUint {
        &self.cardinality
    }

    /// Exact membership through the materialized per-prime parts.
    pub fn membership(&self, a: &ModMatrix) -> Result<bool> {
        if self.parts.iter().any(|p| !p.is_materialized()) {
            return Err(Error::NotMaterialized);
        }
        if a.modulus() != self.ctx.modulus() || !self.ctx.is_member(a) {
            return Ok(false);
        }
        for part in &self.parts {
            if !part.membership(&a.reduce_mod(part.ell())?)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Lookup where materialized, structural test otherwise.
    pub fn contains(&self, a: &ModMatrix) -> bool {
        if a.modulus() != self.ctx.modulus() || !self.ctx.is_member(a) {
            return false;
        }
        self.parts.iter().all(|part| {
            a.reduce_mod(part.ell())
                .map(|r| part.contains(&r))
                .unwrap_or(false)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modmat::crt_lift;
    use crate::specialsets::sq_cardinality;
    use crate::sympgroup::{sample_uniform, Multiplier, DEFAULT_BUDGET};

    #[test]
    fn composite_count_is_product_over_q_powers() {
        let lex = BSelectionStrategy::LexCanonical;
        let n = Modulus::new(15).unwrap();
        // ord_15(2) = 4 and every factor is 909000 or 4104
        let expected = BigUint::from(4u32) * BigUint::from(4104u32) * BigUint::from(909_000u32);
        assert_eq!(count_sq_composite(2, n, QParam::Finite(2), lex).unwrap(), expected);
        let inf = count_sq_composite(2, n, QParam::Infinity, lex).unwrap();
        let per_prime = sq_cardinality(2, 3, QParam::Infinity, lex).unwrap() * sq_cardinality(2, 5, QParam::Infinity, lex).unwrap();
        assert_eq!(inf, per_prime);
        let prime = count_sq_composite(2, Modulus::new(5).unwrap(), QParam::Finite(2), lex).unwrap();
        assert_eq!(prime, BigUint::from(3_636_000u32));
    }

    #[test]
    fn membership_is_per_prime() {
        let c = GroupContext::new(2, Modulus::new(15).unwrap(), QParam::Infinity).unwrap();
        let set = CompositeSpecialSet::build(&c, &BuildOptions::default()).unwrap();
        let described = CompositeSpecialSet::describe(&c, BSelectionStrategy::LexCanonical, DEFAULT_BUDGET).unwrap();
        let c3 = c.restrict(3).unwrap();
        let c5 = c.restrict(5).unwrap();
        let s3 = &set.parts()[0];
        let s5 = &set.parts()[1];
        let inside = crt_lift(&[
            s3.elements().unwrap().get(7, c3.modulus(), 4),
            s5.elements().unwrap().get(12345, c5.modulus(), 4),
        ])
        .unwrap();
        assert!(set.membership(&inside).unwrap());
        assert!(described.contains(&inside));
        for i in 0..300 {
            let a3 = sample_uniform(&c3, Multiplier::new(c3.modulus(), 1 + i % 2).unwrap(), 3, i).unwrap();
            let a5 = sample_uniform(&c5, Multiplier::new(c5.modulus(), 1 + i % 4).unwrap(), 5, i).unwrap();
            let a = crt_lift(&[a3.clone(), a5.clone()]).unwrap();
            let expected = s3.membership(&a3).unwrap() && s5.membership(&a5).unwrap();
            assert_eq!(set.membership(&a).unwrap(), expected);
            assert_eq!(described.contains(&a), expected);
        }
        assert!(matches!(described.membership(&inside), Err(Error::NotMaterialized)));
    }
}
