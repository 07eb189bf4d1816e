//! Haar-random elements and tuples of `GSp^(q)_{2g}(Z/n)`, the common-fixed-vector
//! event, and exact small-case measures.

mod experiments;

use num_bigint::BigUint;
use num_rational::BigRational;
use rand::Rng;

use crate::error::{Error, Result};
use crate::modmat::{crt_lift, pow_mod, rank_of_rows, ModMatrix};
use crate::rng;
use crate::sympgroup::{ord_mod, sample_uniform_with, GroupContext, Multiplier, QParam};

pub use experiments::{
    borel_cantelli_experiment, estimate_event, independence_experiment, BorelCantelliReport, EllStat, Event,
    EventEstimate, HitSets, IndependenceReport, ratio_string,
};

/// An `e`-tuple of group elements with the `(seed, index)` that produced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigmaTuple {
    pub elements: Vec<ModMatrix>,
    pub seed: u64,
    pub index: u64,
}

impl SigmaTuple {
    pub fn e(&self) -> usize {
        self.elements.len()
    }
}

/// Uniform sampler on `GSp^(q)_{2g}(Z/n)` for squarefree `n`.
///
/// For finite `q` one exponent `i` is drawn uniformly from `[1, ord_n q]` and
/// every prime factor gets a uniform element of `GSp[q^i mod ell]`; for
/// infinite `q` each prime gets an independent uniform unit multiplier. The
/// per-prime draws are then combined by CRT.
#[derive(Clone, Debug)]
pub struct SigmaSampler {
    ctx: GroupContext,
    parts: Vec<GroupContext>,
    order: Option<u64>,
}

impl SigmaSampler {
    pub fn new(ctx: &GroupContext) -> Result<Self> {
        let parts = ctx
            .modulus()
            .primes()
            .into_iter()
            .map(|ell| ctx.restrict(ell))
            .collect::<Result<Vec<_>>>()?;
        let order = match ctx.q() {
            QParam::Finite(q) => Some(ord_mod(q, ctx.modulus().value())?),
            QParam::Infinity => None,
        };
        Ok(SigmaSampler { ctx: ctx.clone(), parts, order })
    }

    pub fn ctx(&self) -> &GroupContext {
        &self.ctx
    }

    /// One uniform element drawn from `rng`.
    pub fn element<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ModMatrix> {
        let exponent = self.order.map(|k| 1 + rng::residue(rng, k));
        let mut residues = Vec::with_capacity(self.parts.len());
        for part in &self.parts {
            let ell = part.modulus().value();
            let lambda = match (self.ctx.q(), exponent) {
                (QParam::Finite(q), Some(i)) => pow_mod(q, i, ell),
                _ => rng::nonzero(rng, ell),
            };
            residues.push(sample_uniform_with(part, Multiplier::new(part.modulus(), lambda)?, rng)?);
        }
        if residues.len() == 1 {
            Ok(residues.pop().expect("one part"))
        } else {
            crt_lift(&residues)
        }
    }

    /// The `e`-tuple for `(seed, index)`.
    pub fn sample(&self, e: usize, seed: u64, index: u64) -> Result<SigmaTuple> {
        self.sample_on_lane(e, seed, rng::lane::SIGMA, index)
    }

    pub(crate) fn sample_on_lane(&self, e: usize, seed: u64, lane: u64, index: u64) -> Result<SigmaTuple> {
        if e == 0 {
            return Err(Error::InvalidParameter("e must be positive".into()));
        }
        let mut r = rng::stream(seed, lane, index);
        let elements = (0..e).map(|_| self.element(&mut r)).collect::<Result<Vec<_>>>()?;
        Ok(SigmaTuple { elements, seed, index })
    }
}

/// Draws the `e`-tuple for `(seed, index)` from `GSp^(q)_{2g}(Z/n)`.
pub fn sample_sigma(ctx: &GroupContext, e: usize, seed: u64, index: u64) -> Result<SigmaTuple> {
    SigmaSampler::new(ctx)?.sample(e, seed, index)
}

/// Whether the reductions mod `ell` of the tuple have a common nonzero fixed vector.
pub fn event_x(sigma: &SigmaTuple, ell: u64) -> Result<bool> {
    let first = sigma
        .elements
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty tuple".into()))?;
    let n = first.modulus().value();
    if !crate::modmat::is_prime(ell) {
        return Err(Error::NotPrime(ell));
    }
    if n % ell != 0 {
        return Err(Error::PrimeDoesNotDivide { prime: ell, modulus: n });
    }
    let d = first.dim();
    let mut rows = Vec::with_capacity(d * sigma.e());
    for a in &sigma.elements {
        for i in 0..d {
            rows.push(
                (0..d)
                    .map(|j| (a.get(i, j) % ell + ell - u64::from(i == j)) % ell)
                    .collect(),
            );
        }
    }
    Ok(rank_of_rows(rows, d, ell) < d)
}

fn check_exact(ctx: &GroupContext, ell: u64) -> Result<GroupContext> {
    if ctx.g() != 1 {
        return Err(Error::InvalidParameter(
            "exact fixed-vector measures are implemented for g = 1 only".into(),
        ));
    }
    if ctx.modulus().is_prime() && ctx.modulus().value() == ell {
        Ok(ctx.clone())
    } else {
        ctx.restrict(ell)
    }
}

/// Exact `mu(X_ell)` for `g = 1` by counting, for each line `L`, the elements
/// fixing `L` pointwise: `|X| = sum_L |F_L|^e - ell` (the all-identity tuple is
/// counted once per line, `ell + 1` times in total).
pub fn exact_mu_x(ctx: &GroupContext, ell: u64, e: u32, budget: u64) -> Result<BigRational> {
    let local = check_exact(ctx, ell)?;
    let group: Vec<ModMatrix> = local.enumerate(None, budget)?.collect();
    let lines: Vec<[u64; 2]> = std::iter::once([0, 1]).chain((0..ell).map(|t| [1, t])).collect();
    let mut total = BigUint::from(0u32);
    for v in lines {
        let fixing = group
            .iter()
            .filter(|a| {
                let w0 = (a.get(0, 0) * v[0] + a.get(0, 1) * v[1]) % ell;
                let w1 = (a.get(1, 0) * v[0] + a.get(1, 1) * v[1]) % ell;
                w0 == v[0] && w1 == v[1]
            })
            .count();
        total += BigUint::from(fixing).pow(e);
    }
    total -= BigUint::from(ell);
    let size = BigUint::from(group.len()).pow(e);
    Ok(BigRational::new(total.into(), size.into()))
}

/// Exact `mu(X_ell)` by running [`event_x`] over every `e`-tuple; the
/// enumeration must stay within `budget` tuples.
pub fn exact_mu_x_by_tuples(ctx: &GroupContext, ell: u64, e: u32, budget: u64) -> Result<BigRational> {
    let local = check_exact(ctx, ell)?;
    let group: Vec<ModMatrix> = local.enumerate(None, budget)?.collect();
    let tuples = (group.len() as u128).saturating_pow(e);
    if tuples > budget as u128 {
        return Err(Error::BudgetExceeded { estimate: tuples, budget });
    }
    let mut idx = vec![0usize; e as usize];
    let mut hits = 0u64;
    loop {
        let sigma = SigmaTuple { elements: idx.iter().map(|&i| group[i].clone()).collect(), seed: 0, index: 0 };
        hits += u64::from(event_x(&sigma, ell)?);
        let mut k = 0;
        while k < idx.len() {
            idx[k] += 1;
            if idx[k] < group.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == idx.len() {
            break;
        }
    }
    Ok(BigRational::new(hits.into(), (tuples as u64).into()))
}

/// `(ell^{2g} - 1)/(ell - 1) * |G_ell|^{-e/2g}` with `G_ell = GSp^(q)_{2g}(F_ell)`.
pub fn union_bound_mu_x(ctx: &GroupContext, ell: u64, e: u32) -> Result<BigRational> {
    let local = if ctx.modulus().value() == ell { ctx.clone() } else { ctx.restrict(ell)? };
    crate::analysis::union_bound(ctx.g(), ell, e, &local.order())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::ratio_to_f64;
    use crate::modmat::Modulus;
    use crate::sympgroup::DEFAULT_BUDGET;
    use num_traits::One;
    use std::collections::HashMap;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn composite_samples_are_members() {
        let c = GroupContext::new(2, Modulus::new(15).unwrap(), QParam::Finite(2)).unwrap();
        let s = SigmaSampler::new(&c).unwrap();
        for i in 0..10_000 {
            let t = s.sample(1, 7, i).unwrap();
            assert!(c.is_member(&t.elements[0]));
        }
        let t = s.sample(3, 7, 11).unwrap();
        assert_eq!(t, s.sample(3, 7, 11).unwrap());
        assert_eq!(t.e(), 3);
        // one global exponent: multipliers mod 3 and mod 5 agree with a power of 2 mod 15
        for i in 0..200 {
            let a = &s.sample(1, 1, i).unwrap().elements[0];
            assert!(c.allows_multiplier(c.multiplier(a).unwrap().value()));
        }
    }

    #[test]
    fn chi_square_on_gsp2_f3() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let c = GroupContext::prime(1, 3, QParam::Infinity).unwrap();
        let cells: Vec<ModMatrix> = c.enumerate(None, DEFAULT_BUDGET).unwrap().collect();
        assert_eq!(cells.len(), 48);
        let index: HashMap<ModMatrix, usize> = cells.iter().cloned().zip(0..).collect();
        let s = SigmaSampler::new(&c).unwrap();
        let mut counts = vec![0u64; 48];
        for i in 0..48_000 {
            counts[index[&s.sample(1, 20_240_917, i).unwrap().elements[0]]] += 1;
        }
        let stat: f64 = counts.iter().map(|&o| (o as f64 - 1000.0).powi(2) / 1000.0).sum();
        let p = 1.0 - ChiSquared::new(47.0).unwrap().cdf(stat);
        assert!(p > 1e-3, "p = {p}");
    }

    #[test]
    fn event_x_basics() {
        let c = GroupContext::prime(2, 5, QParam::Infinity).unwrap();
        let m = c.modulus();
        let id = ModMatrix::identity(m, 4).unwrap();
        let all_id = SigmaTuple { elements: vec![id.clone(), id.clone()], seed: 0, index: 0 };
        assert!(event_x(&all_id, 5).unwrap());
        assert!(event_x(&all_id, 3).is_err());
        // diag(2,3,4,4) has no fixed vector; pair it with a matrix fixing only e1
        let d = ModMatrix::diagonal(m, &[2, 3, 4, 4]).unwrap();
        let fix_e1 = ModMatrix::diagonal(m, &[1, 2, 3, 4]).unwrap();
        assert!(fix_e1.fixed_space().unwrap().len() == 1);
        let pair = SigmaTuple { elements: vec![fix_e1.clone(), d], seed: 0, index: 0 };
        assert!(!event_x(&pair, 5).unwrap());
        let single = SigmaTuple { elements: vec![fix_e1], seed: 0, index: 0 };
        assert!(event_x(&single, 5).unwrap());
    }

    #[test]
    fn exact_measure_by_lines_matches_tuples() {
        let c = GroupContext::prime(1, 3, QParam::Infinity).unwrap();
        let by_lines = exact_mu_x(&c, 3, 2, DEFAULT_BUDGET).unwrap();
        assert_eq!(by_lines, r(141, 2304));
        assert_eq!(exact_mu_x_by_tuples(&c, 3, 2, DEFAULT_BUDGET).unwrap(), by_lines);
        for (ell, q) in [(5u64, QParam::Infinity), (5, QParam::Finite(4)), (7, QParam::Finite(2))] {
            let c = GroupContext::prime(1, ell, q).unwrap();
            for e in 1..=2 {
                assert_eq!(
                    exact_mu_x(&c, ell, e, DEFAULT_BUDGET).unwrap(),
                    exact_mu_x_by_tuples(&c, ell, e, DEFAULT_BUDGET).unwrap(),
                    "ell={ell} q={q} e={e}"
                );
            }
        }
    }

    #[test]
    fn exact_measure_is_monotone_and_under_the_bound() {
        for ell in [3u64, 5, 7] {
            let c = GroupContext::prime(1, ell, QParam::Infinity).unwrap();
            let mut prev = BigRational::one();
            for e in 1..=6 {
                let mu = exact_mu_x(&c, ell, e, DEFAULT_BUDGET).unwrap();
                assert!(mu < prev);
                assert!(mu <= union_bound_mu_x(&c, ell, e).unwrap());
                prev = mu;
            }
        }
        let g2 = GroupContext::prime(2, 3, QParam::Infinity).unwrap();
        assert!(exact_mu_x(&g2, 3, 2, DEFAULT_BUDGET).is_err());
    }

    #[test]
    fn union_bound_value() {
        let c = GroupContext::prime(2, 3, QParam::Infinity).unwrap();
        let b = ratio_to_f64(&union_bound_mu_x(&c, 3, 2).unwrap());
        assert!((b - 40.0 / 103_680f64.sqrt()).abs() < 1e-12);
        assert!((b - 0.1242).abs() < 1e-4);
        assert!(union_bound_mu_x(&c, 3, 3).unwrap() < union_bound_mu_x(&c, 3, 2).unwrap());
        let composite = GroupContext::new(2, Modulus::new(15).unwrap(), QParam::Infinity).unwrap();
        assert_eq!(union_bound_mu_x(&composite, 3, 2).unwrap(), union_bound_mu_x(&c, 3, 2).unwrap());
    }
}
