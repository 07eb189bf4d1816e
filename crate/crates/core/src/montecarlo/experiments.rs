//! Seeded estimates of event measures and the finite-range Borel-Cantelli experiment.

use std::collections::BTreeMap;

use num_rational::BigRational;
use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use super::{event_x, exact_mu_x, union_bound_mu_x, SigmaSampler, SigmaTuple};
use crate::analysis::ratio_to_f64;
use crate::error::{Error, Result};
use crate::modmat::{ModMatrix, Modulus};
use crate::rng;
use crate::specialsets::{count_sq_composite, BSelectionStrategy, SetLevel, SpecialSet};
use crate::sympgroup::{GroupContext, QParam, DEFAULT_BUDGET};

/// `num/den` in lowest terms.
pub fn ratio_string(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// The sets `S^(q)(ell)` used by hit events, one per prime.
///
/// Sets for primes up to `lookup_max_ell` are materialized and queried by
/// lookup; larger primes use the structural membership test, which decides
/// the same predicate without the element list.
#[derive(Clone, Debug)]
pub struct HitSets {
    g: usize,
    q: QParam,
    strategy: BSelectionStrategy,
    sets: BTreeMap<u64, SpecialSet>,
}

impl HitSets {
    pub fn new(g: usize, q: QParam, ells: &[u64], strategy: BSelectionStrategy, lookup_max_ell: u64) -> Result<Self> {
        let mut sets = BTreeMap::new();
        for &ell in ells {
            if sets.contains_key(&ell) {
                continue;
            }
            let ctx = GroupContext::prime(g, ell, q)?;
            let mut set = SpecialSet::describe(&ctx, SetLevel::QUnion, None, strategy, DEFAULT_BUDGET)?;
            if ell <= lookup_max_ell {
                set.materialize(lookup_max_ell)?;
            }
            sets.insert(ell, set);
        }
        Ok(HitSets { g, q, strategy, sets })
    }

    pub fn get(&self, ell: u64) -> Result<&SpecialSet> {
        self.sets
            .get(&ell)
            .ok_or_else(|| Error::InvalidParameter(format!("no special set prepared for ell = {ell}")))
    }

    /// Whether `a` (over any modulus divisible by `ell`) reduces into `S^(q)(ell)`.
    pub fn hit(&self, ell: u64, a: &ModMatrix) -> Result<bool> {
        let set = self.get(ell)?;
        let reduced = if a.modulus().value() == ell { a.clone() } else { a.reduce_mod(ell)? };
        Ok(set.contains(&reduced))
    }

    /// `|S^(q)(ell)| / |GSp^(q)_{2g}(F_ell)|`.
    pub fn density(&self, ell: u64) -> Result<BigRational> {
        Ok(self.get(ell)?.density())
    }

    /// Exact `|S^(q)(n)| / |GSp^(q)_{2g}(Z/n)|` for `n` the product of `ells`,
    /// counted through the per-prime bijection rather than as a product of densities.
    pub fn joint_density(&self, ells: &[u64]) -> Result<BigRational> {
        let n: u64 = ells.iter().product();
        let modulus = Modulus::new(n)?;
        let count = count_sq_composite(self.g, modulus, self.q, self.strategy)?;
        let order = GroupContext::new(self.g, modulus, self.q)?.order();
        Ok(BigRational::new(count.into(), order.into()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Event {
    /// Common nonzero fixed vector mod `ell`.
    X { ell: u64 },
    /// `sigma_1 mod ell` lies in `S^(q)(ell)`.
    SpecialSetHit { ell: u64 },
    /// `sigma_1 mod ell` lies in `S^(q)(ell)` for every listed prime.
    JointSpecialSetHit { ells: Vec<u64> },
}

impl Event {
    pub fn name(&self) -> String {
        match self {
            Event::X { ell } => format!("x_{ell}"),
            Event::SpecialSetHit { ell } => format!("special_set_hit_{ell}"),
            Event::JointSpecialSetHit { ells } => {
                let parts: Vec<String> = ells.iter().map(u64::to_string).collect();
                format!("joint_special_set_hit_{}", parts.join("_"))
            }
        }
    }

    fn occurs(&self, sigma: &SigmaTuple, sets: Option<&HitSets>) -> Result<bool> {
        let need = || sets.ok_or_else(|| Error::InvalidParameter("hit events need special sets".into()));
        match self {
            Event::X { ell } => event_x(sigma, *ell),
            Event::SpecialSetHit { ell } => need()?.hit(*ell, &sigma.elements[0]),
            Event::JointSpecialSetHit { ells } => {
                let sets = need()?;
                for &ell in ells {
                    if !sets.hit(ell, &sigma.elements[0])? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }
}

/// A Monte Carlo frequency with its binomial standard error.
#[derive(Clone, Debug)]
pub struct EventEstimate {
    pub event: String,
    pub g: usize,
    pub n: u64,
    pub q: QParam,
    pub e: usize,
    pub seed: u64,
    pub n_samples: u64,
    pub hits: u64,
    pub exact_value: Option<BigRational>,
    pub bound: Option<BigRational>,
}

impl EventEstimate {
    pub fn estimate(&self) -> f64 {
        self.hits as f64 / self.n_samples as f64
    }

    /// `sqrt(p (1 - p) / N)` at the observed frequency.
    pub fn std_error(&self) -> f64 {
        let p = self.estimate();
        (p * (1.0 - p) / self.n_samples as f64).sqrt()
    }

    /// Distance from the exact value in standard errors, when both exist.
    pub fn z_score(&self) -> Option<f64> {
        let exact = ratio_to_f64(self.exact_value.as_ref()?);
        let se = self.std_error();
        Some(if se == 0.0 { f64::INFINITY } else { (self.estimate() - exact).abs() / se })
    }
}

impl Serialize for EventEstimate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("EventEstimate", 14)?;
        st.serialize_field("event", &self.event)?;
        st.serialize_field("g", &self.g)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("q", &self.q)?;
        st.serialize_field("e", &self.e)?;
        st.serialize_field("seed", &self.seed)?;
        st.serialize_field("n_samples", &self.n_samples)?;
        st.serialize_field("hits", &self.hits)?;
        st.serialize_field("estimate", &format!("{}/{}", self.hits, self.n_samples))?;
        st.serialize_field("estimate_f64", &self.estimate())?;
        st.serialize_field("std_error", &self.std_error())?;
        if let Some(x) = &self.exact_value {
            st.serialize_field("exact_value", &ratio_string(x))?;
            st.serialize_field("exact_value_f64", &ratio_to_f64(x))?;
        }
        if let Some(b) = &self.bound {
            st.serialize_field("bound", &ratio_string(b))?;
            st.serialize_field("bound_f64", &ratio_to_f64(b))?;
        }
        st.end()
    }
}

fn count_hits<F>(n_samples: u64, f: F) -> Result<u64>
where
    F: Fn(u64) -> Result<bool> + Sync,
{
    (0..n_samples)
        .into_par_iter()
        .map(|i| f(i).map(u64::from))
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

fn check_divides(ctx: &GroupContext, ell: u64) -> Result<()> {
    let n = ctx.modulus().value();
    if !n.is_multiple_of(ell) {
        return Err(Error::PrimeDoesNotDivide { prime: ell, modulus: n });
    }
    Ok(())
}

/// Frequency of `event` over `n_samples` seeded `e`-tuples from `GSp^(q)_{2g}(Z/n)`.
pub fn estimate_event(
    ctx: &GroupContext,
    event: &Event,
    e: usize,
    n_samples: u64,
    seed: u64,
    sets: Option<&HitSets>,
) -> Result<EventEstimate> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be positive".into()));
    }
    let (exact_value, bound) = match event {
        Event::X { ell } => {
            check_divides(ctx, *ell)?;
            let exact = if ctx.g() == 1 { Some(exact_mu_x(ctx, *ell, e as u32, DEFAULT_BUDGET)?) } else { None };
            (exact, Some(union_bound_mu_x(ctx, *ell, e as u32)?))
        }
        Event::SpecialSetHit { ell } => {
            check_divides(ctx, *ell)?;
            let sets = sets.ok_or_else(|| Error::InvalidParameter("hit events need special sets".into()))?;
            (Some(sets.density(*ell)?), None)
        }
        Event::JointSpecialSetHit { ells } => {
            for &ell in ells {
                check_divides(ctx, ell)?;
            }
            let sets = sets.ok_or_else(|| Error::InvalidParameter("hit events need special sets".into()))?;
            (Some(sets.joint_density(ells)?), None)
        }
    };
    let sampler = SigmaSampler::new(ctx)?;
    let hits = count_hits(n_samples, |i| event.occurs(&sampler.sample(e, seed, i)?, sets))?;
    Ok(EventEstimate {
        event: event.name(),
        g: ctx.g(),
        n: ctx.modulus().value(),
        q: ctx.q(),
        e,
        seed,
        n_samples,
        hits,
        exact_value,
        bound,
    })
}

/// Marginal and joint hit frequencies for several primes from the same samples.
#[derive(Clone, Debug, Serialize)]
pub struct IndependenceReport {
    pub marginals: Vec<EventEstimate>,
    pub joint: EventEstimate,
    pub product_of_marginals: f64,
    /// `sqrt(se_joint^2 + se_product^2)`, the product's error by the delta method.
    pub combined_std_error: f64,
    pub z_score: f64,
}

/// One pass over `n_samples` draws from `GSp^(q)(Z/n)` with `n` divisible by
/// every prime in `ells`, recording each marginal hit and the joint hit.
pub fn independence_experiment(
    ctx: &GroupContext,
    ells: &[u64],
    n_samples: u64,
    seed: u64,
    sets: &HitSets,
) -> Result<IndependenceReport> {
    if ells.is_empty() || n_samples == 0 {
        return Err(Error::InvalidParameter("need primes and samples".into()));
    }
    for &ell in ells {
        check_divides(ctx, ell)?;
    }
    let sampler = SigmaSampler::new(ctx)?;
    let k = ells.len();
    let counts = (0..n_samples)
        .into_par_iter()
        .map(|i| -> Result<Vec<u64>> {
            let sigma = sampler.sample(1, seed, i)?;
            let mut row = vec![0u64; k + 1];
            let mut all = true;
            for (j, &ell) in ells.iter().enumerate() {
                let hit = sets.hit(ell, &sigma.elements[0])?;
                row[j] = u64::from(hit);
                all &= hit;
            }
            row[k] = u64::from(all);
            Ok(row)
        })
        .try_reduce(
            || vec![0u64; k + 1],
            |a, b| Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect()),
        )?;
    let base = |event: String, hits: u64, exact: BigRational| EventEstimate {
        event,
        g: ctx.g(),
        n: ctx.modulus().value(),
        q: ctx.q(),
        e: 1,
        seed,
        n_samples,
        hits,
        exact_value: Some(exact),
        bound: None,
    };
    let marginals = ells
        .iter()
        .zip(&counts)
        .map(|(&ell, &h)| Ok(base(Event::SpecialSetHit { ell }.name(), h, sets.density(ell)?)))
        .collect::<Result<Vec<_>>>()?;
    let joint = base(Event::JointSpecialSetHit { ells: ells.to_vec() }.name(), counts[k], sets.joint_density(ells)?);
    let product: f64 = marginals.iter().map(EventEstimate::estimate).product();
    // delta method: var(prod p_j) ~ sum_j (prod_{i != j} p_i)^2 var(p_j)
    let var_product: f64 = (0..k)
        .map(|j| {
            let others: f64 = (0..k).filter(|&i| i != j).map(|i| marginals[i].estimate()).product();
            others * others * marginals[j].std_error().powi(2)
        })
        .sum();
    let combined = (joint.std_error().powi(2) + var_product).sqrt();
    let z = if combined == 0.0 { 0.0 } else { (joint.estimate() - product).abs() / combined };
    Ok(IndependenceReport { marginals, joint, product_of_marginals: product, combined_std_error: combined, z_score: z })
}

/// Per-prime outcome of a Borel-Cantelli run.
#[derive(Clone, Debug, Serialize)]
pub struct EllStat {
    pub ell: u64,
    pub hits: u64,
    pub frequency: f64,
    /// Exact measure when known (densities; `g = 1` fixed-vector events).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    /// Union bound for fixed-vector events.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<String>,
    /// `exact` when known, otherwise `bound`, as a float.
    pub expected: f64,
}

/// Finite-range evidence for the zero-one behaviour; never a verification of
/// the infinite statement.
#[derive(Clone, Debug, Serialize)]
pub struct BorelCantelliReport {
    pub event: String,
    pub g: usize,
    pub ell_range: Vec<u64>,
    pub q: QParam,
    pub e: usize,
    pub seed: u64,
    pub n_samples: u64,
    /// Hits summed over all streams and primes.
    pub hits: u64,
    /// Mean number of primes per stream at which the event occurs.
    pub estimate: f64,
    /// Standard error of the mean hit count.
    pub std_error: f64,
    /// Sum over the range of the exact measures (or union bounds).
    pub expected_mean: f64,
    /// Whether `expected_mean` is exact or only an upper bound.
    pub expected_is_bound: bool,
    /// `hit_count_distribution[k]` streams had exactly `k` hits.
    pub hit_count_distribution: Vec<u64>,
    /// Upper half of the range: primes `>= split_ell`.
    pub split_ell: Option<u64>,
    /// Streams with at least one hit at a prime `>= split_ell`.
    pub late_hit_fraction: f64,
    /// Streams with no hit at any prime `>= split_ell`.
    pub late_quiet_fraction: f64,
    pub per_ell: Vec<EllStat>,
}

/// Runs one stream per sample index. Coordinate `ell` of stream `i` is an
/// `e`-tuple from `GSp^(q)_{2g}(F_ell)` drawn on its own lane, so coordinates
/// are independent across primes. With `e = 1` the event is a special-set hit;
/// with `e >= 2` it is a common fixed vector.
#[allow(clippy::too_many_arguments)]
pub fn borel_cantelli_experiment(
    g: usize,
    q: QParam,
    ell_range: &[u64],
    e: usize,
    n_samples: u64,
    seed: u64,
    strategy: BSelectionStrategy,
    lookup_max_ell: u64,
) -> Result<BorelCantelliReport> {
    if e == 0 || n_samples == 0 {
        return Err(Error::InvalidParameter("e and n_samples must be positive".into()));
    }
    let mut ells = ell_range.to_vec();
    ells.sort_unstable();
    ells.dedup();
    let hit_regime = e == 1;
    let sets = if hit_regime && !ells.is_empty() {
        Some(HitSets::new(g, q, &ells, strategy, lookup_max_ell)?)
    } else {
        None
    };
    let samplers = ells
        .iter()
        .map(|&ell| SigmaSampler::new(&GroupContext::prime(g, ell, q)?))
        .collect::<Result<Vec<_>>>()?;
    let k = ells.len();
    let split = k / 2;

    // per stream: hits per prime; reduced into per-prime totals, a histogram, and late counts
    #[derive(Clone)]
    struct Acc {
        per_ell: Vec<u64>,
        histogram: Vec<u64>,
        sum_sq: u64,
        late_hit: u64,
    }
    let zero = || Acc { per_ell: vec![0; k], histogram: vec![0; k + 1], sum_sq: 0, late_hit: 0 };
    let acc = (0..n_samples)
        .into_par_iter()
        .map(|i| -> Result<Acc> {
            let mut a = zero();
            let mut total = 0usize;
            let mut late = false;
            for (j, (&ell, sampler)) in ells.iter().zip(&samplers).enumerate() {
                let sigma = sampler.sample_on_lane(e, seed, rng::lane::PER_PRIME ^ ell, i)?;
                let hit = match &sets {
                    Some(s) => s.hit(ell, &sigma.elements[0])?,
                    None => event_x(&sigma, ell)?,
                };
                if hit {
                    a.per_ell[j] += 1;
                    total += 1;
                    late |= j >= split;
                }
            }
            a.histogram[total] += 1;
            a.sum_sq = (total * total) as u64;
            a.late_hit = u64::from(late);
            Ok(a)
        })
        .try_reduce(zero, |mut a, b| {
            for (x, y) in a.per_ell.iter_mut().zip(&b.per_ell) {
                *x += y;
            }
            for (x, y) in a.histogram.iter_mut().zip(&b.histogram) {
                *x += y;
            }
            a.sum_sq += b.sum_sq;
            a.late_hit += b.late_hit;
            Ok(a)
        })?;

    let mut per_ell = Vec::with_capacity(k);
    let mut expected_mean = 0.0;
    let mut expected_is_bound = false;
    for (j, &ell) in ells.iter().enumerate() {
        let (exact, bound) = match &sets {
            Some(s) => (Some(s.density(ell)?), None),
            None => {
                let local = GroupContext::prime(g, ell, q)?;
                let exact = if g == 1 { Some(exact_mu_x(&local, ell, e as u32, DEFAULT_BUDGET)?) } else { None };
                (exact, Some(union_bound_mu_x(&local, ell, e as u32)?))
            }
        };
        let expected = match (&exact, &bound) {
            (Some(x), _) => ratio_to_f64(x),
            (None, Some(b)) => {
                expected_is_bound = true;
                ratio_to_f64(b)
            }
            (None, None) => 0.0,
        };
        expected_mean += expected;
        per_ell.push(EllStat {
            ell,
            hits: acc.per_ell[j],
            frequency: acc.per_ell[j] as f64 / n_samples as f64,
            exact: exact.as_ref().map(ratio_string),
            bound: bound.as_ref().map(ratio_string),
            expected,
        });
    }
    let hits: u64 = acc.per_ell.iter().sum();
    let n = n_samples as f64;
    let mean = hits as f64 / n;
    let variance = (acc.sum_sq as f64 / n - mean * mean).max(0.0);
    let late_hit_fraction = if k == 0 { 0.0 } else { acc.late_hit as f64 / n };
    Ok(BorelCantelliReport {
        event: if hit_regime { "special_set_hit" } else { "x" }.to_string(),
        g,
        ell_range: ells.clone(),
        q,
        e,
        seed,
        n_samples,
        hits,
        estimate: mean,
        std_error: (variance / n).sqrt(),
        expected_mean,
        expected_is_bound,
        hit_count_distribution: acc.histogram,
        split_ell: ells.get(split).copied(),
        late_hit_fraction,
        late_quiet_fraction: 1.0 - late_hit_fraction,
        per_ell,
    })
}
