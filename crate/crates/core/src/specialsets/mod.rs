//! The special sets `S_lambda(ell)_0`, `S_lambda(ell)`, `S^(q)(ell)` and
//! `S^(q)(n)`.
//!
//! For a prime `ell >= 3` and `g >= 2`:
//!
//! * `B_lambda` is a fixed set of `beta(ell, g-1) |Sp_{2g-4}(F_ell)|` matrices of
//!   `GSp_{2g-2}(F_ell)[lambda]` without eigenvalue 1 (or the explicit `g = 2`
//!   family of `ell (ell-1)^2` matrices, see [`BSelectionStrategy::RemarkG2`]).
//! * `S_lambda(ell)_0` collects the `e1`-fixing similitudes whose lower block
//!   lies in `B_lambda`, with the top-left entry `d` avoiding the one value
//!   that would create a second fixed line.
//! * `S_lambda(ell)` is the set of all conjugates `T^{-1} A T` of those by the
//!   maps `T = T_{u_alpha}[beta]`.
//! * `S^(q)(ell)` is the disjoint union of `S_lambda(ell)` over `lambda` in `<q>`
//!   (all units when `q` is infinite), and `S^(q)(n)` for squarefree `n` is the
//!   set of members of `GSp^(q)(Z/n)` reducing into `S^(q)(ell)` for every
//!   `ell | n`.
//!
//! Sets can be *described* (blocks selected, cardinality from the closed
//! formulas, membership decided structurally) or *materialized* (every element
//! generated, deduplicated and stored as sorted packed keys).

mod build;
mod composite;
mod dump;
mod membership;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::modmat::{inv_mod, is_prime, ModMatrix, Modulus};
use crate::sympgroup::{sp_order, GroupContext, Multiplier, QParam};

pub use build::{build_s, build_s0, build_sq, BuildOptions, PackedKeys};
pub use composite::{count_sq_composite, CompositeSpecialSet};
pub use dump::{load_dump, sidecar_path, SetSidecar};

/// Largest prime accepted for materialization.
pub const HARD_MAX_ELL: u64 = 31;
/// Default materialization cap; raise it explicitly to go up to [`HARD_MAX_ELL`].
pub const DEFAULT_MAX_ELL: u64 = 13;

/// How the blocks `B_lambda` are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum BSelectionStrategy {
    /// The first `beta(ell, g-1) |Sp_{2g-4}|` eigenvalue-1-free members of
    /// `GSp_{2g-2}[lambda]` in canonical enumeration order.
    #[serde(rename = "lex")]
    LexCanonical,
    /// The explicit genus-2 family `b11 in F, b22 != 1 - b11 + lambda,
    /// b12 in F^x, b21 = (b11 b22 - lambda) / b12` of `ell (ell-1)^2` matrices.
    #[serde(rename = "remark-g2")]
    RemarkG2,
}

impl fmt::Display for BSelectionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BSelectionStrategy::LexCanonical => "lex",
            BSelectionStrategy::RemarkG2 => "remark-g2",
        })
    }
}

impl FromStr for BSelectionStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lex" | "lex-canonical" => Ok(BSelectionStrategy::LexCanonical),
            "remark-g2" | "remark" => Ok(BSelectionStrategy::RemarkG2),
            other => Err(Error::Parse(format!("unknown strategy {other:?}"))),
        }
    }
}

/// Which multipliers a set covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MultiplierSet {
    Single(Multiplier),
    PowersOfQ,
    AllUnits,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum SetLevel {
    #[serde(rename = "s0")]
    S0,
    #[serde(rename = "s")]
    Full,
    #[serde(rename = "sq")]
    QUnion,
}

impl fmt::Display for SetLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SetLevel::S0 => "s0",
            SetLevel::Full => "s",
            SetLevel::QUnion => "sq",
        })
    }
}

impl FromStr for SetLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "s0" => Ok(SetLevel::S0),
            "s" => Ok(SetLevel::Full),
            "sq" => Ok(SetLevel::QUnion),
            other => Err(Error::Parse(format!("unknown level {other:?}"))),
        }
    }
}

/// `beta(ell, g) = ell^{2g-1} (ell^{2g} - 1) (ell - 2) / (ell - 1)` as an exact rational.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BetaBound {
    pub ell: u64,
    pub g: usize,
    pub value: BigRational,
}

impl BetaBound {
    pub fn new(ell: u64, g: usize) -> Result<Self> {
        if !is_prime(ell) {
            return Err(Error::NotPrime(ell));
        }
        if g == 0 {
            return Err(Error::InvalidParameter("beta needs g >= 1".into()));
        }
        let l = BigUint::from(ell);
        let num = l.pow(2 * g as u32 - 1) * (l.pow(2 * g as u32) - 1u32) * BigUint::from(ell - 2);
        let value = BigRational::new(num.into(), BigUint::from(ell - 1).into());
        Ok(BetaBound { ell, g, value })
    }
}

/// `beta(ell, g)` as an integer (zero at `ell = 2`).
pub fn beta(ell: u64, g: usize) -> Result<BigUint> {
    let b = BetaBound::new(ell, g)?;
    debug_assert!(b.value.is_integer());
    Ok(b.value.to_integer().to_biguint().expect("nonnegative"))
}

/// Rejects primes where the construction is empty or undefined.
pub fn check_construction_prime(ell: u64) -> Result<()> {
    if !is_prime(ell) {
        return Err(Error::NotPrime(ell));
    }
    if ell == 2 {
        return Err(Error::UnsupportedPrime {
            ell,
            reason: "beta(ell, g) carries the factor (ell - 2), which vanishes at ell = 2, so B and every S-set are empty".into(),
        });
    }
    Ok(())
}

/// `|B_lambda|` for the strategy.
pub fn block_count(g: usize, ell: u64, strategy: BSelectionStrategy) -> Result<BigUint> {
    if g < 2 {
        return Err(Error::InvalidParameter("special sets need g >= 2".into()));
    }
    match strategy {
        BSelectionStrategy::LexCanonical => Ok(beta(ell, g - 1)? * sp_order(g - 2, ell)),
        BSelectionStrategy::RemarkG2 => {
            if g != 2 {
                return Err(Error::InvalidParameter("remark-g2 blocks exist only for g = 2".into()));
            }
            Ok(BigUint::from(ell) * BigUint::from(ell - 1).pow(2))
        }
    }
}

/// `ell^{2g-2} (ell - 1)`: the number of `(alpha, beta != 0)` conjugators, and
/// the number of `(d_vec, d)` choices per block.
pub fn conjugator_count(g: usize, ell: u64) -> BigUint {
    BigUint::from(ell).pow(2 * g as u32 - 2) * BigUint::from(ell - 1)
}

/// `|S_lambda(ell)_0| = ell^{2g-2} (ell - 1) |B_lambda|`.
pub fn s0_cardinality(g: usize, ell: u64, strategy: BSelectionStrategy) -> Result<BigUint> {
    Ok(conjugator_count(g, ell) * block_count(g, ell, strategy)?)
}

/// `|S_lambda(ell)| = (ell^{2g-2} (ell - 1) + 1) |S_lambda(ell)_0|`.
pub fn s_cardinality(g: usize, ell: u64, strategy: BSelectionStrategy) -> Result<BigUint> {
    Ok((conjugator_count(g, ell) + 1u32) * s0_cardinality(g, ell, strategy)?)
}

/// `|S^(q)(ell)|`: one `S_lambda` per allowed multiplier.
pub fn sq_cardinality(g: usize, ell: u64, q: QParam, strategy: BSelectionStrategy) -> Result<BigUint> {
    let ctx = GroupContext::prime(g, ell, q)?;
    let parts = ctx.allowed_multipliers().len();
    Ok(BigUint::from(parts) * s_cardinality(g, ell, strategy)?)
}

/// Number of members of `GSp_{2g}(F_ell)[lambda]` with `det(A - I) != 0`, by enumeration.
pub fn count_no_eigenvalue_one(ell: u64, g: usize, lambda: Multiplier, budget: u64) -> Result<u64> {
    let ctx = GroupContext::prime(g, ell, QParam::Infinity)?;
    let mut count = 0;
    for a in ctx.enumerate(Some(lambda), budget)? {
        if !a.has_eigenvalue_one()? {
            count += 1;
        }
    }
    Ok(count)
}

/// Chooses `B_lambda` for the genus-`g` context `ctx`.
pub fn select_b(
    ctx: &GroupContext,
    lambda: Multiplier,
    strategy: BSelectionStrategy,
    budget: u64,
) -> Result<Vec<ModMatrix>> {
    let ell = ctx.modulus().value();
    check_construction_prime(ell)?;
    let needed = block_count(ctx.g(), ell, strategy)?
        .to_u64()
        .ok_or_else(|| Error::InvalidParameter("block count overflows u64".into()))?;
    match strategy {
        BSelectionStrategy::LexCanonical => {
            let lower = ctx.lower()?;
            let mut out = Vec::with_capacity(needed as usize);
            let mut available = 0;
            for b in lower.enumerate(Some(lambda), budget)? {
                if b.has_eigenvalue_one()? {
                    continue;
                }
                available += 1;
                if out.len() < needed as usize {
                    out.push(b);
                } else {
                    break;
                }
            }
            if (out.len() as u64) < needed {
                return Err(Error::InsufficientMatrices { needed, available });
            }
            Ok(out)
        }
        BSelectionStrategy::RemarkG2 => {
            let m = Modulus::prime(ell)?;
            let l = lambda.value() % ell;
            let mut out = Vec::with_capacity(needed as usize);
            for b11 in 0..ell {
                let forbidden = (1 + ell - b11 + l) % ell;
                for b22 in (0..ell).filter(|&x| x != forbidden) {
                    for b12 in 1..ell {
                        let inv = inv_mod(b12, ell).expect("unit");
                        let b21 = (b11 * b22 % ell + ell - l) % ell * inv % ell;
                        out.push(ModMatrix::new(m, 2, [b11, b12, b21, b22])?);
                    }
                }
            }
            out.sort_by_key(|b| b.pack());
            debug_assert_eq!(out.len() as u64, needed);
            Ok(out)
        }
    }
}

/// Blocks for one multiplier, with cached `(I - B)^{-1}`.
#[derive(Clone, Debug)]
pub(crate) struct BlockSet {
    pub(crate) blocks: Vec<ModMatrix>,
    pub(crate) resolvents: Vec<ModMatrix>,
    keys: Vec<u128>,
}

impl BlockSet {
    pub(crate) fn new(mut blocks: Vec<ModMatrix>) -> Result<Self> {
        blocks.sort_by_key(|b| b.pack());
        let mut resolvents = Vec::with_capacity(blocks.len());
        for b in &blocks {
            let id = ModMatrix::identity(b.modulus(), b.dim())?;
            resolvents.push(id.sub(b)?.inverse()?);
        }
        let keys: Vec<u128> = blocks.iter().map(|b| b.pack().expect("small block")).collect();
        Ok(BlockSet { blocks, resolvents, keys })
    }

    pub(crate) fn position(&self, b: &ModMatrix) -> Option<usize> {
        self.keys.binary_search(&b.pack()?).ok()
    }
}

/// A special set over a prime field, described and optionally materialized.
#[derive(Clone, Debug)]
pub struct SpecialSet {
    ctx: GroupContext,
    multipliers: MultiplierSet,
    level: SetLevel,
    strategy: BSelectionStrategy,
    blocks: BTreeMap<u64, BlockSet>,
    elements: Option<PackedKeys>,
    cardinality: BigUint,
}

impl SpecialSet {
    /// Selects the blocks and computes the cardinality without generating elements.
    ///
    /// `lambda` is required for the `S0` and `Full` levels and ignored for
    /// `QUnion`, which covers the multipliers allowed by `ctx.q()`.
    pub fn describe(
        ctx: &GroupContext,
        level: SetLevel,
        lambda: Option<Multiplier>,
        strategy: BSelectionStrategy,
        budget: u64,
    ) -> Result<Self> {
        let ell = ctx.modulus().value();
        check_construction_prime(ell)?;
        if ctx.g() < 2 {
            return Err(Error::InvalidParameter("special sets need g >= 2".into()));
        }
        let (multipliers, lambdas) = match level {
            SetLevel::S0 | SetLevel::Full => {
                let l = lambda.ok_or_else(|| {
                    Error::InvalidParameter(format!("level {level} needs a multiplier"))
                })?;
                let l = Multiplier::new(ctx.modulus(), l.value())?;
                (MultiplierSet::Single(l), vec![l.value()])
            }
            SetLevel::QUnion => {
                let set = if ctx.q().is_infinite() {
                    MultiplierSet::AllUnits
                } else {
                    MultiplierSet::PowersOfQ
                };
                (set, ctx.allowed_multipliers())
            }
        };
        let mut blocks = BTreeMap::new();
        for l in &lambdas {
            let chosen = select_b(ctx, Multiplier::new(ctx.modulus(), *l)?, strategy, budget)?;
            blocks.insert(*l, BlockSet::new(chosen)?);
        }
        let per_lambda = match level {
            SetLevel::S0 => s0_cardinality(ctx.g(), ell, strategy)?,
            SetLevel::Full | SetLevel::QUnion => s_cardinality(ctx.g(), ell, strategy)?,
        };
        let cardinality = per_lambda * BigUint::from(lambdas.len());
        Ok(SpecialSet {
            ctx: ctx.clone(),
            multipliers,
            level,
            strategy,
            blocks,
            elements: None,
            cardinality,
        })
    }

    pub fn ctx(&self) -> &GroupContext {
        &self.ctx
    }

    pub fn ell(&self) -> u64 {
        self.ctx.modulus().value()
    }

    pub fn level(&self) -> SetLevel {
        self.level
    }

    pub fn strategy(&self) -> BSelectionStrategy {
        self.strategy
    }

    pub fn multipliers(&self) -> MultiplierSet {
        self.multipliers
    }

    /// The multipliers covered, ascending.
    pub fn lambdas(&self) -> Vec<u64> {
        self.blocks.keys().copied().collect()
    }

    /// The chosen `B_lambda`.
    pub fn blocks(&self, lambda: u64) -> Option<&[ModMatrix]> {
        self.blocks.get(&lambda).map(|b| b.blocks.as_slice())
    }

    /// Cardinality from the closed formulas.
    pub fn cardinality(&self) -> &BigUint {
        &self.cardinality
    }

    pub fn is_materialized(&self) -> bool {
        self.elements.is_some()
    }

    pub fn elements(&self) -> Option<&PackedKeys> {
        self.elements.as_ref()
    }

    /// Number of stored elements, when materialized.
    pub fn materialized_len(&self) -> Option<u64> {
        self.elements.as_ref().map(|e| e.len() as u64)
    }

    /// Hash-free exact lookup in the materialized element list.
    pub fn membership(&self, a: &ModMatrix) -> Result<bool> {
        let elements = self.elements.as_ref().ok_or(Error::NotMaterialized)?;
        if a.modulus() != self.ctx.modulus() || a.dim() != self.ctx.dim() {
            return Ok(false);
        }
        Ok(elements.contains(a))
    }

    /// Lookup when materialized, structural test otherwise.
    pub fn contains(&self, a: &ModMatrix) -> bool {
        match self.membership(a) {
            Ok(hit) => hit,
            Err(_) => self.contains_structurally(a),
        }
    }

    /// Uniformly random stored element for `(seed, index)`.
    pub fn sample_element(&self, seed: u64, index: u64) -> Result<ModMatrix> {
        use rand::Rng;
        let elements = self.elements.as_ref().ok_or(Error::NotMaterialized)?;
        if elements.is_empty() {
            return Err(Error::InvalidParameter("empty set".into()));
        }
        let mut r = crate::rng::stream(seed, crate::rng::lane::SET_PICK, index);
        let i = r.random_range(0..elements.len());
        Ok(elements.get(i, self.ctx.modulus(), self.ctx.dim()))
    }

    /// Ratio `|set| / |GSp^(q)_{2g}(F_ell)|` for a `QUnion` set, from its cardinality.
    pub fn density(&self) -> BigRational {
        BigRational::new(self.cardinality.clone().into(), self.ctx.order().into())
    }
}
