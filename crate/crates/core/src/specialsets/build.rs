//! Materialization: every element generated, packed, sorted and deduplicated.

use rayon::prelude::*;

use super::{check_construction_prime, BSelectionStrategy, BlockSet, SetLevel, SpecialSet, DEFAULT_MAX_ELL, HARD_MAX_ELL};
use crate::error::{Error, Result};
use crate::modmat::{mul_mod, neg_mod, packs_into_u64, ModMatrix, Modulus};
use crate::sympgroup::stabilizer::{stabilizer_raw, top_row};
use crate::sympgroup::{GroupContext, Multiplier, DEFAULT_BUDGET};

/// Sorted, duplicate-free packed matrices. Keys are base-`ell` row-major, so
/// key order is lexicographic order of entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PackedKeys {
    U64(Vec<u64>),
    U128(Vec<u128>),
}

pub(crate) trait PackKey: Copy + Ord + Default + Send + Sync + 'static {
    fn of(m: &ModMatrix) -> Self;
    fn wrap(keys: Vec<Self>) -> PackedKeys;
    fn widen(self) -> u128;
    /// Appends one base-`p` digit.
    fn push(self, p: u64, digit: u64) -> Self;
}

impl PackKey for u64 {
    #[inline]
    fn of(m: &ModMatrix) -> Self {
        m.pack_u64_unchecked()
    }
    fn wrap(keys: Vec<Self>) -> PackedKeys {
        PackedKeys::U64(keys)
    }
    fn widen(self) -> u128 {
        self as u128
    }
    #[inline]
    fn push(self, p: u64, digit: u64) -> Self {
        self * p + digit
    }
}

impl PackKey for u128 {
    #[inline]
    fn of(m: &ModMatrix) -> Self {
        m.pack().expect("checked by the materialization cap")
    }
    fn wrap(keys: Vec<Self>) -> PackedKeys {
        PackedKeys::U128(keys)
    }
    fn widen(self) -> u128 {
        self
    }
    #[inline]
    fn push(self, p: u64, digit: u64) -> Self {
        self * p as u128 + digit as u128
    }
}

impl PackedKeys {
    pub fn len(&self) -> usize {
        match self {
            PackedKeys::U64(v) => v.len(),
            PackedKeys::U128(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, a: &ModMatrix) -> bool {
        match self {
            PackedKeys::U64(v) => a.pack().is_some_and(|k| k <= u64::MAX as u128 && v.binary_search(&(k as u64)).is_ok()),
            PackedKeys::U128(v) => a.pack().is_some_and(|k| v.binary_search(&k).is_ok()),
        }
    }

    pub fn key(&self, i: usize) -> u128 {
        match self {
            PackedKeys::U64(v) => v[i] as u128,
            PackedKeys::U128(v) => v[i],
        }
    }

    pub fn get(&self, i: usize, modulus: Modulus, dim: usize) -> ModMatrix {
        ModMatrix::unpack(modulus, dim, self.key(i))
    }

    pub fn matrices(&self, modulus: Modulus, dim: usize) -> impl Iterator<Item = ModMatrix> + '_ {
        (0..self.len()).map(move |i| self.get(i, modulus, dim))
    }

    /// Builds from arbitrary keys, sorting and deduplicating.
    pub fn from_keys(modulus: Modulus, dim: usize, mut keys: Vec<u128>) -> Self {
        keys.par_sort_unstable();
        keys.dedup();
        if packs_into_u64(modulus, dim) {
            PackedKeys::U64(keys.into_iter().map(|k| k as u64).collect())
        } else {
            PackedKeys::U128(keys)
        }
    }

    fn merge(parts: Vec<PackedKeys>) -> PackedKeys {
        let wide = parts.iter().any(|p| matches!(p, PackedKeys::U128(_)));
        if wide {
            let mut all: Vec<u128> = parts
                .into_iter()
                .flat_map(|p| match p {
                    PackedKeys::U64(v) => v.into_iter().map(u128::from).collect::<Vec<_>>(),
                    PackedKeys::U128(v) => v,
                })
                .collect();
            all.par_sort_unstable();
            all.dedup();
            PackedKeys::U128(all)
        } else {
            let mut all: Vec<u64> = parts
                .into_iter()
                .flat_map(|p| match p {
                    PackedKeys::U64(v) => v,
                    PackedKeys::U128(_) => unreachable!(),
                })
                .collect();
            all.par_sort_unstable();
            all.dedup();
            PackedKeys::U64(all)
        }
    }
}

/// Knobs for materialization.
#[derive(Clone, Copy, Debug)]
pub struct BuildOptions {
    pub strategy: BSelectionStrategy,
    /// Candidate budget for enumerating `GSp_{2g-2}` when selecting blocks.
    pub budget: u64,
    /// Largest prime to materialize; at most [`HARD_MAX_ELL`].
    pub max_ell: u64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            strategy: BSelectionStrategy::LexCanonical,
            budget: DEFAULT_BUDGET,
            max_ell: DEFAULT_MAX_ELL,
        }
    }
}

fn check_materializable(ctx: &GroupContext, opts: &BuildOptions) -> Result<()> {
    let ell = ctx.modulus().value();
    check_construction_prime(ell)?;
    if ctx.g() != 2 {
        return Err(Error::InvalidParameter(format!(
            "materialization is limited to g = 2 (got g = {})",
            ctx.g()
        )));
    }
    let cap = opts.max_ell.min(HARD_MAX_ELL);
    if ell > cap {
        return Err(Error::InvalidParameter(format!(
            "ell = {ell} exceeds the materialization cap {cap} (hard limit {HARD_MAX_ELL})"
        )));
    }
    Ok(())
}

/// Materializes `S_lambda(ell)_0`.
pub fn build_s0(ctx: &GroupContext, lambda: Multiplier, opts: &BuildOptions) -> Result<SpecialSet> {
    build(ctx, SetLevel::S0, Some(lambda), opts)
}

/// Materializes `S_lambda(ell)`.
pub fn build_s(ctx: &GroupContext, lambda: Multiplier, opts: &BuildOptions) -> Result<SpecialSet> {
    build(ctx, SetLevel::Full, Some(lambda), opts)
}

/// Materializes `S^(q)(ell)` for `q = ctx.q()`.
pub fn build_sq(ctx: &GroupContext, opts: &BuildOptions) -> Result<SpecialSet> {
    build(ctx, SetLevel::QUnion, None, opts)
}

fn build(ctx: &GroupContext, level: SetLevel, lambda: Option<Multiplier>, opts: &BuildOptions) -> Result<SpecialSet> {
    check_materializable(ctx, opts)?;
    let mut set = SpecialSet::describe(ctx, level, lambda, opts.strategy, opts.budget)?;
    set.materialize(opts.max_ell)?;
    Ok(set)
}

impl SpecialSet {
    /// Generates the elements of an already described set.
    pub fn materialize(&mut self, max_ell: u64) -> Result<()> {
        if self.elements.is_some() {
            return Ok(());
        }
        let opts = BuildOptions {
            strategy: self.strategy,
            budget: DEFAULT_BUDGET,
            max_ell,
        };
        check_materializable(&self.ctx, &opts)?;
        let ctx = &self.ctx;
        let elements = match self.level {
            SetLevel::S0 => {
                let (&l, blocks) = self.blocks.iter().next().expect("one multiplier");
                with_key_width(ctx, |wide| {
                    if wide {
                        u128::wrap(s0_keys::<u128>(ctx, l, blocks))
                    } else {
                        u64::wrap(s0_keys::<u64>(ctx, l, blocks))
                    }
                })
            }
            SetLevel::Full | SetLevel::QUnion => PackedKeys::merge(
                self.blocks
                    .iter()
                    .map(|(&l, blocks)| full_keys(ctx, l, blocks))
                    .collect(),
            ),
        };
        self.elements = Some(elements);
        Ok(())
    }
}

fn with_key_width(ctx: &GroupContext, f: impl FnOnce(bool) -> PackedKeys) -> PackedKeys {
    f(!packs_into_u64(ctx.modulus(), ctx.dim()))
}

fn full_keys(ctx: &GroupContext, lambda: u64, blocks: &BlockSet) -> PackedKeys {
    with_key_width(ctx, |wide| {
        if wide {
            let s0 = s0_keys::<u128>(ctx, lambda, blocks);
            u128::wrap(conjugate_keys(ctx, &s0))
        } else {
            let s0 = s0_keys::<u64>(ctx, lambda, blocks);
            u64::wrap(conjugate_keys(ctx, &s0))
        }
    })
}

/// `d` value excluded for the given `d_vec`: `-(b_1..b_m) (I - B)^{-1} d_vec`.
pub(crate) fn excluded_d(lambda: u64, d_vec: &[u64], b: &ModMatrix, resolvent: &ModMatrix, p: u64) -> u64 {
    let top = top_row(lambda, d_vec, b, p);
    let m = b.dim();
    let mut acc = 0u64;
    for i in 0..m {
        let mut w = 0u64;
        for (k, &dk) in d_vec.iter().enumerate().take(m) {
            w = (w + mul_mod(resolvent.get(i, k), dk, p)) % p;
        }
        acc = (acc + mul_mod(top[i], w, p)) % p;
    }
    neg_mod(acc, p)
}

fn decode(mut idx: u64, p: u64, out: &mut [u64]) {
    for slot in out.iter_mut().rev() {
        *slot = idx % p;
        idx /= p;
    }
}

fn s0_keys<K: PackKey>(ctx: &GroupContext, lambda: u64, blocks: &BlockSet) -> Vec<K> {
    let p = ctx.modulus().value();
    let m = ctx.dim() - 2;
    let vecs = p.pow(m as u32);
    let per_block = (vecs * (p - 1)) as usize;
    let mut out = vec![K::default(); per_block * blocks.blocks.len()];
    out.par_chunks_mut(per_block.max(1))
        .zip(blocks.blocks.par_iter().zip(blocks.resolvents.par_iter()))
        .for_each(|(chunk, (b, r))| {
            let mut d_vec = vec![0u64; m];
            let mut slot = 0;
            for idx in 0..vecs {
                decode(idx, p, &mut d_vec);
                let skip = excluded_d(lambda, &d_vec, b, r, p);
                for d in (0..p).filter(|&d| d != skip) {
                    chunk[slot] = K::of(&stabilizer_raw(ctx, lambda, d, &d_vec, Some(b)));
                    slot += 1;
                }
            }
            debug_assert_eq!(slot, chunk.len());
        });
    out.par_sort_unstable();
    out.dedup();
    out
}

/// All conjugates `T^{-1} A T` for `A` in the sorted `s0` and every `(alpha, beta)`.
fn conjugate_keys<K: PackKey>(ctx: &GroupContext, s0: &[K]) -> Vec<K> {
    let p = ctx.modulus().value();
    let m = ctx.dim() - 2;
    let alphas = p.pow(m as u32);
    let modulus = ctx.modulus();
    let dim = ctx.dim();
    let members: Vec<ModMatrix> = s0.iter().map(|&k| unpack_key(modulus, dim, k)).collect();
    // beta = 0 gives the identity for every alpha, so it is taken once
    let pairs = 1 + alphas * (p - 1);
    let mut out = vec![K::default(); pairs as usize * s0.len()];
    out.par_chunks_mut(s0.len().max(1))
        .enumerate()
        .for_each(|(pi, chunk)| {
            if pi == 0 {
                chunk.copy_from_slice(s0);
                return;
            }
            let pi = pi as u64 - 1;
            let beta = 1 + pi % (p - 1);
            let mut alpha = vec![0u64; m];
            decode(pi / (p - 1), p, &mut alpha);
            // T = I + beta u w^t with w = J u and w.u = 0, so
            // T^{-1} A T = A + beta (A u) w^t - beta u (w^t A) - beta^2 (w^t A u) u w^t
            // u = e2 + sum alpha_k e_k, w_j = e(e_j, u)
            let mut u = [0u64; 16];
            let mut w = [0u64; 16];
            u[1] = 1;
            u[2..dim].copy_from_slice(&alpha);
            for j in 0..dim {
                w[j] = if j % 2 == 0 { u[j + 1] } else { (p - u[j - 1]) % p };
            }
            for (slot, a) in chunk.iter_mut().zip(&members) {
                let e = a.entries();
                let mut x = [0u64; 16];
                let mut y = [0u64; 16];
                for i in 0..dim {
                    let (mut xi, mut yi) = (0u64, 0u64);
                    for k in 0..dim {
                        xi += e[i * dim + k] * u[k];
                        yi += w[k] * e[k * dim + i];
                    }
                    x[i] = xi % p;
                    y[i] = yi % p;
                }
                let s = (0..dim).map(|k| w[k] * x[k]).sum::<u64>() % p;
                let b2s = beta * beta % p * s % p;
                let mut key = K::default();
                for i in 0..dim {
                    let bx = beta * x[i] % p;
                    for j in 0..dim {
                        let c = ((p - beta) * y[j] + (p - b2s) * w[j]) % p;
                        key = key.push(p, (e[i * dim + j] + bx * w[j] + u[i] * c) % p);
                    }
                }
                *slot = key;
            }
        });
    out.par_sort_unstable();
    out.dedup();
    out
}

fn unpack_key<K: PackKey>(modulus: Modulus, dim: usize, k: K) -> ModMatrix {
    ModMatrix::unpack(modulus, dim, k.widen())
}

/// Reconstructs `(d, d_vec, B)` from an `e1`-fixing similitude.
pub(crate) fn stabilizer_parts(a: &ModMatrix) -> (u64, Vec<u64>, ModMatrix) {
    let n = a.dim();
    let m = n - 2;
    let d_vec = (0..m).map(|i| a.get(i + 2, 1)).collect();
    let b = ModMatrix::new(
        a.modulus(),
        m,
        (0..m * m).map(|k| a.get(k / m + 2, k % m + 2)),
    )
    .expect("valid block");
    (a.get(0, 1), d_vec, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sympgroup::QParam;
    use crate::sympgroup::stabilizer::transvection_raw;
    use num_bigint::BigUint;
    use std::collections::HashSet;

    fn ctx(ell: u64, q: QParam) -> GroupContext {
        GroupContext::prime(2, ell, q).unwrap()
    }

    fn mult(c: &GroupContext, l: u64) -> Multiplier {
        Multiplier::new(c.modulus(), l).unwrap()
    }

    #[test]
    fn sizes_at_three() {
        let c = ctx(3, QParam::Finite(2));
        let opts = BuildOptions::default();
        for l in [1, 2] {
            let s0 = build_s0(&c, mult(&c, l), &opts).unwrap();
            assert_eq!(s0.materialized_len(), Some(216));
            let s = build_s(&c, mult(&c, l), &opts).unwrap();
            assert_eq!(s.materialized_len(), Some(4104));
            assert_eq!(BigUint::from(4104u32), *s.cardinality());
        }
        let sq = build_sq(&c, &opts).unwrap();
        assert_eq!(sq.materialized_len(), Some(8208));
    }

    #[test]
    fn elements_are_valid_and_fix_exactly_one_line() {
        let c = ctx(3, QParam::Infinity);
        let sq = build_sq(&c, &BuildOptions::default()).unwrap();
        for a in sq.elements().unwrap().matrices(c.modulus(), 4) {
            assert!(c.is_member(&a));
            assert_eq!(a.fixed_space().unwrap().len(), 1);
        }
    }

    #[test]
    fn s0_elements_fix_e1() {
        let c = ctx(5, QParam::Infinity);
        let s0 = build_s0(&c, mult(&c, 2), &BuildOptions::default()).unwrap();
        assert_eq!(s0.materialized_len(), Some(9000));
        for a in s0.elements().unwrap().matrices(c.modulus(), 4) {
            assert_eq!(a.column(0).entries(), &[1, 0, 0, 0]);
            assert_eq!(c.multiplier(&a).unwrap().value(), 2);
            let (_, _, b) = stabilizer_parts(&a);
            assert!(!b.has_eigenvalue_one().unwrap());
        }
    }

    #[test]
    fn conjugates_are_distinct_and_leave_s0() {
        // every (alpha, beta != 0) conjugate of every A in S0 is new
        let c = ctx(3, QParam::Infinity);
        let s0 = build_s0(&c, mult(&c, 2), &BuildOptions::default()).unwrap();
        let members: Vec<ModMatrix> = s0.elements().unwrap().matrices(c.modulus(), 4).collect();
        let base: HashSet<ModMatrix> = members.iter().cloned().collect();
        let mut seen = HashSet::new();
        for a in &members {
            for alpha_idx in 0..9u64 {
                let alpha = [alpha_idx / 3, alpha_idx % 3];
                for beta in 1..3u64 {
                    let t = transvection_raw(&c, &alpha, beta);
                    let t_inv = transvection_raw(&c, &alpha, 3 - beta);
                    let conj = t_inv.mul(a).unwrap().mul(&t).unwrap();
                    assert!(!base.contains(&conj));
                    assert!(seen.insert(conj));
                }
            }
        }
        assert_eq!(seen.len() + base.len(), 4104);
    }

    #[test]
    fn remark_blocks_materialize() {
        let c = ctx(5, QParam::Finite(2));
        let opts = BuildOptions { strategy: BSelectionStrategy::RemarkG2, ..BuildOptions::default() };
        let s = build_s(&c, mult(&c, 3), &opts).unwrap();
        assert_eq!(s.materialized_len(), Some(80 * 25 * 4 * 101));
    }

    #[test]
    fn caps_are_enforced() {
        let c = ctx(17, QParam::Infinity);
        assert!(build_s0(&c, mult(&c, 3), &BuildOptions::default()).is_err());
        let c3 = GroupContext::prime(3, 3, QParam::Infinity).unwrap();
        assert!(build_s0(&c3, mult(&c3, 1), &BuildOptions::default()).is_err());
        let c2 = ctx(2, QParam::Infinity);
        assert!(matches!(
            build_s0(&c2, Multiplier::one(), &BuildOptions::default()),
            Err(Error::UnsupportedPrime { ell: 2, .. })
        ));
    }

    #[test]
    fn wide_keys_round_trip() {
        // 19^16 does not fit in 64 bits
        let c = ctx(19, QParam::Infinity);
        assert!(!packs_into_u64(c.modulus(), 4));
        let opts = BuildOptions { max_ell: 19, ..BuildOptions::default() };
        let l = mult(&c, 2);
        let mut set = SpecialSet::describe(&c, SetLevel::S0, Some(l), opts.strategy, opts.budget).unwrap();
        let blocks = set.blocks[&2].clone();
        let trimmed = BlockSet::new(blocks.blocks[..1].to_vec()).unwrap();
        let keys = s0_keys::<u128>(&c, 2, &trimmed);
        assert_eq!(keys.len(), 19 * 19 * 18);
        set.elements = Some(u128::wrap(keys));
        let first = set.elements().unwrap().get(0, c.modulus(), 4);
        assert!(set.membership(&first).unwrap());
        assert_eq!(c.multiplier(&first).unwrap().value(), 2);
    }
}
