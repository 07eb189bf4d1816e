//! Fixtures shared by the criterion benches.

use symon_core::sympgroup::sample_uniform;
use symon_core::{GroupContext, ModMatrix, Multiplier, QParam};

pub const SEED: u64 = 7;

pub fn prime_ctx(g: usize, ell: u64) -> GroupContext {
    GroupContext::prime(g, ell, QParam::Infinity).expect("valid context")
}

/// `count` seeded members of `GSp_{2g}(F_ell)[lambda]`.
pub fn members(ctx: &GroupContext, lambda: u64, count: u64) -> Vec<ModMatrix> {
    let l = Multiplier::new(ctx.modulus(), lambda).expect("unit");
    (0..count).map(|i| sample_uniform(ctx, l, SEED, i).expect("sample")).collect()
}
