//! Transvections, the parameterization of the stabilizer of `e1`, and orbits
//! of vectors.

use num_bigint::BigUint;
use smallvec::SmallVec;

use super::{similitude_multiplier, GroupContext, Multiplier};
use crate::error::{Error, Result};
use crate::modmat::{inv_mod, mul_mod, neg_mod, ModMatrix, ModVector};

/// Parameters `(lambda, d, d_1..d_{2g-2}, B)` of an `e1`-fixing similitude.
///
/// `b` is `None` only for `g = 1`, where there is no lower block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilizerParams {
    pub lambda: Multiplier,
    pub d: u64,
    pub d_vec: Vec<u64>,
    pub b: Option<ModMatrix>,
}

/// The matrix of `v -> v + beta e(v, u) u` with `u = e2 + alpha_3 e3 + ... + alpha_{2g} e_{2g}`.
///
/// `alpha` holds `alpha_3, ..., alpha_{2g}`.
pub fn transvection(ctx: &GroupContext, alpha: &[u64], beta: u64) -> Result<ModMatrix> {
    let p = ctx.modulus().value();
    if !ctx.modulus().is_prime() {
        return Err(Error::CompositeModulus(p));
    }
    let d = ctx.dim();
    if alpha.len() != d - 2 {
        return Err(Error::Mismatch(format!("alpha must have {} entries", d - 2)));
    }
    Ok(transvection_raw(ctx, alpha, beta))
}

pub(crate) fn transvection_raw(ctx: &GroupContext, alpha: &[u64], beta: u64) -> ModMatrix {
    let p = ctx.modulus().value();
    let d = ctx.dim();
    let mut u: SmallVec<[u64; 16]> = SmallVec::from_elem(0, d);
    u[1] = 1;
    for (k, &a) in alpha.iter().enumerate() {
        u[k + 2] = a % p;
    }
    // (J u)_j = e(e_j, u)
    let ju: SmallVec<[u64; 16]> = (0..d)
        .map(|j| if j % 2 == 0 { u[j + 1] } else { neg_mod(u[j - 1], p) })
        .collect();
    let beta = beta % p;
    let entries = (0..d * d)
        .map(|k| {
            let (i, j) = (k / d, k % d);
            let shear = mul_mod(beta, mul_mod(u[i], ju[j], p), p);
            (u64::from(i == j) + shear) % p
        })
        .collect();
    ModMatrix::from_raw(ctx.modulus(), d, entries)
}

/// Assembles the `e1`-fixing similitude with the given parameters.
///
/// Column 1 is `e1`, column 2 is `(d, lambda, d_1, ..., d_{2g-2})`, and column
/// `k + 2` is `(b_k, 0, B e_k)` with
/// `b_k = lambda^{-1} sum_{j=1}^{g-1} (d_{2j-1} B_{2j,k} - d_{2j} B_{2j-1,k})`.
pub fn stabilizer_matrix(ctx: &GroupContext, params: &StabilizerParams) -> Result<ModMatrix> {
    let p = ctx.modulus().value();
    if !ctx.modulus().is_prime() {
        return Err(Error::CompositeModulus(p));
    }
    let lambda = params.lambda.value() % p;
    if params.d_vec.len() != ctx.dim() - 2 {
        return Err(Error::Mismatch(format!("d_vec must have {} entries", ctx.dim() - 2)));
    }
    match (&params.b, ctx.g()) {
        (None, 1) => {}
        (Some(b), g) if g >= 2 => {
            if b.dim() != ctx.dim() - 2 || b.modulus() != ctx.modulus() {
                return Err(Error::Mismatch("B block has the wrong shape".into()));
            }
            if similitude_multiplier(b) != Some(lambda) {
                return Err(Error::NotSimilitude);
            }
        }
        _ => return Err(Error::Mismatch("B block must be present exactly when g >= 2".into())),
    }
    Ok(stabilizer_raw(ctx, lambda, params.d, &params.d_vec, params.b.as_ref()))
}

/// The `b_k` row from the second column entries and the lower block.
pub(crate) fn top_row(lambda: u64, d_vec: &[u64], b: &ModMatrix, p: u64) -> SmallVec<[u64; 16]> {
    let m = b.dim();
    let lambda_inv = inv_mod(lambda, p).expect("multiplier is a unit");
    (0..m)
        .map(|k| {
            let mut acc = 0u64;
            for j in 0..m / 2 {
                acc = (acc + mul_mod(d_vec[2 * j], b.get(2 * j + 1, k), p)) % p;
                acc = (acc + neg_mod(mul_mod(d_vec[2 * j + 1], b.get(2 * j, k), p), p)) % p;
            }
            mul_mod(acc, lambda_inv, p)
        })
        .collect()
}

pub(crate) fn stabilizer_raw(
    ctx: &GroupContext,
    lambda: u64,
    d: u64,
    d_vec: &[u64],
    b: Option<&ModMatrix>,
) -> ModMatrix {
    let p = ctx.modulus().value();
    let n = ctx.dim();
    let mut e: SmallVec<[u64; 16]> = SmallVec::from_elem(0, n * n);
    e[0] = 1;
    e[1] = d % p;
    e[n + 1] = lambda % p;
    if let Some(b) = b {
        let top = top_row(lambda, d_vec, b, p);
        for k in 0..n - 2 {
            e[k + 2] = top[k];
        }
        for i in 0..n - 2 {
            e[(i + 2) * n + 1] = d_vec[i] % p;
            for k in 0..n - 2 {
                e[(i + 2) * n + k + 2] = b.get(i, k);
            }
        }
    }
    ModMatrix::from_raw(ctx.modulus(), n, e)
}

/// Orbit size of a nonzero vector under the symplectic group, by the
/// transitivity of `Sp_{2g}(F_ell)` on nonzero vectors: `ell^{2g} - 1`.
pub fn orbit_size_formula(ctx: &GroupContext) -> BigUint {
    BigUint::from(ctx.modulus().value()).pow(ctx.dim() as u32) - 1u32
}

/// Orbit size of `v` under `GSp^(q)_{2g}(F_ell)`, computed by breadth-first
/// search over the vector space using transvection generators of `Sp` and one
/// diagonal similitude per allowed multiplier.
pub fn orbit_size(ctx: &GroupContext, v: &ModVector, budget: u64) -> Result<u64> {
    let p = ctx.modulus().value();
    if !ctx.modulus().is_prime() {
        return Err(Error::CompositeModulus(p));
    }
    if v.dim() != ctx.dim() || v.modulus() != ctx.modulus() {
        return Err(Error::Mismatch("vector does not match the group".into()));
    }
    if v.is_zero() {
        return Err(Error::InvalidParameter("orbit of the zero vector".into()));
    }
    let d = ctx.dim();
    let space = (p as u128).pow(d as u32);
    if space > budget as u128 {
        return Err(Error::BudgetExceeded { estimate: space, budget });
    }
    let gens = orbit_generators(ctx)?;
    let encode = |x: &[u64]| x.iter().fold(0u64, |k, &c| k * p + c);
    let mut seen = vec![false; space as usize];
    let mut queue = std::collections::VecDeque::new();
    seen[encode(v.entries()) as usize] = true;
    queue.push_back(v.clone());
    let mut count = 1u64;
    while let Some(w) = queue.pop_front() {
        for g in &gens {
            let img = g.mul_vec(&w)?;
            let key = encode(img.entries()) as usize;
            if !seen[key] {
                seen[key] = true;
                count += 1;
                queue.push_back(img);
            }
        }
    }
    Ok(count)
}

fn orbit_generators(ctx: &GroupContext) -> Result<Vec<ModMatrix>> {
    let p = ctx.modulus().value();
    let d = ctx.dim();
    let unit = |i: usize| -> SmallVec<[u64; 16]> { (0..d).map(|k| u64::from(k == i)).collect() };
    let mut dirs: Vec<SmallVec<[u64; 16]>> = (0..d).map(unit).collect();
    for i in 0..d {
        for j in i + 1..d {
            let mut plus = unit(i);
            plus[j] = 1;
            let mut minus = unit(i);
            minus[j] = p - 1;
            dirs.push(plus);
            dirs.push(minus);
        }
    }
    let mut gens: Vec<ModMatrix> = dirs.iter().map(|u| general_transvection(ctx, u)).collect();
    for lambda in ctx.allowed_multipliers() {
        let diag: Vec<u64> = (0..d).map(|k| if k % 2 == 1 { lambda } else { 1 }).collect();
        gens.push(ModMatrix::diagonal(ctx.modulus(), &diag)?);
    }
    Ok(gens)
}

/// `v -> v + e(v, u) u` for an arbitrary direction `u`.
fn general_transvection(ctx: &GroupContext, u: &[u64]) -> ModMatrix {
    let p = ctx.modulus().value();
    let d = ctx.dim();
    let ju: SmallVec<[u64; 16]> = (0..d)
        .map(|j| if j % 2 == 0 { u[j + 1] } else { neg_mod(u[j - 1], p) })
        .collect();
    let entries = (0..d * d)
        .map(|k| {
            let (i, j) = (k / d, k % d);
            (u64::from(i == j) + mul_mod(u[i], ju[j], p)) % p
        })
        .collect();
    ModMatrix::from_raw(ctx.modulus(), d, entries)
}
