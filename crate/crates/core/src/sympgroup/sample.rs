//! Uniform sampling from `GSp_{2g}(F_ell)[lambda]`.
//!
//! The sampler builds the images `f_1, ..., f_{2g}` of the standard symplectic
//! basis one hyperbolic pair at a time. Inside the current nondegenerate
//! subspace `W` (kept as a symplectic basis) it draws `f_{2k-1}` uniformly
//! among nonzero vectors of `W`, then `f_{2k}` uniformly on the affine
//! hyperplane `{v in W : e(f_{2k-1}, v) = lambda}`, then replaces `W` by the
//! orthogonal complement of the new pair. The number of choices at every step
//! does not depend on earlier choices, so the resulting matrix is uniform on
//! the coset `GSp[lambda]`.

use rand::Rng;
use smallvec::SmallVec;

use super::{form_value, GroupContext, Multiplier};
use crate::error::{Error, Result};
use crate::modmat::{inv_mod, mul_mod, neg_mod, ModMatrix};
use crate::rng;

type Vector = SmallVec<[u64; 16]>;

/// Deterministic uniform draw for `(seed, index)`.
pub fn sample_uniform(ctx: &GroupContext, lambda: Multiplier, seed: u64, index: u64) -> Result<ModMatrix> {
    let mut r = rng::stream(seed, rng::lane::GROUP_SAMPLE, index);
    sample_uniform_with(ctx, lambda, &mut r)
}

/// Uniform draw from `GSp[lambda]` using the supplied generator.
pub fn sample_uniform_with<R: Rng + ?Sized>(
    ctx: &GroupContext,
    lambda: Multiplier,
    rng: &mut R,
) -> Result<ModMatrix> {
    let p = ctx.modulus().value();
    if !ctx.modulus().is_prime() {
        return Err(Error::CompositeModulus(p));
    }
    let lambda = lambda.value() % p;
    let lambda_inv = inv_mod(lambda, p).ok_or_else(|| Error::InvalidParameter("zero multiplier".into()))?;
    let d = ctx.dim();

    let mut basis: Vec<Vector> = (0..d)
        .map(|i| (0..d).map(|k| u64::from(k == i)).collect())
        .collect();
    let mut columns: Vec<Vector> = Vec::with_capacity(d);

    while !basis.is_empty() {
        let m = basis.len();
        let coeffs: Vec<u64> = loop {
            let c: Vec<u64> = (0..m).map(|_| rng::residue(rng, p)).collect();
            if c.iter().any(|&x| x != 0) {
                break c;
            }
        };
        let x = combine(&basis, &coeffs, p);

        let pairings: Vec<u64> = basis.iter().map(|w| form_value(&x, w, p)).collect();
        let pivot = pairings
            .iter()
            .rposition(|&a| a != 0)
            .expect("nonzero vector of a nondegenerate space pairs with the basis");
        let mut coeffs_y: Vec<u64> = (0..m).map(|_| rng::residue(rng, p)).collect();
        let rest = (0..m)
            .filter(|&i| i != pivot)
            .fold(0u64, |acc, i| (acc + mul_mod(pairings[i], coeffs_y[i], p)) % p);
        let pivot_inv = inv_mod(pairings[pivot], p).expect("nonzero in a prime field");
        coeffs_y[pivot] = mul_mod((lambda + p - rest) % p, pivot_inv, p);
        let y = combine(&basis, &coeffs_y, p);
        debug_assert_eq!(form_value(&x, &y, p), lambda);

        // project the old basis onto span(x, y)^perp and re-symplectify
        let y_unit: Vector = y.iter().map(|&t| mul_mod(t, lambda_inv, p)).collect();
        let projected: Vec<Vector> = basis
            .iter()
            .map(|w| project_out(w, &x, &y_unit, p))
            .collect();
        columns.push(x);
        columns.push(y);
        basis = symplectic_basis(projected, p);
    }

    let entries: SmallVec<[u64; 16]> = (0..d * d).map(|k| columns[k % d][k / d]).collect();
    Ok(ModMatrix::from_raw(ctx.modulus(), d, entries))
}

fn combine(basis: &[Vector], coeffs: &[u64], p: u64) -> Vector {
    let d = basis[0].len();
    let mut out: Vector = SmallVec::from_elem(0, d);
    for (w, &c) in basis.iter().zip(coeffs) {
        if c == 0 {
            continue;
        }
        for (o, &x) in out.iter_mut().zip(w) {
            *o = (*o + mul_mod(c, x, p)) % p;
        }
    }
    out
}

/// `v + e(b, v) a - e(a, v) b` for a hyperbolic pair `e(a, b) = 1`.
fn project_out(v: &[u64], a: &[u64], b: &[u64], p: u64) -> Vector {
    let s = form_value(b, v, p);
    let t = form_value(a, v, p);
    v.iter()
        .zip(a.iter().zip(b))
        .map(|(&vi, (&ai, &bi))| {
            let plus = mul_mod(s, ai, p);
            let minus = mul_mod(t, bi, p);
            (vi + plus + neg_mod(minus, p)) % p
        })
        .collect()
}

/// Symplectic Gram-Schmidt: turns a spanning list of a nondegenerate subspace
/// into a basis `a_1, b_1, a_2, b_2, ...` with `e(a_i, b_i) = 1` and all other
/// pairings zero.
fn symplectic_basis(mut pending: Vec<Vector>, p: u64) -> Vec<Vector> {
    let mut out = Vec::new();
    loop {
        pending.retain(|v| v.iter().any(|&x| x != 0));
        if pending.is_empty() {
            return out;
        }
        let a = pending.remove(0);
        let Some(j) = pending.iter().position(|v| form_value(&a, v, p) != 0) else {
            // `a` is radical; the subspace is nondegenerate, so this only
            // happens for vectors already in the span of earlier pairs
            continue;
        };
        let b_raw = pending.remove(j);
        let scale = inv_mod(form_value(&a, &b_raw, p), p).expect("nonzero pairing");
        let b: Vector = b_raw.iter().map(|&x| mul_mod(x, scale, p)).collect();
        pending = pending.iter().map(|v| project_out(v, &a, &b, p)).collect();
        out.push(a);
        out.push(b);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modmat::ModVector;
    use crate::sympgroup::{QParam, DEFAULT_BUDGET};
    use std::collections::HashMap;

    #[test]
    fn samples_are_members_with_requested_multiplier() {
        let c = GroupContext::prime(2, 5, QParam::Infinity).unwrap();
        let l2 = Multiplier::new(c.modulus(), 2).unwrap();
        for i in 0..10_000 {
            let a = sample_uniform(&c, l2, 99, i).unwrap();
            assert_eq!(c.multiplier(&a).unwrap(), l2);
        }
        let c3 = GroupContext::prime(3, 7, QParam::Infinity).unwrap();
        let l = Multiplier::new(c3.modulus(), 3).unwrap();
        for i in 0..500 {
            assert_eq!(c3.multiplier(&sample_uniform(&c3, l, 5, i).unwrap()).unwrap(), l);
        }
    }

    #[test]
    fn deterministic_in_seed_and_index() {
        let c = GroupContext::prime(2, 3, QParam::Infinity).unwrap();
        let one = Multiplier::one();
        assert_eq!(sample_uniform(&c, one, 1, 2).unwrap(), sample_uniform(&c, one, 1, 2).unwrap());
        let distinct = (0..20).map(|i| sample_uniform(&c, one, 1, i).unwrap()).collect::<Vec<_>>();
        assert!(distinct.windows(2).any(|w| w[0] != w[1]));
    }

    #[test]
    fn chi_square_on_sl2_f3() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let c = GroupContext::prime(1, 3, QParam::Infinity).unwrap();
        let one = Multiplier::one();
        let cells: Vec<ModMatrix> = c.enumerate(Some(one), DEFAULT_BUDGET).unwrap().collect();
        assert_eq!(cells.len(), 24);
        let index: HashMap<ModMatrix, usize> = cells.iter().cloned().zip(0..).collect();
        let draws = 24_000u64;
        let mut counts = [0u64; 24];
        for i in 0..draws {
            counts[index[&sample_uniform(&c, one, 2024, i).unwrap()]] += 1;
        }
        let expected = draws as f64 / 24.0;
        let stat: f64 = counts.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
        let p = 1.0 - ChiSquared::new(23.0).unwrap().cdf(stat);
        assert!(p > 1e-3, "chi-square p-value {p}");
    }

    #[test]
    fn gram_schmidt_produces_symplectic_pairs() {
        let p = 7;
        let vs: Vec<Vector> = vec![
            [1u64, 2, 3, 4].into_iter().collect(),
            [0u64, 1, 5, 6].into_iter().collect(),
            [0u64, 0, 1, 2].into_iter().collect(),
            [3u64, 0, 0, 1].into_iter().collect(),
        ];
        let b = symplectic_basis(vs, p);
        assert_eq!(b.len(), 4);
        let m = ModMatrix::from_columns(
            &b.iter()
                .map(|v| ModVector::new(crate::modmat::Modulus::new(p).unwrap(), v.iter().copied()).unwrap())
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let c = GroupContext::prime(2, p, QParam::Infinity).unwrap();
        assert_eq!(c.multiplier(&m).unwrap().value(), 1);
    }
}
