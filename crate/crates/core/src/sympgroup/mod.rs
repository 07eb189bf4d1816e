//! Symplectic similitude groups `GSp^(q)_{2g}(Z/n)`.
//!
//! The symplectic form is fixed to `J_g`, the block-diagonal matrix with `g`
//! copies of `[[0, 1], [-1, 0]]`, so `e(v, w) = sum_j v_{2j-1} w_{2j} - v_{2j} w_{2j-1}`.
//! A matrix `A` is a similitude with multiplier `lambda` when
//! `A^t J_g A = lambda J_g`; `GSp^(q)` keeps the similitudes whose multiplier
//! is a power of `q` modulo `n` (all units when `q` is infinite).

mod enumerate;
mod sample;
pub(crate) mod stabilizer;

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::One;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::modmat::{gcd, mul_mod, neg_mod, prime_power_base, ModMatrix, ModVector, Modulus, MAX_DIM};

pub use enumerate::{enumeration_estimate, GroupEnumerator};
pub use sample::{sample_uniform, sample_uniform_with};
pub use stabilizer::{
    orbit_size, orbit_size_formula, stabilizer_matrix, transvection, StabilizerParams,
};

/// Default enumeration budget, in candidate matrices.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

/// The `q` of `GSp^(q)`: a prime power, or the characteristic-zero case.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QParam {
    Finite(u64),
    Infinity,
}

impl QParam {
    pub fn finite(q: u64) -> Result<Self> {
        if q < 2 || prime_power_base(q).is_none() {
            return Err(Error::NotPrimePower(q));
        }
        Ok(QParam::Finite(q))
    }

    /// The characteristic `p` of a finite `q`.
    pub fn characteristic(self) -> Option<u64> {
        match self {
            QParam::Finite(q) => prime_power_base(q),
            QParam::Infinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, QParam::Infinity)
    }
}

impl fmt::Display for QParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QParam::Finite(q) => write!(f, "{q}"),
            QParam::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for QParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(QParam::Infinity),
            other => {
                let q: u64 = other
                    .parse()
                    .map_err(|_| Error::Parse(format!("q must be an integer or 'inf', got {s:?}")))?;
                QParam::finite(q)
            }
        }
    }
}

impl Serialize for QParam {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// A unit of `Z/n`, used as a similitude multiplier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Multiplier(u64);

impl Multiplier {
    pub fn new(modulus: Modulus, value: u64) -> Result<Self> {
        let v = value % modulus.value();
        if !modulus.is_unit(v) {
            return Err(Error::InvalidParameter(format!(
                "multiplier {value} is not a unit modulo {modulus}"
            )));
        }
        Ok(Multiplier(v))
    }

    pub fn one() -> Self {
        Multiplier(1)
    }

    #[inline]
    pub fn value(self) -> u64 {
        self.0
    }
}

/// Dimension, modulus, symplectic form and similitude class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupContext {
    g: usize,
    modulus: Modulus,
    q: QParam,
    form: ModMatrix,
}

impl GroupContext {
    pub fn new(g: usize, modulus: Modulus, q: QParam) -> Result<Self> {
        if g == 0 || 2 * g > MAX_DIM {
            return Err(Error::InvalidDimension(2 * g));
        }
        if let QParam::Finite(qv) = q {
            if prime_power_base(qv).is_none() {
                return Err(Error::NotPrimePower(qv));
            }
            if gcd(qv, modulus.value()) != 1 {
                return Err(Error::NotCoprime { q: qv, n: modulus.value() });
            }
        }
        let form = symplectic_form(g, modulus)?;
        Ok(GroupContext { g, modulus, q, form })
    }

    /// Context over the prime field `F_ell`.
    pub fn prime(g: usize, ell: u64, q: QParam) -> Result<Self> {
        Self::new(g, Modulus::prime(ell)?, q)
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn dim(&self) -> usize {
        2 * self.g
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn q(&self) -> QParam {
        self.q
    }

    /// The form matrix `J_g`.
    pub fn form(&self) -> &ModMatrix {
        &self.form
    }

    /// Same genus and `q`, over the prime `ell | n`.
    pub fn restrict(&self, ell: u64) -> Result<GroupContext> {
        if !self.modulus.value().is_multiple_of(ell) {
            return Err(Error::PrimeDoesNotDivide { prime: ell, modulus: self.modulus.value() });
        }
        GroupContext::prime(self.g, ell, self.q)
    }

    /// Same modulus, genus `g - 1`, all multipliers (the home of the `B` block).
    pub fn lower(&self) -> Result<GroupContext> {
        GroupContext::new(self.g - 1, self.modulus, QParam::Infinity)
    }

    /// `q = 1 mod n`, so `<q>` is trivial and only multiplier 1 occurs.
    pub fn is_degenerate_q(&self) -> bool {
        matches!(self.q, QParam::Finite(q) if q % self.modulus.value() == 1)
    }

    /// The allowed multipliers in ascending order: `<q mod n>`, or all units.
    pub fn allowed_multipliers(&self) -> Vec<u64> {
        let n = self.modulus.value();
        let mut out: Vec<u64> = match self.q {
            QParam::Finite(q) => {
                let k = ord_mod(q, n).expect("coprimality checked at construction");
                let mut x = 1u64;
                (0..k)
                    .map(|_| {
                        x = mul_mod(x, q, n);
                        x
                    })
                    .collect()
            }
            QParam::Infinity => (1..n).filter(|&x| gcd(x, n) == 1).collect(),
        };
        out.sort_unstable();
        out
    }

    pub fn allows_multiplier(&self, lambda: u64) -> bool {
        let n = self.modulus.value();
        let lambda = lambda % n;
        if gcd(lambda, n) != 1 {
            return false;
        }
        match self.q {
            QParam::Infinity => true,
            QParam::Finite(q) => {
                let k = ord_mod(q, n).expect("coprimality checked at construction");
                let mut x = 1u64;
                (0..k).any(|_| {
                    x = mul_mod(x, q, n);
                    x == lambda
                })
            }
        }
    }

    /// `v^t J_g w mod n`.
    pub fn pairing(&self, v: &ModVector, w: &ModVector) -> Result<u64> {
        if v.dim() != self.dim() || w.dim() != self.dim() {
            return Err(Error::Mismatch(format!(
                "pairing needs vectors of length {}, got {} and {}",
                self.dim(),
                v.dim(),
                w.dim()
            )));
        }
        Ok(form_value(v.entries(), w.entries(), self.modulus.value()))
    }

    /// The multiplier `lambda` with `a^t J a = lambda J`, if `a` is a similitude.
    pub fn multiplier(&self, a: &ModMatrix) -> Result<Multiplier> {
        if a.dim() != self.dim() || a.modulus() != self.modulus {
            return Err(Error::Mismatch(format!(
                "expected dim {} mod {}, got dim {} mod {}",
                self.dim(),
                self.modulus,
                a.dim(),
                a.modulus()
            )));
        }
        similitude_multiplier(a).map(Multiplier).ok_or(Error::NotSimilitude)
    }

    /// Membership in `GSp^(q)_{2g}(Z/n)`.
    pub fn is_member(&self, a: &ModMatrix) -> bool {
        match self.multiplier(a) {
            Ok(l) => self.allows_multiplier(l.value()),
            Err(_) => false,
        }
    }

    /// `|GSp^(q)_{2g}(Z/n)|`.
    pub fn order(&self) -> BigUint {
        gsp_q_order(self)
    }
}

/// `J_g` over the given modulus.
pub fn symplectic_form(g: usize, modulus: Modulus) -> Result<ModMatrix> {
    let d = 2 * g;
    let n = modulus.value();
    ModMatrix::new(
        modulus,
        d,
        (0..d * d).map(|k| {
            let (i, j) = (k / d, k % d);
            if i % 2 == 0 && j == i + 1 {
                1
            } else if i % 2 == 1 && j + 1 == i {
                n - 1
            } else {
                0
            }
        }),
    )
}

/// `e(x, y)` for raw coordinate slices.
#[inline]
pub(crate) fn form_value(x: &[u64], y: &[u64], n: u64) -> u64 {
    let mut acc = 0u64;
    for j in (0..x.len()).step_by(2) {
        acc = (acc + mul_mod(x[j], y[j + 1], n)) % n;
        acc = (acc + neg_mod(mul_mod(x[j + 1], y[j], n), n)) % n;
    }
    acc
}

/// Multiplier of `a` from the Gram matrix of its columns, or `None`.
pub(crate) fn similitude_multiplier(a: &ModMatrix) -> Option<u64> {
    let d = a.dim();
    let n = a.modulus().value();
    if !d.is_multiple_of(2) {
        return None;
    }
    let cols: Vec<ModVector> = (0..d).map(|j| a.column(j)).collect();
    let lambda = form_value(cols[0].entries(), cols[1].entries(), n);
    if gcd(lambda, n) != 1 {
        return None;
    }
    for i in 0..d {
        for j in i + 1..d {
            let expected = if i % 2 == 0 && j == i + 1 { lambda } else { 0 };
            if form_value(cols[i].entries(), cols[j].entries(), n) != expected {
                return None;
            }
        }
    }
    Some(lambda)
}

/// `|Sp_{2g}(F_ell)| = ell^{g^2} prod_{i=1}^{g} (ell^{2i} - 1)`.
pub fn sp_order(g: usize, ell: u64) -> BigUint {
    let l = BigUint::from(ell);
    let mut acc = l.pow((g * g) as u32);
    for i in 1..=g {
        acc *= l.pow(2 * i as u32) - BigUint::one();
    }
    acc
}

/// Order of `GSp^(q)_{2g}(Z/n)` for squarefree `n`: `ord_n(q) prod |Sp|`, or
/// `prod (ell - 1)|Sp|` when `q` is infinite.
pub fn gsp_q_order(ctx: &GroupContext) -> BigUint {
    let primes = ctx.modulus().primes();
    let sp: BigUint = primes.iter().map(|&l| sp_order(ctx.g(), l)).product();
    match ctx.q() {
        QParam::Finite(q) => {
            sp * BigUint::from(ord_mod(q, ctx.modulus().value()).expect("coprime"))
        }
        QParam::Infinity => sp * primes.iter().map(|&l| BigUint::from(l - 1)).product::<BigUint>(),
    }
}

/// Least `k >= 1` with `q^k = 1 mod n`.
pub fn ord_mod(q: u64, n: u64) -> Result<u64> {
    if gcd(q, n) != 1 {
        return Err(Error::NotCoprime { q, n });
    }
    if n == 1 {
        return Ok(1);
    }
    let q = q % n;
    let mut x = q;
    let mut k = 1u64;
    while x != 1 {
        x = mul_mod(x, q, n);
        k += 1;
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(g: usize, n: u64, q: QParam) -> GroupContext {
        GroupContext::new(g, Modulus::new(n).unwrap(), q).unwrap()
    }

    #[test]
    fn form_matrix_is_block_diagonal() {
        let c = ctx(2, 5, QParam::Infinity);
        let j = ModMatrix::from_rows(
            Modulus::new(5).unwrap(),
            &[&[0, 1, 0, 0], &[-1, 0, 0, 0], &[0, 0, 0, 1], &[0, 0, -1, 0]],
        )
        .unwrap();
        assert_eq!(c.form(), &j);
    }

    #[test]
    fn pairing_examples() {
        let c = ctx(2, 7, QParam::Infinity);
        let m = c.modulus();
        let e = |i| ModVector::unit(m, 4, i).unwrap();
        assert_eq!(c.pairing(&e(0), &e(1)).unwrap(), 1);
        assert_eq!(c.pairing(&e(1), &e(0)).unwrap(), 6);
        assert_eq!(c.pairing(&e(0), &e(2)).unwrap(), 0);
        let v = ModVector::new(m, [3, 5, 1, 6]).unwrap();
        assert_eq!(c.pairing(&v, &v).unwrap(), 0);
        let short = ModVector::unit(m, 2, 0).unwrap();
        assert!(c.pairing(&short, &v).is_err());
    }

    #[test]
    fn multiplier_examples() {
        let c = ctx(2, 5, QParam::Infinity);
        let m = c.modulus();
        let id = ModMatrix::identity(m, 4).unwrap();
        assert_eq!(c.multiplier(&id).unwrap().value(), 1);
        for l in 1..5 {
            let d = ModMatrix::diagonal(m, &[1, l, 1, l]).unwrap();
            assert_eq!(c.multiplier(&d).unwrap().value(), l);
        }
        let bad = ModMatrix::diagonal(m, &[1, 1, 1, 2]).unwrap();
        assert_eq!(c.multiplier(&bad), Err(Error::NotSimilitude));
    }

    #[test]
    fn membership_examples() {
        let m = Modulus::new(5).unwrap();
        let id = ModMatrix::identity(m, 4).unwrap();
        let d2 = ModMatrix::diagonal(m, &[1, 2, 1, 2]).unwrap();
        let d3 = ModMatrix::diagonal(m, &[1, 3, 1, 3]).unwrap();
        for q in [QParam::Finite(2), QParam::Finite(4), QParam::Infinity] {
            assert!(ctx(2, 5, q).is_member(&id));
        }
        assert!(ctx(2, 5, QParam::Finite(2)).is_member(&d2));
        assert!(!ctx(2, 5, QParam::Finite(4)).is_member(&d3));
        assert!(ctx(2, 5, QParam::Infinity).is_member(&d3));
    }

    #[test]
    fn orders() {
        assert_eq!(sp_order(0, 7), BigUint::from(1u32));
        assert_eq!(sp_order(1, 3), BigUint::from(24u32));
        assert_eq!(sp_order(2, 3), BigUint::from(51840u32));
        assert_eq!(sp_order(2, 2), BigUint::from(720u32));
        assert_eq!(sp_order(2, 5), BigUint::from(9_360_000u32));
        assert_eq!(ctx(2, 3, QParam::Infinity).order(), BigUint::from(103_680u32));
        assert_eq!(ctx(1, 5, QParam::Infinity).order(), BigUint::from(480u32));
        let expected = BigUint::from(4u32) * BigUint::from(51840u32) * BigUint::from(9_360_000u32);
        assert_eq!(ctx(2, 15, QParam::Finite(2)).order(), expected);
    }

    #[test]
    fn recursion_identity() {
        for ell in [2u64, 3, 5, 7, 11, 13] {
            for g in 1..=4usize {
                let l = BigUint::from(ell);
                let rhs = (l.pow(2 * g as u32) - 1u32) * l.pow(2 * g as u32 - 1) * sp_order(g - 1, ell);
                assert_eq!(sp_order(g, ell), rhs, "g={g} ell={ell}");
            }
        }
    }

    #[test]
    fn multiplicative_orders() {
        assert_eq!(ord_mod(2, 3).unwrap(), 2);
        assert_eq!(ord_mod(2, 15).unwrap(), 4);
        assert_eq!(ord_mod(4, 5).unwrap(), 2);
        assert_eq!(ord_mod(2, 6), Err(Error::NotCoprime { q: 2, n: 6 }));
    }

    #[test]
    fn context_validation() {
        let m = Modulus::new(15).unwrap();
        assert_eq!(
            GroupContext::new(2, m, QParam::Finite(3)),
            Err(Error::NotCoprime { q: 3, n: 15 })
        );
        assert_eq!(GroupContext::new(2, m, QParam::Finite(6)), Err(Error::NotPrimePower(6)));
        assert!(GroupContext::new(9, m, QParam::Infinity).is_err());
        assert!("inf".parse::<QParam>().unwrap().is_infinite());
        assert_eq!("8".parse::<QParam>().unwrap(), QParam::Finite(8));
        assert!("12".parse::<QParam>().is_err());
        let c = ctx(2, 15, QParam::Finite(2));
        assert_eq!(c.allowed_multipliers(), vec![1, 2, 4, 8]);
        assert!(ctx(2, 5, QParam::Finite(11)).is_degenerate_q());
    }
}
