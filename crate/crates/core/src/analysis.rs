//! The two prime series: the divergent density series of the special sets and
//! the convergent union-bound series for common fixed vectors.
//!
//! Density terms are exact rationals. Bound terms contain `s^{-e/2g}`, which is
//! replaced by a rational upper bound obtained from an integer `2g`-th root,
//! then rounded up onto a decimal grid fine enough for a relative error below
//! `1e-13`. Partial sums are kept as exact fractions over the running least
//! common multiple of the denominators; they are not reduced to lowest terms.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::specialsets::{check_construction_prime, s_cardinality, BSelectionStrategy};
use crate::sympgroup::{sp_order, QParam};

/// Decimal digits of the root precision: the root bound is off by at most `10^-ROOT_DIGITS` relative.
const ROOT_DIGITS: u32 = 14;
/// Significant decimal digits kept when rounding a bound term onto its grid.
const GRID_DIGITS: i32 = 14;

/// Primes `<= n`, ascending.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        let mut j = i * i;
        while j <= n {
            composite[j] = true;
            j += i;
        }
    }
    out
}

fn rational(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(num.into(), den.into())
}

/// `|S^(q)(ell)| / |GSp^(q)_{2g}(F_ell)|` from the closed formulas.
///
/// Every multiplier fiber has the same size on both sides, so this equals
/// `|S_lambda(ell)| / |Sp_{2g}(F_ell)|` and does not depend on `q`.
pub fn density_ratio(g: usize, ell: u64, q: QParam) -> Result<BigRational> {
    check_construction_prime(ell)?;
    if g < 2 {
        return Err(Error::InvalidParameter("the density series needs g >= 2".into()));
    }
    if let QParam::Finite(qv) = q {
        if qv % ell == 0 {
            return Err(Error::NotCoprime { q: qv, n: ell });
        }
    }
    let s = s_cardinality(g, ell, BSelectionStrategy::LexCanonical)?;
    Ok(rational(s, sp_order(g, ell)))
}

/// Rational upper bound of `num / den * base^{-e/k}` with relative error at most `10^-ROOT_DIGITS`.
///
/// With `r = floor((base^e 10^{k D})^{1/k})` we have `r <= base^{e/k} 10^D < r + 1`
/// and `r >= 10^D`, so `num 10^D / (den r)` overshoots by a factor below `1 + 10^-D`.
pub fn root_power_bound(num: &BigUint, den: &BigUint, base: &BigUint, e: u32, k: u32) -> BigRational {
    let scale = BigUint::from(10u32).pow(ROOT_DIGITS);
    let radicand = base.pow(e) * scale.pow(k);
    let r = radicand.nth_root(k);
    rational(num * scale, den * r)
}

/// Rounds a positive rational up to a multiple of `10^-d` with `GRID_DIGITS` significant digits.
fn round_up_to_grid(x: &BigRational) -> BigRational {
    let approx = x.to_f64().unwrap_or(0.0);
    let magnitude = if approx > 0.0 { approx.log10().floor() as i32 } else { 0 };
    let d = (GRID_DIGITS - magnitude).max(0) as u32;
    let grid = BigInt::from(10u32).pow(d);
    let scaled = x.numer() * &grid;
    let (q, r) = scaled.div_rem(x.denom());
    let q = if r.is_zero() { q } else { q + 1 };
    BigRational::new(q, grid)
}

/// One term of the bound series: `(ell^{2g} - 1)/(ell - 1) * s_ell^{-e/2g}` with
/// `s_ell = |Sp_{2g}(F_ell)|`, as a rational upper bound within `1e-13` relative.
pub fn part_b_term(g: usize, e: u32, ell: u64) -> Result<BigRational> {
    if g == 0 {
        return Err(Error::InvalidParameter("g must be positive".into()));
    }
    if e < 1 {
        return Err(Error::InvalidParameter("e must be positive".into()));
    }
    Ok(round_up_to_grid(&union_bound(g, ell, e, &sp_order(g, ell))?))
}

/// `(ell^{2g} - 1)/(ell - 1) * order^{-e/2g}` as a rational upper bound.
pub fn union_bound(g: usize, ell: u64, e: u32, order: &BigUint) -> Result<BigRational> {
    if !crate::modmat::is_prime(ell) {
        return Err(Error::NotPrime(ell));
    }
    let l = BigUint::from(ell);
    let lines = (l.pow(2 * g as u32) - 1u32) / BigUint::from(ell - 1);
    Ok(root_power_bound(&lines, &BigUint::one(), order, e, 2 * g as u32))
}

/// Growth exponent of the bound terms, `(2 - e) g - (1 + e/2)`, doubled to stay integral.
pub fn part_b_exponent_twice(g: usize, e: u32) -> i64 {
    (2 - e as i64) * g as i64 * 2 - (2 + e as i64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SeriesKind {
    #[serde(rename = "part_a_density")]
    PartADensity,
    #[serde(rename = "part_b_bound")]
    PartBBound,
}

/// One prime of a series.
#[derive(Clone, Debug)]
pub struct SeriesRow {
    pub ell: u64,
    pub term: BigRational,
    /// Prefix sum through this row; exact but not necessarily in lowest terms.
    pub partial: BigRational,
    /// `term * ell` for the density series, `term * ell^{-p}` for the bound series.
    pub diagnostic: f64,
}

#[derive(Clone, Debug)]
pub struct SeriesReport {
    pub kind: SeriesKind,
    pub g: usize,
    pub e: Option<u32>,
    pub q: Option<QParam>,
    pub rows: Vec<SeriesRow>,
    /// Bound-series only: `C * ell_max^{p+1} / (-p-1)` with `C` the largest diagnostic.
    pub tail_bound: Option<f64>,
}

impl SeriesReport {
    pub fn total(&self) -> BigRational {
        self.rows.last().map(|r| r.partial.clone()).unwrap_or_else(BigRational::zero)
    }

    /// Partial sum over primes `<= ell`.
    pub fn partial_through(&self, ell: u64) -> BigRational {
        let idx = self.rows.partition_point(|r| r.ell <= ell);
        if idx == 0 {
            BigRational::zero()
        } else {
            self.rows[idx - 1].partial.clone()
        }
    }
}

/// Prefix sums without per-step reduction: the denominator is the running lcm.
fn prefix_sums(terms: &[BigRational]) -> Vec<BigRational> {
    let mut num = BigInt::zero();
    let mut den = BigInt::one();
    let mut out = Vec::with_capacity(terms.len());
    for t in terms {
        // gcd against a small denominator costs one big-by-small reduction
        let g = den.gcd(t.denom());
        let lift = t.denom() / &g;
        num = num * &lift + t.numer() * (&den / &g);
        den *= lift;
        out.push(BigRational::new_raw(num.clone(), den.clone()));
    }
    out
}

/// Order of two rationals by cross multiplication. Safe for the very long
/// partial sums, where `Ratio::cmp` recurses once per continued-fraction step.
pub fn cmp_ratio(a: &BigRational, b: &BigRational) -> std::cmp::Ordering {
    let sign = |x: &BigRational| if x.denom().is_negative() { -1 } else { 1 };
    let lhs = a.numer() * b.denom();
    let rhs = b.numer() * a.denom();
    if sign(a) * sign(b) > 0 {
        lhs.cmp(&rhs)
    } else {
        rhs.cmp(&lhs)
    }
}

/// `a - b` without reducing the result.
pub fn sub_raw(a: &BigRational, b: &BigRational) -> BigRational {
    BigRational::new_raw(a.numer() * b.denom() - b.numer() * a.denom(), a.denom() * b.denom())
}

fn diagnostic_f64(term: &BigRational, ell: u64, twice_exp: i64) -> f64 {
    // term * ell^{twice_exp / 2}, split into an exact integer power and a square root
    let whole = twice_exp.div_euclid(2);
    let half = twice_exp.rem_euclid(2) == 1;
    let l = BigInt::from(ell);
    let scaled = if whole >= 0 {
        term * BigRational::from_integer(l.pow(whole as u32))
    } else {
        term / BigRational::from_integer(l.pow((-whole) as u32))
    };
    let base = ratio_to_f64(&scaled);
    if half {
        base * (ell as f64).sqrt()
    } else {
        base
    }
}

/// Ratio to `f64` that survives numerators and denominators beyond `f64` range.
pub fn ratio_to_f64(x: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (x.numer().to_f64(), x.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let shift = x.denom().bits() as i64 - x.numer().bits() as i64 + 64;
    let scaled = if shift >= 0 {
        (x.numer() << shift as usize) / x.denom()
    } else {
        x.numer() / (x.denom() << (-shift) as usize)
    };
    scaled.to_f64().unwrap_or(f64::NAN) * 2f64.powi(-(shift as i32))
}

/// The density series over primes `3 <= ell <= ell_max` coprime to `q`.
pub fn part_a_series(g: usize, q: QParam, ell_max: u64) -> Result<SeriesReport> {
    if g < 2 {
        return Err(Error::InvalidParameter("the density series needs g >= 2".into()));
    }
    let ells: Vec<u64> = primes_up_to(ell_max)
        .into_iter()
        .filter(|&l| l != 2 && q.characteristic() != Some(l))
        .collect();
    let terms = ells
        .par_iter()
        .map(|&l| density_ratio(g, l, q))
        .collect::<Result<Vec<_>>>()?;
    let partials = prefix_sums(&terms);
    let rows = ells
        .iter()
        .zip(terms)
        .zip(partials)
        .map(|((&ell, term), partial)| {
            let diagnostic = diagnostic_f64(&term, ell, 2);
            SeriesRow { ell, term, partial, diagnostic }
        })
        .collect();
    Ok(SeriesReport { kind: SeriesKind::PartADensity, g, e: None, q: Some(q), rows, tail_bound: None })
}

/// The bound series over all primes `ell <= ell_max`, with a tail estimate.
pub fn part_b_series(g: usize, e: u32, ell_max: u64) -> Result<SeriesReport> {
    if e < 2 {
        return Err(Error::InvalidParameter("the bound series needs e >= 2".into()));
    }
    if g == 0 {
        return Err(Error::InvalidParameter("g must be positive".into()));
    }
    let ells = primes_up_to(ell_max);
    let terms = ells
        .par_iter()
        .map(|&l| part_b_term(g, e, l))
        .collect::<Result<Vec<_>>>()?;
    let partials = prefix_sums(&terms);
    let twice_p = part_b_exponent_twice(g, e);
    let rows: Vec<SeriesRow> = ells
        .iter()
        .zip(terms)
        .zip(partials)
        .map(|((&ell, term), partial)| {
            let diagnostic = diagnostic_f64(&term, ell, -twice_p);
            SeriesRow { ell, term, partial, diagnostic }
        })
        .collect();
    let c = rows.iter().map(|r| r.diagnostic).fold(0.0, f64::max);
    let p = twice_p as f64 / 2.0;
    let tail_bound = (ell_max >= 2).then(|| c * (ell_max as f64).powf(p + 1.0) / (-p - 1.0));
    Ok(SeriesReport { kind: SeriesKind::PartBBound, g, e: Some(e), q: None, rows, tail_bound })
}

/// Rationals go out as decimal num/den strings.
impl Serialize for SeriesRow {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let r = self;
        let mut st = s.serialize_struct("SeriesRow", 6)?;
        st.serialize_field("ell", &r.ell)?;
        st.serialize_field("term_num", &r.term.numer().to_string())?;
        st.serialize_field("term_den", &r.term.denom().to_string())?;
        st.serialize_field("partial_num", &r.partial.numer().to_string())?;
        st.serialize_field("partial_den", &r.partial.denom().to_string())?;
        st.serialize_field("diagnostic", &r.diagnostic)?;
        st.end()
    }
}

impl Serialize for SeriesReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("SeriesReport", 6)?;
        st.serialize_field("kind", &self.kind)?;
        st.serialize_field("g", &self.g)?;
        if let Some(e) = self.e {
            st.serialize_field("e", &e)?;
        }
        if let Some(q) = self.q {
            st.serialize_field("q", &q)?;
        }
        if let Some(t) = self.tail_bound {
            st.serialize_field("tail_bound", &t)?;
        }
        st.serialize_field("rows", &self.rows)?;
        st.end()
    }
}
