//! Exact linear algebra over `Z/n` for squarefree `n`.
//!
//! Matrices are small (dimension at most [`MAX_DIM`]) and dense. Entries are
//! stored as `u64` residues in `[0, n)` and every product is reduced
//! immediately. Field operations (rank, kernels, inverses) run over a prime
//! modulus; over a composite squarefree modulus the determinant and inverse are
//! computed per prime factor and glued back with the Chinese Remainder
//! Theorem, so no pivot is ever a zero divisor.
//!
//! The text format used for matrix dumps is one matrix per line, row-major,
//! decimal entries separated by commas, preceded by a header line
//! `# dim=<d> mod=<n>`.

use std::fmt;
use std::io::{BufRead, Write};

use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Largest supported matrix dimension (genus 8).
pub const MAX_DIM: usize = 16;

type Entries = SmallVec<[u64; 16]>;

// ---------------------------------------------------------------------------
// Scalar arithmetic
// ---------------------------------------------------------------------------

#[inline]
pub fn mul_mod(a: u64, b: u64, n: u64) -> u64 {
    if n <= u32::MAX as u64 {
        (a % n) * (b % n) % n
    } else {
        ((a as u128 * b as u128) % n as u128) as u64
    }
}

pub fn pow_mod(mut base: u64, mut exp: u64, n: u64) -> u64 {
    if n == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= n;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, n);
        }
        base = mul_mod(base, base, n);
        exp >>= 1;
    }
    acc
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Inverse of `a` modulo `n` by the extended Euclidean algorithm.
pub fn inv_mod(a: u64, n: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i128 % n as i128, n as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(n as i128) as u64)
}

#[inline]
pub fn neg_mod(a: u64, n: u64) -> u64 {
    if a == 0 {
        0
    } else {
        n - a
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Prime factorization as `(prime, exponent)` pairs in ascending order.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            let mut k = 0;
            while n.is_multiple_of(d) {
                n /= d;
                k += 1;
            }
            out.push((d, k));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Returns the prime `p` when `q` is a power of `p`.
pub fn prime_power_base(q: u64) -> Option<u64> {
    match factorize(q).as_slice() {
        [(p, _)] => Some(*p),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// Modulus
// ---------------------------------------------------------------------------

/// A squarefree modulus `n >= 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Modulus(u64);

impl Modulus {
    pub fn new(n: u64) -> Result<Self> {
        if n < 2 || factorize(n).iter().any(|&(_, k)| k > 1) {
            return Err(Error::InvalidModulus(n));
        }
        Ok(Modulus(n))
    }

    /// A prime modulus; rejects composites.
    pub fn prime(p: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(Modulus(p))
    }

    #[inline]
    pub fn value(self) -> u64 {
        self.0
    }

    /// Distinct prime factors in ascending order.
    pub fn primes(self) -> Vec<u64> {
        factorize(self.0).into_iter().map(|(p, _)| p).collect()
    }

    pub fn is_prime(self) -> bool {
        is_prime(self.0)
    }

    pub fn is_unit(self, x: u64) -> bool {
        gcd(x % self.0, self.0) == 1
    }

    fn require_prime(self) -> Result<u64> {
        if self.is_prime() {
            Ok(self.0)
        } else {
            Err(Error::CompositeModulus(self.0))
        }
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::InvalidDimension(dim));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Vectors
// ---------------------------------------------------------------------------

/// Column vector over `Z/n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModVector {
    modulus: Modulus,
    entries: Entries,
}

impl ModVector {
    pub fn new(modulus: Modulus, entries: impl IntoIterator<Item = u64>) -> Result<Self> {
        let n = modulus.value();
        let entries: Entries = entries.into_iter().map(|x| x % n).collect();
        check_dim(entries.len())?;
        Ok(ModVector { modulus, entries })
    }

    pub fn from_signed(modulus: Modulus, entries: &[i64]) -> Result<Self> {
        let n = modulus.value() as i64;
        Self::new(modulus, entries.iter().map(|&x| x.rem_euclid(n) as u64))
    }

    pub fn zero(modulus: Modulus, dim: usize) -> Result<Self> {
        Self::new(modulus, std::iter::repeat_n(0, dim))
    }

    /// The standard basis vector `e_{i+1}` (0-based index `i`).
    pub fn unit(modulus: Modulus, dim: usize, i: usize) -> Result<Self> {
        if i >= dim {
            return Err(Error::Mismatch(format!("basis index {i} out of range for dim {dim}")));
        }
        Self::new(modulus, (0..dim).map(|k| u64::from(k == i)))
    }

    pub(crate) fn from_raw(modulus: Modulus, entries: Entries) -> Self {
        ModVector { modulus, entries }
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn get(&self, i: usize) -> u64 {
        self.entries[i]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&x| x == 0)
    }

    pub fn scale(&self, c: u64) -> ModVector {
        let n = self.modulus.value();
        let entries = self.entries.iter().map(|&x| mul_mod(x, c, n)).collect();
        ModVector::from_raw(self.modulus, entries)
    }
}

// ---------------------------------------------------------------------------
// Matrices
// ---------------------------------------------------------------------------

/// Square matrix over `Z/n`, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ModMatrix {
    modulus: Modulus,
    dim: usize,
    entries: Entries,
}

impl ModMatrix {
    /// Builds a matrix from row-major entries, reducing each modulo `n`.
    pub fn new(modulus: Modulus, dim: usize, entries: impl IntoIterator<Item = u64>) -> Result<Self> {
        check_dim(dim)?;
        let n = modulus.value();
        let entries: Entries = entries.into_iter().map(|x| x % n).collect();
        if entries.len() != dim * dim {
            return Err(Error::Mismatch(format!(
                "expected {} entries for dim {dim}, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Ok(ModMatrix { modulus, dim, entries })
    }

    pub fn from_rows(modulus: Modulus, rows: &[&[i64]]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Mismatch("rows must form a square matrix".into()));
        }
        let n = modulus.value() as i64;
        Self::new(
            modulus,
            dim,
            rows.iter().flat_map(|r| r.iter().map(move |&x| x.rem_euclid(n) as u64)),
        )
    }

    pub fn identity(modulus: Modulus, dim: usize) -> Result<Self> {
        Self::new(modulus, dim, (0..dim * dim).map(|k| u64::from(k / dim == k % dim)))
    }

    pub fn zero(modulus: Modulus, dim: usize) -> Result<Self> {
        Self::new(modulus, dim, std::iter::repeat_n(0, dim * dim))
    }

    pub fn diagonal(modulus: Modulus, diag: &[u64]) -> Result<Self> {
        let dim = diag.len();
        Self::new(
            modulus,
            dim,
            (0..dim * dim).map(|k| if k / dim == k % dim { diag[k / dim] } else { 0 }),
        )
    }

    /// Matrix whose `j`-th column is `columns[j]`.
    pub fn from_columns(columns: &[ModVector]) -> Result<Self> {
        let dim = columns.len();
        let modulus = columns
            .first()
            .map(|c| c.modulus())
            .ok_or(Error::InvalidDimension(0))?;
        if columns.iter().any(|c| c.dim() != dim || c.modulus() != modulus) {
            return Err(Error::Mismatch("columns must share modulus and length".into()));
        }
        Self::new(modulus, dim, (0..dim * dim).map(|k| columns[k % dim].get(k / dim)))
    }

    pub(crate) fn from_raw(modulus: Modulus, dim: usize, entries: Entries) -> Self {
        debug_assert_eq!(entries.len(), dim * dim);
        ModMatrix { modulus, dim, entries }
    }

    #[inline]
    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.entries[i * self.dim + j]
    }

    pub fn column(&self, j: usize) -> ModVector {
        ModVector::from_raw(self.modulus, (0..self.dim).map(|i| self.get(i, j)).collect())
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }

    pub fn is_identity(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| self.get(i, j) == u64::from(i == j)))
    }

    fn check_compatible(&self, other: &ModMatrix) -> Result<()> {
        if self.modulus != other.modulus || self.dim != other.dim {
            return Err(Error::Mismatch(format!(
                "dim {} mod {} vs dim {} mod {}",
                self.dim, self.modulus, other.dim, other.modulus
            )));
        }
        Ok(())
    }

    /// Matrix product `self * other`.
    pub fn mul(&self, other: &ModMatrix) -> Result<ModMatrix> {
        self.check_compatible(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &ModMatrix) -> ModMatrix {
        let d = self.dim;
        let n = self.modulus.value();
        let a = &self.entries;
        let b = &other.entries;
        let mut out: Entries = SmallVec::from_elem(0, d * d);
        // each term is reduced, so the sum of at most 16 terms stays below 16n
        for i in 0..d {
            for j in 0..d {
                let mut acc: u64 = 0;
                for k in 0..d {
                    acc += mul_mod(a[i * d + k], b[k * d + j], n);
                }
                out[i * d + j] = acc % n;
            }
        }
        ModMatrix::from_raw(self.modulus, d, out)
    }

    pub fn mul_vec(&self, v: &ModVector) -> Result<ModVector> {
        if v.modulus() != self.modulus || v.dim() != self.dim {
            return Err(Error::Mismatch("vector/matrix shape mismatch".into()));
        }
        let n = self.modulus.value();
        let d = self.dim;
        let out = (0..d)
            .map(|i| (0..d).fold(0u64, |acc, k| (acc + mul_mod(self.get(i, k), v.get(k), n)) % n))
            .collect();
        Ok(ModVector::from_raw(self.modulus, out))
    }

    pub fn add(&self, other: &ModMatrix) -> Result<ModMatrix> {
        self.check_compatible(other)?;
        let n = self.modulus.value();
        let e = self.entries.iter().zip(&other.entries).map(|(&x, &y)| (x + y) % n).collect();
        Ok(ModMatrix::from_raw(self.modulus, self.dim, e))
    }

    pub fn sub(&self, other: &ModMatrix) -> Result<ModMatrix> {
        self.check_compatible(other)?;
        let n = self.modulus.value();
        let e = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(&x, &y)| (x + n - y) % n)
            .collect();
        Ok(ModMatrix::from_raw(self.modulus, self.dim, e))
    }

    pub fn scale(&self, c: u64) -> ModMatrix {
        let n = self.modulus.value();
        let e = self.entries.iter().map(|&x| mul_mod(x, c, n)).collect();
        ModMatrix::from_raw(self.modulus, self.dim, e)
    }

    pub fn transpose(&self) -> ModMatrix {
        let d = self.dim;
        let e = (0..d * d).map(|k| self.get(k % d, k / d)).collect();
        ModMatrix::from_raw(self.modulus, d, e)
    }

    /// `self - I`.
    pub fn minus_identity(&self) -> ModMatrix {
        let n = self.modulus.value();
        let d = self.dim;
        let mut e = self.entries.clone();
        for i in 0..d {
            e[i * d + i] = (e[i * d + i] + n - 1) % n;
        }
        ModMatrix::from_raw(self.modulus, d, e)
    }

    /// Determinant modulo `n` (per prime factor, then CRT).
    pub fn det(&self) -> u64 {
        let primes = self.modulus.primes();
        let residues: Vec<u64> = primes
            .iter()
            .map(|&p| det_mod_prime(self.entries.iter().map(|&x| x % p).collect(), self.dim, p))
            .collect();
        crt_scalars(&residues, &primes)
    }

    /// Inverse matrix; fails with [`Error::NotInvertible`] when `gcd(det, n) > 1`.
    pub fn inverse(&self) -> Result<ModMatrix> {
        let primes = self.modulus.primes();
        let mut parts = Vec::with_capacity(primes.len());
        for &p in &primes {
            let local: Vec<u64> = self.entries.iter().map(|&x| x % p).collect();
            let inv = inverse_mod_prime(local, self.dim, p)
                .ok_or(Error::NotInvertible(self.modulus.value()))?;
            parts.push(inv);
        }
        let d = self.dim;
        let e = (0..d * d)
            .map(|k| {
                let res: Vec<u64> = parts.iter().map(|m| m[k]).collect();
                crt_scalars(&res, &primes)
            })
            .collect();
        Ok(ModMatrix::from_raw(self.modulus, d, e))
    }

    /// Rank over `F_p`; requires a prime modulus.
    pub fn rank(&self) -> Result<usize> {
        let p = self.modulus.require_prime()?;
        let rows: Vec<Vec<u64>> = (0..self.dim).map(|i| self.row(i).to_vec()).collect();
        Ok(rank_of_rows(rows, self.dim, p))
    }

    /// Basis of `ker(self - I)` over `F_p`; empty when only zero is fixed.
    ///
    /// Each basis vector has a 1 in one free coordinate, so the fixed line of
    /// a matrix fixing exactly `<e1>` comes back as `e1` itself.
    pub fn fixed_space(&self) -> Result<Vec<ModVector>> {
        let p = self.modulus.require_prime()?;
        let shifted = self.minus_identity();
        let rows: Vec<Vec<u64>> = (0..self.dim).map(|i| shifted.row(i).to_vec()).collect();
        Ok(kernel_of_rows(rows, self.dim, p)
            .into_iter()
            .map(|v| ModVector::from_raw(self.modulus, v.into_iter().collect()))
            .collect())
    }

    /// `det(self - I) == 0` over `F_p`.
    pub fn has_eigenvalue_one(&self) -> Result<bool> {
        let p = self.modulus.require_prime()?;
        let shifted = self.minus_identity();
        Ok(det_mod_prime(shifted.entries.to_vec(), self.dim, p) == 0)
    }

    /// Entrywise reduction modulo a prime divisor of `n`.
    pub fn reduce_mod(&self, ell: u64) -> Result<ModMatrix> {
        let n = self.modulus.value();
        if !is_prime(ell) {
            return Err(Error::NotPrime(ell));
        }
        if !n.is_multiple_of(ell) {
            return Err(Error::PrimeDoesNotDivide { prime: ell, modulus: n });
        }
        let e = self.entries.iter().map(|&x| x % ell).collect();
        Ok(ModMatrix::from_raw(Modulus(ell), self.dim, e))
    }

    /// Comma-separated row-major entries, no spaces.
    pub fn to_line(&self) -> String {
        let mut s = String::with_capacity(self.entries.len() * 3);
        for (k, x) in self.entries.iter().enumerate() {
            if k > 0 {
                s.push(',');
            }
            s.push_str(&x.to_string());
        }
        s
    }

    pub fn parse_line(modulus: Modulus, dim: usize, line: &str) -> Result<ModMatrix> {
        let n = modulus.value();
        let mut entries = Entries::new();
        for tok in line.trim().split(',') {
            let x: u64 = tok
                .parse()
                .map_err(|_| Error::Parse(format!("bad entry {tok:?}")))?;
            if x >= n {
                return Err(Error::Parse(format!("entry {x} not reduced modulo {n}")));
            }
            entries.push(x);
        }
        if entries.len() != dim * dim {
            return Err(Error::Parse(format!(
                "line has {} entries, expected {}",
                entries.len(),
                dim * dim
            )));
        }
        Ok(ModMatrix::from_raw(modulus, dim, entries))
    }
}

impl fmt::Display for ModMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.dim {
            if i > 0 {
                write!(f, "; ")?;
            }
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            write!(f, "{}", row.join(" "))?;
        }
        write!(f, "] mod {}", self.modulus)
    }
}

// ---------------------------------------------------------------------------
// Field kernels over F_p
// ---------------------------------------------------------------------------

fn det_mod_prime(mut m: Vec<u64>, d: usize, p: u64) -> u64 {
    let mut det = 1u64;
    for col in 0..d {
        let Some(piv) = (col..d).find(|&r| m[r * d + col] != 0) else {
            return 0;
        };
        if piv != col {
            for j in 0..d {
                m.swap(piv * d + j, col * d + j);
            }
            det = neg_mod(det, p);
        }
        let pv = m[col * d + col];
        det = mul_mod(det, pv, p);
        let pinv = inv_mod(pv, p).expect("nonzero element of a prime field");
        for r in col + 1..d {
            let f = mul_mod(m[r * d + col], pinv, p);
            if f == 0 {
                continue;
            }
            for j in col..d {
                let t = mul_mod(f, m[col * d + j], p);
                m[r * d + j] = (m[r * d + j] + p - t) % p;
            }
        }
    }
    det
}

fn inverse_mod_prime(mut m: Vec<u64>, d: usize, p: u64) -> Option<Vec<u64>> {
    let mut inv: Vec<u64> = (0..d * d).map(|k| u64::from(k / d == k % d)).collect();
    for col in 0..d {
        let piv = (col..d).find(|&r| m[r * d + col] != 0)?;
        if piv != col {
            for j in 0..d {
                m.swap(piv * d + j, col * d + j);
                inv.swap(piv * d + j, col * d + j);
            }
        }
        let pinv = inv_mod(m[col * d + col], p)?;
        for j in 0..d {
            m[col * d + j] = mul_mod(m[col * d + j], pinv, p);
            inv[col * d + j] = mul_mod(inv[col * d + j], pinv, p);
        }
        for r in 0..d {
            if r == col {
                continue;
            }
            let f = m[r * d + col];
            if f == 0 {
                continue;
            }
            for j in 0..d {
                let t = mul_mod(f, m[col * d + j], p);
                m[r * d + j] = (m[r * d + j] + p - t) % p;
                let t = mul_mod(f, inv[col * d + j], p);
                inv[r * d + j] = (inv[r * d + j] + p - t) % p;
            }
        }
    }
    Some(inv)
}

/// Reduced row echelon form in place; returns the pivot columns.
fn rref(rows: &mut [Vec<u64>], cols: usize, p: u64) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows.len() {
            break;
        }
        let Some(piv) = (r..rows.len()).find(|&i| rows[i][c] != 0) else {
            continue;
        };
        rows.swap(r, piv);
        let inv = inv_mod(rows[r][c], p).expect("nonzero element of a prime field");
        for x in rows[r].iter_mut() {
            *x = mul_mod(*x, inv, p);
        }
        for i in 0..rows.len() {
            if i == r || rows[i][c] == 0 {
                continue;
            }
            let f = rows[i][c];
            let pivot = rows[r].clone();
            for (x, &y) in rows[i].iter_mut().zip(&pivot).take(cols) {
                *x = (*x + p - mul_mod(f, y, p)) % p;
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Rank over `F_p` of a list of rows of length `cols` (rows may outnumber columns).
pub fn rank_of_rows(mut rows: Vec<Vec<u64>>, cols: usize, p: u64) -> usize {
    for row in rows.iter_mut() {
        for x in row.iter_mut() {
            *x %= p;
        }
    }
    rref(&mut rows, cols, p).len()
}

/// Null space basis over `F_p` of the matrix with the given rows.
pub fn kernel_of_rows(mut rows: Vec<Vec<u64>>, cols: usize, p: u64) -> Vec<Vec<u64>> {
    let pivots = rref(&mut rows, cols, p);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![0u64; cols];
            v[f] = 1;
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = neg_mod(rows[r][f], p);
            }
            v
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Chinese Remainder lifting
// ---------------------------------------------------------------------------

/// Unique `x mod prod(moduli)` with `x = residues[j] mod moduli[j]`
/// (moduli pairwise coprime).
pub fn crt_scalars(residues: &[u64], moduli: &[u64]) -> u64 {
    let mut x = 0u64;
    let mut m = 1u64;
    for (&r, &mj) in residues.iter().zip(moduli) {
        // x' = x + m * ((r - x) * m^{-1} mod mj)
        let minv = inv_mod(m % mj, mj).expect("pairwise coprime moduli");
        let diff = (r % mj + mj - x % mj) % mj;
        let t = mul_mod(diff, minv, mj);
        x += m * t;
        m *= mj;
    }
    x
}

/// Lifts per-prime matrices to the product modulus.
pub fn crt_lift(residues: &[ModMatrix]) -> Result<ModMatrix> {
    let first = residues
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty residue list".into()))?;
    let dim = first.dim();
    let mut primes = Vec::with_capacity(residues.len());
    for r in residues {
        let p = r.modulus().require_prime()?;
        if primes.contains(&p) {
            return Err(Error::DuplicatePrime(p));
        }
        if r.dim() != dim {
            return Err(Error::Mismatch("residue matrices differ in dimension".into()));
        }
        primes.push(p);
    }
    let n = primes.iter().product::<u64>();
    let modulus = Modulus::new(n)?;
    let mut res = vec![0u64; primes.len()];
    let entries = (0..dim * dim)
        .map(|k| {
            for (slot, r) in res.iter_mut().zip(residues) {
                *slot = r.entries[k];
            }
            crt_scalars(&res, &primes)
        })
        .collect();
    Ok(ModMatrix::from_raw(modulus, dim, entries))
}

// ---------------------------------------------------------------------------
// Packed keys
// ---------------------------------------------------------------------------

/// Whether base-`n` packing of `dim*dim` entries fits in a `u64`.
pub fn packs_into_u64(modulus: Modulus, dim: usize) -> bool {
    let n = modulus.value() as u128;
    let mut acc: u128 = 1;
    for _ in 0..dim * dim {
        acc = match acc.checked_mul(n) {
            Some(v) => v,
            None => return false,
        };
    }
    acc <= u64::MAX as u128 + 1
}

impl ModMatrix {
    /// Row-major base-`n` packing; key order equals row-major lexicographic
    /// order of entries. `None` when it does not fit in 128 bits.
    pub fn pack(&self) -> Option<u128> {
        let n = self.modulus.value() as u128;
        let mut key: u128 = 0;
        for &x in self.entries.iter() {
            key = key.checked_mul(n)?.checked_add(x as u128)?;
        }
        Some(key)
    }

    pub(crate) fn pack_u64_unchecked(&self) -> u64 {
        let n = self.modulus.value();
        self.entries.iter().fold(0u64, |k, &x| k * n + x)
    }

    pub fn unpack(modulus: Modulus, dim: usize, mut key: u128) -> ModMatrix {
        let n = modulus.value() as u128;
        let mut e: Entries = SmallVec::from_elem(0, dim * dim);
        for slot in e.iter_mut().rev() {
            *slot = (key % n) as u64;
            key /= n;
        }
        ModMatrix::from_raw(modulus, dim, e)
    }
}

// ---------------------------------------------------------------------------
// Dump format
// ---------------------------------------------------------------------------

pub fn dump_header(dim: usize, modulus: Modulus) -> String {
    format!("# dim={dim} mod={modulus}")
}

pub fn parse_dump_header(line: &str) -> Result<(usize, Modulus)> {
    let rest = line
        .trim()
        .strip_prefix("# ")
        .ok_or_else(|| Error::Parse(format!("missing dump header in {line:?}")))?;
    let mut dim = None;
    let mut modulus = None;
    for field in rest.split_whitespace() {
        if let Some(v) = field.strip_prefix("dim=") {
            dim = v.parse::<usize>().ok();
        } else if let Some(v) = field.strip_prefix("mod=") {
            modulus = v.parse::<u64>().ok();
        }
    }
    match (dim, modulus) {
        (Some(d), Some(m)) => {
            check_dim(d)?;
            Ok((d, Modulus::new(m)?))
        }
        _ => Err(Error::Parse(format!("malformed dump header {line:?}"))),
    }
}

/// Writes a header followed by one matrix per line; returns the line count.
pub fn write_dump<'a, W: Write>(
    out: &mut W,
    dim: usize,
    modulus: Modulus,
    matrices: impl IntoIterator<Item = &'a ModMatrix>,
) -> Result<u64> {
    writeln!(out, "{}", dump_header(dim, modulus))?;
    let mut count = 0;
    for m in matrices {
        if m.dim() != dim || m.modulus() != modulus {
            return Err(Error::Mismatch("matrix does not match dump header".into()));
        }
        writeln!(out, "{}", m.to_line())?;
        count += 1;
    }
    Ok(count)
}

/// Streaming reader over a matrix dump.
pub struct DumpReader<R> {
    lines: std::io::Lines<R>,
    dim: usize,
    modulus: Modulus,
}

impl<R: BufRead> DumpReader<R> {
    pub fn new(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty dump".into()))??;
        let (dim, modulus) = parse_dump_header(&header)?;
        Ok(DumpReader { lines, dim, modulus })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }
}

impl<R: BufRead> Iterator for DumpReader<R> {
    type Item = Result<ModMatrix>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            if line.trim().is_empty() {
                continue;
            }
            return Some(ModMatrix::parse_line(self.modulus, self.dim, &line));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m(n: u64) -> Modulus {
        Modulus::new(n).unwrap()
    }

    fn random_invertible(rng: &mut ChaCha8Rng, modulus: Modulus, dim: usize) -> ModMatrix {
        loop {
            let a = ModMatrix::new(
                modulus,
                dim,
                (0..dim * dim).map(|_| rng.random_range(0..modulus.value())),
            )
            .unwrap();
            if modulus.is_unit(a.det()) {
                return a;
            }
        }
    }

    #[test]
    fn modulus_rejects_non_squarefree() {
        assert_eq!(Modulus::new(12), Err(Error::InvalidModulus(12)));
        assert_eq!(Modulus::new(1), Err(Error::InvalidModulus(1)));
        assert_eq!(m(30).primes(), vec![2, 3, 5]);
        assert!(Modulus::prime(15).is_err());
    }

    #[test]
    fn dimension_cap() {
        assert_eq!(ModMatrix::identity(m(5), 17), Err(Error::InvalidDimension(17)));
        assert!(ModMatrix::identity(m(5), 16).is_ok());
    }

    #[test]
    fn small_products() {
        let five = m(5);
        let a = ModMatrix::from_rows(five, &[&[2, 0], &[0, 3]]).unwrap();
        let b = ModMatrix::from_rows(five, &[&[1, 1], &[0, 1]]).unwrap();
        let c = ModMatrix::from_rows(five, &[&[2, 2], &[0, 3]]).unwrap();
        assert_eq!(a.mul(&b).unwrap(), c);
        let id = ModMatrix::identity(five, 2).unwrap();
        assert_eq!(id.mul(&a).unwrap(), a);
        let other = ModMatrix::identity(m(7), 2).unwrap();
        assert!(matches!(a.mul(&other), Err(Error::Mismatch(_))));
    }

    #[test]
    fn inverse_examples() {
        let five = m(5);
        let a = ModMatrix::from_rows(five, &[&[0, 1], &[4, 0]]).unwrap();
        let expected = ModMatrix::from_rows(five, &[&[0, 4], &[1, 0]]).unwrap();
        assert_eq!(a.inverse().unwrap(), expected);
        assert!(a.mul(&expected).unwrap().is_identity());
        let id = ModMatrix::identity(five, 3).unwrap();
        assert_eq!(id.inverse().unwrap(), id);
        let bad = ModMatrix::from_rows(m(15), &[&[3, 0], &[0, 1]]).unwrap();
        assert_eq!(bad.inverse(), Err(Error::NotInvertible(15)));
    }

    #[test]
    fn seeded_round_trip_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in [3u64, 5, 7, 11] {
            for dim in [2usize, 4] {
                for _ in 0..100 {
                    let a = random_invertible(&mut rng, m(p), dim);
                    let b = a.inverse().unwrap();
                    assert!(a.mul(&b).unwrap().is_identity());
                    assert!(b.mul(&a).unwrap().is_identity());
                }
            }
        }
    }

    #[test]
    fn composite_inverse_via_crt() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let a = random_invertible(&mut rng, m(105), 3);
            assert!(a.mul(&a.inverse().unwrap()).unwrap().is_identity());
        }
    }

    #[test]
    fn fixed_space_examples() {
        let three = m(3);
        let id = ModMatrix::identity(three, 4).unwrap();
        assert_eq!(id.fixed_space().unwrap().len(), 4);
        let diag = ModMatrix::diagonal(m(5), &[2, 3]).unwrap();
        assert!(diag.fixed_space().unwrap().is_empty());
        assert!(!diag.has_eigenvalue_one().unwrap());
        let unip = ModMatrix::from_rows(m(7), &[&[1, 1], &[0, 1]]).unwrap();
        assert!(unip.has_eigenvalue_one().unwrap());
        let fs = unip.fixed_space().unwrap();
        assert_eq!(fs, vec![ModVector::unit(m(7), 2, 0).unwrap()]);
        assert!(matches!(
            ModMatrix::identity(m(15), 2).unwrap().fixed_space(),
            Err(Error::CompositeModulus(15))
        ));
    }

    #[test]
    fn crt_examples() {
        let i3 = ModMatrix::identity(m(3), 2).unwrap();
        let i5 = ModMatrix::identity(m(5), 2).unwrap();
        assert_eq!(crt_lift(&[i3.clone(), i5]).unwrap(), ModMatrix::identity(m(15), 2).unwrap());
        let a = ModMatrix::new(m(3), 1, [2]).unwrap();
        let b = ModMatrix::new(m(5), 1, [3]).unwrap();
        let lifted = crt_lift(&[a, b]).unwrap();
        assert_eq!(lifted, ModMatrix::new(m(15), 1, [8]).unwrap());
        assert_eq!(lifted.reduce_mod(5).unwrap().entries(), &[3]);
        assert_eq!(lifted.reduce_mod(3).unwrap().entries(), &[2]);
        assert_eq!(crt_lift(&[i3.clone(), i3.clone()]), Err(Error::DuplicatePrime(3)));
        assert_eq!(
            ModMatrix::identity(m(15), 2).unwrap().reduce_mod(3).unwrap(),
            i3
        );
        assert!(matches!(
            ModMatrix::identity(m(15), 2).unwrap().reduce_mod(7),
            Err(Error::PrimeDoesNotDivide { .. })
        ));
    }

    #[test]
    fn dump_round_trip() {
        let five = m(5);
        let mats = vec![
            ModMatrix::identity(five, 2).unwrap(),
            ModMatrix::from_rows(five, &[&[0, 1], &[4, 0]]).unwrap(),
        ];
        let mut buf = Vec::new();
        assert_eq!(write_dump(&mut buf, 2, five, &mats).unwrap(), 2);
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "# dim=2 mod=5\n1,0,0,1\n0,1,4,0\n");
        let back: Vec<_> = DumpReader::new(&buf[..]).unwrap().map(|r| r.unwrap()).collect();
        assert_eq!(back, mats);
    }

    #[test]
    fn pack_order_is_lexicographic() {
        let seven = m(7);
        let a = ModMatrix::from_rows(seven, &[&[0, 6], &[6, 6]]).unwrap();
        let b = ModMatrix::from_rows(seven, &[&[1, 0], &[0, 0]]).unwrap();
        assert!(a.pack().unwrap() < b.pack().unwrap());
        assert_eq!(ModMatrix::unpack(seven, 2, b.pack().unwrap()), b);
        assert!(packs_into_u64(m(13), 4));
        assert!(!packs_into_u64(m(17), 4));
    }

    proptest! {
        #[test]
        fn crt_reduce_then_lift_is_identity(
            n_idx in 0usize..6,
            seed in any::<u64>(),
        ) {
            let ns = [6u64, 15, 30, 1001, 2310, 99_991];
            let modulus = m(ns[n_idx]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = ModMatrix::new(
                modulus,
                3,
                (0..9).map(|_| rng.random_range(0..modulus.value())),
            ).unwrap();
            let parts: Vec<_> = modulus.primes().iter().map(|&p| a.reduce_mod(p).unwrap()).collect();
            prop_assert_eq!(crt_lift(&parts).unwrap(), a);
        }

        #[test]
        fn fixed_space_matches_rank(seed in any::<u64>(), p_idx in 0usize..4) {
            let p = [3u64, 5, 7, 11][p_idx];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // bias towards matrices with fixed vectors
            let mut e: Vec<u64> = (0..16).map(|_| rng.random_range(0..p)).collect();
            if seed % 2 == 0 {
                for i in 0..4 { e[i * 4] = u64::from(i == 0); }
            }
            let a = ModMatrix::new(m(p), 4, e).unwrap();
            let basis = a.fixed_space().unwrap();
            let rank = a.minus_identity().rank().unwrap();
            prop_assert_eq!(basis.len(), 4 - rank);
            for v in &basis {
                prop_assert_eq!(&a.mul_vec(v).unwrap(), v);
            }
            prop_assert_eq!(a.has_eigenvalue_one().unwrap(), !basis.is_empty());
        }
    }
}
