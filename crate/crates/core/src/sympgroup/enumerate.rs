//! Exhaustive enumeration of `GSp^(q)_{2g}(F_ell)` in row-major lexicographic
//! order.
//!
//! The search walks rows instead of whole matrices: `A` is a similitude with
//! multiplier `lambda` iff its rows satisfy `A J A^t = lambda J`, i.e. row `i`
//! pairs to `lambda` with its partner row and to zero with every other row.
//! Each level tries the `ell^{2g}` row vectors in lexicographic order and
//! keeps those compatible with the rows above it, so matrices come out in
//! lexicographic order of their row-major entries. Downstream canonical
//! choices rely on this order.

use smallvec::SmallVec;

use super::{form_value, GroupContext, Multiplier};
use crate::error::{Error, Result};
use crate::modmat::{ModMatrix, Modulus};

type Row = SmallVec<[u64; 16]>;

/// Number of candidate matrices, `ell^{(2g)^2}`, saturating at `u128::MAX`.
pub fn enumeration_estimate(ctx: &GroupContext) -> u128 {
    let ell = ctx.modulus().value() as u128;
    let d = ctx.dim();
    (0..d * d).fold(1u128, |acc, _| acc.saturating_mul(ell))
}

/// Streaming enumerator over `GSp^(q)[lambda]` (or all allowed multipliers).
pub struct GroupEnumerator {
    modulus: Modulus,
    p: u64,
    d: usize,
    vectors: u64,
    fixed_lambda: Option<u64>,
    allowed: Vec<bool>,
    lambda: u64,
    cursor: Vec<u64>,
    rows: Vec<Row>,
    level: usize,
    done: bool,
}

impl GroupContext {
    /// Enumerates the members of this group, optionally restricted to one
    /// multiplier. Fails when the candidate count exceeds `budget`.
    pub fn enumerate(&self, lambda: Option<Multiplier>, budget: u64) -> Result<GroupEnumerator> {
        if !self.modulus().is_prime() {
            return Err(Error::CompositeModulus(self.modulus().value()));
        }
        let estimate = enumeration_estimate(self);
        if estimate > budget as u128 {
            return Err(Error::BudgetExceeded { estimate, budget });
        }
        let p = self.modulus().value();
        let d = self.dim();
        let mut allowed = vec![false; p as usize];
        for l in self.allowed_multipliers() {
            allowed[l as usize] = true;
        }
        let fixed_lambda = lambda.map(|l| l.value());
        let done = matches!(fixed_lambda, Some(l) if !allowed[l as usize]);
        Ok(GroupEnumerator {
            modulus: self.modulus(),
            p,
            d,
            vectors: p.pow(d as u32),
            fixed_lambda,
            allowed,
            lambda: fixed_lambda.unwrap_or(0),
            cursor: vec![0; d],
            rows: vec![Row::from_elem(0, d); d],
            level: 0,
            done,
        })
    }
}

impl GroupEnumerator {
    fn decode(&self, mut idx: u64, out: &mut Row) {
        for slot in out.iter_mut().rev() {
            *slot = idx % self.p;
            idx /= self.p;
        }
    }

    /// Checks the pairing constraints of `row` against the rows above `level`.
    /// At level 1 with no fixed multiplier the pairing defines `lambda`.
    fn accept(&mut self, level: usize, row: &Row) -> bool {
        if level == 0 {
            return row.iter().any(|&x| x != 0);
        }
        for j in 0..level {
            let e = form_value(&self.rows[j], row, self.p);
            let partner = level % 2 == 1 && j + 1 == level;
            if partner {
                if level == 1 && self.fixed_lambda.is_none() {
                    if e == 0 || !self.allowed[e as usize] {
                        return false;
                    }
                    self.lambda = e;
                } else if e != self.lambda {
                    return false;
                }
            } else if e != 0 {
                return false;
            }
        }
        true
    }

    fn emit(&self) -> ModMatrix {
        let entries: SmallVec<[u64; 16]> = self.rows.iter().flat_map(|r| r.iter().copied()).collect();
        ModMatrix::from_raw(self.modulus, self.d, entries)
    }
}

impl Iterator for GroupEnumerator {
    type Item = ModMatrix;

    fn next(&mut self) -> Option<ModMatrix> {
        let mut row = Row::from_elem(0, self.d);
        'outer: loop {
            if self.done {
                return None;
            }
            let lvl = self.level;
            while self.cursor[lvl] < self.vectors {
                let idx = self.cursor[lvl];
                self.cursor[lvl] += 1;
                self.decode(idx, &mut row);
                if self.accept(lvl, &row) {
                    self.rows[lvl].clone_from(&row);
                    if lvl + 1 == self.d {
                        return Some(self.emit());
                    }
                    self.level += 1;
                    self.cursor[self.level] = 0;
                    continue 'outer;
                }
            }
            if lvl == 0 {
                self.done = true;
                return None;
            }
            self.level -= 1;
        }
    }
}
