//! Symplectic similitude groups `GSp^(q)_{2g}(Z/n)` for squarefree `n`, the
//! special fixed-vector sets built from stabilizers of `e1`, the density and
//! union-bound series over primes, and seeded Monte Carlo estimates of
//! fixed-vector events.

pub mod analysis;
pub mod error;
pub mod modmat;
pub mod montecarlo;
pub mod rng;
pub mod specialsets;
pub mod sympgroup;

pub use analysis::{SeriesKind, SeriesReport, SeriesRow};
pub use error::{Error, Result};
pub use modmat::{ModMatrix, ModVector, Modulus};
pub use montecarlo::{EventEstimate, SigmaTuple};
pub use specialsets::{BSelectionStrategy, CompositeSpecialSet, MultiplierSet, SetLevel, SpecialSet};
pub use sympgroup::{GroupContext, Multiplier, QParam};
