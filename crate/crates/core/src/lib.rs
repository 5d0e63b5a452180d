//! Exact computational algebra for mod-p motivic cohomology of Rost motives
//! and twisted complete flag varieties.
//!
//! Everything is windowed, degreewise-finite linear algebra over a prime
//! field: bigraded modules carry named bases per bidegree, maps are built
//! from explicit rules, and every closed-form answer is cross-checked
//! against an independent step-by-step construction (kernel/cokernel
//! iteration, Margolis towers, Borel-style homology).
//!
//! Module map:
//! - [`bidegree`], [`label`], [`module`], [`linmap`]: the bigraded core.
//! - [`fieldmodel`]: models of K^M_*(k)/p and the motivic coefficient ring.
//! - [`milnor`]: Milnor operations Q_i, the motivic Sq^2, exterior-algebra
//!   bookkeeping.
//! - [`chi`]: cohomology of the Cech object attached to a pure symbol.
//! - [`rost`]: symmetric-power iteration and closed forms for Rost motives,
//!   Chow and etale realizations.
//! - [`ahss`]: Atiyah-Hirzebruch spectral sequences for the cobordism
//!   theories, Margolis homology, relation ledgers.
//! - [`flag`]: group data for type (I) groups and assembly of flag-variety
//!   invariants.
//! - [`witt`]: Gille-Pardon pages and Witt-group output over the reals.
//! - [`report`], [`cli`]: verification matrix and the command-line driver.

pub mod bidegree;
pub mod label;
pub mod errors;
pub mod fp;
pub mod module;
pub mod linmap;
pub mod fieldmodel;
pub mod milnor;
pub mod chi;
pub mod rost;
pub mod ahss;
pub mod flag;
pub mod witt;
pub mod report;
pub mod cli;

pub use bidegree::{BiDegree, Window};
pub use errors::EngineError;
pub use label::{Ann, Gen, Label};
pub use module::{BasisVector, BigradedModule, RankTable};
