//! Regenerative tree growth: partitions, growth rules, splitting rules,
//! dislocation measures, residual mass chains, and fragmentation simulators.
//!
//! The crate has an exact mode (arbitrary-precision rationals, zero-tolerance
//! law computations for small `n`) and a simulation mode (`f64` + seeded RNG)
//! layered over the same model definitions.

pub mod diagnostics;
pub mod error;
pub mod exact;
pub mod fragsim;
pub mod laws;
pub mod models;
pub mod partitions;
pub mod residual;
pub mod stats;
pub mod trees;

pub use error::{Error, Result};

// The guide chapters under `book/src` are compiled as doc-tests of this crate
// so their code snippets cannot drift from the API.
#[doc = include_str!("../../../book/src/introduction.md")]
#[doc(hidden)]
pub mod _book_introduction {}
#[doc = include_str!("../../../book/src/trees-partitions.md")]
#[doc(hidden)]
pub mod _book_trees_partitions {}
#[doc = include_str!("../../../book/src/growth-models.md")]
#[doc(hidden)]
pub mod _book_growth_models {}
#[doc = include_str!("../../../book/src/dislocation-measures.md")]
#[doc(hidden)]
pub mod _book_dislocation_measures {}
#[doc = include_str!("../../../book/src/residual-mass.md")]
#[doc(hidden)]
pub mod _book_residual_mass {}
#[doc = include_str!("../../../book/src/fragmentation.md")]
#[doc(hidden)]
pub mod _book_fragmentation {}
#[doc = include_str!("../../../book/src/diagnostics.md")]
#[doc(hidden)]
pub mod _book_diagnostics {}
#[doc = include_str!("../../../book/src/cli.md")]
#[doc(hidden)]
pub mod _book_cli {}
