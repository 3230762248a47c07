//! Tools for studying finite integer sets through the lens of arithmetic
//! progressions: exact counting, certified extremal solvers, k-AP-free
//! constructions, and additive-structure checks (graph extraction, Freiman
//! isomorphism, Plünnecke-style sumset growth).
//!
//! All algorithms are deterministic for a fixed seed. Randomness is always
//! derived from an explicit 64-bit seed plus a trial counter, never from
//! ambient state.

pub mod cache;
pub mod construct;
pub mod error;
pub mod exact;
pub mod freiman;
pub mod intset;
pub mod structure;

pub use cache::SolverCache;
pub use construct::{BlockParams, ProductVariant};
pub use error::Error;
pub use exact::{FskEntry, SearchBudget, SolverEntry};
pub use freiman::{FreimanMap, PlunneckeReport};
pub use intset::{IntSet, Progression};
pub use structure::{ApGraph, BsgReport, ExtractionThreshold, RichSubsetReport};
