//! Prime-gap hunting around deficient primorials.
//!
//! The crate sieves `M` regularly spaced intervals `[m*K - X, m*K + X]`,
//! `K = P#/d`, all at once: small primes reuse a cached `K mod p` per row,
//! large primes enumerate only the rows they actually divide by solving a
//! modular minimal-solution equation. Survivors are then PRP-tested outward
//! to find the surrounding primes, and the gap and merit are reported.
//!
//! Module map:
//!
//! - [`numtheory`] — prime streaming, primorials, big-integer residues.
//! - [`modsolver`] — minimal `m` with `lo <= m*k <= hi (mod p)`, and
//!   successive solutions.
//! - [`sieve`] — the multi-interval engine (small-prime and large-prime
//!   phases over a composite grid).
//! - [`baseline`] — the one-interval-at-a-time sieve used as correctness
//!   oracle and speedup yardstick.
//! - [`gapfinder`] — BPSW probable-prime testing and surrounding-prime
//!   search.
//! - [`advisor`] — sieve-limit/interval-size guidance and the cost model.
//! - [`stats`] — verification census, factor-count and density checks, CSV
//!   emission.
//! - [`candidates`] — the sieved-survivor file format and result lines.

pub mod advisor;
pub mod baseline;
pub mod candidates;
pub mod error;
pub mod gapfinder;
pub mod modsolver;
pub mod numtheory;
pub mod sieve;
pub mod stats;

pub use error::{Error, Result};
pub use gapfinder::{GapResult, RowOutcome};
pub use modsolver::SolveInstance;
pub use numtheory::{DivisorSpec, PrimorialConfig};
pub use sieve::{Bitmap, CompositeGrid, FactorEvent, SieveOptions, SieveParams, SieveStats};
