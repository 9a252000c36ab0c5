//! Exact and Monte Carlo analysis of the adjacent-transposition shuffle and
//! of the simple exclusion process on a segment.
//!
//! * [`perm`]: permutations, height fields, the partial order, skeletons.
//! * [`path`]: exclusion configurations as lattice paths.
//! * [`dynamics`]: graphical constructions, censoring, corner-flip coupling.
//! * [`exact`]: enumerated state spaces and exact distributions.
//! * [`spectral`]: closed-form heat-equation and spectral quantities.
//! * [`lab`]: end-to-end experiments producing reports.

pub mod dynamics;
pub mod error;
pub mod exact;
pub mod lab;
pub mod path;
pub mod perm;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
pub use path::{LatticePath, PathPair};
pub use perm::{BlockPartition, Comparison, HeightField, Permutation, SemiSkeleton, SkeletonGrid};

/// Crate version, embedded in report headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
