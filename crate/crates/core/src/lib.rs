//! Coded caching for broadcast networks with more users than files.
//!
//! The crate covers the whole pipeline: cache placement (centralized and
//! decentralized), the two-step multicast delivery with random linear codes
//! over GF(2^8) or GF(2^16), the XOR baseline, per-user decoding, exact
//! memory-load curves and the uncoded-placement outer bound.

pub mod analytics;
pub mod bounds;
pub mod combinatorics;
pub mod delivery;
pub mod error;
pub mod field;
pub mod model;
pub mod placement;
pub mod seed;

pub use combinatorics::{format_rational, parse_rational, Rational, UserSet};
pub use error::{Error, Result};
pub use field::{Field, FieldKind, FieldMatrix, Gf256, Gf65536};
pub use model::{
    worst_case_demand, CacheState, DemandGroups, DemandVector, InstanceDescriptor, Library, Mode, ProblemInstance,
    SubfilePartition,
};
pub use placement::{place_centralized, place_decentralized, PlacementRecord};
pub use seed::SeedPath;
