//! Minimal quantum dynamical semigroups on truncated Hilbert spaces.
//!
//! Lindblad data `(H, {L_l})` are assembled into a generator, the minimal
//! semigroup is probed through its resolvent series and time evolution,
//! and conservativity is certified (or refuted) from operator inequalities
//! evaluated on an interior subspace of the truncation.

pub mod bounds;
pub mod criteria;
pub mod error;
pub mod generator;
pub mod hilbert;
pub mod linops;
pub mod models;
pub mod quad;
pub mod semigroup;

pub use error::{Error, Result};
pub use generator::{assemble, lindblad_apply, LindbladModel, Mode};
pub use hilbert::{FockBasis, GridBasis, LadderOp};
pub use linops::{CMat, CVec, C64};
pub use models::ModelSpec;
pub use semigroup::StateSelector;
