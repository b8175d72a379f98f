//! Truncated models of ℓ_p and c₀ for constructing sequences with prescribed
//! zero patterns, together with certificates that re-check every inequality
//! the constructions rely on.

pub mod certificate;
pub mod error;
pub mod ledger;
pub mod linalg;
pub mod lineability;
pub mod linf_construction;
pub mod lp;
pub mod lp_construction;
pub mod sampling;
pub mod scalar;
pub mod scenario;
pub mod seq;
pub mod subspace;
pub mod witnesses;

pub use certificate::{verify, verify_text, CertKind, Envelope, Mode, Verification};
pub use error::{Error, Result};
pub use scalar::{Rational, Scalar};
pub use scenario::{run_scenario, Params, Pipeline, Scenario, Stage};
pub use seq::{hadamard, norm, tail_norm, AmbientSpace, Seq};
pub use subspace::{Fixture, GeneratorSpec, Subspace};
