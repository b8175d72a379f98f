//! Witnesses built from an `l` family: a subspace whose nonzero elements
//! vanish on infinitely many prescribed coordinates, its complement, dense
//! approximations and the algebra membership test.

mod density;
mod membership;
mod spaceable;
mod split;

pub use density::{density_repair_c0, density_repair_lp, DensityCert, DensityOptions, DensitySource, SERIES_FACTOR};
pub use membership::algebra_witness_membership;
pub use spaceable::{spaceable_witness, WitnessCert, MIN_INDICES};
pub use split::{complement_split, SplitReport};

use crate::linf_construction::LInfLCert;
use crate::lp_construction::LemmaBCert;
use crate::scalar::Scalar;
use crate::seq::{AmbientSpace, Seq};

/// A family `l_k` with `l_k(s_j) = 0` for `j ≠ k` and `l_k(s_k) ≠ 0`.
pub trait LFamily<S: Scalar> {
    fn kind(&self) -> &'static str;
    fn space(&self) -> AmbientSpace;
    fn eta(&self) -> f64;
    fn indices(&self) -> &[usize];
    fn family(&self) -> &[Seq<S>];
}

impl<S: Scalar> LFamily<S> for LemmaBCert<S> {
    fn kind(&self) -> &'static str {
        "lp"
    }
    fn space(&self) -> AmbientSpace {
        self.space
    }
    fn eta(&self) -> f64 {
        self.eta
    }
    fn indices(&self) -> &[usize] {
        &self.s
    }
    fn family(&self) -> &[Seq<S>] {
        &self.l
    }
}

impl<S: Scalar> LFamily<S> for LInfLCert<S> {
    fn kind(&self) -> &'static str {
        "linf"
    }
    fn space(&self) -> AmbientSpace {
        self.space
    }
    fn eta(&self) -> f64 {
        self.eta
    }
    fn indices(&self) -> &[usize] {
        &self.s
    }
    fn family(&self) -> &[Seq<S>] {
        &self.l
    }
}
