//! Basic sequences in `ℓ∞` and `c0` with prescribed zeros.

mod cascade;
mod halving;
mod l_family;
mod mazur;
mod pipeline;
mod stabilize;

pub use cascade::{build_h_cascade, CascadeCase, CascadeLevel, HCascadeCert, DEFAULT_STAB_TOL};
pub use halving::{find_in_halving_set, halving_support, in_halving_set};
pub use l_family::{construct_l_family, eps_for, LInfLCert, EPS_CAP, L_NORM_BOUND};
pub use mazur::{default_eps_seq, mazur_basic_sequence, MazurCert, MazurOptions};
pub use pipeline::{construct_linf, LinfCert, LinfOptions};
pub use stabilize::{extract_stabilizing_subsequence, Stabilized, MIN_STABLE};
