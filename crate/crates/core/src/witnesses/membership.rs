//! `V(0, F) = {f ∈ V : f(s) = 0 for s ∈ F}`: closed under sums, scalar
//! multiples and, when `V` is an algebra, coordinatewise products.

use crate::scalar::Scalar;
use crate::seq::Seq;
use crate::subspace::Subspace;

/// `f ∈ span(V)` within `η` and `|f(s)| <= η` on every forbidden `s`.
/// Malformed input (wrong length, index out of range) is not a member.
pub fn algebra_witness_membership<S: Scalar>(v: &Subspace<S>, forbidden: &[usize], f: &Seq<S>) -> bool {
    let eta = v.eta();
    let in_span = v.membership_residual(f).is_ok_and(|r| r <= eta);
    in_span
        && forbidden
            .iter()
            .all(|&s| s >= 1 && s <= f.len() && f.at(s).is_negligible(eta))
}
