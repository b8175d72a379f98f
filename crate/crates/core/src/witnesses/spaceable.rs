//! `W = span{l_{s_2}, l_{s_4}, …}`: every element vanishes on all odd
//! `s_{2k−1}`, so at truncation scale `W ∖ {0}` avoids sequences with
//! finitely many zeros.

use serde::{Deserialize, Serialize};

use super::LFamily;
use crate::error::{Error, Result};
use crate::ledger::{Ledger, Relation};
use crate::linalg;
use crate::sampling::{rng, uniform_coeffs};
use crate::scalar::Scalar;
use crate::seq::{AmbientSpace, Seq};

/// Smallest family that yields two even and two odd indices.
pub const MIN_INDICES: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct WitnessCert<S: Scalar> {
    pub source: String,
    pub space: AmbientSpace,
    pub eta: f64,
    /// `s_2, s_4, …`
    pub even_indices: Vec<usize>,
    /// `s_1, s_3, …`: every element of the witness space vanishes here.
    pub forbidden_indices: Vec<usize>,
    pub even_family: Vec<Seq<S>>,
    pub odd_family: Vec<Seq<S>>,
    pub samples_checked: usize,
    pub seed: u64,
    /// Largest `|f(s)|` over samples and forbidden `s`.
    pub max_forbidden: f64,
    pub rank: usize,
    pub ledger: Ledger,
}

fn split_parity<T: Clone>(xs: &[T]) -> (Vec<T>, Vec<T>) {
    let even = xs.iter().skip(1).step_by(2).cloned().collect();
    let odd = xs.iter().step_by(2).cloned().collect();
    (even, odd)
}

/// `max_{sample, s} |Σ a_i e_i(s)|` with coefficients drawn from the seed,
/// evaluated in the scalar field of the family.
fn sampled_forbidden<S: Scalar>(
    even: &[Seq<S>],
    forbidden: &[usize],
    samples: usize,
    seed: u64,
    eta: f64,
) -> (f64, bool) {
    let mut r = rng(seed, 3);
    let cols: Vec<Vec<S>> = forbidden
        .iter()
        .map(|&s| even.iter().map(|e| e.at(s).clone()).collect())
        .collect();
    let mut worst = 0.0f64;
    let mut ok = true;
    for _ in 0..samples {
        let a: Vec<S> = uniform_coeffs(&mut r, even.len())
            .into_iter()
            .map(S::from_f64)
            .collect();
        for col in &cols {
            let v = linalg::dot(&a, col);
            worst = worst.max(v.to_f64().abs());
            ok &= v.is_negligible(eta);
        }
    }
    (worst, ok)
}

pub fn spaceable_witness<S: Scalar>(source: &impl LFamily<S>, samples: usize, seed: u64) -> Result<WitnessCert<S>> {
    let s = source.indices();
    let fam = source.family();
    if s.len() < MIN_INDICES || fam.len() != s.len() {
        return Err(Error::TooFewIndices {
            found: s.len().min(fam.len()),
            needed: MIN_INDICES,
        });
    }
    let (even_indices, forbidden_indices) = split_parity(s);
    let (even_family, odd_family) = split_parity(fam);
    let mut cert = WitnessCert {
        source: source.kind().to_string(),
        space: source.space(),
        eta: source.eta(),
        rank: 0,
        even_indices,
        forbidden_indices,
        even_family,
        odd_family,
        samples_checked: samples,
        seed,
        max_forbidden: 0.0,
        ledger: Ledger::new(),
    };
    let (worst, ok) = sampled_forbidden(&cert.even_family, &cert.forbidden_indices, samples, seed, cert.eta);
    cert.max_forbidden = worst;
    cert.rank = cert.compute_rank();
    if !ok {
        return Err(Error::WitnessViolation(format!(
            "a sampled combination is {worst:e} at a forbidden index"
        )));
    }
    cert.ledger = cert.audit()?;
    Ok(cert)
}

impl<S: Scalar> WitnessCert<S> {
    fn compute_rank(&self) -> usize {
        let rows = self.even_family.iter().map(|x| x.coords().to_vec()).collect();
        linalg::rank(rows, self.eta)
    }

    /// Elements of the family interleaved back in `s` order.
    pub fn family(&self) -> Vec<&Seq<S>> {
        let mut out = Vec::with_capacity(self.even_family.len() + self.odd_family.len());
        for (k, o) in self.odd_family.iter().enumerate() {
            out.push(o);
            if let Some(e) = self.even_family.get(k) {
                out.push(e);
            }
        }
        out
    }

    fn check_shape(&self) -> Result<()> {
        let ne = self.even_family.len();
        let no = self.odd_family.len();
        let len = self.odd_family.first().map_or(0, Seq::len);
        let bad = self.even_indices.len() != ne
            || self.forbidden_indices.len() != no
            || !(no == ne || no == ne + 1)
            || ne < MIN_INDICES / 2
            || self.even_family.iter().chain(&self.odd_family).any(|x| x.len() != len)
            || self
                .even_indices
                .iter()
                .chain(&self.forbidden_indices)
                .any(|&i| i == 0 || i > len);
        if bad {
            return Err(Error::MalformedCertificate("witness families are inconsistent".into()));
        }
        Ok(())
    }

    pub fn audit(&self) -> Result<Ledger> {
        self.check_shape()?;
        let eta = self.eta;
        let mut l = Ledger::new();
        // Every basis vector of W at every forbidden index: this alone
        // implies the sampled claim for all combinations.
        for (i, e) in self.even_family.iter().enumerate() {
            for (j, &s) in self.forbidden_indices.iter().enumerate() {
                let v = e.at(s);
                l.push_decided(
                    "even_zero_at_forbidden",
                    &[2 * i + 2, 2 * j + 1],
                    v.to_f64().abs(),
                    Relation::Le,
                    eta,
                    v.is_negligible(eta),
                );
            }
        }
        let mut interleaved: Vec<usize> = self.forbidden_indices.clone();
        interleaved.extend(&self.even_indices);
        interleaved.sort_unstable();
        let alternates = interleaved.iter().enumerate().all(|(k, s)| {
            if k % 2 == 0 {
                self.forbidden_indices[k / 2] == *s
            } else {
                self.even_indices[k / 2] == *s
            }
        });
        l.push_flag(
            "parity_split",
            &[],
            alternates && interleaved.windows(2).all(|w| w[0] < w[1]),
        );
        for (i, (e, &s)) in self.even_family.iter().zip(&self.even_indices).enumerate() {
            let v = e.at(s);
            l.push_decided(
                "even_nonzero_at_own_index",
                &[2 * i + 2],
                v.to_f64().abs(),
                Relation::Gt,
                0.0,
                !v.is_negligible(eta),
            );
        }
        let (worst, ok) = sampled_forbidden(
            &self.even_family,
            &self.forbidden_indices,
            self.samples_checked,
            self.seed,
            eta,
        );
        l.push_decided("sampled_forbidden", &[], worst, Relation::Le, eta, ok);
        l.push(
            "sampled_recorded",
            &[],
            (worst - self.max_forbidden).abs(),
            Relation::Le,
            0.0,
            0.0,
        );
        let rank = self.compute_rank();
        l.push_flag("rank_recorded", &[], rank == self.rank);
        l.push_flag("rank_full", &[], rank == self.even_family.len());
        Ok(l)
    }
}
