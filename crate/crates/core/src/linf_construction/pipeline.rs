//! Mazur sequence, `h` cascade and `l` family in one pass.

use serde::{Deserialize, Serialize};

use super::cascade::{build_h_cascade, HCascadeCert, DEFAULT_STAB_TOL};
use super::l_family::{construct_l_family, LInfLCert};
use super::mazur::{default_eps_seq, mazur_basic_sequence, MazurCert, MazurOptions};
use crate::error::{Error, Result};
use crate::ledger::Ledger;
use crate::sampling::DEFAULT_TRIALS;
use crate::scalar::Scalar;
use crate::subspace::Subspace;

#[derive(Debug, Clone, PartialEq)]
pub struct LinfOptions {
    /// Number of `l` functionals.
    pub depth: usize,
    /// Cascade levels; at least `depth`.
    pub levels: usize,
    /// Mazur vectors; enough for every level to keep four survivors.
    pub mazur_len: usize,
    pub stab_tol: f64,
    pub net_resolution: f64,
    pub samples: usize,
    /// Sampling budget for the basis constant estimate.
    pub trials: usize,
    pub seed: u64,
    /// Overrides the sampled basis constant estimate.
    pub k_est: Option<f64>,
}

impl LinfOptions {
    pub fn new(depth: usize) -> Self {
        let levels = depth + 1;
        LinfOptions {
            depth,
            levels,
            mazur_len: 2 * levels + 6,
            stab_tol: DEFAULT_STAB_TOL,
            net_resolution: 1.0,
            samples: 1000,
            trials: DEFAULT_TRIALS,
            seed: 0,
            k_est: None,
        }
    }

    pub fn mazur_options(&self) -> MazurOptions {
        MazurOptions {
            eps_seq: default_eps_seq(self.mazur_len),
            depth: self.mazur_len,
            net_resolution: self.net_resolution,
            samples: self.samples,
            seed: self.seed,
            allow_partial: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct LinfCert<S: Scalar> {
    pub mazur: MazurCert<S>,
    pub cascade: HCascadeCert<S>,
    pub l: LInfLCert<S>,
}

pub fn construct_linf<S: Scalar>(v: &Subspace<S>, opts: &LinfOptions) -> Result<LinfCert<S>> {
    if opts.depth == 0 || opts.levels < opts.depth {
        return Err(Error::Precondition(format!(
            "need 1 <= depth <= levels, got depth {} and {} levels",
            opts.depth, opts.levels
        )));
    }
    let mazur = mazur_basic_sequence(v, &opts.mazur_options())?;
    let cascade = build_h_cascade(&mazur, &mazur.n, opts.levels, opts.stab_tol)?;
    let l = construct_l_family(&cascade, opts.depth, opts.k_est, opts.trials, opts.seed)?;
    Ok(LinfCert { mazur, cascade, l })
}

impl<S: Scalar> LinfCert<S> {
    /// Re-audits every stage against its recorded inputs and checks that
    /// the recorded ledgers agree.
    pub fn audit(&self) -> Result<Ledger> {
        let mut all = Ledger::new();
        let m = self.mazur.audit()?;
        let c = self.cascade.audit(&self.mazur)?;
        let l = self.l.audit(&self.cascade)?;
        all.push_flag("cascade_from_mazur", &[], self.cascade.m == self.mazur.n);
        for (name, fresh, recorded) in [
            ("mazur_ledger_recorded", &m, &self.mazur.ledger),
            ("cascade_ledger_recorded", &c, &self.cascade.ledger),
            ("l_ledger_recorded", &l, &self.l.ledger),
        ] {
            all.push_flag(
                name,
                &[],
                fresh
                    .entries()
                    .iter()
                    .map(|x| x.pass)
                    .eq(recorded.entries().iter().map(|x| x.pass)),
            );
        }
        all.extend(m);
        all.extend(c);
        all.extend(l);
        Ok(all)
    }
}
