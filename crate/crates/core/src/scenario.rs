//! A named pipeline run: fixture, parameters, and dispatch to the matching
//! construction. Parameters are validated before any work starts.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::certificate::{CertKind, Envelope, Mode, WitnessPayload, WitnessSource};
use crate::error::{Error, Result};
use crate::lineability::{GeometricCombination, LineabilityCert};
use crate::linf_construction::{construct_linf, LinfOptions, DEFAULT_STAB_TOL};
use crate::lp_construction::{construct_lemma_a, construct_lemma_b, LemmaAOptions};
use crate::sampling::{rng, uniform_coeffs, DEFAULT_TRIALS};
use crate::scalar::{parse_rational, Rational, Scalar};
use crate::seq::Seq;
use crate::subspace::{Fixture, Subspace, DEFAULT_ETA};
use crate::witnesses::{complement_split, density_repair_c0, density_repair_lp, spaceable_witness, DensityOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    Lineability,
    Lp,
    Linf,
    Witness,
    Density,
}

/// Which `ℓ_p` lemma to certify. `a` accepts `ε < 4/33`, `b` needs
/// `ε < 1/512`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    A,
    B,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stab_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<Stage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub net_resolution: Option<f64>,
    /// Lineability: ratios in `(0, 1)` as `"num/den"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratios: Option<Vec<String>>,
    /// Lineability: nonzero coefficients, one per ratio (default all 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<String>>,
    /// Lineability: coordinates scanned for zeros.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<usize>,
    /// Density: `f` as coefficients over the fixture generators; drawn
    /// from the seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_coeffs: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub pipeline: Pipeline,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture: Option<Fixture>,
    #[serde(default)]
    pub params: Params,
}

pub const DEFAULT_LP_EPS: f64 = 1.0 / 600.0;
pub const DEFAULT_DENSITY_EPS: f64 = 0.01;
pub const DEFAULT_SCAN: usize = 120;

fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn positive(name: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(config(format!("{name} must be positive, got {x}")))
    }
}

fn at_least(name: &str, x: usize, min: usize) -> Result<usize> {
    if x >= min {
        Ok(x)
    } else {
        Err(config(format!("{name} must be at least {min}, got {x}")))
    }
}

/// `0 < eps < bound` with the bound named as in the error text.
fn eps_below(eps: f64, bound: f64, what: &str) -> Result<f64> {
    let ok = eps > 0.0
        && eps.is_finite()
        && Rational::from_float(eps).is_some_and(|e| e < Rational::from_float(bound).unwrap_or_default());
    if ok {
        Ok(eps)
    } else {
        Err(config(format!("eps must satisfy 0 < eps < {what}, got {eps}")))
    }
}

impl Scenario {
    pub fn new(pipeline: Pipeline, fixture: Option<Fixture>, params: Params) -> Self {
        Scenario {
            name: String::new(),
            pipeline,
            fixture,
            params,
        }
    }

    fn fixture(&self) -> Result<&Fixture> {
        self.fixture
            .as_ref()
            .ok_or_else(|| config("this pipeline needs a fixture"))
    }

    fn require_lp_fixture(&self) -> Result<&Fixture> {
        let fx = self.fixture()?;
        if fx.space.exponent().is_none() {
            return Err(config(format!("fixture space must be l_p, got {}", fx.space.name())));
        }
        Ok(fx)
    }

    fn require_sup_fixture(&self) -> Result<&Fixture> {
        let fx = self.fixture()?;
        if !fx.space.is_sup() {
            return Err(config(format!(
                "fixture space must be l_inf or c0, got {}",
                fx.space.name()
            )));
        }
        Ok(fx)
    }

    fn lp_stage(&self) -> Result<(f64, Stage)> {
        let eps = self.params.eps.unwrap_or(DEFAULT_LP_EPS);
        eps_below(eps, 4.0 / 33.0, "4/33")?;
        let stage = self
            .params
            .stage
            .unwrap_or(if eps < 1.0 / 512.0 { Stage::B } else { Stage::A });
        if stage == Stage::B {
            eps_below(eps, 1.0 / 512.0, "1/512")?;
        }
        Ok((eps, stage))
    }

    /// Fills defaults and checks every parameter against the pipeline's
    /// preconditions. The result is what gets recorded in the envelope.
    pub fn resolved(&self) -> Result<Scenario> {
        let mut sc = self.clone();
        let p = &mut sc.params;
        if let Some(t) = p.stab_tol {
            positive("stab_tol", t)?;
        }
        if let Some(r) = p.net_resolution {
            if !(r > 0.0 && r <= 1.0) {
                return Err(config(format!("net_resolution must satisfy 0 < r <= 1, got {r}")));
            }
        }
        match self.pipeline {
            Pipeline::Lineability => {
                let ratios = p.ratios.clone().ok_or_else(|| config("lineability needs ratios"))?;
                at_least("number of ratios", ratios.len(), 1)?;
                p.coeffs.get_or_insert_with(|| vec!["1".into(); ratios.len()]);
                p.scan = Some(at_least("scan", p.scan.unwrap_or(DEFAULT_SCAN), 1)?);
                p.mode = Mode::Exact;
            }
            Pipeline::Lp => {
                self.require_lp_fixture()?;
                let (eps, stage) = self.lp_stage()?;
                p.eps = Some(eps);
                p.stage = Some(stage);
                p.depth = Some(at_least("depth", p.depth.unwrap_or(6), 1)?);
                p.trials.get_or_insert(DEFAULT_TRIALS);
            }
            Pipeline::Linf => {
                self.require_sup_fixture()?;
                p.depth = Some(at_least("depth", p.depth.unwrap_or(5), 1)?);
                p.stab_tol.get_or_insert(DEFAULT_STAB_TOL);
                p.samples.get_or_insert(1000);
                p.trials.get_or_insert(DEFAULT_TRIALS);
                p.net_resolution.get_or_insert(1.0);
            }
            Pipeline::Witness => {
                let fx = self.fixture()?;
                p.depth = Some(at_least("depth", p.depth.unwrap_or(6), 4)?);
                p.samples.get_or_insert(500);
                p.trials.get_or_insert(DEFAULT_TRIALS);
                if fx.space.exponent().is_some() {
                    let eps = p.eps.unwrap_or(DEFAULT_LP_EPS);
                    p.eps = Some(eps_below(eps, 1.0 / 512.0, "1/512")?);
                    p.stage = Some(Stage::B);
                } else {
                    p.stab_tol.get_or_insert(DEFAULT_STAB_TOL);
                    p.net_resolution.get_or_insert(1.0);
                }
            }
            Pipeline::Density => {
                let fx = self.fixture()?;
                p.eps = Some(positive("eps", p.eps.unwrap_or(DEFAULT_DENSITY_EPS))?);
                p.depth = Some(at_least("depth", p.depth.unwrap_or(4), 1)?);
                p.trials.get_or_insert(DEFAULT_TRIALS);
                p.samples.get_or_insert(200);
                if fx.space.is_sup() {
                    p.stab_tol.get_or_insert(DEFAULT_STAB_TOL);
                    p.net_resolution.get_or_insert(1.0);
                }
                if let Some(c) = &p.f_coeffs {
                    if c.len() != fx.generators.len() {
                        return Err(config(format!(
                            "f_coeffs has {} entries, fixture has {} generators",
                            c.len(),
                            fx.generators.len()
                        )));
                    }
                }
            }
        }
        Ok(sc)
    }
}

/// Runs the scenario and wraps the certificate in its envelope.
pub fn run_scenario(sc: &Scenario) -> Result<Envelope> {
    let sc = sc.resolved()?;
    match sc.params.mode {
        Mode::Exact => run_typed::<Rational>(&sc),
        Mode::Float => run_typed::<f64>(&sc),
    }
}

fn params_json(p: &Params) -> Value {
    serde_json::to_value(p).expect("params serialize")
}

fn density_f<S: Scalar>(v: &Subspace<S>, p: &Params) -> Result<Seq<S>> {
    let coeffs: Vec<S> = match &p.f_coeffs {
        Some(c) => c
            .iter()
            .map(|s| parse_rational(s).map(|q| S::from_rational(&q)))
            .collect::<Result<_>>()?,
        None => {
            let mut r = rng(p.seed, 5);
            uniform_coeffs(&mut r, v.generators().len())
                .into_iter()
                .map(S::from_f64)
                .collect()
        }
    };
    v.combine_generators(&coeffs)
}

fn run_typed<S: Scalar>(sc: &Scenario) -> Result<Envelope> {
    let p = &sc.params;
    let params = params_json(p);
    let fixture = sc.fixture.clone();
    let depth = p.depth.unwrap_or(1);
    let trials = p.trials.unwrap_or(DEFAULT_TRIALS);
    match sc.pipeline {
        Pipeline::Lineability => {
            let parse = |xs: &[String]| xs.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>();
            let c = GeometricCombination::new(
                parse(p.ratios.as_deref().unwrap_or_default())?,
                parse(p.coeffs.as_deref().unwrap_or_default())?,
            )?;
            let cert = LineabilityCert::build(&c, p.scan.unwrap_or(DEFAULT_SCAN))?;
            Envelope::new(CertKind::Lineability, Mode::Exact, None, params, &cert)
        }
        Pipeline::Lp => {
            let v: Subspace<S> = sc.fixture()?.subspace(DEFAULT_ETA)?;
            let mut opts = LemmaAOptions::new(p.eps.unwrap_or(DEFAULT_LP_EPS), depth);
            opts.trials = trials;
            opts.seed = p.seed;
            match p.stage.unwrap_or(Stage::B) {
                Stage::A => {
                    let cert = construct_lemma_a(&v, &opts)?;
                    Envelope::new(CertKind::LemmaA, p.mode, fixture, params, &cert)
                }
                Stage::B => {
                    let cert = construct_lemma_b(&v, &opts)?;
                    Envelope::new(CertKind::LemmaB, p.mode, fixture, params, &cert)
                }
            }
        }
        Pipeline::Linf => {
            let v: Subspace<S> = sc.fixture()?.subspace(DEFAULT_ETA)?;
            let cert = construct_linf(&v, &linf_options(p, depth))?;
            Envelope::new(CertKind::Linf, p.mode, fixture, params, &cert)
        }
        Pipeline::Witness => {
            let v: Subspace<S> = sc.fixture()?.subspace(DEFAULT_ETA)?;
            let samples = p.samples.unwrap_or(500);
            let payload = if v.space().exponent().is_some() {
                let mut opts = LemmaAOptions::new(p.eps.unwrap_or(DEFAULT_LP_EPS), depth);
                opts.trials = trials;
                opts.seed = p.seed;
                let b = construct_lemma_b(&v, &opts)?;
                let witness = spaceable_witness(&b, samples, p.seed)?;
                let split = complement_split(&b, samples.min(200), p.seed)?;
                WitnessPayload {
                    source: WitnessSource::Lp(Box::new(b)),
                    witness,
                    split: Some(split),
                }
            } else {
                let c = construct_linf(&v, &linf_options(p, depth))?;
                let witness = spaceable_witness(&c.l, samples, p.seed)?;
                WitnessPayload {
                    source: WitnessSource::Linf(Box::new(c)),
                    witness,
                    split: None,
                }
            };
            Envelope::new(CertKind::Witness, p.mode, fixture, params, &payload)
        }
        Pipeline::Density => {
            let v: Subspace<S> = sc.fixture()?.subspace(DEFAULT_ETA)?;
            let f = density_f(&v, p)?;
            let mut opts = DensityOptions::new(depth);
            opts.trials = trials;
            opts.seed = p.seed;
            opts.samples = p.samples.unwrap_or(opts.samples);
            opts.stab_tol = p.stab_tol.unwrap_or(opts.stab_tol);
            opts.net_resolution = p.net_resolution.unwrap_or(opts.net_resolution);
            let eps = p.eps.unwrap_or(DEFAULT_DENSITY_EPS);
            let cert = if v.space().is_sup() {
                density_repair_c0(&v, &f, eps, &opts)?
            } else {
                density_repair_lp(&v, &f, eps, &opts)?
            };
            Envelope::new(CertKind::Density, p.mode, fixture, params, &cert)
        }
    }
}

fn linf_options(p: &Params, depth: usize) -> LinfOptions {
    let mut o = LinfOptions::new(depth);
    o.stab_tol = p.stab_tol.unwrap_or(o.stab_tol);
    o.samples = p.samples.unwrap_or(o.samples);
    o.trials = p.trials.unwrap_or(o.trials);
    o.net_resolution = p.net_resolution.unwrap_or(o.net_resolution);
    o.seed = p.seed;
    o
}
