//! Versioned JSON envelope around every certificate, and re-verification
//! from the stored coordinates.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::ledger::{Ledger, Relation};
use crate::lineability::LineabilityCert;
use crate::linf_construction::LinfCert;
use crate::lp_construction::{LemmaACert, LemmaBCert};
use crate::scalar::{Rational, Scalar};
use crate::seq::{norm, Seq};
use crate::subspace::{Fixture, Subspace, DEFAULT_ETA};
use crate::witnesses::{complement_split, DensityCert, DensitySource, LFamily, SplitReport, WitnessCert};

pub const SCHEMA_VERSION: u32 = 1;

/// Relative tolerance for `f ∈ span(V)` checks in float mode.
pub const SPAN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    #[default]
    Float,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Float => "float",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertKind {
    Lineability,
    LemmaA,
    LemmaB,
    Linf,
    Witness,
    Density,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub schema_version: u32,
    pub kind: CertKind,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture: Option<Fixture>,
    pub params: Value,
    pub payload: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "cert", rename_all = "snake_case", bound = "S: Scalar")]
pub enum WitnessSource<S: Scalar> {
    Lp(Box<LemmaBCert<S>>),
    Linf(Box<LinfCert<S>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct WitnessPayload<S: Scalar> {
    pub source: WitnessSource<S>,
    pub witness: WitnessCert<S>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitReport>,
}

impl Envelope {
    pub fn new(
        kind: CertKind,
        mode: Mode,
        fixture: Option<Fixture>,
        params: Value,
        payload: &impl Serialize,
    ) -> Result<Self> {
        Ok(Envelope {
            schema_version: SCHEMA_VERSION,
            kind,
            mode,
            fixture,
            params,
            payload: serde_json::to_value(payload).map_err(|e| Error::MalformedCertificate(e.to_string()))?,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let env: Envelope = serde_json::from_str(text).map_err(|e| Error::MalformedCertificate(e.to_string()))?;
        if env.schema_version != SCHEMA_VERSION {
            return Err(Error::MalformedCertificate(format!(
                "unsupported schema_version {}",
                env.schema_version
            )));
        }
        Ok(env)
    }

    /// Pretty JSON with a trailing newline; byte-identical for equal input.
    pub fn to_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("envelope serializes");
        s.push('\n');
        s
    }

    pub fn payload_as<T: DeserializeOwned>(&self) -> Result<T> {
        serde_json::from_value(self.payload.clone()).map_err(|e| Error::MalformedCertificate(format!("payload: {e}")))
    }

    /// The certificate's own ledger as recorded at construction.
    pub fn recorded_pass(&self) -> bool {
        fn all(v: &Value) -> bool {
            match v {
                Value::Object(m) => m.iter().all(|(k, x)| {
                    if k == "ledger" {
                        x.as_array()
                            .is_some_and(|a| a.iter().all(|c| c.get("pass") == Some(&Value::Bool(true))))
                    } else {
                        all(x)
                    }
                }),
                Value::Array(a) => a.iter().all(all),
                _ => true,
            }
        }
        all(&self.payload)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub kind: CertKind,
    pub ledger: Ledger,
}

impl Verification {
    pub fn all_pass(&self) -> bool {
        self.ledger.all_pass()
    }
}

/// Recomputes every check from raw coordinates. Cached norms and recorded
/// ledgers are only compared against, never trusted.
pub fn verify(env: &Envelope) -> Result<Verification> {
    let ledger = match env.mode {
        Mode::Exact => verify_typed::<Rational>(env)?,
        Mode::Float => verify_typed::<f64>(env)?,
    };
    Ok(Verification { kind: env.kind, ledger })
}

pub fn verify_text(text: &str) -> Result<Verification> {
    verify(&Envelope::parse(text)?)
}

fn subspace<S: Scalar>(env: &Envelope) -> Result<Subspace<S>> {
    env.fixture
        .as_ref()
        .ok_or_else(|| Error::MalformedCertificate("fixture missing".into()))?
        .subspace(DEFAULT_ETA)
}

/// `x ∈ span(V)` for every listed vector.
pub(crate) fn push_membership<'a, S: Scalar>(
    l: &mut Ledger,
    v: &Subspace<S>,
    name: &str,
    xs: impl IntoIterator<Item = &'a Seq<S>>,
) -> Result<()> {
    for (k, x) in xs.into_iter().enumerate() {
        let r = v.membership_residual(x)?;
        let scale = norm(x, &v.space())?.max(1.0);
        let tol = if S::EXACT { 0.0 } else { SPAN_TOL * scale };
        l.push(name, &[k + 1], r, Relation::Le, tol, 0.0);
    }
    Ok(())
}

fn check_space<S: Scalar>(l: &mut Ledger, v: &Subspace<S>, space: crate::seq::AmbientSpace) {
    l.push_flag("fixture_space", &[], v.space() == space);
}

fn verify_typed<S: Scalar>(env: &Envelope) -> Result<Ledger> {
    let mut l = Ledger::new();
    match env.kind {
        CertKind::Lineability => {
            let c: LineabilityCert = env.payload_as()?;
            l.extend(c.audit()?);
        }
        CertKind::LemmaA => {
            let c: LemmaACert<S> = env.payload_as()?;
            l.extend(c.audit()?);
            let v = subspace::<S>(env)?;
            check_space(&mut l, &v, c.space);
            push_membership(&mut l, &v, "f_in_span", &c.f)?;
        }
        CertKind::LemmaB => {
            let c: LemmaBCert<S> = env.payload_as()?;
            l.extend(c.audit()?);
            let v = subspace::<S>(env)?;
            check_space(&mut l, &v, c.space);
            push_membership(&mut l, &v, "l_in_span", &c.l)?;
        }
        CertKind::Linf => {
            let c: LinfCert<S> = env.payload_as()?;
            l.extend(c.audit()?);
            let v = subspace::<S>(env)?;
            check_space(&mut l, &v, c.mazur.space);
            push_membership(&mut l, &v, "l_in_span", &c.l.l)?;
            push_membership(&mut l, &v, "f_in_span", &c.mazur.f)?;
        }
        CertKind::Witness => {
            let c: WitnessPayload<S> = env.payload_as()?;
            l.extend(c.witness.audit()?);
            let v = subspace::<S>(env)?;
            let family: Vec<Seq<S>> = match &c.source {
                WitnessSource::Lp(b) => {
                    l.extend(b.audit()?);
                    if let Some(split) = &c.split {
                        let redo = complement_split(b, split.samples, split.seed)?;
                        l.push_flag("split_recomputed", &[], redo == *split);
                        l.extend(redo.ledger);
                    }
                    b.family().to_vec()
                }
                WitnessSource::Linf(x) => {
                    l.extend(x.audit()?);
                    x.l.family().to_vec()
                }
            };
            let same = c.witness.family().into_iter().eq(family.iter());
            l.push_flag("witness_matches_source", &[], same);
            push_membership(&mut l, &v, "even_in_span", &c.witness.even_family)?;
        }
        CertKind::Density => {
            let c: DensityCert<S> = env.payload_as()?;
            l.extend(c.audit()?);
            let v = subspace::<S>(env)?;
            check_space(&mut l, &v, c.space);
            push_membership(&mut l, &v, "f_in_span", [&c.f])?;
            push_membership(&mut l, &v, "g_in_span", [&c.g])?;
            if let DensitySource::C0 { l: fam, .. } = &c.source {
                push_membership(&mut l, &v, "l_in_span", &fam.l)?;
            }
        }
    }
    l.push_flag("recorded_ledgers_pass", &[], env.recorded_pass());
    Ok(l)
}
