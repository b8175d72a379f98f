//! Recorded inequalities: each entry keeps both sides so it can be re-checked.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl Relation {
    /// Non-strict relations get `slack` of room; strict ones get none.
    pub fn holds(self, lhs: f64, rhs: f64, slack: f64) -> bool {
        if lhs.is_nan() || rhs.is_nan() {
            return false;
        }
        match self {
            Relation::Lt => lhs < rhs,
            Relation::Le => lhs <= rhs + slack,
            Relation::Gt => lhs > rhs,
            Relation::Ge => lhs >= rhs - slack,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Gt => ">",
            Relation::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// 1-based indices identifying the entry (k, or (k, j), …).
    pub index: Vec<usize>,
    pub lhs: f64,
    pub relation: Relation,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}{:?}: {:e} {} {:e} (slack {:e}) -> {}",
            self.name,
            self.index,
            self.lhs,
            self.relation.symbol(),
            self.rhs,
            self.slack,
            if self.pass { "pass" } else { "FAIL" }
        )
    }
}

/// JSON cannot carry infinities; clamp them so that a failing entry still
/// round-trips.
fn finite(x: f64) -> f64 {
    if x.is_nan() {
        f64::MAX
    } else {
        x.clamp(f64::MIN, f64::MAX)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ledger(Vec<Check>);

impl Ledger {
    pub fn new() -> Self {
        Ledger(Vec::new())
    }

    pub fn push(&mut self, name: &str, index: &[usize], lhs: f64, relation: Relation, rhs: f64, slack: f64) -> bool {
        let pass = relation.holds(lhs, rhs, slack);
        self.0.push(Check {
            name: name.to_string(),
            index: index.to_vec(),
            lhs: finite(lhs),
            relation,
            rhs: finite(rhs),
            slack,
            pass,
        });
        pass
    }

    /// Records a comparison that was decided elsewhere, typically in exact
    /// arithmetic. `lhs` and `rhs` are the rounded values, kept for display.
    pub fn push_decided(
        &mut self,
        name: &str,
        index: &[usize],
        lhs: f64,
        relation: Relation,
        rhs: f64,
        pass: bool,
    ) -> bool {
        self.0.push(Check {
            name: name.to_string(),
            index: index.to_vec(),
            lhs: finite(lhs),
            relation,
            rhs: finite(rhs),
            slack: 0.0,
            pass,
        });
        pass
    }

    /// Records a boolean fact as `lhs = 0 or 1 >= 1`.
    pub fn push_flag(&mut self, name: &str, index: &[usize], ok: bool) -> bool {
        self.push(name, index, if ok { 1.0 } else { 0.0 }, Relation::Ge, 1.0, 0.0)
    }

    pub fn extend(&mut self, other: Ledger) {
        self.0.extend(other.0);
    }

    pub fn entries(&self) -> &[Check] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn all_pass(&self) -> bool {
        self.0.iter().all(|c| c.pass)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.0.iter().find(|c| !c.pass)
    }

    pub fn named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Check> + 'a {
        self.0.iter().filter(move |c| c.name == name)
    }
}
