//! Cell-like P systems: a membrane tree, one multiset per compartment and
//! multiset rewriting rules applied in maximally parallel mode.

mod coverage;
mod file;
mod run;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::sxm::{ValidationReport, ViolationKind};
use crate::value::{Multiset, Value, NULL};

pub use coverage::{
    generate_coverage_test_set, rule_coverage, CoverageReport, CoverageTestSet, RuleCoverage,
};
pub use file::{MembraneFile, PSystemFile, RuleFile};
pub use run::{
    apply_assignment, choose_assignment, is_halted, maximal_rule_multisets, psystem_run,
    psystem_run_capped, reachable_configurations, Assignment, ComputationTrace, RunMode,
    DEFAULT_ASSIGNMENT_CAP, DEFAULT_TRACE_CAP,
};

pub type CompartmentId = usize;

/// Where a right-hand-side symbol goes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    Here,
    In(CompartmentId),
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Here => f.write_str("here"),
            Target::In(id) => write!(f, "{id}"),
        }
    }
}

/// `lhs → (a₁,t₁)…(aₘ,tₘ)` in one compartment.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PRule {
    pub name: String,
    pub compartment: CompartmentId,
    pub lhs: Multiset,
    pub rhs: Vec<(String, Target)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Membrane {
    pub id: CompartmentId,
    pub children: Vec<Membrane>,
}

impl Membrane {
    /// `(id, parent)` for every membrane, depth first.
    pub fn parents(&self) -> Vec<(CompartmentId, Option<CompartmentId>)> {
        fn walk(
            m: &Membrane,
            parent: Option<CompartmentId>,
            out: &mut Vec<(CompartmentId, Option<CompartmentId>)>,
        ) {
            out.push((m.id, parent));
            for c in &m.children {
                walk(c, Some(m.id), out);
            }
        }
        let mut out = Vec::new();
        walk(self, None, &mut out);
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PSystem {
    pub alphabet: BTreeSet<String>,
    pub structure: Membrane,
    /// Initial multiset per compartment id; missing ids start empty.
    pub initial: BTreeMap<CompartmentId, Multiset>,
    pub rules: BTreeMap<CompartmentId, Vec<PRule>>,
}

/// One multiset per compartment, indexed by id − 1.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PConfiguration(pub Vec<Multiset>);

impl PConfiguration {
    /// Parses one canonical string per compartment.
    pub fn parse(parts: &[&str]) -> Self {
        PConfiguration(parts.iter().map(|p| Multiset::parse(p)).collect())
    }

    pub fn compartment(&self, id: CompartmentId) -> &Multiset {
        &self.0[id - 1]
    }

    pub fn canonical(&self) -> Vec<String> {
        self.0.iter().map(Multiset::canonical).collect()
    }

    pub fn to_value(&self) -> Value {
        Value::Seq(self.0.iter().cloned().map(Value::Bag).collect())
    }

    pub fn from_value(v: &Value) -> Option<Self> {
        v.as_seq()?
            .iter()
            .map(|x| match x {
                Value::Bag(m) => Some(m.clone()),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(PConfiguration)
    }
}

impl fmt::Display for PConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|m| {
                if m.is_empty() {
                    NULL.to_string()
                } else {
                    m.canonical()
                }
            })
            .collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum PsError {
    #[error("more than {limit} maximal rule assignments")]
    ExplosionBound { limit: usize },
    #[error("more than {limit} computation branches")]
    BranchExplosion {
        limit: usize,
        partial: Vec<ComputationTrace>,
    },
    #[error("trace {trace} does not replay at step {step}: {reason}")]
    TraceReplayMismatch {
        trace: usize,
        step: usize,
        reason: String,
    },
    #[error("configuration does not fit the system: {0}")]
    InvalidConfiguration(String),
}

impl PSystem {
    /// Compartment ids in ascending order.
    pub fn ids(&self) -> Vec<CompartmentId> {
        let mut ids: Vec<_> = self
            .structure
            .parents()
            .into_iter()
            .map(|(id, _)| id)
            .collect();
        ids.sort_unstable();
        ids
    }

    pub fn len(&self) -> usize {
        self.structure.parents().len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn parent_of(&self, id: CompartmentId) -> Option<CompartmentId> {
        self.structure
            .parents()
            .into_iter()
            .find(|(c, _)| *c == id)
            .and_then(|(_, p)| p)
    }

    pub fn children_of(&self, id: CompartmentId) -> Vec<CompartmentId> {
        self.structure
            .parents()
            .into_iter()
            .filter(|(_, p)| *p == Some(id))
            .map(|(c, _)| c)
            .collect()
    }

    pub fn all_rules(&self) -> impl Iterator<Item = &PRule> {
        self.rules.values().flatten()
    }

    pub fn rule_names(&self) -> Vec<String> {
        self.all_rules().map(|r| r.name.clone()).collect()
    }

    pub fn rule(&self, name: &str) -> Option<&PRule> {
        self.all_rules().find(|r| r.name == name)
    }

    pub fn initial_configuration(&self) -> PConfiguration {
        PConfiguration(
            (1..=self.len())
                .map(|id| self.initial.get(&id).cloned().unwrap_or_default())
                .collect(),
        )
    }

    /// Checks that `cfg` has one multiset per compartment over the alphabet.
    pub fn check_configuration(&self, cfg: &PConfiguration) -> Result<(), PsError> {
        if cfg.0.len() != self.len() {
            return Err(PsError::InvalidConfiguration(format!(
                "{} compartments, expected {}",
                cfg.0.len(),
                self.len()
            )));
        }
        for (i, m) in cfg.0.iter().enumerate() {
            if let Some(s) = m.symbols().find(|s| !self.alphabet.contains(*s)) {
                return Err(PsError::InvalidConfiguration(format!(
                    "symbol {s:?} in compartment {} is not in the alphabet",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

pub fn validate_psystem(ps: &PSystem) -> ValidationReport {
    let mut r = ValidationReport::default();
    let parents = ps.structure.parents();
    let mut ids: Vec<CompartmentId> = parents.iter().map(|(id, _)| *id).collect();
    ids.sort_unstable();
    let unique: BTreeSet<_> = ids.iter().copied().collect();
    if unique.len() != ids.len() {
        r.push(
            ViolationKind::Structure,
            "structure",
            "compartment ids are not unique",
        );
    }
    if ids != (1..=ids.len()).collect::<Vec<_>>() && unique.len() == ids.len() {
        r.push(
            ViolationKind::Structure,
            "structure",
            format!("compartment ids must be 1..{}", ids.len()),
        );
    }
    for s in ps
        .alphabet
        .iter()
        .filter(|s| crate::value::is_reserved(s) || s.is_empty())
    {
        r.push(
            ViolationKind::ReservedSymbol,
            "alphabet",
            format!("symbol {s:?} is reserved"),
        );
    }
    for (id, m) in &ps.initial {
        let loc = format!("initial/{id}");
        if !unique.contains(id) {
            r.push(
                ViolationKind::Structure,
                &loc,
                format!("no compartment {id}"),
            );
        }
        for s in m.symbols().filter(|s| !ps.alphabet.contains(*s)) {
            r.push(
                ViolationKind::UnknownSymbol,
                &loc,
                format!("symbol {s:?} is not in the alphabet"),
            );
        }
    }
    let mut names = BTreeSet::new();
    for (id, rules) in &ps.rules {
        if !unique.contains(id) {
            r.push(
                ViolationKind::Structure,
                format!("rules/{id}"),
                format!("no compartment {id}"),
            );
        }
        let parent = ps.parent_of(*id);
        let children = ps.children_of(*id);
        for rule in rules {
            let loc = format!("rules/{id}/{}", rule.name);
            if !names.insert(rule.name.as_str()) {
                r.push(ViolationKind::Rule, &loc, "rule name used twice");
            }
            if rule.compartment != *id {
                r.push(
                    ViolationKind::Rule,
                    &loc,
                    "rule is filed under the wrong compartment",
                );
            }
            if rule.lhs.is_empty() {
                r.push(ViolationKind::Rule, &loc, "left-hand side is empty");
            }
            for s in rule
                .lhs
                .symbols()
                .chain(rule.rhs.iter().map(|(s, _)| s.as_str()))
            {
                if !ps.alphabet.contains(s) {
                    r.push(
                        ViolationKind::UnknownSymbol,
                        &loc,
                        format!("symbol {s:?} is not in the alphabet"),
                    );
                }
            }
            for (s, t) in &rule.rhs {
                if let Target::In(k) = t {
                    if Some(*k) != parent && !children.contains(k) {
                        r.push(
                            ViolationKind::Rule,
                            &loc,
                            format!("target {k} of {s:?} is neither the parent nor a child of compartment {id}"),
                        );
                    }
                }
            }
        }
    }
    r
}
