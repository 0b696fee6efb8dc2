use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{DomainError, MemoryDomain, PortUse, Sxm};
use crate::value::is_reserved;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    ReservedSymbol,
    UnknownState,
    UnknownFunction,
    UnknownSymbol,
    DuplicateFunction,
    NoInitialState,
    Domain,
    MissingSample,
    CaseShape,
    CaseError,
    MemoryEscape,
    OverlappingCases,
    StatePartition,
    FunctionPartition,
    PortDomain,
    Communication,
    Structure,
    Rule,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub location: String,
    pub message: String,
}

impl Violation {
    pub fn new(
        kind: ViolationKind,
        location: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Violation {
            kind,
            location: location.into(),
            message: message.into(),
        }
    }
}

/// Invariant violations of a model. `notes` hold findings that do not make
/// the model ill-formed, such as a function whose cases overlap.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(
        &mut self,
        kind: ViolationKind,
        location: impl Into<String>,
        message: impl Into<String>,
    ) {
        self.violations
            .push(Violation::new(kind, location, message));
    }

    pub fn note(
        &mut self,
        kind: ViolationKind,
        location: impl Into<String>,
        message: impl Into<String>,
    ) {
        self.notes.push(Violation::new(kind, location, message));
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
        self.notes.extend(other.notes);
    }

    /// Prefixes every location, e.g. with a component index.
    pub fn scoped(mut self, prefix: &str) -> Self {
        for v in self.violations.iter_mut().chain(self.notes.iter_mut()) {
            v.location = format!("{prefix}/{}", v.location);
        }
        self
    }
}

pub fn validate_sxm(model: &Sxm) -> ValidationReport {
    validate_machine(model, false, &[])
}

/// Shared well-formedness checks. With `ports` set, case port fields are
/// allowed and cases using a port pattern are left to the caller. The
/// input/output shape of cases of `communicating` functions is also left
/// to the caller.
pub(crate) fn validate_machine(
    model: &Sxm,
    ports: bool,
    communicating: &[String],
) -> ValidationReport {
    let mut r = ValidationReport::default();

    for (set, what) in [(&model.inputs, "inputs"), (&model.outputs, "outputs")] {
        for s in set.iter().filter(|s| is_reserved(s)) {
            r.push(
                ViolationKind::ReservedSymbol,
                what,
                format!("reserved symbol {s:?} in alphabet"),
            );
        }
    }

    if model.initial_states.is_empty() {
        r.push(
            ViolationKind::NoInitialState,
            "initial_states",
            "no initial state",
        );
    }
    for (set, what) in [
        (&model.initial_states, "initial_states"),
        (&model.terminal_states, "terminal_states"),
    ] {
        for q in set.iter().filter(|q| !model.states.contains(*q)) {
            r.push(
                ViolationKind::UnknownState,
                what,
                format!("state {q:?} is not declared"),
            );
        }
    }

    let mut seen = BTreeSet::new();
    for f in &model.functions {
        if !seen.insert(f.name.as_str()) {
            r.push(
                ViolationKind::DuplicateFunction,
                format!("functions/{}", f.name),
                "function declared twice",
            );
        }
        if is_reserved(&f.name) || f.name == "id" {
            r.push(
                ViolationKind::ReservedSymbol,
                format!("functions/{}", f.name),
                "reserved function name",
            );
        }
    }

    for ((q, fname), targets) in &model.next_state {
        let loc = format!("next_state/{q}/{fname}");
        if !model.states.contains(q) {
            r.push(
                ViolationKind::UnknownState,
                &loc,
                format!("source state {q:?} is not declared"),
            );
        }
        if model.function(fname).is_none() {
            r.push(
                ViolationKind::UnknownFunction,
                &loc,
                format!("function {fname:?} is not declared"),
            );
        }
        for t in targets.iter().filter(|t| !model.states.contains(*t)) {
            r.push(
                ViolationKind::UnknownState,
                &loc,
                format!("target state {t:?} is not declared"),
            );
        }
    }

    for f in &model.functions {
        if communicating.contains(&f.name) {
            continue;
        }
        for (i, c) in f.cases.iter().enumerate() {
            let loc = format!("functions/{}/cases/{i}", f.name);
            match &c.input {
                Some(s) if !model.inputs.contains(s) => r.push(
                    ViolationKind::UnknownSymbol,
                    &loc,
                    format!("input {s:?} not in the input alphabet"),
                ),
                None => r.push(
                    ViolationKind::CaseShape,
                    &loc,
                    "case consumes no input symbol",
                ),
                _ => {}
            }
            match &c.output {
                Some(s) if !model.outputs.contains(s) => r.push(
                    ViolationKind::UnknownSymbol,
                    &loc,
                    format!("output {s:?} not in the output alphabet"),
                ),
                None => r.push(
                    ViolationKind::CaseShape,
                    &loc,
                    "case emits no output symbol",
                ),
                _ => {}
            }
            if !ports && (c.port.is_some() || c.out_port.is_some() || c.send_to.is_some()) {
                r.push(
                    ViolationKind::CaseShape,
                    &loc,
                    "port fields are only allowed in communicating systems",
                );
            }
        }
    }

    match (
        &model.memory_domain,
        model.memory_domain.contains(&model.initial_memory),
    ) {
        (MemoryDomain::Range { lo, hi }, _) if lo > hi => {
            r.push(
                ViolationKind::Domain,
                "memory_domain",
                format!("empty range {lo}..={hi}"),
            );
        }
        (_, Some(false)) => r.push(
            ViolationKind::Domain,
            "initial_memory",
            format!(
                "initial memory {} is outside the memory domain",
                model.initial_memory
            ),
        ),
        _ => {}
    }

    match model.memory_domain.space() {
        Err(DomainError::MissingSample) => r.push(
            ViolationKind::MissingSample,
            "memory_domain",
            "open domain declares no sample",
        ),
        Err(e) => r.note(ViolationKind::Domain, "memory_domain", e.to_string()),
        Ok(space) => check_cases(model, &space.values, &mut r),
    }
    r
}

/// Evaluates every port-free case over the memory space and input alphabet.
fn check_cases(model: &Sxm, memory: &[crate::value::Value], r: &mut ValidationReport) {
    for f in &model.functions {
        let mut reported_escape = BTreeSet::new();
        let mut reported_error = BTreeSet::new();
        let mut overlaps: BTreeMap<(usize, usize), String> = BTreeMap::new();
        for m in memory {
            for input in &model.inputs {
                let mut matching = Vec::new();
                for (i, c) in f.cases.iter().enumerate() {
                    if c.port.is_some() || c.input.as_deref() != Some(input) {
                        continue;
                    }
                    match c.eval(m, PortUse::Ignore) {
                        Ok(Some(out)) => {
                            matching.push(i);
                            if model.memory_domain.contains(&out.memory) == Some(false)
                                && reported_escape.insert(i)
                            {
                                r.push(
                                    ViolationKind::MemoryEscape,
                                    format!("functions/{}/cases/{i}", f.name),
                                    format!("memory {m} on input {input:?} updates to {} outside the domain", out.memory),
                                );
                            }
                        }
                        Ok(None) => {}
                        Err(e) if reported_error.insert(i) => r.push(
                            ViolationKind::CaseError,
                            format!("functions/{}/cases/{i}", f.name),
                            format!("evaluation fails at memory {m} on input {input:?}: {}", e.0),
                        ),
                        Err(_) => {}
                    }
                }
                for (x, &a) in matching.iter().enumerate() {
                    for &b in &matching[x + 1..] {
                        overlaps
                            .entry((a, b))
                            .or_insert_with(|| format!("memory {m}, input {input:?}"));
                    }
                }
            }
        }
        for ((a, b), witness) in overlaps {
            r.note(
                ViolationKind::OverlappingCases,
                format!("functions/{}/cases/{a}", f.name),
                format!("cases {a} and {b} both match at {witness}"),
            );
        }
    }
}
