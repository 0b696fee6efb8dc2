//! Design-for-test conditions: determinism, completeness and output
//! distinguishability, decided by enumeration over the memory domain (or
//! its declared sample) and the input alphabet.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::automaton::{Automaton, Nondeterminism};
use crate::sxm::{DomainError, MemorySpace, Sxm, Symbol};
use crate::value::Value;

/// Anything the conditions can be checked on: a finite memory space, a
/// finite set of inputs, named relations over them, and an automaton.
pub trait DftSubject {
    fn memory_space(&self) -> Result<MemorySpace, DomainError>;
    /// Inputs in ascending order.
    fn input_values(&self) -> Vec<Value>;
    fn function_names(&self) -> Vec<String>;
    /// Every `(output, memory')` the function relates to `(memory, input)`.
    fn apply_value(&self, function: &str, memory: &Value, input: &Value) -> Vec<(Symbol, Value)>;
    fn automaton(&self) -> Automaton;
}

impl DftSubject for Sxm {
    fn memory_space(&self) -> Result<MemorySpace, DomainError> {
        self.memory_domain.space()
    }

    fn input_values(&self) -> Vec<Value> {
        self.inputs
            .iter()
            .map(|s| Value::atom(s.as_str()))
            .collect()
    }

    fn function_names(&self) -> Vec<String> {
        Sxm::function_names(self)
    }

    fn apply_value(&self, function: &str, memory: &Value, input: &Value) -> Vec<(Symbol, Value)> {
        match input.as_atom() {
            Some(i) => self.apply(function, memory, i),
            None => Vec::new(),
        }
    }

    fn automaton(&self) -> Automaton {
        self.associated_automaton()
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum DftError {
    #[error("memory domain cannot be enumerated: {0}")]
    Domain(#[from] DomainError),
}

/// Two functions leaving the same state are both defined at one point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterminismWitness {
    pub state: String,
    pub phi1: String,
    pub phi2: String,
    pub memory: Value,
    pub input: Value,
}

/// One function relates a point to more than one result.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiValuedWitness {
    pub function: String,
    pub memory: Value,
    pub input: Value,
    pub results: Vec<(Symbol, Value)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterminismCheck {
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub automaton: Option<Nondeterminism>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<DeterminismWitness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multi_valued: Option<MultiValuedWitness>,
}

impl DeterminismCheck {
    /// The automaton is deterministic and functions sharing a state have
    /// disjoint domains. Single-valuedness of each function is not included.
    pub fn domains_disjoint(&self) -> bool {
        self.automaton.is_none() && self.counterexample.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionCompleteness {
    pub function: String,
    pub pass: bool,
    /// A memory value at which no input makes the function defined.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Value>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletenessCheck {
    pub pass: bool,
    pub functions: Vec<FunctionCompleteness>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistinguishabilityWitness {
    pub phi1: String,
    pub phi2: String,
    pub m: Value,
    pub m1: Value,
    pub m2: Value,
    pub input: Value,
    pub output: Symbol,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistinguishabilityCheck {
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<DistinguishabilityWitness>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DftReport {
    pub deterministic: DeterminismCheck,
    pub complete: CompletenessCheck,
    pub output_distinguishable: DistinguishabilityCheck,
    /// True iff the whole memory domain was enumerated.
    pub exhaustive: bool,
}

impl DftReport {
    pub fn all_pass(&self) -> bool {
        self.deterministic.pass && self.complete.pass && self.output_distinguishable.pass
    }

    /// One-line verdict. Sampled passes are never reported as proof.
    pub fn verdict(&self) -> &'static str {
        match (self.all_pass(), self.exhaustive) {
            (true, true) => "all conditions hold",
            (true, false) => "no violation found (sampled)",
            (false, _) => "violation found",
        }
    }
}

pub fn check_dft(model: &Sxm) -> Result<DftReport, DftError> {
    check_dft_subject(model)
}

pub fn check_dft_subject<S: DftSubject + ?Sized>(subject: &S) -> Result<DftReport, DftError> {
    let space = subject.memory_space()?;
    let inputs = subject.input_values();
    let functions = subject.function_names();
    let automaton = subject.automaton();

    let results = |f: &str, m: &Value, i: &Value| -> Vec<(Symbol, Value)> {
        let mut r = subject.apply_value(f, m, i);
        r.sort();
        r.dedup();
        r
    };

    // determinism
    let automaton_nd = automaton.nondeterminism();
    let mut det_witness = None;
    'states: for state in &automaton.states {
        let leaving: Vec<&str> = automaton
            .outgoing(state)
            .map(|a| a.label.as_str())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        for (x, phi1) in leaving.iter().enumerate() {
            for phi2 in &leaving[x + 1..] {
                for m in &space.values {
                    for i in &inputs {
                        if !results(phi1, m, i).is_empty() && !results(phi2, m, i).is_empty() {
                            det_witness = Some(DeterminismWitness {
                                state: state.clone(),
                                phi1: phi1.to_string(),
                                phi2: phi2.to_string(),
                                memory: m.clone(),
                                input: i.clone(),
                            });
                            break 'states;
                        }
                    }
                }
            }
        }
    }
    let mut multi = None;
    'functions: for f in &functions {
        for m in &space.values {
            for i in &inputs {
                let r = results(f, m, i);
                if r.len() > 1 {
                    multi = Some(MultiValuedWitness {
                        function: f.clone(),
                        memory: m.clone(),
                        input: i.clone(),
                        results: r,
                    });
                    break 'functions;
                }
            }
        }
    }

    // completeness
    let per_function: Vec<FunctionCompleteness> = functions
        .iter()
        .map(|f| {
            let counterexample = space
                .values
                .iter()
                .find(|m| inputs.iter().all(|i| results(f, m, i).is_empty()))
                .cloned();
            FunctionCompleteness {
                function: f.clone(),
                pass: counterexample.is_none(),
                counterexample,
            }
        })
        .collect();

    // output distinguishability
    let mut dist = None;
    'pairs: for (x, phi1) in functions.iter().enumerate() {
        for phi2 in &functions[x + 1..] {
            for m in &space.values {
                for i in &inputs {
                    let r1 = results(phi1, m, i);
                    if r1.is_empty() {
                        continue;
                    }
                    let r2 = results(phi2, m, i);
                    for (o1, m1) in &r1 {
                        if let Some((_, m2)) = r2.iter().find(|(o2, _)| o2 == o1) {
                            dist = Some(DistinguishabilityWitness {
                                phi1: phi1.clone(),
                                phi2: phi2.clone(),
                                m: m.clone(),
                                m1: m1.clone(),
                                m2: m2.clone(),
                                input: i.clone(),
                                output: o1.clone(),
                            });
                            break 'pairs;
                        }
                    }
                }
            }
        }
    }

    Ok(DftReport {
        deterministic: DeterminismCheck {
            pass: automaton_nd.is_none() && det_witness.is_none() && multi.is_none(),
            automaton: automaton_nd,
            counterexample: det_witness,
            multi_valued: multi,
        },
        complete: CompletenessCheck {
            pass: per_function.iter().all(|f| f.pass),
            functions: per_function,
        },
        output_distinguishable: DistinguishabilityCheck {
            pass: dist.is_none(),
            counterexample: dist,
        },
        exhaustive: space.exhaustive,
    })
}

impl DeterminismWitness {
    /// Re-evaluates both functions and the automaton arcs.
    pub fn replays<S: DftSubject + ?Sized>(&self, subject: &S) -> bool {
        let a = subject.automaton();
        let leaves = |f: &str| a.outgoing(&self.state).any(|arc| arc.label == f);
        self.phi1 != self.phi2
            && leaves(&self.phi1)
            && leaves(&self.phi2)
            && !subject
                .apply_value(&self.phi1, &self.memory, &self.input)
                .is_empty()
            && !subject
                .apply_value(&self.phi2, &self.memory, &self.input)
                .is_empty()
    }
}

impl MultiValuedWitness {
    pub fn replays<S: DftSubject + ?Sized>(&self, subject: &S) -> bool {
        let got: BTreeSet<_> = subject
            .apply_value(&self.function, &self.memory, &self.input)
            .into_iter()
            .collect();
        got.len() > 1 && self.results.iter().all(|r| got.contains(r))
    }
}

impl FunctionCompleteness {
    pub fn replays<S: DftSubject + ?Sized>(&self, subject: &S) -> bool {
        match &self.counterexample {
            Some(m) => subject
                .input_values()
                .iter()
                .all(|i| subject.apply_value(&self.function, m, i).is_empty()),
            None => false,
        }
    }
}

impl DistinguishabilityWitness {
    pub fn replays<S: DftSubject + ?Sized>(&self, subject: &S) -> bool {
        let r1 = subject.apply_value(&self.phi1, &self.m, &self.input);
        let r2 = subject.apply_value(&self.phi2, &self.m, &self.input);
        self.phi1 != self.phi2
            && r1.contains(&(self.output.clone(), self.m1.clone()))
            && r2.contains(&(self.output.clone(), self.m2.clone()))
    }
}

impl DftReport {
    /// True when every failing entry carries a witness that re-checks as a
    /// violation on `subject`, and no passing entry carries one.
    pub fn witnesses_replay<S: DftSubject + ?Sized>(&self, subject: &S) -> bool {
        let det = &self.deterministic;
        let det_ok = det
            .counterexample
            .as_ref()
            .is_none_or(|w| w.replays(subject))
            && det.multi_valued.as_ref().is_none_or(|w| w.replays(subject))
            && det
                .automaton
                .as_ref()
                .is_none_or(|n| Some(n) == subject.automaton().nondeterminism().as_ref())
            && det.pass
                == (det.automaton.is_none()
                    && det.counterexample.is_none()
                    && det.multi_valued.is_none());
        let comp_ok = self
            .complete
            .functions
            .iter()
            .all(|f| f.pass == f.counterexample.is_none() && (f.pass || f.replays(subject)));
        let dist = &self.output_distinguishable;
        let dist_ok = dist.pass == dist.counterexample.is_none()
            && dist
                .counterexample
                .as_ref()
                .is_none_or(|w| w.replays(subject));
        det_ok && comp_ok && dist_ok
    }
}
