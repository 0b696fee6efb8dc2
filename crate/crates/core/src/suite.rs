//! Test suites for stream X-machines: the fundamental test function and the
//! W-method pipeline.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::automaton::Nondeterminism;
use crate::dft::{check_dft, DftError, DftReport};
use crate::fsm::{
    characterization_set, complete_w_method_phi_sequences, identification_set, minimize_automaton,
    sink_access, state_cover, FsmError, PhiSequence,
};
use crate::sxm::{RunError, Sxm, Symbol};

pub const SCHEMA_VERSION: u32 = 1;
pub const METHOD_W: &str = "w-method";
/// Branch bound used when computing expected outputs.
pub const DEFAULT_BRANCH_BOUND: usize = 4096;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TestCase {
    pub input: Vec<Symbol>,
    /// Every output sequence the specification computes on `input`; empty
    /// when the specification rejects it.
    pub expected_outputs: Vec<Vec<Symbol>>,
}

/// How a product symbol position maps back to a component.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentMapping {
    pub position: usize,
    pub component: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub role: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteMetadata {
    pub c_size: usize,
    pub w_size: usize,
    /// Size of the identification set actually appended (W, ε and sink
    /// separators).
    pub identification_size: usize,
    pub phi_sequences: usize,
    pub minimized_states: usize,
    /// Policy for Φ-sequences that leave the feasible path.
    pub infeasible_policy: String,
    /// How many Φ-sequences hit the fallback.
    pub fallback_sequences: usize,
    pub dft_exhaustive: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<ComponentMapping>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestSuite {
    pub schema: u32,
    pub method: String,
    pub k: usize,
    pub cases: Vec<TestCase>,
    pub metadata: SuiteMetadata,
}

impl TestSuite {
    pub fn max_input_len(&self) -> usize {
        self.cases.iter().map(|c| c.input.len()).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum SuiteError {
    #[error("design-for-test conditions fail")]
    DftFailure(Box<DftReport>),
    #[error(transparent)]
    Dft(#[from] DftError),
    #[error("associated automaton is nondeterministic: {0:?}")]
    NondeterministicAutomaton(Nondeterminism),
    #[error(transparent)]
    Fsm(#[from] FsmError),
    #[error(transparent)]
    Run(#[from] RunError),
}

/// Translates a Φ-sequence into inputs by walking the specification's
/// memory. Returns the inputs and whether the infeasible-suffix fallback
/// was used.
pub fn fundamental_walk(model: &Sxm, seq: &PhiSequence) -> (Vec<Symbol>, bool) {
    let smallest = model.inputs.iter().next().cloned();
    let mut memory = model.initial_memory.clone();
    let mut inputs = Vec::with_capacity(seq.len());
    let mut fallen = false;
    for phi in &seq.0 {
        if !fallen {
            let step = model.inputs.iter().find_map(|i| {
                let mut r = model.apply(phi, &memory, i);
                r.sort();
                r.into_iter().next().map(|(_, m)| (i.clone(), m))
            });
            match step {
                Some((i, m)) => {
                    inputs.push(i);
                    memory = m;
                    continue;
                }
                None => fallen = true,
            }
        }
        if let Some(s) = &smallest {
            inputs.push(s.clone());
        }
    }
    (inputs, fallen)
}

/// The fundamental test function `t: Φ* → Σ*`.
pub fn fundamental_test_inputs(model: &Sxm, seq: &PhiSequence) -> Vec<Symbol> {
    fundamental_walk(model, seq).0
}

/// Full pipeline: the associated automaton must be deterministic and the
/// model must be deterministic and output-distinguishable. Completeness
/// failures only add warnings, since the fundamental test function has a
/// fallback for infeasible steps.
pub fn generate_sxm_test_suite(model: &Sxm, k: usize) -> Result<TestSuite, SuiteError> {
    if let Some(n) = model.associated_automaton().nondeterminism() {
        return Err(SuiteError::NondeterministicAutomaton(n));
    }
    let report = check_dft(model)?;
    if !report.deterministic.pass || !report.output_distinguishable.pass {
        return Err(SuiteError::DftFailure(Box::new(report)));
    }
    let mut suite = build_suite(model, k)?;
    suite.metadata.dft_exhaustive = report.exhaustive;
    suite.metadata.warnings.extend(dft_warnings(&report));
    Ok(suite)
}

pub(crate) fn dft_warnings(report: &DftReport) -> Vec<String> {
    let mut w: Vec<String> = report
        .complete
        .functions
        .iter()
        .filter_map(|f| {
            f.counterexample.as_ref().map(|m| {
                format!(
                    "{} is not complete: undefined for every input at memory {m}",
                    f.function
                )
            })
        })
        .collect();
    if !report.exhaustive {
        w.push("memory domain sampled, not exhaustive".to_string());
    }
    w
}

/// W-method generation without design-for-test gating.
pub fn build_suite(model: &Sxm, k: usize) -> Result<TestSuite, SuiteError> {
    let minimal = minimize_automaton(&model.associated_automaton())?;
    let phi: BTreeSet<String> = model.function_names().into_iter().collect();
    let mut c = state_cover(&minimal)?;
    c.extend(sink_access(&minimal, &phi)?);
    let w = characterization_set(&minimal)?;
    let z = identification_set(&minimal, &w);
    let seqs = complete_w_method_phi_sequences(&minimal, &phi, k)?;

    let mut fallback = 0;
    let mut by_input: BTreeMap<Vec<Symbol>, Vec<Vec<Symbol>>> = BTreeMap::new();
    for seq in &seqs {
        let (input, fell) = fundamental_walk(model, seq);
        fallback += usize::from(fell);
        if by_input.contains_key(&input) {
            continue;
        }
        let outputs: BTreeSet<Vec<Symbol>> = model.outputs(&input, DEFAULT_BRANCH_BOUND)?;
        by_input.insert(input, outputs.into_iter().collect());
    }
    Ok(TestSuite {
        schema: SCHEMA_VERSION,
        method: METHOD_W.to_string(),
        k,
        cases: by_input
            .into_iter()
            .map(|(input, expected_outputs)| TestCase {
                input,
                expected_outputs,
            })
            .collect(),
        metadata: SuiteMetadata {
            c_size: c.len(),
            w_size: w.len(),
            identification_size: z.len(),
            phi_sequences: seqs.len(),
            minimized_states: minimal.states.len(),
            infeasible_policy: "lexicographic-fallback".to_string(),
            fallback_sequences: fallback,
            dft_exhaustive: false,
            ..SuiteMetadata::default()
        },
    })
}

/// Outcome of replaying one case against an implementation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseVerdict {
    pub input: Vec<Symbol>,
    pub expected: Vec<Vec<Symbol>>,
    pub observed: Vec<Vec<Symbol>>,
}

/// First case whose observed output set differs from the expected one.
pub fn first_failing_case(
    suite: &TestSuite,
    mut observe: impl FnMut(&[Symbol]) -> Result<Vec<Vec<Symbol>>, RunError>,
) -> Result<Option<CaseVerdict>, RunError> {
    for case in &suite.cases {
        let observed = observe(&case.input)?;
        if observed != case.expected_outputs {
            return Ok(Some(CaseVerdict {
                input: case.input.clone(),
                expected: case.expected_outputs.clone(),
                observed,
            }));
        }
    }
    Ok(None)
}
