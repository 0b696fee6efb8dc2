//! Stream X-machines: data model, configuration changes, the computed
//! relation, and the associated automaton.

mod file;
mod validate;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::automaton::Automaton;
use crate::term::{Bindings, Guard, Pattern, Term};
use crate::value::Value;

pub use file::{CaseFile, DomainFile, FunctionFile, NextStateFile, SxmFile};
pub(crate) use validate::validate_machine;
pub use validate::{validate_sxm, ValidationReport, Violation, ViolationKind};

pub type Symbol = String;
pub type StateId = String;

/// Ranges larger than this are not enumerated.
pub const MAX_ENUMERATED_DOMAIN: usize = 1 << 16;

/// The declared memory set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MemoryDomain {
    Finite(BTreeSet<Value>),
    Range {
        lo: i64,
        hi: i64,
    },
    /// Possibly infinite; checks quantify over the finite sample only.
    Open {
        sample: BTreeSet<Value>,
    },
}

/// Memory values a check quantifies over.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MemorySpace {
    pub values: Vec<Value>,
    /// True when `values` is the whole declared domain.
    pub exhaustive: bool,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq, Serialize)]
pub enum DomainError {
    #[error("open memory domain declares no test sample")]
    MissingSample,
    #[error("memory range {lo}..={hi} is too large to enumerate")]
    TooLarge { lo: i64, hi: i64 },
}

impl MemoryDomain {
    /// `Some(membership)` for declared domains, `None` for open ones.
    pub fn contains(&self, v: &Value) -> Option<bool> {
        match self {
            MemoryDomain::Finite(set) => Some(set.contains(v)),
            MemoryDomain::Range { lo, hi } => {
                Some(v.as_int().is_some_and(|i| *lo <= i && i <= *hi))
            }
            MemoryDomain::Open { .. } => None,
        }
    }

    pub fn space(&self) -> Result<MemorySpace, DomainError> {
        match self {
            MemoryDomain::Finite(set) => Ok(MemorySpace {
                values: set.iter().cloned().collect(),
                exhaustive: true,
            }),
            MemoryDomain::Range { lo, hi } => {
                let len = (*hi as i128 - *lo as i128 + 1).max(0);
                if len > MAX_ENUMERATED_DOMAIN as i128 {
                    return Err(DomainError::TooLarge { lo: *lo, hi: *hi });
                }
                Ok(MemorySpace {
                    values: (*lo..=*hi).map(Value::Int).collect(),
                    exhaustive: true,
                })
            }
            MemoryDomain::Open { sample } if sample.is_empty() => Err(DomainError::MissingSample),
            MemoryDomain::Open { sample } => Ok(MemorySpace {
                values: sample.iter().cloned().collect(),
                exhaustive: false,
            }),
        }
    }
}

/// How a case treats the component's input port.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PortUse<'a> {
    /// Plain SXM evaluation, or the "ignore the port" route of an ordinary
    /// function: only cases without a port pattern apply.
    Ignore,
    /// The consume route of an ordinary function: only cases with a port
    /// pattern apply, matched against the (non-⊥) port value.
    Consume(&'a Value),
    /// Communicating functions: a port pattern, if present, is matched
    /// against the current port value; absent patterns accept anything.
    Inspect(&'a Value),
}

/// One row of a processing function's case table.
///
/// The `port`, `out_port` and `send_to` fields are only meaningful for
/// components of a communicating system.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Case {
    pub mem_pattern: Pattern,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub guard: Vec<Guard>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<Symbol>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<Symbol>,
    pub mem_next: Term,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub port: Option<Pattern>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_port: Option<Term>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub send_to: Option<usize>,
}

/// Result of a case that applied.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseOutcome {
    pub memory: Value,
    /// New out-port value when the case writes one.
    pub out_port: Option<Value>,
}

/// Case evaluation failed after the patterns matched: the case is ill-typed
/// at this point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseEvalError(pub String);

impl Case {
    pub fn simple(mem_pattern: Pattern, input: &str, output: &str, mem_next: Term) -> Self {
        Case {
            mem_pattern,
            guard: Vec::new(),
            input: Some(input.to_string()),
            output: Some(output.to_string()),
            mem_next,
            port: None,
            out_port: None,
            send_to: None,
        }
    }

    /// Evaluates the case on `memory` under the given port treatment.
    /// Input symbols are not checked here.
    pub fn eval(
        &self,
        memory: &Value,
        port: PortUse<'_>,
    ) -> Result<Option<CaseOutcome>, CaseEvalError> {
        let mut b = Bindings::new();
        if !self.mem_pattern.matches(memory, &mut b) {
            return Ok(None);
        }
        match (port, &self.port) {
            (PortUse::Ignore, None) => {}
            (PortUse::Ignore, Some(_)) | (PortUse::Consume(_), None) => return Ok(None),
            (PortUse::Consume(v), Some(p)) | (PortUse::Inspect(v), Some(p)) => {
                if !p.matches(v, &mut b) {
                    return Ok(None);
                }
            }
            (PortUse::Inspect(_), None) => {}
        }
        for g in &self.guard {
            match g.holds(&b) {
                Ok(true) => {}
                Ok(false) => return Ok(None),
                Err(e) => return Err(CaseEvalError(e.to_string())),
            }
        }
        let memory = self
            .mem_next
            .eval(&b)
            .map_err(|e| CaseEvalError(e.to_string()))?;
        let out_port = match &self.out_port {
            Some(t) => Some(t.eval(&b).map_err(|e| CaseEvalError(e.to_string()))?),
            None => None,
        };
        Ok(Some(CaseOutcome { memory, out_port }))
    }

    /// Like [`Case::eval`], treating evaluation errors as "does not apply".
    pub fn apply(&self, memory: &Value, port: PortUse<'_>) -> Option<CaseOutcome> {
        self.eval(memory, port).ok().flatten()
    }
}

/// A named partial function `M × Σ ⇸ Γ × M`, written as a case table.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessingFunction {
    pub name: String,
    pub cases: Vec<Case>,
}

impl ProcessingFunction {
    /// Every `(output, memory')` produced by a matching case, in case order.
    /// Well-formed functions produce at most one.
    pub fn apply(&self, memory: &Value, input: &str) -> Vec<(Symbol, Value)> {
        self.cases
            .iter()
            .filter(|c| c.input.as_deref() == Some(input))
            .filter_map(|c| {
                let out = c.output.clone()?;
                c.apply(memory, PortUse::Ignore).map(|o| (out, o.memory))
            })
            .collect()
    }
}

/// A stream X-machine.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sxm {
    pub inputs: BTreeSet<Symbol>,
    pub outputs: BTreeSet<Symbol>,
    pub states: BTreeSet<StateId>,
    pub initial_states: BTreeSet<StateId>,
    pub terminal_states: BTreeSet<StateId>,
    pub memory_domain: MemoryDomain,
    pub initial_memory: Value,
    pub functions: Vec<ProcessingFunction>,
    /// The next-state relation `F: Q × Φ ⇸ 2^Q`.
    pub next_state: BTreeMap<(StateId, String), BTreeSet<StateId>>,
}

/// `(m, q, s, g)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SxmConfiguration {
    pub memory: Value,
    pub state: StateId,
    pub remaining_input: Vec<Symbol>,
    pub output_so_far: Vec<Symbol>,
}

/// One configuration change together with the function that caused it.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct SxmMove {
    pub function: String,
    pub input: Symbol,
    pub output: Symbol,
    pub successor: SxmConfiguration,
}

/// One element of the computed relation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RunResult {
    pub output: Vec<Symbol>,
    pub final_configuration: SxmConfiguration,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum RunError {
    #[error("branch bound must be at least 1")]
    ZeroBranchBound,
    #[error("more than {bound} simultaneous branches after {consumed} input symbols")]
    BranchBoundExceeded {
        bound: usize,
        consumed: usize,
        frontier: Vec<SxmConfiguration>,
    },
}

impl Sxm {
    pub fn function(&self, name: &str) -> Option<&ProcessingFunction> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn function_names(&self) -> Vec<String> {
        self.functions.iter().map(|f| f.name.clone()).collect()
    }

    /// `φ(m, ι)` for the named function.
    pub fn apply(&self, function: &str, memory: &Value, input: &str) -> Vec<(Symbol, Value)> {
        self.function(function)
            .map(|f| f.apply(memory, input))
            .unwrap_or_default()
    }

    pub fn targets(&self, state: &str, function: &str) -> Option<&BTreeSet<StateId>> {
        self.next_state
            .get(&(state.to_string(), function.to_string()))
    }

    /// Functions with at least one arc leaving `state`, sorted by name.
    pub fn functions_at(&self, state: &str) -> Vec<&str> {
        self.next_state
            .keys()
            .filter(|(q, _)| q == state)
            .map(|(_, f)| f.as_str())
            .collect()
    }

    pub fn initial_configurations(&self, input: &[Symbol]) -> Vec<SxmConfiguration> {
        self.initial_states
            .iter()
            .map(|q| SxmConfiguration {
                memory: self.initial_memory.clone(),
                state: q.clone(),
                remaining_input: input.to_vec(),
                output_so_far: Vec::new(),
            })
            .collect()
    }

    pub fn is_final(&self, cfg: &SxmConfiguration) -> bool {
        cfg.remaining_input.is_empty() && self.terminal_states.contains(&cfg.state)
    }

    /// Every configuration change available from `cfg`, labelled.
    pub fn moves(&self, cfg: &SxmConfiguration) -> Vec<SxmMove> {
        let Some((head, rest)) = cfg.remaining_input.split_first() else {
            return Vec::new();
        };
        let mut out = BTreeSet::new();
        for ((q, fname), targets) in self.next_state.range((cfg.state.clone(), String::new())..) {
            if q != &cfg.state {
                break;
            }
            for (o, m) in self.apply(fname, &cfg.memory, head) {
                for t in targets {
                    let mut output = cfg.output_so_far.clone();
                    output.push(o.clone());
                    out.insert(SxmMove {
                        function: fname.clone(),
                        input: head.clone(),
                        output: o.clone(),
                        successor: SxmConfiguration {
                            memory: m.clone(),
                            state: t.clone(),
                            remaining_input: rest.to_vec(),
                            output_so_far: output,
                        },
                    });
                }
            }
        }
        out.into_iter().collect()
    }

    /// All configurations reachable in one configuration change.
    pub fn step(&self, cfg: &SxmConfiguration) -> Vec<SxmConfiguration> {
        self.moves(cfg)
            .into_iter()
            .map(|m| m.successor)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// The computed relation on one input: every `(output, final
    /// configuration)` reachable from an initial configuration, with at
    /// most `branch_bound` configurations alive at once.
    pub fn run(&self, input: &[Symbol], branch_bound: usize) -> Result<Vec<RunResult>, RunError> {
        if branch_bound == 0 {
            return Err(RunError::ZeroBranchBound);
        }
        let mut frontier: BTreeSet<SxmConfiguration> =
            self.initial_configurations(input).into_iter().collect();
        for consumed in 0..input.len() {
            if frontier.len() > branch_bound {
                return Err(RunError::BranchBoundExceeded {
                    bound: branch_bound,
                    consumed,
                    frontier: frontier.into_iter().collect(),
                });
            }
            frontier = frontier.iter().flat_map(|c| self.step(c)).collect();
            if frontier.is_empty() {
                break;
            }
        }
        if frontier.len() > branch_bound {
            return Err(RunError::BranchBoundExceeded {
                bound: branch_bound,
                consumed: input.len(),
                frontier: frontier.into_iter().collect(),
            });
        }
        Ok(frontier
            .into_iter()
            .filter(|c| self.is_final(c))
            .map(|c| RunResult {
                output: c.output_so_far.clone(),
                final_configuration: c,
            })
            .collect())
    }

    /// The set of output sequences computed for `input`.
    pub fn outputs(
        &self,
        input: &[Symbol],
        branch_bound: usize,
    ) -> Result<BTreeSet<Vec<Symbol>>, RunError> {
        Ok(self
            .run(input, branch_bound)?
            .into_iter()
            .map(|r| r.output)
            .collect())
    }

    pub fn associated_automaton(&self) -> Automaton {
        let mut a = Automaton {
            states: self.states.clone(),
            initial: self.initial_states.clone(),
            terminal: self.terminal_states.clone(),
            ..Automaton::default()
        };
        for ((q, f), targets) in &self.next_state {
            for t in targets {
                a.add_arc(q, f, t);
            }
        }
        a
    }
}

pub fn sxm_step(model: &Sxm, cfg: &SxmConfiguration) -> Vec<SxmConfiguration> {
    model.step(cfg)
}

pub fn sxm_run(
    model: &Sxm,
    input: &[Symbol],
    branch_bound: usize,
) -> Result<Vec<RunResult>, RunError> {
    model.run(input, branch_bound)
}

pub fn associated_automaton(model: &Sxm) -> Automaton {
    model.associated_automaton()
}

/// Splits a whitespace-separated symbol list.
pub fn symbols(text: &str) -> Vec<Symbol> {
    text.split_whitespace().map(str::to_string).collect()
}
