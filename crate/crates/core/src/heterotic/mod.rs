//! Base/Control systems: a P system wrapped as a communicating machine,
//! paired with a Control machine, run in alternating rounds and tested
//! through the product of the two.

mod file;
mod oracle;
mod run;

use std::collections::{BTreeMap, BTreeSet};

use crate::csxms::{
    generate_csxms_test_suite, validate_system, Csxm, CsxmError, CsxmSystem, ProductSxm,
};
use crate::psystem::{
    apply_assignment, choose_assignment, is_halted, maximal_rule_multisets, validate_psystem,
    PConfiguration, PSystem, PsError, DEFAULT_ASSIGNMENT_CAP,
};
use crate::suite::{ComponentMapping, TestSuite};
use crate::sxm::{Case, MemoryDomain, ProcessingFunction, Sxm, ValidationReport};
use crate::term::{Pattern, Term};
use crate::value::Value;

pub use file::{load_heterotic_system, HeteroticFile};
pub use oracle::{
    serve_oracle, simulate_to_halt, Oracle, OracleAnswer, OracleRequest, ProcessOracle,
    SimulatorOracle,
};
pub use run::{run_heterotic, Direction, Exchange, HeteroticTrace, RunEnd};

/// Input symbol the wrapped Base consumes on each of its ordinary steps.
pub const BASE_INPUT: &str = "go";
pub const OUT_STEPPED: &str = "stepped";
pub const OUT_HALTED: &str = "halted";
pub const OUT_LOADED: &str = "loaded";

pub const STATE_EXEC: &str = "exec";
pub const STATE_SEND: &str = "send";
pub const STATE_IDLE: &str = "idle";

pub const FN_STEP: &str = "step";
pub const FN_EMIT: &str = "emit";
pub const FN_LOAD: &str = "load";
pub const FN_SEND: &str = "send";

/// Component positions in the combined system.
pub const BASE: usize = 1;
pub const CONTROL: usize = 2;

/// How the wrapped Base resolves a choice between maximal assignments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchChoice {
    Seeded(u64),
    /// Keep every branch. The wrapped machine is then relational and cannot
    /// be run or tested, but it can be inspected.
    AllBranches,
}

impl BranchChoice {
    pub fn seed(self) -> Option<u64> {
        match self {
            BranchChoice::Seeded(s) => Some(s),
            BranchChoice::AllBranches => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WrapOptions {
    pub depth_cap: usize,
    pub branch: BranchChoice,
    /// Extra configurations the Base must accept on its in-port, besides
    /// the initial one.
    pub starts: Vec<PConfiguration>,
}

/// A P system wrapped as the Base component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WrappedBase {
    pub csxm: Csxm,
    pub psystem: PSystem,
    pub branch: BranchChoice,
    pub depth_cap: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeteroticSystem {
    pub base: Csxm,
    pub control: Csxm,
    /// Base is component 1, Control component 2.
    pub as_system: CsxmSystem,
    pub psystem: PSystem,
    pub branch: BranchChoice,
    pub depth_cap: usize,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum HeteroticError {
    #[error("P system is invalid: {} violation(s)", .0.violations.len())]
    InvalidPSystem(ValidationReport),
    #[error("P system did not halt within {cap} steps from {start}")]
    DepthCapExceeded { start: PConfiguration, cap: usize },
    #[error("Base and Control ports are incompatible: {0}")]
    PortIncompatibility(String),
    #[error("system is invalid: {} violation(s)", .0.violations.len())]
    Invalid(ValidationReport),
    #[error("at least one round is required")]
    ZeroRounds,
    #[error("component {component} has more than one possible move")]
    Nondeterministic { component: usize },
    #[error("deadlock in round {round}: {reason}")]
    Deadlock { round: usize, reason: String },
    #[error("invalid configuration crossing a port: {0}")]
    InvalidExchange(String),
    #[error("oracle gave no answer within {ms} ms after {attempts} attempt(s)")]
    OracleTimeout { ms: u64, attempts: u32 },
    #[error("oracle returned an invalid result: {0}")]
    OracleInvalidResult(String),
    #[error("oracle i/o: {0}")]
    OracleIo(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Parse(String),
    #[error(transparent)]
    PSystem(#[from] PsError),
    #[error(transparent)]
    Csxms(#[from] CsxmError),
}

/// Configurations reachable from `start` before halting, with their
/// successors under `branch`. Fails if some computation from `start` is
/// still running after `cap` steps.
fn explore(
    ps: &PSystem,
    start: &PConfiguration,
    branch: BranchChoice,
    cap: usize,
    table: &mut BTreeMap<PConfiguration, BTreeSet<PConfiguration>>,
    halted: &mut BTreeSet<PConfiguration>,
) -> Result<(), HeteroticError> {
    let mut level = BTreeSet::from([start.clone()]);
    for depth in 0..=cap {
        let mut next = BTreeSet::new();
        for cfg in &level {
            if is_halted(ps, cfg) {
                halted.insert(cfg.clone());
                continue;
            }
            if depth == cap {
                return Err(HeteroticError::DepthCapExceeded {
                    start: start.clone(),
                    cap,
                });
            }
            let succ = match table.get(cfg) {
                Some(s) => s.clone(),
                None => {
                    let s: BTreeSet<PConfiguration> = match branch {
                        BranchChoice::Seeded(seed) => {
                            let a = choose_assignment(ps, cfg, seed)?;
                            BTreeSet::from([apply_assignment(ps, cfg, &a)?])
                        }
                        BranchChoice::AllBranches => {
                            maximal_rule_multisets(ps, cfg, DEFAULT_ASSIGNMENT_CAP)?
                                .iter()
                                .map(|a| apply_assignment(ps, cfg, a))
                                .collect::<Result<_, _>>()?
                        }
                    };
                    table.insert(cfg.clone(), s.clone());
                    s
                }
            };
            next.extend(succ);
        }
        if next.is_empty() {
            break;
        }
        level = next;
    }
    Ok(())
}

fn lit(cfg: &PConfiguration) -> Value {
    cfg.to_value()
}

/// Wraps `ps` as a communicating machine with states `exec`, `send` and
/// `idle`.
///
/// In `exec`, `step` performs one maximally parallel step while the
/// configuration in memory is not halted, and `emit` copies a halted
/// configuration to the out-port and moves to `send`. The communicating
/// `send` delivers it to Control and waits in `idle`, where `load` takes a
/// new configuration from the in-port and re-enters `exec`.
///
/// `step` and `emit` are literal case tables over the configurations
/// reachable from the initial configuration and the extra starts.
pub fn wrap_psystem_as_csxm(
    ps: &PSystem,
    opts: &WrapOptions,
) -> Result<WrappedBase, HeteroticError> {
    let report = validate_psystem(ps);
    if !report.is_valid() {
        return Err(HeteroticError::InvalidPSystem(report));
    }
    let mut starts = BTreeSet::from([ps.initial_configuration()]);
    for s in &opts.starts {
        ps.check_configuration(s)?;
        starts.insert(s.clone());
    }
    let mut table = BTreeMap::new();
    let mut halted = BTreeSet::new();
    for s in &starts {
        explore(ps, s, opts.branch, opts.depth_cap, &mut table, &mut halted)?;
    }
    let mut step_cases = Vec::new();
    for (cfg, succ) in &table {
        for next in succ {
            step_cases.push(Case::simple(
                Pattern::Lit(lit(cfg)),
                BASE_INPUT,
                OUT_STEPPED,
                Term::Lit(lit(next)),
            ));
        }
    }
    let emit_cases: Vec<Case> = halted
        .iter()
        .map(|cfg| Case {
            out_port: Some(Term::Lit(lit(cfg))),
            ..Case::simple(
                Pattern::Lit(lit(cfg)),
                BASE_INPUT,
                OUT_HALTED,
                Term::Lit(lit(cfg)),
            )
        })
        .collect();
    let load = Case {
        port: Some(Pattern::Var("c".into())),
        ..Case::simple(Pattern::Any, BASE_INPUT, OUT_LOADED, Term::Var("c".into()))
    };
    let send = Case {
        mem_pattern: Pattern::Var("m".into()),
        guard: Vec::new(),
        input: None,
        output: None,
        mem_next: Term::Var("m".into()),
        port: None,
        out_port: None,
        send_to: Some(CONTROL),
    };
    let memory: BTreeSet<Value> = table
        .iter()
        .flat_map(|(c, s)| std::iter::once(c).chain(s))
        .chain(&halted)
        .chain(&starts)
        .map(lit)
        .collect();
    let next_state = [
        ((STATE_EXEC, FN_STEP), STATE_EXEC),
        ((STATE_EXEC, FN_EMIT), STATE_SEND),
        ((STATE_SEND, FN_SEND), STATE_IDLE),
        ((STATE_IDLE, FN_LOAD), STATE_EXEC),
    ]
    .into_iter()
    .map(|((q, f), t)| {
        (
            (q.to_string(), f.to_string()),
            BTreeSet::from([t.to_string()]),
        )
    })
    .collect();
    let set = |xs: &[&str]| {
        xs.iter()
            .map(|s| s.to_string())
            .collect::<BTreeSet<String>>()
    };
    let base = Sxm {
        inputs: set(&[BASE_INPUT]),
        outputs: set(&[OUT_STEPPED, OUT_HALTED, OUT_LOADED]),
        states: set(&[STATE_EXEC, STATE_SEND, STATE_IDLE]),
        initial_states: set(&[STATE_EXEC]),
        terminal_states: set(&[STATE_IDLE]),
        memory_domain: MemoryDomain::Finite(memory),
        initial_memory: lit(&ps.initial_configuration()),
        functions: vec![
            ProcessingFunction {
                name: FN_STEP.into(),
                cases: step_cases,
            },
            ProcessingFunction {
                name: FN_EMIT.into(),
                cases: emit_cases,
            },
            ProcessingFunction {
                name: FN_LOAD.into(),
                cases: vec![load],
            },
            ProcessingFunction {
                name: FN_SEND.into(),
                cases: vec![send],
            },
        ],
        next_state,
    };
    let csxm = Csxm {
        base,
        in_port_domain: starts.iter().map(lit).collect(),
        out_port_domain: halted.iter().map(lit).collect(),
        ordinary_states: set(&[STATE_EXEC, STATE_IDLE]),
        communicating_states: set(&[STATE_SEND]),
        ordinary_functions: vec![FN_STEP.into(), FN_EMIT.into(), FN_LOAD.into()],
        communicating_functions: vec![FN_SEND.into()],
    };
    Ok(WrappedBase {
        csxm,
        psystem: ps.clone(),
        branch: opts.branch,
        depth_cap: opts.depth_cap,
    })
}

/// Pairs a wrapped Base with a Control machine. Control's out-port values
/// must be configurations the Base accepts, and every configuration the
/// Base can emit must be acceptable on Control's in-port.
pub fn build_heterotic_system(
    base: WrappedBase,
    control: Csxm,
) -> Result<HeteroticSystem, HeteroticError> {
    for v in &control.out_port_domain {
        let cfg = PConfiguration::from_value(v).ok_or_else(|| {
            HeteroticError::PortIncompatibility(format!(
                "Control may send {v}, which is not a configuration"
            ))
        })?;
        base.psystem.check_configuration(&cfg).map_err(|e| {
            HeteroticError::PortIncompatibility(format!("Control may send {cfg}: {e}"))
        })?;
        if !base.csxm.in_port_domain.contains(v) {
            return Err(HeteroticError::PortIncompatibility(format!(
                "Control may send {cfg}, which the Base was not prepared to start from"
            )));
        }
    }
    if let Some(v) = base
        .csxm
        .out_port_domain
        .iter()
        .find(|v| !control.in_port_domain.contains(*v))
    {
        let shown = PConfiguration::from_value(v).map_or_else(|| v.to_string(), |c| c.to_string());
        return Err(HeteroticError::PortIncompatibility(format!(
            "the Base may emit {shown}, which Control does not accept"
        )));
    }
    let as_system = CsxmSystem {
        components: vec![base.csxm.clone(), control.clone()],
    };
    let report = validate_system(&as_system);
    if !report.is_valid() {
        return Err(HeteroticError::Invalid(report));
    }
    Ok(HeteroticSystem {
        base: base.csxm,
        control,
        as_system,
        psystem: base.psystem,
        branch: base.branch,
        depth_cap: base.depth_cap,
    })
}

/// Test suite of the combined system through its product machine, with the
/// components marked as Base and Control.
pub fn generate_integration_tests(
    h: &HeteroticSystem,
    k: usize,
) -> Result<(TestSuite, ProductSxm), HeteroticError> {
    let (mut suite, product) = generate_csxms_test_suite(&h.as_system, k)?;
    suite.metadata.components = vec![
        ComponentMapping {
            position: BASE,
            component: BASE,
            role: Some("base".into()),
        },
        ComponentMapping {
            position: CONTROL,
            component: CONTROL,
            role: Some("control".into()),
        },
    ];
    suite.metadata.seed = h.branch.seed();
    Ok((suite, product))
}
