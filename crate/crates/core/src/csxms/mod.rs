//! Communicating stream X-machine systems: components with one input and
//! one output port, ordinary and communicating configuration changes, the
//! testing extension and the product machine.

mod file;
mod product;
mod testing;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::sxm::{
    validate_machine, Case, CaseOutcome, DomainError, PortUse, Sxm, SxmConfiguration, Symbol,
    ValidationReport, ViolationKind,
};
use crate::value::Value;

pub use file::{CsxmFile, SystemFile};
pub use product::{build_product_sxm, tuple_name, ProductSxm, MAX_PRODUCT_MEMORIES};
pub use testing::{
    check_component_dft, check_product_determinism, generate_csxms_test_suite, replay_on_system,
    CsxmView,
};

/// Extra input symbol consumed by extended communicating functions.
pub const COMM_INPUT: &str = "a";

/// Output symbol `[i,j]` of the `j`-th communicating function of component
/// `i` (both 1-based).
pub fn comm_output(component: usize, position: usize) -> String {
    format!("[{component},{position}]")
}

/// One component: an SXM with ports and a split into ordinary and
/// communicating states and functions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Csxm {
    pub base: Sxm,
    pub in_port_domain: BTreeSet<Value>,
    pub out_port_domain: BTreeSet<Value>,
    pub ordinary_states: BTreeSet<String>,
    pub communicating_states: BTreeSet<String>,
    pub ordinary_functions: Vec<String>,
    /// Declaration order fixes the `j` of the `[i,j]` testing outputs.
    pub communicating_functions: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CsxmSystem {
    pub components: Vec<Csxm>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ComponentConfiguration {
    pub memory: Value,
    pub state: String,
    pub remaining_input: Vec<Symbol>,
    pub output_so_far: Vec<Symbol>,
    pub in_port: Value,
    pub out_port: Value,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SystemConfiguration {
    pub components: Vec<ComponentConfiguration>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MoveKind {
    /// The in-port was left alone.
    Ordinary,
    /// The in-port value was consumed.
    OrdinaryConsume,
    /// The out-port value was delivered to `target`'s in-port.
    Communicating { target: usize },
}

/// One system configuration change. `component` is 1-based.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SystemMove {
    pub component: usize,
    pub function: String,
    pub kind: MoveKind,
    pub input: Option<Symbol>,
    pub output: Option<Symbol>,
    pub successor: SystemConfiguration,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum CsxmError {
    #[error("system is invalid: {} violation(s)", .0.violations.len())]
    Invalid(ValidationReport),
    #[error("symbol {symbol:?} of component {component} collides with a testing symbol")]
    AlphabetCollision { component: usize, symbol: String },
    #[error("system has not been extended for testing")]
    UnextendedSystem,
    #[error("component {component} fails its design-for-test conditions")]
    DftFailure {
        component: usize,
        report: Box<crate::dft::DftReport>,
    },
    #[error(transparent)]
    Dft(#[from] crate::dft::DftError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("product is nondeterministic at state {state} on input {input}: {labels:?}")]
    NondeterministicProduct {
        state: String,
        input: String,
        labels: Vec<String>,
    },
    #[error("product memory exceeds {limit} values")]
    ProductTooLarge { limit: usize },
    #[error(transparent)]
    Suite(#[from] crate::suite::SuiteError),
}

impl Csxm {
    pub fn is_communicating(&self, function: &str) -> bool {
        self.communicating_functions.iter().any(|f| f == function)
    }

    /// 1-based position among the communicating functions.
    pub fn communicating_position(&self, function: &str) -> Option<usize> {
        self.communicating_functions
            .iter()
            .position(|f| f == function)
            .map(|p| p + 1)
    }

    fn port_value_ok(domain: &BTreeSet<Value>, v: &Value) -> bool {
        v.is_undefined() || domain.contains(v)
    }

    fn memory_ok(&self, m: &Value) -> bool {
        self.base.memory_domain.contains(m) != Some(false)
    }

    /// Applies an ordinary function to one component, offering `input`.
    /// Returns `(kind, output, component')` per enabled case.
    pub fn ordinary_moves(
        &self,
        function: &str,
        cfg: &ComponentConfiguration,
        input: &str,
    ) -> Vec<(MoveKind, Symbol, ComponentConfiguration)> {
        let Some(f) = self.base.function(function) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for case in f.cases.iter().filter(|c| c.input.as_deref() == Some(input)) {
            let (kind, port_use) = match &case.port {
                None => (MoveKind::Ordinary, PortUse::Ignore),
                Some(_) if cfg.in_port.is_undefined() => continue,
                Some(_) => (MoveKind::OrdinaryConsume, PortUse::Consume(&cfg.in_port)),
            };
            let (Some(o), Some(res)) = (&case.output, case.apply(&cfg.memory, port_use)) else {
                continue;
            };
            let Some(next) = self.ordinary_result(cfg, kind == MoveKind::OrdinaryConsume, res)
            else {
                continue;
            };
            out.push((kind, o.clone(), next));
        }
        out
    }

    fn ordinary_result(
        &self,
        cfg: &ComponentConfiguration,
        consumed: bool,
        res: CaseOutcome,
    ) -> Option<ComponentConfiguration> {
        let out_port = res.out_port.unwrap_or_else(|| cfg.out_port.clone());
        if !self.memory_ok(&res.memory) || !Self::port_value_ok(&self.out_port_domain, &out_port) {
            return None;
        }
        Some(ComponentConfiguration {
            memory: res.memory,
            state: cfg.state.clone(),
            remaining_input: cfg.remaining_input.clone(),
            output_so_far: cfg.output_so_far.clone(),
            in_port: if consumed {
                Value::undefined()
            } else {
                cfg.in_port.clone()
            },
            out_port,
        })
    }

    /// Communicating cases of `function` applicable to `cfg`, with the new
    /// memory. Port conditions on the receiver are checked by the caller.
    pub fn communicating_cases<'a>(
        &'a self,
        function: &str,
        cfg: &ComponentConfiguration,
    ) -> Vec<(&'a Case, Value)> {
        let Some(f) = self.base.function(function) else {
            return Vec::new();
        };
        if cfg.out_port.is_undefined() {
            return Vec::new();
        }
        f.cases
            .iter()
            .filter_map(|c| {
                let res = c.apply(&cfg.memory, PortUse::Inspect(&cfg.in_port))?;
                self.memory_ok(&res.memory).then_some((c, res.memory))
            })
            .collect()
    }
}

impl CsxmSystem {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// True when every communicating case has the extended shape.
    pub fn is_extended(&self) -> bool {
        self.components.iter().enumerate().all(|(idx, c)| {
            c.communicating_functions.iter().all(|name| {
                let j = c.communicating_position(name).unwrap_or(0);
                let expected = comm_output(idx + 1, j);
                c.base.function(name).is_some_and(|f| {
                    f.cases.iter().all(|case| {
                        case.input.as_deref() == Some(COMM_INPUT)
                            && case.output.as_deref() == Some(expected.as_str())
                    })
                })
            })
        })
    }

    pub fn has_communicating_functions(&self) -> bool {
        self.components
            .iter()
            .any(|c| !c.communicating_functions.is_empty())
    }

    /// All initial configurations, with the given per-component input
    /// streams (missing streams are empty). Ports start undefined.
    pub fn initial_configurations(&self, inputs: &[Vec<Symbol>]) -> Vec<SystemConfiguration> {
        let mut configs = vec![SystemConfiguration {
            components: Vec::new(),
        }];
        for (i, c) in self.components.iter().enumerate() {
            let stream = inputs.get(i).cloned().unwrap_or_default();
            let mut next = Vec::new();
            for partial in &configs {
                for q in &c.base.initial_states {
                    let mut p = partial.clone();
                    p.components.push(ComponentConfiguration {
                        memory: c.base.initial_memory.clone(),
                        state: q.clone(),
                        remaining_input: stream.clone(),
                        output_so_far: Vec::new(),
                        in_port: Value::undefined(),
                        out_port: Value::undefined(),
                    });
                    next.push(p);
                }
            }
            configs = next;
        }
        configs
    }

    pub fn initial_configuration(&self) -> SystemConfiguration {
        self.initial_configurations(&[])
            .into_iter()
            .next()
            .unwrap_or(SystemConfiguration {
                components: Vec::new(),
            })
    }

    pub fn is_final(&self, cfg: &SystemConfiguration) -> bool {
        self.components
            .iter()
            .zip(&cfg.components)
            .all(|(c, k)| k.remaining_input.is_empty() && c.base.terminal_states.contains(&k.state))
    }

    /// Every configuration change available from `cfg`, ordered by
    /// component index, then function name, then successor.
    pub fn moves(&self, cfg: &SystemConfiguration) -> Vec<SystemMove> {
        let mut out = BTreeSet::new();
        for (idx, (c, k)) in self.components.iter().zip(&cfg.components).enumerate() {
            for fname in c.base.functions_at(&k.state) {
                let Some(targets) = c.base.targets(&k.state, fname) else {
                    continue;
                };
                if c.is_communicating(fname) {
                    self.communicating_moves(idx, c, fname, cfg, targets, &mut out);
                    continue;
                }
                let Some((head, rest)) = k.remaining_input.split_first() else {
                    continue;
                };
                for (kind, o, mut next) in c.ordinary_moves(fname, k, head) {
                    next.remaining_input = rest.to_vec();
                    next.output_so_far.push(o.clone());
                    for t in targets {
                        let mut succ = cfg.clone();
                        next.state = t.clone();
                        succ.components[idx] = next.clone();
                        out.insert(SystemMove {
                            component: idx + 1,
                            function: fname.to_string(),
                            kind: kind.clone(),
                            input: Some(head.clone()),
                            output: Some(o.clone()),
                            successor: succ,
                        });
                    }
                }
            }
        }
        out.into_iter().collect()
    }

    fn communicating_moves(
        &self,
        idx: usize,
        c: &Csxm,
        fname: &str,
        cfg: &SystemConfiguration,
        targets: &BTreeSet<String>,
        out: &mut BTreeSet<SystemMove>,
    ) {
        let k = &cfg.components[idx];
        for (case, memory) in c.communicating_cases(fname, k) {
            let Some(target) = case
                .send_to
                .filter(|&t| t >= 1 && t <= self.len() && t != idx + 1)
            else {
                continue;
            };
            let receiver = &cfg.components[target - 1];
            if !receiver.in_port.is_undefined()
                || !Csxm::port_value_ok(&self.components[target - 1].in_port_domain, &k.out_port)
            {
                continue;
            }
            let mut sender = k.clone();
            if let Some(sym) = &case.input {
                match sender.remaining_input.split_first() {
                    Some((head, rest)) if head == sym => sender.remaining_input = rest.to_vec(),
                    _ => continue,
                }
            }
            if let Some(o) = &case.output {
                sender.output_so_far.push(o.clone());
            }
            sender.memory = memory;
            sender.out_port = Value::undefined();
            for t in targets {
                let mut succ = cfg.clone();
                let mut s = sender.clone();
                s.state = t.clone();
                succ.components[idx] = s;
                succ.components[target - 1].in_port = k.out_port.clone();
                out.insert(SystemMove {
                    component: idx + 1,
                    function: fname.to_string(),
                    kind: MoveKind::Communicating { target },
                    input: case.input.clone(),
                    output: case.output.clone(),
                    successor: succ,
                });
            }
        }
    }
}

/// All configurations reachable in one configuration change.
pub fn system_step(sys: &CsxmSystem, cfg: &SystemConfiguration) -> Vec<SystemConfiguration> {
    sys.moves(cfg)
        .into_iter()
        .map(|m| m.successor)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Rewrites every communicating function `j` of component `i` to consume
/// [`COMM_INPUT`] and emit `[i,j]`. Systems without communicating functions
/// are returned unchanged.
pub fn extend_for_testing(sys: &CsxmSystem) -> Result<CsxmSystem, CsxmError> {
    if !sys.has_communicating_functions() {
        return Ok(sys.clone());
    }
    let mut reserved: BTreeSet<String> = [COMM_INPUT.to_string()].into_iter().collect();
    for (idx, c) in sys.components.iter().enumerate() {
        for j in 1..=c.communicating_functions.len() {
            reserved.insert(comm_output(idx + 1, j));
        }
    }
    for (idx, c) in sys.components.iter().enumerate() {
        if let Some(s) = c
            .base
            .inputs
            .iter()
            .chain(&c.base.outputs)
            .find(|s| reserved.contains(*s))
        {
            return Err(CsxmError::AlphabetCollision {
                component: idx + 1,
                symbol: s.clone(),
            });
        }
    }
    let mut out = sys.clone();
    for (idx, c) in out.components.iter_mut().enumerate() {
        if c.communicating_functions.is_empty() {
            continue;
        }
        c.base.inputs.insert(COMM_INPUT.to_string());
        for (j, name) in c.communicating_functions.clone().iter().enumerate() {
            let symbol = comm_output(idx + 1, j + 1);
            c.base.outputs.insert(symbol.clone());
            if let Some(f) = c.base.functions.iter_mut().find(|f| &f.name == name) {
                for case in &mut f.cases {
                    case.input = Some(COMM_INPUT.to_string());
                    case.output = Some(symbol.clone());
                }
            }
        }
    }
    Ok(out)
}

/// Well-formedness of a system: each component as an SXM, the state and
/// function partitions, the next-state shape, ports and send targets.
pub fn validate_system(sys: &CsxmSystem) -> ValidationReport {
    let mut r = ValidationReport::default();
    if sys.components.is_empty() {
        r.push(
            ViolationKind::Structure,
            "components",
            "a system needs at least one component",
        );
    }
    let extended = sys.is_extended();
    for (idx, c) in sys.components.iter().enumerate() {
        let scope = format!("components/{}", idx + 1);
        r.extend(validate_component(sys, idx, c, extended).scoped(&scope));
    }
    r
}

fn validate_component(sys: &CsxmSystem, idx: usize, c: &Csxm, extended: bool) -> ValidationReport {
    let mut r = validate_machine(&c.base, true, &c.communicating_functions);
    let q = &c.base.states;

    if !c.ordinary_states.is_disjoint(&c.communicating_states) {
        r.push(
            ViolationKind::StatePartition,
            "states",
            "ordinary and communicating states overlap",
        );
    }
    let union: BTreeSet<String> = c
        .ordinary_states
        .union(&c.communicating_states)
        .cloned()
        .collect();
    if &union != q {
        r.push(
            ViolationKind::StatePartition,
            "states",
            "state partition does not cover exactly the states",
        );
    }
    let ord: BTreeSet<&String> = c.ordinary_functions.iter().collect();
    let com: BTreeSet<&String> = c.communicating_functions.iter().collect();
    let all: BTreeSet<&String> = c.base.functions.iter().map(|f| &f.name).collect();
    if !ord.is_disjoint(&com) {
        r.push(
            ViolationKind::FunctionPartition,
            "functions",
            "ordinary and communicating functions overlap",
        );
    }
    if ord.union(&com).cloned().collect::<BTreeSet<_>>() != all
        || ord.len() != c.ordinary_functions.len()
        || com.len() != c.communicating_functions.len()
    {
        r.push(
            ViolationKind::FunctionPartition,
            "functions",
            "function partition does not cover exactly the functions",
        );
    }
    for s in c
        .base
        .initial_states
        .iter()
        .filter(|s| !c.ordinary_states.contains(*s))
    {
        r.push(
            ViolationKind::StatePartition,
            "initial_states",
            format!("initial state {s:?} is not ordinary"),
        );
    }
    for ((from, fname), targets) in &c.base.next_state {
        let loc = format!("next_state/{from}/{fname}");
        let comm_fn = c.is_communicating(fname);
        if comm_fn != c.communicating_states.contains(from) {
            r.push(
                ViolationKind::StatePartition,
                &loc,
                "ordinary functions must leave ordinary states and communicating functions communicating states",
            );
        }
        if comm_fn {
            for t in targets.iter().filter(|t| !c.ordinary_states.contains(*t)) {
                r.push(
                    ViolationKind::StatePartition,
                    &loc,
                    format!("communicating change enters non-ordinary state {t:?}"),
                );
            }
        }
    }

    for (what, domain) in [
        ("in_port_domain", &c.in_port_domain),
        ("out_port_domain", &c.out_port_domain),
    ] {
        for v in domain.iter().filter(|v| !v.is_undefined()) {
            if c.base.memory_domain.contains(v) == Some(false) {
                r.push(
                    ViolationKind::PortDomain,
                    what,
                    format!("port value {v} is outside the memory domain"),
                );
            }
        }
    }

    for f in &c.base.functions {
        let comm = c.is_communicating(&f.name);
        let j = c.communicating_position(&f.name).unwrap_or(0);
        for (ci, case) in f.cases.iter().enumerate() {
            let loc = format!("functions/{}/cases/{ci}", f.name);
            if comm {
                match case.send_to {
                    Some(t) if t >= 1 && t <= sys.len() && t != idx + 1 => {}
                    Some(t) => r.push(
                        ViolationKind::Communication,
                        &loc,
                        format!("send target {t} is not another component"),
                    ),
                    None => r.push(
                        ViolationKind::Communication,
                        &loc,
                        "communicating case needs a send target",
                    ),
                }
                if case.out_port.is_some() {
                    r.push(
                        ViolationKind::Communication,
                        &loc,
                        "communicating cases clear the out-port and cannot write it",
                    );
                }
                let shape_ok = if extended {
                    case.input.as_deref() == Some(COMM_INPUT)
                        && case.output == Some(comm_output(idx + 1, j))
                } else {
                    case.input.is_none() && case.output.is_none()
                };
                if !shape_ok {
                    r.push(
                        ViolationKind::CaseShape,
                        &loc,
                        "communicating cases consume no input and emit no output until extended for testing",
                    );
                }
            } else if case.send_to.is_some() {
                r.push(
                    ViolationKind::Communication,
                    &loc,
                    "only communicating cases send",
                );
            }
        }
    }
    r
}

/// The component's SXM configuration, dropping the ports.
impl From<&ComponentConfiguration> for SxmConfiguration {
    fn from(k: &ComponentConfiguration) -> Self {
        SxmConfiguration {
            memory: k.memory.clone(),
            state: k.state.clone(),
            remaining_input: k.remaining_input.clone(),
            output_so_far: k.output_so_far.clone(),
        }
    }
}
