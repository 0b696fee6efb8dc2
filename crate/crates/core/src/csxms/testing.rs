//! Test generation for communicating systems through the product machine.

use std::collections::{BTreeSet, VecDeque};

use super::{
    build_product_sxm, extend_for_testing, validate_system, Csxm, CsxmError, CsxmSystem, MoveKind,
    ProductSxm, SystemConfiguration,
};
use crate::automaton::Automaton;
use crate::dft::{check_dft_subject, DftReport, DftSubject};
use crate::suite::{build_suite, dft_warnings, ComponentMapping, TestSuite};
use crate::sxm::{DomainError, MemorySpace, PortUse, SxmConfiguration, Symbol};
use crate::value::{Value, NULL};

/// A component seen as a plain machine for the design-for-test checks.
///
/// Inputs are pairs `[symbol, in-port]` over the input alphabet and the
/// in-port domain plus `⊥`. A result memory is `[in-port', m', out-port']`,
/// with `λ` as the out-port when the case leaves it unchanged.
pub struct CsxmView<'a> {
    pub csxm: &'a Csxm,
}

impl DftSubject for CsxmView<'_> {
    fn memory_space(&self) -> Result<MemorySpace, DomainError> {
        self.csxm.base.memory_domain.space()
    }

    fn input_values(&self) -> Vec<Value> {
        let mut ports: BTreeSet<Value> = self.csxm.in_port_domain.clone();
        ports.insert(Value::undefined());
        let mut out: Vec<Value> = self
            .csxm
            .base
            .inputs
            .iter()
            .flat_map(|i| {
                ports
                    .iter()
                    .map(move |p| Value::Seq(vec![Value::atom(i.as_str()), p.clone()]))
            })
            .collect();
        out.sort();
        out
    }

    fn function_names(&self) -> Vec<String> {
        self.csxm.base.function_names()
    }

    fn apply_value(&self, function: &str, memory: &Value, input: &Value) -> Vec<(Symbol, Value)> {
        let Some([Value::Atom(symbol), port]) =
            input.as_seq().and_then(|s| <&[Value; 2]>::try_from(s).ok())
        else {
            return Vec::new();
        };
        let Some(f) = self.csxm.base.function(function) else {
            return Vec::new();
        };
        let comm = self.csxm.is_communicating(function);
        let mut out = Vec::new();
        for case in &f.cases {
            if case.input.is_some() && case.input.as_deref() != Some(symbol.as_str()) {
                continue;
            }
            let (port_use, port_after) = match (comm, &case.port) {
                (true, _) => (PortUse::Inspect(port), port.clone()),
                (false, None) => (PortUse::Ignore, port.clone()),
                (false, Some(_)) if port.is_undefined() => continue,
                (false, Some(_)) => (PortUse::Consume(port), Value::undefined()),
            };
            if let Some(res) = case.apply(memory, port_use) {
                let out_port = if comm {
                    Value::undefined()
                } else {
                    res.out_port.unwrap_or_else(|| Value::atom(NULL))
                };
                let o = case.output.clone().unwrap_or_else(|| NULL.to_string());
                out.push((o, Value::Seq(vec![port_after, res.memory, out_port])));
            }
        }
        out
    }

    fn automaton(&self) -> Automaton {
        self.csxm.base.associated_automaton()
    }
}

/// Design-for-test report of every component, in order.
pub fn check_component_dft(sys: &CsxmSystem) -> Result<Vec<DftReport>, CsxmError> {
    sys.components
        .iter()
        .map(|c| Ok(check_dft_subject(&CsxmView { csxm: c })?))
        .collect()
}

/// Fails if some reachable product configuration has two different moves
/// on the same input symbol.
pub fn check_product_determinism(product: &ProductSxm) -> Result<(), CsxmError> {
    let m = &product.sxm;
    let start: Vec<(String, Value)> = m
        .initial_states
        .iter()
        .map(|q| (q.clone(), m.initial_memory.clone()))
        .collect();
    if start.len() > 1 {
        return Err(CsxmError::NondeterministicProduct {
            state: start[0].0.clone(),
            input: String::new(),
            labels: vec!["initial states".to_string()],
        });
    }
    let mut seen: BTreeSet<(String, Value)> = start.iter().cloned().collect();
    let mut queue: VecDeque<(String, Value)> = start.into_iter().collect();
    while let Some((state, memory)) = queue.pop_front() {
        for sym in &m.inputs {
            let cfg = SxmConfiguration {
                memory: memory.clone(),
                state: state.clone(),
                remaining_input: vec![sym.clone()],
                output_so_far: Vec::new(),
            };
            let moves = m.moves(&cfg);
            let distinct: BTreeSet<&SxmConfiguration> =
                moves.iter().map(|mv| &mv.successor).collect();
            if distinct.len() > 1 {
                let labels: BTreeSet<String> = moves.iter().map(|mv| mv.function.clone()).collect();
                return Err(CsxmError::NondeterministicProduct {
                    state,
                    input: sym.clone(),
                    labels: labels.into_iter().collect(),
                });
            }
            for mv in moves {
                let key = (mv.successor.state, mv.successor.memory);
                if seen.insert(key.clone()) {
                    queue.push_back(key);
                }
            }
        }
    }
    Ok(())
}

/// Extends the system (unless it already is), gates every component on
/// determinism of its automaton, disjoint function domains and output
/// distinguishability, builds the product, checks it behaves
/// deterministically, and runs the W-method on it.
pub fn generate_csxms_test_suite(
    sys: &CsxmSystem,
    k: usize,
) -> Result<(TestSuite, ProductSxm), CsxmError> {
    let report = validate_system(sys);
    if !report.is_valid() {
        return Err(CsxmError::Invalid(report));
    }
    let ext = if sys.is_extended() {
        sys.clone()
    } else {
        extend_for_testing(sys)?
    };
    let reports = check_component_dft(&ext)?;
    for (idx, r) in reports.iter().enumerate() {
        if !r.deterministic.domains_disjoint() || !r.output_distinguishable.pass {
            return Err(CsxmError::DftFailure {
                component: idx + 1,
                report: Box::new(r.clone()),
            });
        }
    }
    let product = build_product_sxm(&ext)?;
    check_product_determinism(&product)?;
    let mut suite = build_suite(&product.sxm, k)?;
    suite.metadata.dft_exhaustive = reports.iter().all(|r| r.exhaustive);
    for (idx, r) in reports.iter().enumerate() {
        suite.metadata.warnings.extend(
            dft_warnings(r)
                .into_iter()
                .map(|w| format!("component {}: {w}", idx + 1)),
        );
    }
    suite.metadata.components = (1..=ext.len())
        .map(|i| ComponentMapping {
            position: i,
            component: i,
            role: None,
        })
        .collect();
    Ok((suite, product))
}

/// Runs tuple inputs on the system itself: each tuple offers its one
/// symbol to its component, and only changes of that component consuming
/// it are followed. Returns the output tuple sequences of final
/// configurations.
pub fn replay_on_system(
    sys: &CsxmSystem,
    product: &ProductSxm,
    input: &[Symbol],
) -> BTreeSet<Vec<Symbol>> {
    let mut frontier: BTreeSet<(SystemConfiguration, Vec<Symbol>)> = sys
        .initial_configurations(&[])
        .into_iter()
        .map(|c| (c, Vec::new()))
        .collect();
    for tuple in input {
        let Some((component, symbol)) = product.decode_single(tuple, false) else {
            return BTreeSet::new();
        };
        let mut next = BTreeSet::new();
        for (cfg, outputs) in &frontier {
            let mut offered = cfg.clone();
            offered.components[component - 1].remaining_input = vec![symbol.clone()];
            for mv in sys.moves(&offered) {
                if mv.component != component || mv.input.as_deref() != Some(symbol.as_str()) {
                    continue;
                }
                debug_assert!(
                    matches!(mv.kind, MoveKind::Ordinary | MoveKind::OrdinaryConsume)
                        || symbol == super::COMM_INPUT
                );
                let mut succ = mv.successor;
                let emitted = succ.components[component - 1].output_so_far.pop();
                let mut outs = outputs.clone();
                if let Some(o) = emitted {
                    outs.push(product.single(component, &o));
                }
                next.insert((succ, outs));
            }
        }
        frontier = next;
    }
    frontier
        .into_iter()
        .filter(|(cfg, _)| sys.is_final(cfg))
        .map(|(_, outs)| outs)
        .collect()
}
