//! The product SXM of an extended system.
//!
//! Product memory is the tuple of `(in-port, memory, out-port)` triples,
//! encoded as `Seq([Seq([in, m, out]), ...])`. Processing functions are
//! tuples with exactly one non-identity entry and are materialized as
//! literal case tables over the reachable memory values. This evaluator is
//! written independently of [`CsxmSystem::moves`](super::CsxmSystem::moves)
//! so the two can be cross-checked.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{comm_output, CsxmError, CsxmSystem, SystemConfiguration, COMM_INPUT};
use crate::sxm::{Case, MemoryDomain, PortUse, ProcessingFunction, Sxm};
use crate::term::{Pattern, Term};
use crate::value::{Value, NULL};

/// Exploration cap on distinct product memory values.
pub const MAX_PRODUCT_MEMORIES: usize = 50_000;
/// Name of the identity entry in product labels.
pub const IDENTITY: &str = "id";

pub fn tuple_name<S: AsRef<str>>(parts: &[S]) -> String {
    let inner: Vec<&str> = parts.iter().map(AsRef::as_ref).collect();
    format!("({})", inner.join(","))
}

/// A product machine plus the maps from its tuple names back to components.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductSxm {
    pub sxm: Sxm,
    pub components: usize,
    /// Product input atom to per-component symbols (`λ` for idle ones).
    pub input_tuples: BTreeMap<String, Vec<String>>,
    pub output_tuples: BTreeMap<String, Vec<String>>,
    /// Product label to `(component, function)`, component 1-based.
    pub labels: BTreeMap<String, (usize, String)>,
}

impl ProductSxm {
    pub fn memory_of(cfg: &SystemConfiguration) -> Value {
        Value::Seq(
            cfg.components
                .iter()
                .map(|k| {
                    Value::Seq(vec![
                        k.in_port.clone(),
                        k.memory.clone(),
                        k.out_port.clone(),
                    ])
                })
                .collect(),
        )
    }

    pub fn state_of(cfg: &SystemConfiguration) -> String {
        let states: Vec<&str> = cfg.components.iter().map(|k| k.state.as_str()).collect();
        tuple_name(&states)
    }

    /// Tuple with `symbol` at 1-based `component` and `λ` elsewhere.
    pub fn single(&self, component: usize, symbol: &str) -> String {
        let parts: Vec<&str> = (1..=self.components)
            .map(|i| if i == component { symbol } else { NULL })
            .collect();
        tuple_name(&parts)
    }

    /// The single non-`λ` entry of a tuple, if there is exactly one.
    pub fn decode_single(&self, tuple: &str, outputs: bool) -> Option<(usize, String)> {
        let map = if outputs {
            &self.output_tuples
        } else {
            &self.input_tuples
        };
        let parts = map.get(tuple)?;
        let mut active = parts.iter().enumerate().filter(|(_, s)| s.as_str() != NULL);
        let (i, s) = active.next()?;
        active.next().is_none().then(|| (i + 1, s.clone()))
    }
}

fn check_names(sys: &CsxmSystem) -> Result<(), CsxmError> {
    for (idx, c) in sys.components.iter().enumerate() {
        let generated: BTreeSet<String> = (1..=c.communicating_functions.len())
            .map(|j| comm_output(idx + 1, j))
            .collect();
        let names = c
            .base
            .inputs
            .iter()
            .chain(&c.base.outputs)
            .chain(&c.base.states)
            .filter(|s| !generated.contains(*s));
        for s in names {
            if s.contains(['(', ')', ',']) || s == NULL || s == IDENTITY {
                return Err(CsxmError::AlphabetCollision {
                    component: idx + 1,
                    symbol: s.clone(),
                });
            }
        }
    }
    Ok(())
}

fn tuples(columns: &[Vec<String>]) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = vec![Vec::new()];
    for col in columns {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                col.iter().map(move |s| {
                    let mut p = prefix.clone();
                    p.push(s.clone());
                    p
                })
            })
            .collect();
    }
    out
}

type Triple = (Value, Value, Value);

fn encode(ts: &[Triple]) -> Value {
    Value::Seq(
        ts.iter()
            .map(|(a, b, c)| Value::Seq(vec![a.clone(), b.clone(), c.clone()]))
            .collect(),
    )
}

/// Applies function `fname` of component `i` (0-based) to product memory,
/// offering `symbol`. Returns `(output symbol, memory')`.
fn apply_component(
    sys: &CsxmSystem,
    i: usize,
    fname: &str,
    memory: &[Triple],
    symbol: &str,
) -> Vec<(String, Vec<Triple>)> {
    let c = &sys.components[i];
    let Some(f) = c.base.function(fname) else {
        return Vec::new();
    };
    let (in_i, m_i, out_i) = &memory[i];
    let in_domain = |v: &Value| c.base.memory_domain.contains(v) != Some(false);
    let mut out = Vec::new();
    if c.is_communicating(fname) {
        if symbol != COMM_INPUT || out_i.is_undefined() {
            return out;
        }
        for case in f
            .cases
            .iter()
            .filter(|k| k.input.as_deref() == Some(COMM_INPUT))
        {
            let Some(target) = case
                .send_to
                .filter(|&t| t >= 1 && t <= memory.len() && t != i + 1)
            else {
                continue;
            };
            let k = target - 1;
            if !memory[k].0.is_undefined() || !sys.components[k].in_port_domain.contains(out_i) {
                continue;
            }
            let (Some(o), Some(res)) = (&case.output, case.apply(m_i, PortUse::Inspect(in_i)))
            else {
                continue;
            };
            if !in_domain(&res.memory) {
                continue;
            }
            let mut next = memory.to_vec();
            next[i] = (in_i.clone(), res.memory, Value::undefined());
            next[k].0 = out_i.clone();
            out.push((o.clone(), next));
        }
    } else {
        for case in f
            .cases
            .iter()
            .filter(|k| k.input.as_deref() == Some(symbol))
        {
            let consume = case.port.is_some();
            if consume && in_i.is_undefined() {
                continue;
            }
            let port_use = if consume {
                PortUse::Consume(in_i)
            } else {
                PortUse::Ignore
            };
            let (Some(o), Some(res)) = (&case.output, case.apply(m_i, port_use)) else {
                continue;
            };
            let new_out = res.out_port.unwrap_or_else(|| out_i.clone());
            if !in_domain(&res.memory)
                || !(new_out.is_undefined() || c.out_port_domain.contains(&new_out))
            {
                continue;
            }
            let new_in = if consume {
                Value::undefined()
            } else {
                in_i.clone()
            };
            let mut next = memory.to_vec();
            next[i] = (new_in, res.memory, new_out);
            out.push((o.clone(), next));
        }
    }
    out
}

/// Builds the product SXM of an extended system.
pub fn build_product_sxm(sys: &CsxmSystem) -> Result<ProductSxm, CsxmError> {
    if !sys.is_extended() {
        return Err(CsxmError::UnextendedSystem);
    }
    check_names(sys)?;
    let n = sys.len();

    let in_cols: Vec<Vec<String>> = sys
        .components
        .iter()
        .map(|c| {
            let mut s: BTreeSet<String> = c.base.inputs.clone();
            s.insert(COMM_INPUT.to_string());
            s.insert(NULL.to_string());
            s.into_iter().collect()
        })
        .collect();
    let out_cols: Vec<Vec<String>> = sys
        .components
        .iter()
        .map(|c| {
            let mut s = c.base.outputs.clone();
            s.insert(NULL.to_string());
            s.into_iter().collect()
        })
        .collect();
    let all_null = |t: &Vec<String>| t.iter().all(|s| s == NULL);
    let mut input_tuples = BTreeMap::new();
    for t in tuples(&in_cols).into_iter().filter(|t| !all_null(t)) {
        input_tuples.insert(tuple_name(&t), t);
    }
    let mut output_tuples = BTreeMap::new();
    for t in tuples(&out_cols).into_iter().filter(|t| !all_null(t)) {
        output_tuples.insert(tuple_name(&t), t);
    }

    let state_cols: Vec<Vec<String>> = sys
        .components
        .iter()
        .map(|c| c.base.states.iter().cloned().collect())
        .collect();
    let initial_cols: Vec<Vec<String>> = sys
        .components
        .iter()
        .map(|c| c.base.initial_states.iter().cloned().collect())
        .collect();
    let terminal_cols: Vec<Vec<String>> = sys
        .components
        .iter()
        .map(|c| c.base.terminal_states.iter().cloned().collect())
        .collect();
    let state_tuples = tuples(&state_cols);

    let mut labels: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut label_order = Vec::new();
    for (i, c) in sys.components.iter().enumerate() {
        for f in &c.base.functions {
            let parts: Vec<&str> = (0..n)
                .map(|k| if k == i { f.name.as_str() } else { IDENTITY })
                .collect();
            let name = tuple_name(&parts);
            labels.insert(name.clone(), (i + 1, f.name.clone()));
            label_order.push((name, i, f.name.clone()));
        }
    }

    let mut next_state: BTreeMap<(String, String), BTreeSet<String>> = BTreeMap::new();
    for q in &state_tuples {
        let qname = tuple_name(q);
        for (label, i, fname) in &label_order {
            if let Some(targets) = sys.components[*i].base.targets(&q[*i], fname) {
                let set = targets
                    .iter()
                    .map(|t| {
                        let mut q2 = q.clone();
                        q2[*i] = t.clone();
                        tuple_name(&q2)
                    })
                    .collect();
                next_state.insert((qname.clone(), label.clone()), set);
            }
        }
    }

    // Reachable memory values under every function and offered symbol.
    let m0: Vec<Triple> = sys
        .components
        .iter()
        .map(|c| {
            (
                Value::undefined(),
                c.base.initial_memory.clone(),
                Value::undefined(),
            )
        })
        .collect();
    let mut seen: BTreeSet<Value> = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert(encode(&m0));
    queue.push_back(m0.clone());
    let mut cases: BTreeMap<String, Vec<Case>> = BTreeMap::new();
    while let Some(mem) = queue.pop_front() {
        let mem_value = encode(&mem);
        for (label, i, fname) in &label_order {
            for sym in in_cols[*i].iter().filter(|s| s.as_str() != NULL) {
                for (o, next) in apply_component(sys, *i, fname, &mem, sym) {
                    let next_value = encode(&next);
                    let input: Vec<&str> = (0..n)
                        .map(|k| if k == *i { sym.as_str() } else { NULL })
                        .collect();
                    let output: Vec<&str> = (0..n)
                        .map(|k| if k == *i { o.as_str() } else { NULL })
                        .collect();
                    cases.entry(label.clone()).or_default().push(Case {
                        mem_pattern: Pattern::Lit(mem_value.clone()),
                        guard: Vec::new(),
                        input: Some(tuple_name(&input)),
                        output: Some(tuple_name(&output)),
                        mem_next: Term::Lit(next_value.clone()),
                        port: None,
                        out_port: None,
                        send_to: None,
                    });
                    if seen.insert(next_value) {
                        if seen.len() > MAX_PRODUCT_MEMORIES {
                            return Err(CsxmError::ProductTooLarge {
                                limit: MAX_PRODUCT_MEMORIES,
                            });
                        }
                        queue.push_back(next);
                    }
                }
            }
        }
    }

    let functions = label_order
        .iter()
        .map(|(label, _, _)| ProcessingFunction {
            name: label.clone(),
            cases: cases.remove(label).unwrap_or_default(),
        })
        .collect();

    let sxm = Sxm {
        inputs: input_tuples.keys().cloned().collect(),
        outputs: output_tuples.keys().cloned().collect(),
        states: state_tuples.iter().map(|q| tuple_name(q)).collect(),
        initial_states: tuples(&initial_cols)
            .iter()
            .map(|q| tuple_name(q))
            .collect(),
        terminal_states: tuples(&terminal_cols)
            .iter()
            .map(|q| tuple_name(q))
            .collect(),
        memory_domain: MemoryDomain::Finite(seen),
        initial_memory: encode(&m0),
        functions,
        next_state,
    };
    Ok(ProductSxm {
        sxm,
        components: n,
        input_tuples,
        output_tuples,
        labels,
    })
}
