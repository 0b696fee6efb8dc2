//! Seeded model generators and helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use heterotest::csxms::{CsxmSystem, ProductSxm, SystemConfiguration};
use heterotest::sxm::{Sxm, SxmConfiguration};
use heterotest::value::Value;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value as Json};

pub fn model_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("models")
        .join(name)
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_heterotest")
}

pub fn heterotest(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .env_remove("HETEROTEST_SEED")
        .output()
        .expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A machine satisfying the design-for-test conditions by construction.
///
/// Function `fj` reads its own input `ij`, is defined on every memory value
/// of `0..=M-1`, and splits the domain at a threshold into two cases with
/// outputs `aj` and `bj`. Updates are affine maps modulo `M`. Every state is
/// reachable from `q0` and the automaton is deterministic.
pub fn random_dft_sxm(seed: u64) -> Sxm {
    let mut r = rng(seed);
    let states = r.gen_range(1..=5usize);
    let functions = r.gen_range(1..=4usize);
    let m = r.gen_range(2..=8i64);
    let update = |r: &mut ChaCha8Rng| {
        let c = r.gen_range(0..m);
        let d = r.gen_range(0..m);
        json!({"mod": [{"+": [{"*": ["?m", c]}, d]}, m]})
    };
    let mut fns = Vec::new();
    for j in 1..=functions {
        let t = r.gen_range(0..=m);
        let (input, a, b) = (format!("i{j}"), format!("a{j}"), format!("b{j}"));
        let cases = if t == 0 || t == m {
            vec![
                json!({"mem_pattern": "?m", "input": input, "output": a, "mem_next": update(&mut r)}),
            ]
        } else {
            vec![
                json!({"mem_pattern": "?m", "guard": [["<", "?m", t]], "input": input, "output": a, "mem_next": update(&mut r)}),
                json!({"mem_pattern": "?m", "guard": [[">=", "?m", t]], "input": input, "output": b, "mem_next": update(&mut r)}),
            ]
        };
        fns.push(json!({"name": format!("f{j}"), "cases": cases}));
    }
    let names: Vec<String> = (0..states).map(|i| format!("q{i}")).collect();
    let mut arcs: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for target in 1..states {
        let free: Vec<(usize, usize)> = (0..target)
            .flat_map(|q| (1..=functions).map(move |f| (q, f)))
            .filter(|k| !arcs.contains_key(k))
            .collect();
        let &slot = free.choose(&mut r).expect("the newest state has free arcs");
        arcs.insert(slot, target);
    }
    for q in 0..states {
        for f in 1..=functions {
            if !arcs.contains_key(&(q, f)) && r.gen_bool(0.6) {
                arcs.insert((q, f), r.gen_range(0..states));
            }
        }
    }
    let mut terminal: Vec<&String> = names.iter().filter(|_| r.gen_bool(0.5)).collect();
    if terminal.is_empty() {
        terminal.push(&names[0]);
    }
    let next: Vec<Json> = arcs
        .iter()
        .map(|(&(q, f), &t)| json!({"from": names[q], "fn": format!("f{f}"), "to": [names[t]]}))
        .collect();
    let model = json!({
        "inputs": (1..=functions).map(|j| format!("i{j}")).collect::<Vec<_>>(),
        "outputs": (1..=functions).flat_map(|j| [format!("a{j}"), format!("b{j}")]).collect::<Vec<_>>(),
        "states": names,
        "initial_states": ["q0"],
        "terminal_states": terminal,
        "memory_domain": {"range": {"lo": 0, "hi": m - 1}},
        "initial_memory": r.gen_range(0..m),
        "functions": fns,
        "next_state": next,
    });
    serde_json::from_value(model).expect("generated machine parses")
}

/// A small machine with no design-for-test guarantees: cases may overlap,
/// leave memory uncovered, share outputs or be multi-valued, and the
/// automaton may have several initial states or targets.
pub fn random_sxm(seed: u64) -> Sxm {
    let mut r = rng(seed);
    let states = r.gen_range(1..=3usize);
    let functions = r.gen_range(1..=3usize);
    let inputs = ["x", "y"];
    let outputs = ["o", "p", "q"];
    let mem = |r: &mut ChaCha8Rng| r.gen_range(0..3i64);
    let mut fns = Vec::new();
    for j in 1..=functions {
        let mut cases = Vec::new();
        for _ in 0..r.gen_range(1..=3) {
            let pattern = match r.gen_range(0..3) {
                0 => json!(mem(&mut r)),
                1 => json!("_"),
                _ => json!("?m"),
            };
            let mut case = json!({
                "mem_pattern": pattern,
                "input": inputs.choose(&mut r).unwrap(),
                "output": outputs.choose(&mut r).unwrap(),
                "mem_next": mem(&mut r),
            });
            if pattern == json!("?m") && r.gen_bool(0.5) {
                case["guard"] = json!([[
                    if r.gen_bool(0.5) { "<" } else { ">=" },
                    "?m",
                    r.gen_range(1..3)
                ]]);
            }
            cases.push(case);
        }
        fns.push(json!({"name": format!("f{j}"), "cases": cases}));
    }
    let names: Vec<String> = (0..states).map(|i| format!("q{i}")).collect();
    let mut next = Vec::new();
    for q in &names {
        for f in 1..=functions {
            if r.gen_bool(0.7) {
                let mut to = vec![names.choose(&mut r).unwrap().clone()];
                if r.gen_bool(0.1) {
                    to.push(names.choose(&mut r).unwrap().clone());
                }
                next.push(json!({"from": q, "fn": format!("f{f}"), "to": to}));
            }
        }
    }
    let mut initial = vec![names[0].clone()];
    if states > 1 && r.gen_bool(0.1) {
        initial.push(names[1].clone());
    }
    let model = json!({
        "inputs": inputs,
        "outputs": outputs,
        "states": names,
        "initial_states": initial,
        "terminal_states": [names[0]],
        "memory_domain": {"finite": [0, 1, 2]},
        "initial_memory": 0,
        "functions": fns,
        "next_state": next,
    });
    serde_json::from_value(model).expect("generated machine parses")
}

/// A two-component communicating system. Each component has one or two
/// ordinary states, a communicating state `c` whose single function `send`
/// forwards the out-port to the other component, and ordinary functions that
/// may consume the in-port or write the out-port.
pub fn random_system(seed: u64) -> CsxmSystem {
    let mut r = rng(seed);
    let m = r.gen_range(2..=3i64);
    let values: Vec<i64> = (0..m).collect();
    let mut components = Vec::new();
    for i in 1..=2usize {
        let other = 3 - i;
        let base = if i == 1 { "x" } else { "y" };
        let mut inputs = vec![base.to_string()];
        if r.gen_bool(0.3) {
            inputs.push(format!("{base}2"));
        }
        let ordinary: Vec<String> = (0..r.gen_range(1..=2)).map(|k| format!("o{k}")).collect();
        let nfun = r.gen_range(1..=3);
        let mut fns = Vec::new();
        let mut outputs = Vec::new();
        for j in 1..=nfun {
            let mut cases = Vec::new();
            for &v in &values {
                if !r.gen_bool(0.7) {
                    continue;
                }
                let output = format!("u{i}{j}");
                outputs.push(output.clone());
                let mut case = json!({
                    "mem_pattern": v,
                    "input": inputs.choose(&mut r).unwrap(),
                    "output": output,
                    "mem_next": values.choose(&mut r).unwrap(),
                });
                if r.gen_bool(0.3) {
                    case["port"] = json!("?p");
                    case["mem_next"] = json!("?p");
                }
                if r.gen_bool(0.4) {
                    case["out_port"] = json!(values.choose(&mut r).unwrap());
                }
                cases.push(case);
            }
            fns.push(json!({"name": format!("g{j}"), "cases": cases}));
        }
        fns.push(json!({"name": "send", "cases": [{"mem_pattern": "?m", "mem_next": "?m", "send_to": other}]}));
        let mut next = Vec::new();
        for q in &ordinary {
            for j in 1..=nfun {
                if r.gen_bool(0.8) {
                    let to = if r.gen_bool(0.35) {
                        "c".to_string()
                    } else {
                        ordinary.choose(&mut r).unwrap().clone()
                    };
                    next.push(json!({"from": q, "fn": format!("g{j}"), "to": [to]}));
                }
            }
        }
        next.push(json!({"from": "c", "fn": "send", "to": [ordinary.choose(&mut r).unwrap()]}));
        outputs.sort();
        outputs.dedup();
        if outputs.is_empty() {
            outputs.push(format!("u{i}0"));
        }
        let mut states = ordinary.clone();
        states.push("c".into());
        components.push(json!({
            "inputs": inputs,
            "outputs": outputs,
            "states": states,
            "initial_states": [ordinary[0]],
            "terminal_states": [ordinary[0]],
            "memory_domain": {"finite": values},
            "initial_memory": 0,
            "in_port_domain": values,
            "out_port_domain": values,
            "ordinary_states": ordinary,
            "communicating_states": ["c"],
            "ordinary_functions": (1..=nfun).map(|j| format!("g{j}")).collect::<Vec<_>>(),
            "communicating_functions": ["send"],
            "functions": fns,
            "next_state": next,
        }));
    }
    serde_json::from_value(json!({ "components": components })).expect("generated system parses")
}

/// A step of a configuration graph: source, acting component, input,
/// output, function, target.
pub type Edge<N> = (N, usize, String, String, String, N);

/// A product configuration without streams: tuple state and memory.
pub type ProductNode = (String, Value);

fn quiet(cfg: &SystemConfiguration) -> SystemConfiguration {
    let mut c = cfg.clone();
    for k in &mut c.components {
        k.remaining_input.clear();
        k.output_so_far.clear();
    }
    c
}

/// The reachable step graph of an extended system, driving one component
/// at a time with one input symbol. Stops after `limit` nodes.
pub fn system_graph(
    ext: &CsxmSystem,
    limit: usize,
) -> Option<(
    BTreeSet<SystemConfiguration>,
    BTreeSet<Edge<SystemConfiguration>>,
)> {
    let start = quiet(&ext.initial_configuration());
    let mut seen = BTreeSet::from([start.clone()]);
    let mut edges = BTreeSet::new();
    let mut queue = vec![start];
    while let Some(cfg) = queue.pop() {
        for (idx, c) in ext.components.iter().enumerate() {
            for sym in &c.base.inputs {
                let mut fed = cfg.clone();
                fed.components[idx].remaining_input = vec![sym.clone()];
                for mv in ext.moves(&fed) {
                    if mv.component != idx + 1 || mv.input.as_ref() != Some(sym) {
                        continue;
                    }
                    let next = quiet(&mv.successor);
                    let output = mv.output.clone().unwrap_or_default();
                    edges.insert((
                        cfg.clone(),
                        idx + 1,
                        sym.clone(),
                        output,
                        mv.function.clone(),
                        next.clone(),
                    ));
                    if seen.insert(next.clone()) {
                        if seen.len() > limit {
                            return None;
                        }
                        queue.push(next);
                    }
                }
            }
        }
    }
    Some((seen, edges))
}

/// The reachable step graph of a product machine over every input tuple,
/// with tuples and labels decoded to their single active component.
pub fn product_graph(p: &ProductSxm) -> (BTreeSet<ProductNode>, BTreeSet<Edge<ProductNode>>) {
    let sxm = &p.sxm;
    let mut seen = BTreeSet::new();
    let mut queue = Vec::new();
    for q in &sxm.initial_states {
        let n = (q.clone(), sxm.initial_memory.clone());
        if seen.insert(n.clone()) {
            queue.push(n);
        }
    }
    let mut edges = BTreeSet::new();
    while let Some((state, memory)) = queue.pop() {
        for tuple in &sxm.inputs {
            let cfg = SxmConfiguration {
                memory: memory.clone(),
                state: state.clone(),
                remaining_input: vec![tuple.clone()],
                output_so_far: Vec::new(),
            };
            for mv in sxm.moves(&cfg) {
                let (i, sym) = p
                    .decode_single(tuple, false)
                    .expect("moves only on single-component inputs");
                let (oi, out) = p
                    .decode_single(&mv.output, true)
                    .expect("single-component output");
                let (fi, f) = p.labels[&mv.function].clone();
                assert_eq!(
                    (i, oi),
                    (fi, fi),
                    "input, output and label disagree on the component"
                );
                let next = (mv.successor.state.clone(), mv.successor.memory.clone());
                edges.insert((
                    (state.clone(), memory.clone()),
                    i,
                    sym,
                    out,
                    f,
                    next.clone(),
                ));
                if seen.insert(next.clone()) {
                    queue.push(next);
                }
            }
        }
    }
    (seen, edges)
}

pub fn tuple_node(cfg: &SystemConfiguration) -> (String, Value) {
    (ProductSxm::state_of(cfg), ProductSxm::memory_of(cfg))
}

/// Number of states of the minimal complete automaton of `m`, where
/// missing arcs lead to a rejecting sink and acceptance means ending in a
/// terminal state.
pub fn complete_minimal_states(m: &Sxm) -> usize {
    const SINK: &str = "\u{0}sink";
    let labels = m.function_names();
    let delta = |q: &str, f: &str| -> String {
        m.next_state
            .get(&(q.to_string(), f.to_string()))
            .and_then(|t| t.iter().next().cloned())
            .unwrap_or_else(|| SINK.to_string())
    };
    let mut reach = BTreeSet::new();
    let mut stack: Vec<String> = m.initial_states.iter().cloned().collect();
    while let Some(q) = stack.pop() {
        if reach.insert(q.clone()) && q != SINK {
            stack.extend(labels.iter().map(|f| delta(&q, f)));
        }
    }
    let step = |q: &str, f: &str| {
        if q == SINK {
            SINK.to_string()
        } else {
            delta(q, f)
        }
    };
    let mut class: BTreeMap<String, usize> = reach
        .iter()
        .map(|q| (q.clone(), usize::from(m.terminal_states.contains(q))))
        .collect();
    loop {
        let sigs: BTreeMap<&String, (usize, Vec<usize>)> = reach
            .iter()
            .map(|q| {
                (
                    q,
                    (
                        class[q],
                        labels.iter().map(|f| class[&step(q, f)]).collect(),
                    ),
                )
            })
            .collect();
        let distinct: Vec<_> = sigs.values().collect::<BTreeSet<_>>().into_iter().collect();
        let before = class.values().collect::<BTreeSet<_>>().len();
        class = sigs
            .iter()
            .map(|(q, s)| ((*q).clone(), distinct.iter().position(|d| d == &s).unwrap()))
            .collect();
        if distinct.len() == before {
            return before;
        }
    }
}
