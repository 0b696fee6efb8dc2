//! Acceptance criteria. Each criterion prints one `PASS`/`FAIL` line; the
//! process exits non-zero if any fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use heterotest::csxms::{build_product_sxm, extend_for_testing, validate_system, CsxmSystem};
use heterotest::dft::check_dft;
use heterotest::heterotic::{
    load_heterotic_system, run_heterotic, Direction, Oracle, ProcessOracle, RunEnd,
};
use heterotest::mutation::{
    bounded_difference, mutate_model, mutation_score, witness_replays, Model, Operator,
    ScoreTarget, Verdict,
};
use heterotest::psystem::{
    generate_coverage_test_set, reachable_configurations, PConfiguration, PSystem,
};
use heterotest::suite::{generate_sxm_test_suite, DEFAULT_BRANCH_BOUND};
use heterotest::sxm::{validate_sxm, Sxm};
use heterotest::value::Value;
use serde_json::json;

use common::*;

const PS2_RUNTIME: Duration = Duration::from_secs(1);
const FAITHFULNESS_RUNTIME: Duration = Duration::from_secs(120);
const ADEQUACY_RUNTIME: Duration = Duration::from_secs(300);
const HETEROTIC_RUNTIME: Duration = Duration::from_secs(1);

const FAITHFULNESS_INSTANCES: usize = 50;
const FAITHFULNESS_MAX_CONFIGURATIONS: usize = 200;
const ADEQUACY_INSTANCES: u64 = 100;
const ADEQUACY_EXTRA_STATES: usize = 1;
const EQUIVALENCE_LENGTH: usize = 6;
const WITNESS_INSTANCES: u64 = 100;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:?}, limit {limit:?}"))?;
    Ok(took)
}

fn ps2() -> PSystem {
    serde_json::from_str(&std::fs::read_to_string(model_path("ps2.json")).unwrap()).unwrap()
}

fn ps2_trace() -> Check {
    let start = Instant::now();
    let path = model_path("ps2.json");
    let out = heterotest(&[
        "simulate",
        "--depth",
        "3",
        "--all-branches",
        path.to_str().unwrap(),
    ]);
    ensure(out.status.success(), || {
        format!("exit {:?}", out.status.code())
    })?;
    let expected =
        "(s,t) ⟹({r11},{r21}) (abe,b) ⟹({r13,r15},∅) (bcf,ab) ⟹({r14},{r22}) (ccf,c) (halted)";
    let text = stdout(&out);
    ensure(text.lines().any(|l| l == expected), || {
        format!("no trace equal to {expected} in:\n{text}")
    })?;

    let out = heterotest(&[
        "simulate",
        "--depth",
        "3",
        "--all-branches",
        "--format",
        "json",
        path.to_str().unwrap(),
    ]);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let found = doc["traces"].as_array().into_iter().flatten().any(|t| {
        t["configurations"] == json!([["s", "t"], ["abe", "b"], ["bcf", "ab"], ["ccf", "c"]])
            && t["fired"]
                == json!([
                    [{"r11": 1}, {"r21": 1}],
                    [{"r13": 1, "r15": 1}, {}],
                    [{"r14": 1}, {"r22": 1}]
                ])
    });
    ensure(found, || {
        format!("JSON traces lack the computation: {}", doc["traces"])
    })?;
    let took = within(start, PS2_RUNTIME)?;
    Ok(format!("trace reproduced exactly in {took:.0?}"))
}

fn ps2_coverage() -> Check {
    let start = Instant::now();
    let path = model_path("ps2.json");
    let out = heterotest(&[
        "gen-tests",
        "psystem",
        "--depth",
        "3",
        path.to_str().unwrap(),
    ]);
    ensure(out.status.success(), || {
        format!("exit {:?}", out.status.code())
    })?;
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let rules = doc["rules"].as_array().cloned().unwrap_or_default();
    let covered: BTreeSet<&str> = rules
        .iter()
        .filter(|r| r["covered"] == json!(true))
        .filter_map(|r| r["rule"].as_str())
        .collect();
    let all: BTreeSet<&str> = ["r11", "r12", "r13", "r14", "r15", "r21", "r22"].into();
    ensure(covered == all, || format!("covered {covered:?}"))?;
    let members = doc["configurations"]
        .as_array()
        .cloned()
        .unwrap_or_default();
    ensure(members.contains(&json!(["ccf", "c"])), || {
        format!("set {members:?} lacks (ccf,c)")
    })?;
    let r12 = rules
        .iter()
        .find(|r| r["rule"] == "r12")
        .map(|r| r["configuration"].clone());
    ensure(r12 == Some(json!(["bdf", "b"])), || {
        format!("r12 witness {r12:?}")
    })?;

    let reachable = reachable_configurations(&ps2(), 3).map_err(|e| e.to_string())?;
    let divergent = PConfiguration::parse(&["dbe", "b"]);
    ensure(!reachable.contains(&divergent), || {
        "(dbe,b) is reachable".into()
    })?;
    ensure(
        reachable.contains(&PConfiguration::parse(&["bdf", "b"])),
        || "(bdf,b) is not reachable".into(),
    )?;
    let took = within(start, PS2_RUNTIME)?;
    Ok(format!(
        "7/7 rules, (ccf,c) member, r12 at (bdf,b), (dbe,b) absent from {} reachable configurations, {took:.0?}",
        reachable.len()
    ))
}

fn product_arithmetic() -> Check {
    let sys: CsxmSystem =
        serde_json::from_str(&std::fs::read_to_string(model_path("ping_pong.json")).unwrap())
            .unwrap();
    let sigma: Vec<_> = sys
        .components
        .iter()
        .map(|c| c.base.inputs.clone())
        .collect();
    ensure(
        sigma
            == vec![
                BTreeSet::from(["x".to_string()]),
                BTreeSet::from(["y".to_string()]),
            ],
        || format!("alphabets {sigma:?}"),
    )?;
    let product = build_product_sxm(&extend_for_testing(&sys).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let inputs: BTreeSet<&str> = product.sxm.inputs.iter().map(String::as_str).collect();
    let expected: BTreeSet<&str> = [
        "(x,λ)", "(a,λ)", "(λ,y)", "(λ,a)", "(x,y)", "(x,a)", "(a,y)", "(a,a)",
    ]
    .into();
    ensure(inputs == expected, || format!("product inputs {inputs:?}"))?;
    let q: usize = sys.components.iter().map(|c| c.base.states.len()).product();
    ensure(product.sxm.states.len() == q, || {
        format!("{} states, expected {q}", product.sxm.states.len())
    })?;
    Ok(format!("8 inputs, {q} states"))
}

fn product_faithfulness() -> Check {
    let start = Instant::now();
    let mut checked = 0;
    let mut skipped = 0;
    let mut largest = 0;
    let mut seed = 0u64;
    while checked < FAITHFULNESS_INSTANCES {
        let sys = random_system(seed);
        seed += 1;
        let report = validate_system(&sys);
        ensure(report.is_valid(), || {
            format!(
                "seed {}: generated system invalid: {:?}",
                seed - 1,
                report.violations
            )
        })?;
        let ext = extend_for_testing(&sys).map_err(|e| e.to_string())?;
        let Some((nodes, edges)) = system_graph(&ext, FAITHFULNESS_MAX_CONFIGURATIONS) else {
            skipped += 1;
            continue;
        };
        let product = build_product_sxm(&ext).map_err(|e| e.to_string())?;
        let (p_nodes, p_edges) = product_graph(&product);
        let mapped: BTreeSet<_> = nodes.iter().map(tuple_node).collect();
        ensure(mapped.len() == nodes.len(), || {
            format!("seed {}: tuple mapping not injective", seed - 1)
        })?;
        ensure(mapped == p_nodes, || {
            format!(
                "seed {}: {} system vs {} product configurations",
                seed - 1,
                mapped.len(),
                p_nodes.len()
            )
        })?;
        let mapped_edges: BTreeSet<_> = edges
            .iter()
            .map(|(a, i, s, o, f, b)| {
                (
                    tuple_node(a),
                    *i,
                    s.clone(),
                    o.clone(),
                    f.clone(),
                    tuple_node(b),
                )
            })
            .collect();
        ensure(mapped_edges == p_edges, || {
            let extra: Vec<_> = p_edges
                .symmetric_difference(&mapped_edges)
                .take(3)
                .collect();
            format!("seed {}: step graphs differ, e.g. {extra:?}", seed - 1)
        })?;
        largest = largest.max(nodes.len());
        checked += 1;
    }
    let took = within(start, FAITHFULNESS_RUNTIME)?;
    Ok(format!(
        "{checked}/{checked} isomorphic (largest {largest} configurations, {skipped} seeds over the bound skipped), {took:.1?}"
    ))
}

fn relation_equal_upto(spec: &Sxm, mutant: &Sxm, len: usize) -> Option<Vec<String>> {
    let inputs: Vec<String> = spec
        .inputs
        .iter()
        .chain(&mutant.inputs)
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut frontier = vec![Vec::<String>::new()];
    for _ in 0..=len {
        let mut next = Vec::new();
        for word in frontier {
            let a = spec.outputs(&word, DEFAULT_BRANCH_BOUND).ok()?;
            let b = mutant.outputs(&word, DEFAULT_BRANCH_BOUND).ok()?;
            if a != b {
                return Some(word);
            }
            if word.len() < len {
                for s in &inputs {
                    let mut w = word.clone();
                    w.push(s.clone());
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    None
}

fn mutation_adequacy() -> Check {
    let start = Instant::now();
    let (mut in_model, mut beyond, mut killed, mut equivalent) = (0usize, 0usize, 0usize, 0usize);
    let mut survivors: BTreeMap<String, usize> = BTreeMap::new();
    let mut examples = Vec::new();
    for seed in 0..ADEQUACY_INSTANCES {
        let spec = random_dft_sxm(seed);
        ensure(validate_sxm(&spec).is_valid(), || {
            format!("seed {seed}: invalid machine")
        })?;
        let dft = check_dft(&spec).map_err(|e| e.to_string())?;
        ensure(dft.all_pass(), || {
            format!("seed {seed}: design-for-test fails")
        })?;
        let suite = generate_sxm_test_suite(&spec, ADEQUACY_EXTRA_STATES)
            .map_err(|e| format!("seed {seed}: {e}"))?;
        let suite_max = suite.cases.iter().map(|c| c.input.len()).max().unwrap_or(0);
        let n = complete_minimal_states(&spec);
        let model = Model::Sxm(spec.clone());
        let set =
            mutate_model(&model, &Operator::SXM, seed, usize::MAX).map_err(|e| e.to_string())?;
        let report = mutation_score(&model, &set, ScoreTarget::Suite(&suite), EQUIVALENCE_LENGTH)
            .map_err(|e| e.to_string())?;
        for (m, v) in set.mutants.iter().zip(&report.per_mutant) {
            let Model::Sxm(mutant) = &m.model else {
                unreachable!()
            };
            if complete_minimal_states(mutant) > n + ADEQUACY_EXTRA_STATES {
                beyond += 1;
                continue;
            }
            in_model += 1;
            if v.verdict == Verdict::Killed {
                let w = v.witness.as_ref().ok_or("killed without a witness")?;
                ensure(
                    witness_replays(&model, &m.model, w).unwrap_or(false),
                    || format!("seed {seed} mutant {}: witness does not replay", m.id),
                )?;
                killed += 1;
                continue;
            }
            let within_suite =
                bounded_difference(&spec, mutant, suite_max).map_err(|e| e.to_string())?;
            match (
                within_suite,
                relation_equal_upto(&spec, mutant, EQUIVALENCE_LENGTH),
            ) {
                (None, None) => equivalent += 1,
                (d, b) => {
                    *survivors.entry(m.operator.to_string()).or_default() += 1;
                    if examples.len() < 3 {
                        examples.push(format!(
                            "seed {seed} {} differs on {:?}",
                            m.location,
                            d.or(b).unwrap_or_default()
                        ));
                    }
                }
            }
        }
    }
    let took = start.elapsed();
    let distinguishable: usize = survivors.values().sum();
    let summary = format!(
        "{in_model} mutants within {ADEQUACY_EXTRA_STATES} extra state ({beyond} beyond): {killed} killed, \
         {equivalent} equivalent up to length {EQUIVALENCE_LENGTH}, {distinguishable} distinguishable survivors, {took:.1?}"
    );
    if distinguishable > 0 {
        return Err(format!(
            "{summary}; survivors by operator {survivors:?}; e.g. {}",
            examples.join("; ")
        ));
    }
    within(start, ADEQUACY_RUNTIME)?;
    Ok(summary)
}

fn brute_witnesses(m: &Sxm) -> Result<(usize, usize), String> {
    let report = check_dft(m).map_err(|e| e.to_string())?;
    let memories: Vec<Value> = (0..3).map(Value::Int).collect();
    let fnames = m.function_names();
    let apply = |f: &str, mem: &Value, i: &Value| m.apply(f, mem, i.as_atom().unwrap_or_default());
    let mut witnesses = 0;

    let d = &report.deterministic;
    if let Some(n) = &d.automaton {
        witnesses += 1;
        let genuine = match n {
            heterotest::automaton::Nondeterminism::InitialStates { count } => {
                m.initial_states.len() == *count && *count > 1
            }
            heterotest::automaton::Nondeterminism::Arcs {
                state,
                label,
                targets,
            } => m
                .next_state
                .get(&(state.clone(), label.clone()))
                .is_some_and(|t| t.len() > 1 && t.iter().eq(targets.iter())),
        };
        ensure(genuine, || {
            format!("automaton witness {n:?} is not a violation")
        })?;
    }
    if let Some(w) = &d.counterexample {
        witnesses += 1;
        let genuine = w.phi1 != w.phi2
            && m.targets(&w.state, &w.phi1).is_some()
            && m.targets(&w.state, &w.phi2).is_some()
            && !apply(&w.phi1, &w.memory, &w.input).is_empty()
            && !apply(&w.phi2, &w.memory, &w.input).is_empty();
        ensure(genuine, || {
            format!("determinism witness {w:?} is not a violation")
        })?;
    }
    if let Some(w) = &d.multi_valued {
        witnesses += 1;
        let results: BTreeSet<_> = apply(&w.function, &w.memory, &w.input)
            .into_iter()
            .collect();
        let claimed: BTreeSet<_> = w.results.iter().cloned().collect();
        ensure(results.len() > 1 && results == claimed, || {
            format!("multi-valued witness {w:?} is not a violation")
        })?;
    }
    for f in &report.complete.functions {
        if let Some(mem) = &f.counterexample {
            witnesses += 1;
            let undefined = memories.contains(mem)
                && m.inputs
                    .iter()
                    .all(|i| m.apply(&f.function, mem, i).is_empty());
            ensure(undefined, || {
                format!(
                    "completeness witness {} at {mem} is not a violation",
                    f.function
                )
            })?;
        }
    }
    if let Some(w) = &report.output_distinguishable.counterexample {
        witnesses += 1;
        let genuine = w.phi1 != w.phi2
            && apply(&w.phi1, &w.m, &w.input).contains(&(w.output.clone(), w.m1.clone()))
            && apply(&w.phi2, &w.m, &w.input).contains(&(w.output.clone(), w.m2.clone()));
        ensure(genuine, || {
            format!("distinguishability witness {w:?} is not a violation")
        })?;
    }

    // Pass flags agree with exhaustive enumeration.
    let inputs: Vec<Value> = m.inputs.iter().map(|s| Value::atom(s.as_str())).collect();
    let mut overlap = false;
    let mut multi = false;
    for q in &m.states {
        let here = m.functions_at(q);
        for (a, f) in here.iter().enumerate() {
            for g in &here[a + 1..] {
                overlap |= memories.iter().any(|mem| {
                    inputs
                        .iter()
                        .any(|i| !apply(f, mem, i).is_empty() && !apply(g, mem, i).is_empty())
                });
            }
        }
    }
    for f in &fnames {
        multi |= memories.iter().any(|mem| {
            inputs
                .iter()
                .any(|i| apply(f, mem, i).into_iter().collect::<BTreeSet<_>>().len() > 1)
        });
    }
    let automaton_ok = m.initial_states.len() <= 1 && m.next_state.values().all(|t| t.len() <= 1);
    ensure(d.pass == (automaton_ok && !overlap && !multi), || {
        "determinism flag disagrees with enumeration".into()
    })?;
    for f in &report.complete.functions {
        let complete = memories.iter().all(|mem| {
            inputs
                .iter()
                .any(|i| !apply(&f.function, mem, i).is_empty())
        });
        ensure(f.pass == complete, || {
            format!("completeness flag of {} disagrees", f.function)
        })?;
    }
    let mut clash = false;
    for (a, f) in fnames.iter().enumerate() {
        for g in &fnames[a + 1..] {
            clash |= memories.iter().any(|mem| {
                inputs.iter().any(|i| {
                    let of: BTreeSet<_> = apply(f, mem, i).into_iter().map(|r| r.0).collect();
                    apply(g, mem, i).iter().any(|r| of.contains(&r.0))
                })
            });
        }
    }
    ensure(report.output_distinguishable.pass == !clash, || {
        "distinguishability flag disagrees".into()
    })?;
    Ok((witnesses, usize::from(!report.all_pass())))
}

fn dft_witnesses() -> Check {
    let (mut witnesses, mut failing) = (0, 0);
    for seed in 0..WITNESS_INSTANCES {
        let m = random_sxm(seed);
        let (w, f) = brute_witnesses(&m).map_err(|e| format!("seed {seed}: {e}"))?;
        witnesses += w;
        failing += f;
    }
    ensure(witnesses > 0, || "no witness emitted".into())?;
    Ok(format!("{witnesses} witnesses on {failing} failing models all replay; pass flags agree on {WITNESS_INSTANCES} models"))
}

fn heterotic_alternation() -> Check {
    let start = Instant::now();
    let path = model_path("heterotic_ps2.json");
    let ps2 = model_path("ps2.json");
    let mut identical = 0;
    for seed in 0..4u64 {
        let h = load_heterotic_system(&path, Some(seed)).map_err(|e| e.to_string())?;
        let local = run_heterotic(&h, 2, None).map_err(|e| e.to_string())?;
        ensure(local.alternates(), || {
            format!("seed {seed}: exchanges do not alternate")
        })?;
        let dirs: Vec<Direction> = local.exchanges.iter().map(|e| e.direction).collect();
        ensure(
            dirs == [
                Direction::BaseToControl,
                Direction::ControlToBase,
                Direction::BaseToControl,
            ],
            || format!("seed {seed}: directions {dirs:?}"),
        )?;
        ensure(local.ended == RunEnd::ControlTerminated, || {
            format!("seed {seed}: ended {:?}", local.ended)
        })?;

        let mut oracle = ProcessOracle::new(
            bin(),
            vec![
                "oracle-sim".into(),
                "--seed".into(),
                seed.to_string(),
                "--depth-cap".into(),
                h.depth_cap.to_string(),
                ps2.to_str().unwrap().into(),
            ],
        );
        let remote = run_heterotic(&h, 2, Some(&mut oracle as &mut dyn Oracle))
            .map_err(|e| e.to_string())?;
        let (a, b) = (
            serde_json::to_string(&local).unwrap(),
            serde_json::to_string(&remote).unwrap(),
        );
        ensure(a == b, || format!("seed {seed}: traces differ\n{a}\n{b}"))?;
        ensure(local.to_string() == remote.to_string(), || {
            format!("seed {seed}: renderings differ")
        })?;
        identical += 1;
    }
    let took = within(start, HETEROTIC_RUNTIME)?;
    Ok(format!("strict alternation, {identical}/4 seeds byte-identical with the process oracle, {took:.0?}"))
}

fn mutation_harness() -> Check {
    let ps = ps2();
    let model = Model::PSystem(ps.clone());
    let set = mutate_model(
        &model,
        &[Operator::RuleDelete, Operator::RhsTargetSwap],
        0,
        usize::MAX,
    )
    .map_err(|e| e.to_string())?;
    let coverage = generate_coverage_test_set(&ps, 3).map_err(|e| e.to_string())?;
    let report = mutation_score(&model, &set, ScoreTarget::Coverage(&coverage), 3)
        .map_err(|e| e.to_string())?;
    let mut found = Vec::new();
    for (op, location) in [
        (Operator::RuleDelete, "r21"),
        (Operator::RhsTargetSwap, "r13: (a,2) → (a,here)"),
    ] {
        let idx = set
            .mutants
            .iter()
            .position(|m| m.operator == op && m.location == location)
            .ok_or_else(|| format!("no {op} mutant at {location}"))?;
        let v = &report.per_mutant[idx];
        ensure(v.verdict == Verdict::Killed, || {
            format!("{location}: {:?}", v.verdict)
        })?;
        let w = v
            .witness
            .as_ref()
            .ok_or_else(|| format!("{location}: no witness"))?;
        ensure(
            witness_replays(&model, &set.mutants[idx].model, w).map_err(|e| e.to_string())?,
            || format!("{location}: witness {w:?} does not replay"),
        )?;
        found.push(format!(
            "{location} killed by {}",
            serde_json::to_string(w).unwrap()
        ));
    }
    Ok(found.join("; "))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("PS2 computation trace", ps2_trace),
        ("PS2 rule-coverage test set", ps2_coverage),
        ("product alphabet and state arithmetic", product_arithmetic),
        ("product step-graph faithfulness", product_faithfulness),
        ("W-method mutation adequacy", mutation_adequacy),
        ("design-for-test witness validity", dft_witnesses),
        (
            "heterotic alternation and oracle agreement",
            heterotic_alternation,
        ),
        ("PS2 mutation harness", mutation_harness),
    ];
    let only: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    let mut out = std::io::stdout();
    for (n, (name, check)) in criteria.iter().enumerate() {
        let n = n + 1;
        if !only.is_empty() && !only.iter().any(|o| o == &n.to_string()) {
            continue;
        }
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let line = match &result {
            Ok(detail) => format!("criterion {n} PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                format!("criterion {n} FAIL  {name}: {why}")
            }
        };
        let _ = writeln!(out, "{line}");
    }
    let _ = out.flush();
    if failed > 0 {
        std::process::exit(1);
    }
}
