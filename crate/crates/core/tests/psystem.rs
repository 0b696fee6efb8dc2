mod common;

use std::collections::BTreeMap;

use heterotest::psystem::{
    apply_assignment, generate_coverage_test_set, is_halted, maximal_rule_multisets, psystem_run,
    reachable_configurations, rule_coverage, validate_psystem, Assignment, PConfiguration, PSystem,
    RunMode, Target,
};
use heterotest::sxm::ViolationKind;
use heterotest::value::Multiset;
use proptest::prelude::*;
use serde_json::json;

use common::*;

const CAP: usize = 10_000;

fn ps2() -> PSystem {
    serde_json::from_str(&std::fs::read_to_string(model_path("ps2.json")).unwrap()).unwrap()
}

fn ps2_with(f: impl FnOnce(&mut serde_json::Value)) -> PSystem {
    let mut v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(model_path("ps2.json")).unwrap()).unwrap();
    f(&mut v);
    serde_json::from_value(v).unwrap()
}

fn cfg(parts: &[&str]) -> PConfiguration {
    PConfiguration::parse(parts)
}

fn assignment(parts: &[&[&str]]) -> Assignment {
    Assignment(
        parts
            .iter()
            .map(|rules| {
                rules
                    .iter()
                    .map(|r| (r.to_string(), 1))
                    .collect::<BTreeMap<_, _>>()
            })
            .collect(),
    )
}

fn fired(a: &Assignment) -> Vec<Vec<String>> {
    a.0.iter()
        .map(|m| {
            m.iter()
                .filter(|(_, n)| **n > 0)
                .map(|(r, _)| r.clone())
                .collect()
        })
        .collect()
}

#[test]
fn ps2_is_well_formed() {
    assert!(validate_psystem(&ps2()).violations.is_empty());
}

#[test]
fn target_outside_the_membrane_tree_is_rejected() {
    let ps = ps2_with(|v| v["rules"]["2"][0]["rhs"] = json!([["b", 3]]));
    let r = validate_psystem(&ps);
    assert!(
        r.violations
            .iter()
            .any(|v| v.kind == ViolationKind::Rule && v.location.contains("r21")),
        "{r:?}"
    );
}

#[test]
fn symbol_outside_the_alphabet_is_rejected() {
    let ps = ps2_with(|v| v["rules"]["1"][1]["rhs"] = json!([["z", "here"]]));
    let r = validate_psystem(&ps);
    assert!(r
        .violations
        .iter()
        .any(|v| v.kind == ViolationKind::UnknownSymbol));
}

#[test]
fn initial_step_has_one_choice() {
    let ps = ps2();
    let all = maximal_rule_multisets(&ps, &ps.initial_configuration(), CAP).unwrap();
    assert_eq!(all, vec![assignment(&[&["r11"], &["r21"]])]);
}

#[test]
fn second_step_has_two_choices() {
    let ps = ps2();
    let all = maximal_rule_multisets(&ps, &cfg(&["abe", "b"]), CAP).unwrap();
    let mut choices: Vec<Vec<Vec<String>>> = all.iter().map(fired).collect();
    choices.sort();
    assert_eq!(
        choices,
        vec![
            vec![vec!["r12".to_string(), "r15".to_string()], vec![]],
            vec![vec!["r13".to_string(), "r15".to_string()], vec![]],
        ]
    );
}

#[test]
fn empty_configuration_has_only_the_empty_assignment() {
    let ps = ps2();
    let all = maximal_rule_multisets(&ps, &cfg(&["", ""]), CAP).unwrap();
    assert_eq!(all.len(), 1);
    assert!(all[0].is_empty());
    assert!(is_halted(&ps, &cfg(&["", ""])));
}

#[test]
fn all_branches_contain_both_computations() {
    let ps = ps2();
    let traces = psystem_run(&ps, 3, RunMode::AllBranches).unwrap();
    let long = traces
        .iter()
        .find(|t| {
            t.configurations
                == vec![
                    cfg(&["s", "t"]),
                    cfg(&["abe", "b"]),
                    cfg(&["bcf", "ab"]),
                    cfg(&["ccf", "c"]),
                ]
        })
        .expect("the (ccf,c) computation");
    assert_eq!(
        long.fired.iter().map(fired).collect::<Vec<_>>(),
        vec![
            vec![vec!["r11".to_string()], vec!["r21".to_string()]],
            vec![vec!["r13".to_string(), "r15".to_string()], vec![]],
            vec![vec!["r14".to_string()], vec!["r22".to_string()]],
        ]
    );
    let short = traces
        .iter()
        .find(|t| {
            t.configurations == vec![cfg(&["s", "t"]), cfg(&["abe", "b"]), cfg(&["bdf", "b"])]
        })
        .expect("the (bdf,b) computation");
    assert!(short.halted);
}

#[test]
fn depth_zero_is_the_initial_configuration() {
    let traces = psystem_run(&ps2(), 0, RunMode::AllBranches).unwrap();
    assert_eq!(traces.len(), 1);
    assert_eq!(traces[0].configurations, vec![cfg(&["s", "t"])]);
}

#[test]
fn seeded_runs_repeat() {
    let ps = ps2();
    for seed in 0..8 {
        let a = psystem_run(&ps, 5, RunMode::Seeded(seed)).unwrap();
        assert_eq!(a, psystem_run(&ps, 5, RunMode::Seeded(seed)).unwrap());
        assert_eq!(a.len(), 1);
        let last = a[0].final_configuration();
        assert!(
            *last == cfg(&["ccf", "c"]) || *last == cfg(&["bdf", "b"]),
            "{last}"
        );
    }
}

#[test]
fn coverage_of_the_two_computations() {
    let ps = ps2();
    let traces: Vec<_> = psystem_run(&ps, 3, RunMode::AllBranches)
        .unwrap()
        .into_iter()
        .filter(|t| t.halted)
        .collect();
    let report = rule_coverage(&ps, &traces).unwrap();
    assert!(report.rules.iter().all(|r| r.covered), "{report:?}");
    assert!(rule_coverage(&ps, &[])
        .unwrap()
        .rules
        .iter()
        .all(|r| !r.covered));

    let first = psystem_run(&ps, 1, RunMode::AllBranches).unwrap();
    let covered: Vec<String> = rule_coverage(&ps, &first)
        .unwrap()
        .rules
        .into_iter()
        .filter(|r| r.covered)
        .map(|r| r.rule)
        .collect();
    assert_eq!(covered, vec!["r11", "r21"]);
}

#[test]
fn coverage_set_reproduces_both_members() {
    let ps = ps2();
    let set = generate_coverage_test_set(&ps, 3).unwrap();
    assert!(set.uncovered.is_empty());
    assert!(set.configurations.contains(&cfg(&["ccf", "c"])));
    for rule in ["r11", "r21", "r13", "r15", "r14", "r22"] {
        let c = set.rules.iter().find(|r| r.rule == rule).unwrap();
        assert_eq!(c.configuration, Some(cfg(&["ccf", "c"])), "{rule}");
    }
    let r12 = set.rules.iter().find(|r| r.rule == "r12").unwrap();
    assert_eq!(r12.configuration, Some(cfg(&["bdf", "b"])));
    for r in &set.rules {
        let w = r.witness.as_ref().unwrap();
        assert!(w.fires(&r.rule));
        assert!(set.configurations.contains(w.final_configuration()));
        assert!(rule_coverage(&ps, std::slice::from_ref(w)).is_ok());
    }
}

#[test]
fn no_rules_means_an_empty_set() {
    let ps = ps2_with(|v| v["rules"] = json!({}));
    let set = generate_coverage_test_set(&ps, 3).unwrap();
    assert!(set.configurations.is_empty());
    assert!(set.rules.is_empty() && set.uncovered.is_empty());
}

/// Recomputes a step symbol by symbol from the rules and checks it against
/// `apply_assignment`.
fn conserved(ps: &PSystem, from: &PConfiguration, a: &Assignment, to: &PConfiguration) -> bool {
    let mut expected: Vec<Multiset> = from.0.clone();
    for id in ps.ids() {
        for (name, n) in &a.0[id - 1] {
            let rule = ps.rule(name).unwrap();
            assert!(expected[id - 1].remove_scaled(&rule.lhs, *n));
            for (s, t) in &rule.rhs {
                let dest = match t {
                    Target::Here => id,
                    Target::In(k) => *k,
                };
                expected[dest - 1].insert(s, *n);
            }
        }
    }
    expected == to.0
}

fn maximal(ps: &PSystem, from: &PConfiguration, a: &Assignment) -> bool {
    let mut left = from.0.clone();
    for id in ps.ids() {
        for (name, n) in &a.0[id - 1] {
            left[id - 1].remove_scaled(&ps.rule(name).unwrap().lhs, *n);
        }
    }
    ps.all_rules()
        .all(|r| !left[r.compartment - 1].contains(&r.lhs))
}

#[test]
fn every_ps2_transition_conserves_objects() {
    let ps = ps2();
    for c in reachable_configurations(&ps, 4).unwrap() {
        for a in maximal_rule_multisets(&ps, &c, CAP).unwrap() {
            let next = apply_assignment(&ps, &c, &a).unwrap();
            assert!(conserved(&ps, &c, &a, &next), "{c} {a}");
            assert!(maximal(&ps, &c, &a), "{c} {a}");
        }
    }
}

fn arbitrary_psystem() -> impl Strategy<Value = PSystem> {
    let symbol = prop_oneof![Just("a"), Just("b"), Just("c")];
    let lhs = proptest::collection::vec(symbol.clone(), 1..3).prop_map(|v| v.concat());
    let target = prop_oneof![
        Just(json!("here")),
        Just(json!("here")),
        Just(json!(2)),
        Just(json!(1))
    ];
    let rhs = proptest::collection::vec((symbol.clone(), target), 0..3);
    let rules = proptest::collection::vec((0usize..2, lhs, rhs), 1..5);
    let initial = (
        proptest::collection::vec(symbol.clone(), 0..5),
        proptest::collection::vec(symbol, 0..4),
    );
    (rules, initial).prop_map(|(rules, (i1, i2))| {
        let mut by: BTreeMap<String, Vec<serde_json::Value>> = BTreeMap::new();
        for (n, (c, lhs, rhs)) in rules.into_iter().enumerate() {
            let id = c + 1;
            let rhs: Vec<serde_json::Value> = rhs
                .into_iter()
                .map(|(s, t)| {
                    if t == json!(id) {
                        json!([s, "here"])
                    } else {
                        json!([s, t])
                    }
                })
                .collect();
            by.entry(id.to_string())
                .or_default()
                .push(json!({"name": format!("r{n}"), "lhs": lhs, "rhs": rhs}));
        }
        serde_json::from_value(json!({
            "alphabet": ["a", "b", "c"],
            "structure": {"id": 1, "children": [{"id": 2}]},
            "initial": {"1": i1.concat(), "2": i2.concat()},
            "rules": by,
        }))
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_steps_conserve_objects(ps in arbitrary_psystem()) {
        prop_assume!(validate_psystem(&ps).violations.is_empty());
        let start = ps.initial_configuration();
        for a in maximal_rule_multisets(&ps, &start, CAP).unwrap() {
            let next = apply_assignment(&ps, &start, &a).unwrap();
            prop_assert!(conserved(&ps, &start, &a, &next));
            prop_assert!(maximal(&ps, &start, &a));
        }
    }

    #[test]
    fn canonical_strings_round_trip(word in "[a-e]{0,12}") {
        let m = Multiset::parse(&word);
        prop_assert_eq!(Multiset::parse(&m.canonical()), m.clone());
        let mut sorted: Vec<char> = word.chars().collect();
        sorted.sort();
        prop_assert_eq!(m.canonical(), sorted.into_iter().collect::<String>());
    }
}
