//! Rule coverage of computations and coverage-based test sets.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::run::{
    apply_assignment, maximal_rule_multisets, psystem_run, ComputationTrace, RunMode,
    DEFAULT_ASSIGNMENT_CAP,
};
use super::{PConfiguration, PSystem, PsError};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleCoverage {
    pub rule: String,
    pub covered: bool,
    /// Final configuration of the witness.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub configuration: Option<PConfiguration>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<ComputationTrace>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub rules: Vec<RuleCoverage>,
    pub uncovered: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageTestSet {
    pub depth: usize,
    pub configurations: Vec<PConfiguration>,
    pub rules: Vec<RuleCoverage>,
    pub uncovered: Vec<String>,
}

/// Checks that each trace is a computation of `ps`.
fn replay(ps: &PSystem, traces: &[ComputationTrace]) -> Result<(), PsError> {
    for (i, t) in traces.iter().enumerate() {
        let mismatch = |step: usize, reason: String| PsError::TraceReplayMismatch {
            trace: i,
            step,
            reason,
        };
        if t.configurations.first() != Some(&ps.initial_configuration()) {
            return Err(mismatch(
                0,
                "does not start in the initial configuration".into(),
            ));
        }
        if t.configurations.len() != t.fired.len() + 1 {
            return Err(mismatch(
                0,
                "configurations and steps do not line up".into(),
            ));
        }
        for (step, a) in t.fired.iter().enumerate() {
            let cfg = &t.configurations[step];
            let options = maximal_rule_multisets(ps, cfg, DEFAULT_ASSIGNMENT_CAP)?;
            if !options.contains(a) {
                return Err(mismatch(
                    step,
                    format!("{a} is not a maximal assignment in {cfg}"),
                ));
            }
            let next = apply_assignment(ps, cfg, a)?;
            if next != t.configurations[step + 1] {
                return Err(mismatch(
                    step,
                    format!("expected {next}, trace has {}", t.configurations[step + 1]),
                ));
            }
        }
    }
    Ok(())
}

fn shortest<'a>(
    candidates: impl Iterator<Item = &'a ComputationTrace>,
) -> Option<&'a ComputationTrace> {
    candidates.min_by(|a, b| {
        a.steps()
            .cmp(&b.steps())
            .then_with(|| a.final_configuration().cmp(b.final_configuration()))
    })
}

/// For every rule, the shortest trace firing it and that trace's final
/// configuration.
pub fn rule_coverage(ps: &PSystem, traces: &[ComputationTrace]) -> Result<CoverageReport, PsError> {
    replay(ps, traces)?;
    let rules: Vec<RuleCoverage> = ps
        .rule_names()
        .into_iter()
        .map(|rule| {
            let witness = shortest(traces.iter().filter(|t| t.fires(&rule))).cloned();
            RuleCoverage {
                covered: witness.is_some(),
                configuration: witness.as_ref().map(|w| w.final_configuration().clone()),
                witness,
                rule,
            }
        })
        .collect();
    let uncovered = rules
        .iter()
        .filter(|r| !r.covered)
        .map(|r| r.rule.clone())
        .collect();
    Ok(CoverageReport { rules, uncovered })
}

/// A small set of final configurations whose computations, taken together,
/// fire every rule reachable within `depth` steps. Chosen greedily, most new
/// rules first and the smaller configuration on ties.
pub fn generate_coverage_test_set(ps: &PSystem, depth: usize) -> Result<CoverageTestSet, PsError> {
    let traces = psystem_run(ps, depth, RunMode::AllBranches)?;
    let all_rules = ps.rule_names();
    let mut by_end: BTreeMap<&PConfiguration, BTreeSet<&str>> = BTreeMap::new();
    for t in &traces {
        let entry = by_end.entry(t.final_configuration()).or_default();
        entry.extend(t.fired.iter().flat_map(|a| a.rules()));
    }
    let mut remaining: BTreeSet<&str> = all_rules.iter().map(String::as_str).collect();
    let mut chosen: Vec<PConfiguration> = Vec::new();
    let mut covering: BTreeMap<String, PConfiguration> = BTreeMap::new();
    loop {
        let best = by_end
            .iter()
            .map(|(c, rs)| (*c, rs.intersection(&remaining).count()))
            .filter(|(_, n)| *n > 0)
            .max_by(|(ca, na), (cb, nb)| na.cmp(nb).then_with(|| cb.cmp(ca)));
        let Some((cfg, _)) = best else { break };
        for r in &by_end[cfg] {
            if remaining.remove(r) {
                covering.insert(r.to_string(), cfg.clone());
            }
        }
        chosen.push(cfg.clone());
    }
    chosen.sort();
    let rules: Vec<RuleCoverage> = all_rules
        .iter()
        .map(|rule| match covering.get(rule) {
            Some(cfg) => RuleCoverage {
                rule: rule.clone(),
                covered: true,
                configuration: Some(cfg.clone()),
                witness: shortest(
                    traces
                        .iter()
                        .filter(|t| t.final_configuration() == cfg && t.fires(rule)),
                )
                .cloned(),
            },
            None => RuleCoverage {
                rule: rule.clone(),
                covered: false,
                configuration: None,
                witness: None,
            },
        })
        .collect();
    Ok(CoverageTestSet {
        depth,
        configurations: chosen,
        uncovered: remaining.into_iter().map(String::from).collect(),
        rules,
    })
}
