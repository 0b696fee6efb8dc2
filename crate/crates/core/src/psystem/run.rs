//! Maximally parallel steps and bounded computations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{PConfiguration, PRule, PSystem, PsError, Target};
use crate::value::Multiset;

pub const DEFAULT_ASSIGNMENT_CAP: usize = 10_000;
pub const DEFAULT_TRACE_CAP: usize = 100_000;

/// Rule instances fired in one step: a rule-name multiset per compartment,
/// indexed by id − 1.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(pub Vec<BTreeMap<String, u32>>);

impl Assignment {
    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|m| m.values().all(|n| *n == 0))
    }

    pub fn fires(&self, rule: &str) -> bool {
        self.0.iter().any(|m| m.get(rule).is_some_and(|n| *n > 0))
    }

    pub fn rules(&self) -> impl Iterator<Item = &str> {
        self.0
            .iter()
            .flat_map(|m| m.iter().filter(|(_, n)| **n > 0).map(|(r, _)| r.as_str()))
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|m| {
                let fired: Vec<String> = m
                    .iter()
                    .filter(|(_, n)| **n > 0)
                    .map(|(r, n)| {
                        if *n == 1 {
                            r.clone()
                        } else {
                            format!("{r}×{n}")
                        }
                    })
                    .collect();
                if fired.is_empty() {
                    "∅".to_string()
                } else {
                    format!("{{{}}}", fired.join(","))
                }
            })
            .collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunMode {
    AllBranches,
    /// One branch per step, picked by a generator seeded from the seed and
    /// the current configuration.
    Seeded(u64),
}

/// `configurations[0] ⟹ configurations[1] ⟹ …`, with `fired[i]` taking
/// `configurations[i]` to `configurations[i + 1]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComputationTrace {
    pub configurations: Vec<PConfiguration>,
    pub fired: Vec<Assignment>,
    /// No rule applies in the last configuration.
    pub halted: bool,
}

impl ComputationTrace {
    pub fn steps(&self) -> usize {
        self.fired.len()
    }

    pub fn final_configuration(&self) -> &PConfiguration {
        self.configurations
            .last()
            .expect("a trace has at least one configuration")
    }

    pub fn fires(&self, rule: &str) -> bool {
        self.fired.iter().any(|a| a.fires(rule))
    }
}

impl fmt::Display for ComputationTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.configurations[0])?;
        for (a, c) in self.fired.iter().zip(&self.configurations[1..]) {
            write!(f, " ⟹{a} {c}")?;
        }
        if self.halted {
            f.write_str(" (halted)")?;
        }
        Ok(())
    }
}

fn compartment_choices(rules: &[&PRule], content: &Multiset) -> Vec<BTreeMap<String, u32>> {
    fn rec(
        rules: &[&PRule],
        idx: usize,
        left: &Multiset,
        chosen: &mut BTreeMap<String, u32>,
        out: &mut Vec<BTreeMap<String, u32>>,
    ) {
        if idx == rules.len() {
            if rules.iter().all(|r| !left.contains(&r.lhs)) {
                out.push(
                    chosen
                        .iter()
                        .filter(|(_, n)| **n > 0)
                        .map(|(r, n)| (r.clone(), *n))
                        .collect(),
                );
            }
            return;
        }
        let rule = rules[idx];
        for k in 0..=left.times_contains(&rule.lhs) {
            let mut rest = left.clone();
            rest.remove_scaled(&rule.lhs, k);
            chosen.insert(rule.name.clone(), k);
            rec(rules, idx + 1, &rest, chosen, out);
        }
        chosen.remove(&rule.name);
    }
    let mut out = Vec::new();
    rec(rules, 0, content, &mut BTreeMap::new(), &mut out);
    out
}

/// Every maximal assignment of rule instances in `cfg`, sorted. A halted
/// configuration has exactly one assignment, the empty one.
pub fn maximal_rule_multisets(
    ps: &PSystem,
    cfg: &PConfiguration,
    cap: usize,
) -> Result<Vec<Assignment>, PsError> {
    ps.check_configuration(cfg)?;
    let mut all = vec![Assignment::default()];
    for id in 1..=ps.len() {
        let rules: Vec<&PRule> = ps
            .rules
            .get(&id)
            .map(|v| v.iter().collect())
            .unwrap_or_default();
        let choices = compartment_choices(&rules, cfg.compartment(id));
        if all.len().saturating_mul(choices.len()) > cap {
            return Err(PsError::ExplosionBound { limit: cap });
        }
        all = all
            .into_iter()
            .flat_map(|a| {
                choices.iter().map(move |c| {
                    let mut a = a.clone();
                    a.0.push(c.clone());
                    a
                })
            })
            .collect();
    }
    all.sort();
    Ok(all)
}

/// Consumes every left-hand side, then deposits every right-hand side.
pub fn apply_assignment(
    ps: &PSystem,
    cfg: &PConfiguration,
    a: &Assignment,
) -> Result<PConfiguration, PsError> {
    ps.check_configuration(cfg)?;
    if a.0.len() != cfg.0.len() {
        return Err(PsError::InvalidConfiguration(
            "assignment does not match the compartments".into(),
        ));
    }
    let mut next = cfg.clone();
    let mut produced = vec![Multiset::new(); cfg.0.len()];
    for (i, fired) in a.0.iter().enumerate() {
        for (name, n) in fired {
            let rule = ps
                .rules
                .get(&(i + 1))
                .and_then(|rs| rs.iter().find(|r| &r.name == name))
                .ok_or_else(|| {
                    PsError::InvalidConfiguration(format!(
                        "no rule {name} in compartment {}",
                        i + 1
                    ))
                })?;
            if !next.0[i].remove_scaled(&rule.lhs, *n) {
                return Err(PsError::InvalidConfiguration(format!(
                    "compartment {} cannot fire {name} {n} times",
                    i + 1
                )));
            }
            for (sym, t) in &rule.rhs {
                let dest = match t {
                    Target::Here => i,
                    Target::In(k) => k - 1,
                };
                produced[dest].insert(sym, *n);
            }
        }
    }
    for (m, p) in next.0.iter_mut().zip(&produced) {
        m.add_scaled(p, 1);
    }
    Ok(next)
}

fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Picks one maximal assignment, reproducibly for a given seed and
/// configuration.
pub fn choose_assignment(
    ps: &PSystem,
    cfg: &PConfiguration,
    seed: u64,
) -> Result<Assignment, PsError> {
    let mut options = maximal_rule_multisets(ps, cfg, DEFAULT_ASSIGNMENT_CAP)?;
    if options.len() == 1 {
        return Ok(options.pop().unwrap());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(&cfg.canonical().join(",")));
    let idx = rng.gen_range(0..options.len());
    Ok(options.swap_remove(idx))
}

/// True when no rule applies anywhere in `cfg`.
pub fn is_halted(ps: &PSystem, cfg: &PConfiguration) -> bool {
    ps.all_rules()
        .all(|r| !cfg.compartment(r.compartment).contains(&r.lhs))
}

/// Computations of at most `depth` steps from the initial configuration.
///
/// In [`RunMode::AllBranches`] every maximal computation up to the depth is
/// returned; more than `trace_cap` of them is an error carrying the traces
/// finished so far.
pub fn psystem_run(
    ps: &PSystem,
    depth: usize,
    mode: RunMode,
) -> Result<Vec<ComputationTrace>, PsError> {
    psystem_run_capped(ps, depth, mode, DEFAULT_TRACE_CAP)
}

pub fn psystem_run_capped(
    ps: &PSystem,
    depth: usize,
    mode: RunMode,
    trace_cap: usize,
) -> Result<Vec<ComputationTrace>, PsError> {
    let start = ComputationTrace {
        configurations: vec![ps.initial_configuration()],
        fired: Vec::new(),
        halted: false,
    };
    let mut done = Vec::new();
    let mut stack = vec![start];
    while let Some(mut trace) = stack.pop() {
        let cfg = trace.final_configuration().clone();
        if is_halted(ps, &cfg) {
            trace.halted = true;
            done.push(trace);
            continue;
        }
        if trace.steps() == depth {
            done.push(trace);
            continue;
        }
        let options = match mode {
            RunMode::AllBranches => maximal_rule_multisets(ps, &cfg, DEFAULT_ASSIGNMENT_CAP)?,
            RunMode::Seeded(seed) => vec![choose_assignment(ps, &cfg, seed)?],
        };
        if done.len() + stack.len() + options.len() > trace_cap {
            done.sort_by(|a, b| a.fired.cmp(&b.fired));
            return Err(PsError::BranchExplosion {
                limit: trace_cap,
                partial: done,
            });
        }
        for a in options.into_iter().rev() {
            let next = apply_assignment(ps, &cfg, &a)?;
            let mut t = trace.clone();
            t.fired.push(a);
            t.configurations.push(next);
            stack.push(t);
        }
    }
    done.sort_by(|a, b| {
        a.fired
            .cmp(&b.fired)
            .then_with(|| a.configurations.cmp(&b.configurations))
    });
    Ok(done)
}

/// Every configuration reachable in at most `depth` steps.
pub fn reachable_configurations(
    ps: &PSystem,
    depth: usize,
) -> Result<BTreeSet<PConfiguration>, PsError> {
    let mut seen = BTreeSet::from([ps.initial_configuration()]);
    let mut level = seen.clone();
    for _ in 0..depth {
        let mut next = BTreeSet::new();
        for cfg in &level {
            if is_halted(ps, cfg) {
                continue;
            }
            for a in maximal_rule_multisets(ps, cfg, DEFAULT_ASSIGNMENT_CAP)? {
                let c = apply_assignment(ps, cfg, &a)?;
                if seen.insert(c.clone()) {
                    next.insert(c);
                }
            }
        }
        level = next;
    }
    Ok(seen)
}
