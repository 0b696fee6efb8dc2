//! Finite automata over processing-function labels.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Arc {
    pub from: String,
    pub label: String,
    pub to: String,
}

/// The automaton associated with a machine: states, initial and terminal
/// states, and arcs labelled by processing-function names.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Automaton {
    pub states: BTreeSet<String>,
    pub initial: BTreeSet<String>,
    pub terminal: BTreeSet<String>,
    pub arcs: BTreeSet<Arc>,
}

/// Why an automaton is not deterministic.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Nondeterminism {
    InitialStates {
        count: usize,
    },
    Arcs {
        state: String,
        label: String,
        targets: Vec<String>,
    },
}

impl Automaton {
    pub fn add_arc(&mut self, from: &str, label: &str, to: &str) {
        self.arcs.insert(Arc {
            from: from.to_string(),
            label: label.to_string(),
            to: to.to_string(),
        });
    }

    /// Sorted set of labels used by arcs.
    pub fn labels(&self) -> BTreeSet<String> {
        self.arcs.iter().map(|a| a.label.clone()).collect()
    }

    /// Outgoing arcs of `state`, in (label, target) order.
    pub fn outgoing<'a>(&'a self, state: &'a str) -> impl Iterator<Item = &'a Arc> + 'a {
        self.arcs.iter().filter(move |a| a.from == state)
    }

    /// The first reason this automaton is nondeterministic, if any.
    pub fn nondeterminism(&self) -> Option<Nondeterminism> {
        if self.initial.len() != 1 {
            return Some(Nondeterminism::InitialStates {
                count: self.initial.len(),
            });
        }
        let mut targets: BTreeMap<(&str, &str), Vec<String>> = BTreeMap::new();
        for a in &self.arcs {
            targets
                .entry((a.from.as_str(), a.label.as_str()))
                .or_default()
                .push(a.to.clone());
        }
        targets
            .into_iter()
            .find(|(_, ts)| ts.len() > 1)
            .map(|((state, label), targets)| Nondeterminism::Arcs {
                state: state.to_string(),
                label: label.to_string(),
                targets,
            })
    }

    pub fn is_deterministic(&self) -> bool {
        self.nondeterminism().is_none()
    }

    /// Transition function view of a deterministic automaton.
    pub fn delta(&self) -> BTreeMap<(&str, &str), &str> {
        self.arcs
            .iter()
            .map(|a| ((a.from.as_str(), a.label.as_str()), a.to.as_str()))
            .collect()
    }

    /// The single initial state of a deterministic automaton.
    pub fn initial_state(&self) -> Option<&str> {
        match self.initial.len() {
            1 => self.initial.iter().next().map(String::as_str),
            _ => None,
        }
    }

    /// States reachable from the initial states, in breadth-first order
    /// with arcs expanded in label order.
    pub fn reachable_bfs(&self) -> Vec<String> {
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        let mut order = Vec::new();
        let mut queue: VecDeque<&str> = VecDeque::new();
        for s in &self.initial {
            if seen.insert(s) {
                queue.push_back(s);
            }
        }
        let mut by_source: BTreeMap<&str, Vec<(&str, &str)>> = BTreeMap::new();
        for a in &self.arcs {
            by_source
                .entry(&a.from)
                .or_default()
                .push((&a.label, &a.to));
        }
        while let Some(s) = queue.pop_front() {
            order.push(s.to_string());
            if let Some(out) = by_source.get(s) {
                for &(_, t) in out {
                    if seen.insert(t) {
                        queue.push_back(t);
                    }
                }
            }
        }
        order
    }

    /// Whether the deterministic automaton accepts `word` from `state`. An
    /// undefined transition rejects.
    pub fn accepts_from(
        &self,
        delta: &BTreeMap<(&str, &str), &str>,
        state: &str,
        word: &[String],
    ) -> bool {
        let mut cur = state;
        for label in word {
            match delta.get(&(cur, label.as_str())) {
                Some(next) => cur = next,
                None => return false,
            }
        }
        self.terminal.contains(cur)
    }
}
