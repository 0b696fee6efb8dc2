//! Automaton algorithms behind W-method test generation: minimization,
//! state cover, characterization set and the W-method sequence set.
//!
//! Acceptance semantics throughout: a label sequence is accepted from a state
//! when every transition is defined and the reached state is terminal. An
//! undefined transition behaves like a move into an implicit rejecting sink.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::automaton::{Automaton, Nondeterminism};

/// An ordered list of processing-function names.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhiSequence(pub Vec<String>);

impl PhiSequence {
    pub fn empty() -> Self {
        PhiSequence(Vec::new())
    }

    pub fn of(labels: &[&str]) -> Self {
        PhiSequence(labels.iter().map(|s| s.to_string()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &PhiSequence) -> PhiSequence {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        PhiSequence(v)
    }
}

impl fmt::Display for PhiSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            f.write_str("ε")
        } else {
            f.write_str(&self.0.join("·"))
        }
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq, Serialize)]
pub enum FsmError {
    #[error("automaton is nondeterministic: {0:?}")]
    Nondeterministic(Nondeterminism),
    #[error("state {0} is unreachable from the initial state")]
    UnreachableState(String),
    #[error("automaton is not minimal: states {0} and {1} cannot be separated")]
    NotMinimal(String, String),
}

fn require_deterministic(a: &Automaton) -> Result<(), FsmError> {
    match a.nondeterminism() {
        Some(n) => Err(FsmError::Nondeterministic(n)),
        None => Ok(()),
    }
}

/// Minimizes a deterministic automaton.
///
/// Unreachable states are pruned, equivalent states merged by partition
/// refinement, and states that cannot reach a terminal state are dropped
/// (the initial state is always kept). Each class is named after its first
/// member in breadth-first order from the initial state.
pub fn minimize_automaton(a: &Automaton) -> Result<Automaton, FsmError> {
    require_deterministic(a)?;
    let order = a.reachable_bfs();
    let index: BTreeMap<&str, usize> = order
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let labels: Vec<String> = a
        .arcs
        .iter()
        .filter(|arc| index.contains_key(arc.from.as_str()))
        .map(|arc| arc.label.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n = order.len();
    let sink = n;
    // transition table over reachable states plus the sink
    let mut table = vec![vec![sink; labels.len()]; n + 1];
    let delta = a.delta();
    for (i, s) in order.iter().enumerate() {
        for (j, l) in labels.iter().enumerate() {
            if let Some(t) = delta.get(&(s.as_str(), l.as_str())) {
                table[i][j] = index[t];
            }
        }
    }
    let accepting: Vec<bool> = (0..=n)
        .map(|i| i < n && a.terminal.contains(&order[i]))
        .collect();

    let mut class: Vec<usize> = accepting.iter().map(|&acc| usize::from(acc)).collect();
    loop {
        let mut signatures: BTreeMap<(usize, Vec<usize>), usize> = BTreeMap::new();
        let mut next = vec![0; n + 1];
        // sink first so its class id is stable at 0
        for i in std::iter::once(sink).chain(0..n) {
            let sig = (
                class[i],
                table[i].iter().map(|&t| class[t]).collect::<Vec<_>>(),
            );
            let fresh = signatures.len();
            next[i] = *signatures.entry(sig).or_insert(fresh);
        }
        let stable = signatures.len() == class.iter().collect::<BTreeSet<_>>().len();
        class = next;
        if stable {
            break;
        }
    }

    let dead = class[sink];
    let mut out = Automaton::default();
    let mut rep: BTreeMap<usize, String> = BTreeMap::new();
    for (i, s) in order.iter().enumerate() {
        if class[i] == dead && i != 0 {
            continue;
        }
        rep.entry(class[i]).or_insert_with(|| s.clone());
    }
    if n == 0 {
        return Ok(out);
    }
    out.initial.insert(rep[&class[0]].clone());
    for (c, name) in &rep {
        out.states.insert(name.clone());
        let member = index[name.as_str()];
        if accepting[member] {
            out.terminal.insert(name.clone());
        }
        for (j, l) in labels.iter().enumerate() {
            let t = table[member][j];
            if t != sink && class[t] != dead {
                out.add_arc(&rep[c], l, &rep[&class[t]]);
            }
        }
    }
    Ok(out)
}

/// Shortest label sequence reaching each state from the initial state, with
/// lexicographic tie-breaking on label names. The result is prefix-closed
/// and contains ε.
pub fn state_cover(a: &Automaton) -> Result<BTreeSet<PhiSequence>, FsmError> {
    Ok(state_cover_map(a)?.into_values().collect())
}

/// The designated access sequence of every state.
pub fn state_cover_map(a: &Automaton) -> Result<BTreeMap<String, PhiSequence>, FsmError> {
    require_deterministic(a)?;
    let init = a
        .initial_state()
        .expect("deterministic automaton has one initial state");
    let mut access: BTreeMap<String, PhiSequence> = BTreeMap::new();
    access.insert(init.to_string(), PhiSequence::empty());
    let mut queue = VecDeque::from([init.to_string()]);
    while let Some(s) = queue.pop_front() {
        let prefix = access[&s].clone();
        for arc in a.outgoing(&s) {
            if !access.contains_key(&arc.to) {
                let mut seq = prefix.clone();
                seq.0.push(arc.label.clone());
                access.insert(arc.to.clone(), seq);
                queue.push_back(arc.to.clone());
            }
        }
    }
    if let Some(missing) = a.states.iter().find(|s| !access.contains_key(*s)) {
        return Err(FsmError::UnreachableState(missing.clone()));
    }
    Ok(access)
}

/// Shortest (then lexicographically least) word accepted from exactly one of
/// `p` and `q`. `None` stands for the implicit sink.
fn shortest_separator(
    a: &Automaton,
    delta: &BTreeMap<(&str, &str), &str>,
    labels: &[String],
    p: Option<&str>,
    q: Option<&str>,
) -> Option<PhiSequence> {
    let accepting = |s: Option<&str>| s.is_some_and(|s| a.terminal.contains(s));
    let mut seen = BTreeSet::from([(p, q)]);
    let mut queue = VecDeque::from([((p, q), Vec::<String>::new())]);
    while let Some(((x, y), word)) = queue.pop_front() {
        if accepting(x) != accepting(y) {
            return Some(PhiSequence(word));
        }
        for l in labels {
            let step = |s: Option<&str>| s.and_then(|s| delta.get(&(s, l.as_str())).copied());
            let next = (step(x), step(y));
            if next == (None, None) {
                continue;
            }
            if seen.insert(next) {
                let mut w = word.clone();
                w.push(l.clone());
                queue.push_back((next, w));
            }
        }
    }
    None
}

/// A characterization set: every pair of distinct states is separated by
/// some member (accepted from one state and not the other). Single-state
/// automata get `{ε}`. Pairs are processed shortest separator first and a
/// separator is only added when no chosen member already separates the pair.
pub fn characterization_set(a: &Automaton) -> Result<BTreeSet<PhiSequence>, FsmError> {
    require_deterministic(a)?;
    let states: Vec<&str> = a.states.iter().map(String::as_str).collect();
    if states.len() <= 1 {
        return Ok(BTreeSet::from([PhiSequence::empty()]));
    }
    let delta = a.delta();
    let labels: Vec<String> = a.labels().into_iter().collect();
    let mut pairs = Vec::new();
    for (i, p) in states.iter().enumerate() {
        for q in &states[i + 1..] {
            let sep = shortest_separator(a, &delta, &labels, Some(p), Some(q))
                .ok_or_else(|| FsmError::NotMinimal(p.to_string(), q.to_string()))?;
            pairs.push((sep, *p, *q));
        }
    }
    pairs.sort_by(|x, y| (x.0.len(), &x.0, x.1, x.2).cmp(&(y.0.len(), &y.0, y.1, y.2)));
    let mut w: BTreeSet<PhiSequence> = BTreeSet::new();
    for (sep, p, q) in pairs {
        let separated = w
            .iter()
            .any(|x| a.accepts_from(&delta, p, &x.0) != a.accepts_from(&delta, q, &x.0));
        if !separated {
            w.insert(sep);
        }
    }
    Ok(w)
}

/// The identification set used by the W-method: `W ∪ {ε}`, plus a shortest
/// accepted word for every state that accepts nothing in `W ∪ {ε}`, so each
/// state is also told apart from the implicit sink.
pub fn identification_set(a: &Automaton, w: &BTreeSet<PhiSequence>) -> BTreeSet<PhiSequence> {
    let delta = a.delta();
    let labels: Vec<String> = a.labels().into_iter().collect();
    let mut out = w.clone();
    out.insert(PhiSequence::empty());
    for s in &a.states {
        let separated = out.iter().any(|x| a.accepts_from(&delta, s, &x.0));
        if !separated {
            if let Some(sep) = shortest_separator(a, &delta, &labels, Some(s), None) {
                out.insert(sep);
            }
        }
    }
    out
}

/// All label sequences of length at most `max_len`, including ε.
pub fn sequences_up_to(labels: &BTreeSet<String>, max_len: usize) -> Vec<PhiSequence> {
    let mut all = vec![PhiSequence::empty()];
    let mut layer = vec![PhiSequence::empty()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(layer.len() * labels.len());
        for s in &layer {
            for l in labels {
                let mut v = s.0.clone();
                v.push(l.clone());
                next.push(PhiSequence(v));
            }
        }
        all.extend(next.iter().cloned());
        layer = next;
    }
    all
}

/// Shortest (then lexicographically least) sequence over `labels` that
/// leaves the automaton, reaching the implicit sink. `None` when every
/// state is defined on every label.
pub fn sink_access(
    a: &Automaton,
    labels: &BTreeSet<String>,
) -> Result<Option<PhiSequence>, FsmError> {
    let access = state_cover_map(a)?;
    let delta = a.delta();
    let best = access
        .iter()
        .flat_map(|(s, prefix)| {
            let delta = &delta;
            labels
                .iter()
                .filter(move |l| !delta.contains_key(&(s.as_str(), l.as_str())))
                .map(move |l| {
                    let mut seq = prefix.clone();
                    seq.0.push(l.clone());
                    seq
                })
        })
        .min_by(|x, y| (x.len(), x).cmp(&(y.len(), y)));
    Ok(best)
}

/// `C · (Φ^{≤k+1} ∪ {ε}) · Z` where `Z` is the identification set built
/// from the characterization set and Φ is the arc-label alphabet.
pub fn w_method_phi_sequences(a: &Automaton, k: usize) -> Result<BTreeSet<PhiSequence>, FsmError> {
    expand(&state_cover(a)?, a, &a.labels(), k)
}

/// The W-method over the complete machine: Φ is `labels` together with the
/// arc labels of `a`, and every missing arc leads to a rejecting sink.
/// When the sink is reachable it counts as a state, so `C` also holds its
/// access sequence. Without this, a trimmed specification hides faults that
/// lead out of its dead region, and a label used only on trimmed arcs is
/// never exercised.
pub fn complete_w_method_phi_sequences(
    a: &Automaton,
    labels: &BTreeSet<String>,
    k: usize,
) -> Result<BTreeSet<PhiSequence>, FsmError> {
    let phi: BTreeSet<String> = labels.iter().cloned().chain(a.labels()).collect();
    let mut cover = state_cover(a)?;
    cover.extend(sink_access(a, &phi)?);
    expand(&cover, a, &phi, k)
}

fn expand(
    cover: &BTreeSet<PhiSequence>,
    a: &Automaton,
    phi: &BTreeSet<String>,
    k: usize,
) -> Result<BTreeSet<PhiSequence>, FsmError> {
    let w = characterization_set(a)?;
    let z = identification_set(a, &w);
    let middle = sequences_up_to(phi, k + 1);
    let mut out = BTreeSet::new();
    for c in cover {
        for x in &middle {
            let cx = c.concat(x);
            for z in &z {
                out.insert(cx.concat(z));
            }
        }
    }
    Ok(out)
}
