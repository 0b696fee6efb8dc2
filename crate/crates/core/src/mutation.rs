//! Fault seeding and mutation scoring.
//!
//! Mutants are enumerated exhaustively per operator, filtered (invalid
//! models and duplicates are dropped and counted), then sampled with a
//! seeded generator. Scoring replays a test suite or a P-system coverage
//! set against every mutant; a mutant that is not killed is compared with
//! the specification up to a bound to tell real survivors from possibly
//! equivalent ones.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::csxms::{extend_for_testing, replay_on_system, validate_system, CsxmSystem, ProductSxm};
use crate::psystem::{
    reachable_configurations, validate_psystem, CoverageTestSet, PConfiguration, PSystem, PsError,
    Target,
};
use crate::suite::{TestSuite, DEFAULT_BRANCH_BOUND, SCHEMA_VERSION};
use crate::sxm::{validate_sxm, MemoryDomain, RunError, Sxm, SxmConfiguration, Symbol};
use crate::term::{ArithOp, Term};
use crate::value::{Multiset, Value};

/// Default input length (or P-system depth) for the comparison of
/// surviving mutants with the specification.
pub const DEFAULT_EQUIVALENCE_BOUND: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Operator {
    RuleDelete,
    RhsTargetSwap,
    SymbolSubstitute,
    LhsMultiplicityChange,
    TransitionRetarget,
    TransitionDelete,
    CaseOutputSwap,
    MemoryUpdatePerturb,
}

impl Operator {
    pub const PSYSTEM: [Operator; 4] = [
        Operator::RuleDelete,
        Operator::RhsTargetSwap,
        Operator::SymbolSubstitute,
        Operator::LhsMultiplicityChange,
    ];
    pub const SXM: [Operator; 4] = [
        Operator::TransitionRetarget,
        Operator::TransitionDelete,
        Operator::CaseOutputSwap,
        Operator::MemoryUpdatePerturb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Operator::RuleDelete => "rule-delete",
            Operator::RhsTargetSwap => "rhs-target-swap",
            Operator::SymbolSubstitute => "symbol-substitute",
            Operator::LhsMultiplicityChange => "lhs-multiplicity-change",
            Operator::TransitionRetarget => "transition-retarget",
            Operator::TransitionDelete => "transition-delete",
            Operator::CaseOutputSwap => "case-output-swap",
            Operator::MemoryUpdatePerturb => "memory-update-perturb",
        }
    }

    pub fn for_psystem(self) -> bool {
        Self::PSYSTEM.contains(&self)
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Operator {
    type Err = MutationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let all = Self::PSYSTEM.iter().chain(&Self::SXM);
        if s == "target-swap" {
            return Ok(Operator::RhsTargetSwap);
        }
        all.copied()
            .find(|o| o.name() == s)
            .ok_or_else(|| MutationError::UnknownOperator(s.to_string()))
    }
}

/// Any model that can be mutated. Serialized as the bare model; reading
/// tells the kinds apart by their top-level keys.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Model {
    PSystem(PSystem),
    System(CsxmSystem),
    Sxm(Sxm),
}

impl<'de> Deserialize<'de> for Model {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let v = serde_json::Value::deserialize(d)?;
        if v.get("structure").is_some() {
            serde_json::from_value(v)
                .map(Model::PSystem)
                .map_err(D::Error::custom)
        } else if v.get("components").is_some() {
            serde_json::from_value(v)
                .map(Model::System)
                .map_err(D::Error::custom)
        } else {
            serde_json::from_value(v)
                .map(Model::Sxm)
                .map_err(D::Error::custom)
        }
    }
}

impl Model {
    fn is_valid(&self) -> bool {
        match self {
            Model::PSystem(p) => validate_psystem(p).is_valid(),
            Model::System(s) => validate_system(s).is_valid(),
            Model::Sxm(m) => validate_sxm(m).is_valid(),
        }
    }

    /// Identity up to the order of rule right-hand sides, which is a
    /// multiset.
    fn key(&self) -> String {
        match self {
            Model::PSystem(ps) => {
                let mut ps = ps.clone();
                for rule in ps.rules.values_mut().flatten() {
                    rule.rhs.sort();
                }
                serde_json::to_string(&ps).unwrap_or_default()
            }
            _ => serde_json::to_string(self).unwrap_or_default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mutant {
    pub id: usize,
    pub operator: Operator,
    pub location: String,
    pub model: Model,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutantSet {
    pub schema: u32,
    pub seed: u64,
    pub operators: Vec<Operator>,
    /// Valid, distinct candidates before sampling.
    pub candidates: usize,
    pub invalid: usize,
    pub duplicates: usize,
    pub mutants: Vec<Mutant>,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum MutationError {
    #[error("count must be at least 1")]
    ZeroCount,
    #[error("no valid mutants")]
    NoValidMutants,
    #[error("empty mutant set")]
    EmptyMutantSet,
    #[error("unknown operator {0:?}")]
    UnknownOperator(String),
    #[error("test target does not fit the model: {0}")]
    TargetMismatch(String),
    #[error(transparent)]
    PSystem(#[from] PsError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Csxms(#[from] crate::csxms::CsxmError),
}

// ---------------------------------------------------------------- P systems

fn psystem_candidates(ps: &PSystem, op: Operator) -> Vec<(String, PSystem)> {
    let mut out = Vec::new();
    let rules: Vec<(usize, usize)> = ps
        .rules
        .iter()
        .flat_map(|(id, rs)| (0..rs.len()).map(move |i| (*id, i)))
        .collect();
    for (cid, i) in rules {
        let rule = &ps.rules[&cid][i];
        let with = |f: &dyn Fn(&mut crate::psystem::PRule)| {
            let mut m = ps.clone();
            f(&mut m.rules.get_mut(&cid).unwrap()[i]);
            m
        };
        match op {
            Operator::RuleDelete => {
                let mut m = ps.clone();
                m.rules.get_mut(&cid).unwrap().remove(i);
                out.push((rule.name.clone(), m));
            }
            Operator::RhsTargetSwap => {
                for (j, (sym, t)) in rule.rhs.iter().enumerate() {
                    let options: Vec<Target> = match t {
                        Target::Here => ps
                            .parent_of(cid)
                            .into_iter()
                            .chain(ps.children_of(cid))
                            .map(Target::In)
                            .collect(),
                        Target::In(_) => vec![Target::Here],
                    };
                    for nt in options {
                        out.push((
                            format!("{}: ({sym},{t}) → ({sym},{nt})", rule.name),
                            with(&|r| r.rhs[j].1 = nt),
                        ));
                    }
                }
            }
            Operator::SymbolSubstitute => {
                for s in rule.lhs.symbols() {
                    for ns in ps.alphabet.iter().filter(|a| a.as_str() != s) {
                        let mut lhs = Multiset::new();
                        for (x, n) in rule.lhs.iter() {
                            lhs.insert(if x == s { ns } else { x }, n);
                        }
                        out.push((
                            format!("{}: lhs {s} → {ns}", rule.name),
                            with(&|r| r.lhs = lhs.clone()),
                        ));
                    }
                }
                for (j, (s, _)) in rule.rhs.iter().enumerate() {
                    for ns in ps.alphabet.iter().filter(|a| *a != s) {
                        out.push((
                            format!("{}: rhs[{j}] {s} → {ns}", rule.name),
                            with(&|r| r.rhs[j].0 = ns.clone()),
                        ));
                    }
                }
            }
            Operator::LhsMultiplicityChange => {
                for (s, n) in rule.lhs.iter() {
                    for delta in [1i64, -1] {
                        let nn = i64::from(n) + delta;
                        let mut lhs = Multiset::new();
                        for (x, k) in rule.lhs.iter() {
                            let k = if x == s { nn } else { i64::from(k) };
                            if k > 0 {
                                lhs.insert(x, k as u32);
                            }
                        }
                        out.push((
                            format!("{}: lhs {s}×{n} → {s}×{nn}", rule.name),
                            with(&|r| r.lhs = lhs.clone()),
                        ));
                    }
                }
            }
            _ => {}
        }
    }
    out
}

// --------------------------------------------------------------------- SXMs

fn cyclic_shift(t: &Term, lo: i64, size: i64, delta: i64) -> Term {
    let lit = |i: i64| Box::new(Term::Lit(Value::Int(i)));
    let offset = Term::Arith(ArithOp::Sub, Box::new(t.clone()), lit(lo));
    let shifted = Term::Arith(ArithOp::Add, Box::new(offset), lit(delta));
    let wrapped = Term::Arith(ArithOp::Mod, Box::new(shifted), lit(size));
    Term::Arith(ArithOp::Add, Box::new(wrapped), lit(lo))
}

fn sxm_candidates(m: &Sxm, op: Operator) -> Vec<(String, Sxm)> {
    let mut out = Vec::new();
    match op {
        Operator::TransitionRetarget | Operator::TransitionDelete => {
            for ((q, f), targets) in &m.next_state {
                for t in targets {
                    if op == Operator::TransitionDelete {
                        let mut mm = m.clone();
                        let set = mm.next_state.get_mut(&(q.clone(), f.clone())).unwrap();
                        set.remove(t);
                        if set.is_empty() {
                            mm.next_state.remove(&(q.clone(), f.clone()));
                        }
                        out.push((format!("{q} --{f}--> {t}"), mm));
                        continue;
                    }
                    for nt in m.states.iter().filter(|s| !targets.contains(*s)) {
                        let mut mm = m.clone();
                        let set = mm.next_state.get_mut(&(q.clone(), f.clone())).unwrap();
                        set.remove(t);
                        set.insert(nt.clone());
                        out.push((format!("{q} --{f}--> {t} ⇒ {nt}"), mm));
                    }
                }
            }
        }
        Operator::CaseOutputSwap => {
            for (fi, f) in m.functions.iter().enumerate() {
                for (ci, c) in f.cases.iter().enumerate() {
                    let Some(o) = &c.output else { continue };
                    for no in m.outputs.iter().filter(|x| *x != o) {
                        let mut mm = m.clone();
                        mm.functions[fi].cases[ci].output = Some(no.clone());
                        out.push((format!("{} case {ci}: output {o} → {no}", f.name), mm));
                    }
                }
            }
        }
        Operator::MemoryUpdatePerturb => {
            let MemoryDomain::Range { lo, hi } = m.memory_domain else {
                return out;
            };
            let size = hi - lo + 1;
            if size < 2 {
                return out;
            }
            for (fi, f) in m.functions.iter().enumerate() {
                for (ci, c) in f.cases.iter().enumerate() {
                    for (delta, label) in [(1, "+1"), (size - 1, "-1")] {
                        let mut mm = m.clone();
                        mm.functions[fi].cases[ci].mem_next =
                            cyclic_shift(&c.mem_next, lo, size, delta);
                        out.push((format!("{} case {ci}: update {label}", f.name), mm));
                    }
                }
            }
        }
        _ => {}
    }
    out
}

fn candidates(model: &Model, op: Operator) -> Vec<(String, Model)> {
    match model {
        Model::PSystem(p) => psystem_candidates(p, op)
            .into_iter()
            .map(|(l, m)| (l, Model::PSystem(m)))
            .collect(),
        Model::Sxm(s) => sxm_candidates(s, op)
            .into_iter()
            .map(|(l, m)| (l, Model::Sxm(m)))
            .collect(),
        Model::System(sys) => {
            let mut out = Vec::new();
            for (i, c) in sys.components.iter().enumerate() {
                for (l, m) in sxm_candidates(&c.base, op) {
                    let mut s = sys.clone();
                    s.components[i].base = m;
                    out.push((format!("component {}: {l}", i + 1), Model::System(s)));
                }
            }
            out
        }
    }
}

/// A seeded sample of at most `count` valid, distinct mutants, in
/// enumeration order (operators as given, then location).
pub fn mutate_model(
    model: &Model,
    operators: &[Operator],
    seed: u64,
    count: usize,
) -> Result<MutantSet, MutationError> {
    if count == 0 {
        return Err(MutationError::ZeroCount);
    }
    let mut seen = BTreeSet::from([model.key()]);
    let mut invalid = 0;
    let mut duplicates = 0;
    let mut pool = Vec::new();
    let mut ops: Vec<Operator> = Vec::new();
    for op in operators {
        if !ops.contains(op) {
            ops.push(*op);
        }
    }
    for &op in &ops {
        for (location, m) in candidates(model, op) {
            if !m.is_valid() {
                invalid += 1;
            } else if !seen.insert(m.key()) {
                duplicates += 1;
            } else {
                pool.push((op, location, m));
            }
        }
    }
    if pool.is_empty() {
        return Err(MutationError::NoValidMutants);
    }
    let candidates = pool.len();
    let mut picked: Vec<usize> = (0..pool.len()).collect();
    if count < pool.len() {
        picked.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        picked.truncate(count);
        picked.sort_unstable();
    }
    let mut slots: Vec<Option<(Operator, String, Model)>> = pool.into_iter().map(Some).collect();
    let mutants = picked
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let (operator, location, model) = slots[p].take().expect("each index is picked once");
            Mutant {
                id: i + 1,
                operator,
                location,
                model,
            }
        })
        .collect();
    Ok(MutantSet {
        schema: SCHEMA_VERSION,
        seed,
        operators: ops,
        candidates,
        invalid,
        duplicates,
        mutants,
    })
}

// ------------------------------------------------------------------ scoring

/// What the mutants are scored against.
#[derive(Clone, Copy, Debug)]
pub enum ScoreTarget<'a> {
    /// A suite generated from an SXM.
    Suite(&'a TestSuite),
    /// A suite generated from a communicating system, with the product used
    /// to name its tuple symbols.
    SystemSuite(&'a TestSuite, &'a ProductSxm),
    /// A P-system coverage set; its depth bounds reachability.
    Coverage(&'a CoverageTestSet),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    /// A suite case whose observed outputs differ from the expected ones.
    Case {
        input: Vec<Symbol>,
        expected: Vec<Vec<Symbol>>,
        observed: Vec<Vec<Symbol>>,
    },
    /// A coverage-set member the mutant cannot reach.
    Unreachable {
        configuration: PConfiguration,
        depth: usize,
    },
    /// An input on which specification and mutant disagree that the suite
    /// does not contain.
    Difference {
        input: Vec<Symbol>,
        expected: Vec<Vec<Symbol>>,
        observed: Vec<Vec<Symbol>>,
    },
    /// A configuration reachable by exactly one of specification and mutant.
    ReachabilityDifference {
        configuration: PConfiguration,
        depth: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Killed,
    /// Not killed, and a bounded comparison found a difference.
    Survived,
    /// Not killed, and no difference within the bound. Possibly equivalent.
    NotKilledBounded,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutantVerdict {
    pub id: usize,
    pub operator: Operator,
    pub location: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub schema: u32,
    pub total: usize,
    pub killed: usize,
    pub survived: usize,
    pub invalid: usize,
    pub score: f64,
    /// Mutants with a known difference from the specification.
    pub non_equivalent: usize,
    pub non_equivalent_score: f64,
    pub equivalence_bound: usize,
    pub per_mutant: Vec<MutantVerdict>,
}

fn sorted(set: BTreeSet<Vec<Symbol>>) -> Vec<Vec<Symbol>> {
    set.into_iter().collect()
}

fn observe_sxm(m: &Sxm, input: &[Symbol]) -> Result<Vec<Vec<Symbol>>, MutationError> {
    Ok(sorted(m.outputs(input, DEFAULT_BRANCH_BOUND)?))
}

fn first_case_difference(
    suite: &TestSuite,
    mut observe: impl FnMut(&[Symbol]) -> Result<Vec<Vec<Symbol>>, MutationError>,
) -> Result<Option<Witness>, MutationError> {
    for case in &suite.cases {
        let observed = observe(&case.input)?;
        if observed != case.expected_outputs {
            return Ok(Some(Witness::Case {
                input: case.input.clone(),
                expected: case.expected_outputs.clone(),
                observed,
            }));
        }
    }
    Ok(None)
}

type Key = (String, Value);

fn det_step(m: &Sxm, key: &Key, symbol: &str) -> Result<Option<(Symbol, Key)>, ()> {
    let cfg = SxmConfiguration {
        memory: key.1.clone(),
        state: key.0.clone(),
        remaining_input: vec![symbol.to_string()],
        output_so_far: Vec::new(),
    };
    let moves = m.moves(&cfg);
    let distinct: BTreeSet<(&Symbol, &String, &Value)> = moves
        .iter()
        .map(|mv| (&mv.output, &mv.successor.state, &mv.successor.memory))
        .collect();
    match distinct.len() {
        0 => Ok(None),
        1 => {
            let mv = &moves[0];
            Ok(Some((
                mv.output.clone(),
                (mv.successor.state.clone(), mv.successor.memory.clone()),
            )))
        }
        _ => Err(()),
    }
}

/// Shortest input of length at most `max_len` on which the two machines
/// compute different output sets, or `None` when they agree on every input
/// up to that length.
///
/// Deterministic machines are explored jointly, one node per pair of
/// configurations; otherwise inputs are enumerated.
pub fn bounded_difference(
    spec: &Sxm,
    mutant: &Sxm,
    max_len: usize,
) -> Result<Option<Vec<Symbol>>, MutationError> {
    match joint_difference(spec, mutant, max_len) {
        Ok(found) => Ok(found),
        Err(()) => enumerated_difference(spec, mutant, max_len),
    }
}

fn joint_difference(spec: &Sxm, mutant: &Sxm, max_len: usize) -> Result<Option<Vec<Symbol>>, ()> {
    type Node = (Option<Key>, Option<Key>, bool);
    let start = |m: &Sxm| -> Result<Option<Key>, ()> {
        match m.initial_states.len() {
            0 => Ok(None),
            1 => Ok(m
                .initial_states
                .first()
                .map(|q| (q.clone(), m.initial_memory.clone()))),
            _ => Err(()),
        }
    };
    let symbols: Vec<Symbol> = spec.inputs.union(&mutant.inputs).cloned().collect();
    let accepts =
        |m: &Sxm, k: &Option<Key>| k.as_ref().is_some_and(|k| m.terminal_states.contains(&k.0));
    let root: Node = (start(spec)?, start(mutant)?, false);
    let mut parent: BTreeMap<Node, Option<(Node, Symbol)>> = BTreeMap::from([(root.clone(), None)]);
    let mut queue = VecDeque::from([(root, 0usize)]);
    while let Some((node, depth)) = queue.pop_front() {
        let (s, m, diverged) = &node;
        let differs = if *diverged || s.is_none() || m.is_none() {
            accepts(spec, s) || accepts(mutant, m)
        } else {
            accepts(spec, s) != accepts(mutant, m)
        };
        if differs {
            let mut path = Vec::new();
            let mut cur = node.clone();
            while let Some(Some((p, sym))) = parent.get(&cur) {
                path.push(sym.clone());
                cur = p.clone();
            }
            path.reverse();
            return Ok(Some(path));
        }
        if depth == max_len {
            continue;
        }
        for sym in &symbols {
            let ns = match s {
                Some(k) if spec.inputs.contains(sym) => det_step(spec, k, sym)?,
                _ => None,
            };
            let nm = match m {
                Some(k) if mutant.inputs.contains(sym) => det_step(mutant, k, sym)?,
                _ => None,
            };
            if ns.is_none() && nm.is_none() {
                continue;
            }
            let div = *diverged || matches!((&ns, &nm), (Some((a, _)), Some((b, _))) if a != b);
            let next: Node = (ns.map(|x| x.1), nm.map(|x| x.1), div);
            if !parent.contains_key(&next) {
                parent.insert(next.clone(), Some((node.clone(), sym.clone())));
                queue.push_back((next, depth + 1));
            }
        }
    }
    Ok(None)
}

fn enumerated_difference(
    spec: &Sxm,
    mutant: &Sxm,
    max_len: usize,
) -> Result<Option<Vec<Symbol>>, MutationError> {
    let symbols: Vec<Symbol> = spec.inputs.union(&mutant.inputs).cloned().collect();
    let mut level: Vec<Vec<Symbol>> = vec![Vec::new()];
    for len in 0..=max_len {
        for input in &level {
            if observe_sxm(spec, input)? != observe_sxm(mutant, input)? {
                return Ok(Some(input.clone()));
            }
        }
        if len < max_len {
            level = level
                .iter()
                .flat_map(|p| {
                    symbols.iter().map(move |s| {
                        let mut q = p.clone();
                        q.push(s.clone());
                        q
                    })
                })
                .collect();
        }
    }
    Ok(None)
}

fn system_difference(
    spec: &CsxmSystem,
    mutant: &CsxmSystem,
    product: &ProductSxm,
    max_len: usize,
) -> Result<Option<Witness>, MutationError> {
    let symbols: Vec<Symbol> = product
        .input_tuples
        .keys()
        .filter(|t| product.decode_single(t, false).is_some())
        .cloned()
        .collect();
    let mut level: Vec<Vec<Symbol>> = vec![Vec::new()];
    for len in 0..=max_len {
        for input in &level {
            let expected = sorted(replay_on_system(spec, product, input));
            let observed = sorted(replay_on_system(mutant, product, input));
            if expected != observed {
                return Ok(Some(Witness::Difference {
                    input: input.clone(),
                    expected,
                    observed,
                }));
            }
        }
        if len < max_len {
            level = level
                .iter()
                .flat_map(|p| {
                    symbols.iter().map(move |s| {
                        let mut q = p.clone();
                        q.push(s.clone());
                        q
                    })
                })
                .collect();
        }
    }
    Ok(None)
}

fn verdict_for(
    spec: &Model,
    mutant: &Mutant,
    target: ScoreTarget<'_>,
    bound: usize,
) -> Result<MutantVerdict, MutationError> {
    let mismatch = |what: &str| MutationError::TargetMismatch(what.to_string());
    let (killed, difference) = match (spec, &mutant.model, target) {
        (Model::Sxm(s), Model::Sxm(m), ScoreTarget::Suite(suite)) => {
            let killed = first_case_difference(suite, |i| observe_sxm(m, i))?;
            let diff = if killed.is_none() {
                bounded_difference(s, m, bound)?
                    .map(|input| -> Result<Witness, MutationError> {
                        Ok(Witness::Difference {
                            expected: observe_sxm(s, &input)?,
                            observed: observe_sxm(m, &input)?,
                            input,
                        })
                    })
                    .transpose()?
            } else {
                None
            };
            (killed, diff)
        }
        (Model::System(s), Model::System(m), ScoreTarget::SystemSuite(suite, product)) => {
            let ext_s = extend_for_testing(s)?;
            let ext_m = extend_for_testing(m)?;
            let killed =
                first_case_difference(suite, |i| Ok(sorted(replay_on_system(&ext_m, product, i))))?;
            let diff = if killed.is_none() {
                system_difference(&ext_s, &ext_m, product, bound)?
            } else {
                None
            };
            (killed, diff)
        }
        (Model::PSystem(s), Model::PSystem(m), ScoreTarget::Coverage(set)) => {
            let reach = reachable_configurations(m, set.depth)?;
            let killed = set
                .configurations
                .iter()
                .find(|c| !reach.contains(*c))
                .map(|c| Witness::Unreachable {
                    configuration: c.clone(),
                    depth: set.depth,
                });
            let diff = if killed.is_none() {
                let a = reachable_configurations(s, bound)?;
                let b = reachable_configurations(m, bound)?;
                a.symmetric_difference(&b)
                    .next()
                    .map(|c| Witness::ReachabilityDifference {
                        configuration: c.clone(),
                        depth: bound,
                    })
            } else {
                None
            };
            (killed, diff)
        }
        _ => {
            return Err(mismatch(
                "the specification, the mutant and the target must be of the same kind",
            ))
        }
    };
    let (verdict, witness) = match (killed, difference) {
        (Some(w), _) => (Verdict::Killed, Some(w)),
        (None, Some(w)) => (Verdict::Survived, Some(w)),
        (None, None) => (Verdict::NotKilledBounded, None),
    };
    Ok(MutantVerdict {
        id: mutant.id,
        operator: mutant.operator,
        location: mutant.location.clone(),
        verdict,
        witness,
    })
}

/// Scores `mutants` against `target`. Mutants are evaluated in parallel and
/// reported in id order.
pub fn mutation_score(
    spec: &Model,
    mutants: &MutantSet,
    target: ScoreTarget<'_>,
    equivalence_bound: usize,
) -> Result<ScoreReport, MutationError> {
    if mutants.mutants.is_empty() {
        return Err(MutationError::EmptyMutantSet);
    }
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(mutants.mutants.len());
    let chunk = mutants.mutants.len().div_ceil(workers);
    let results: Vec<Result<MutantVerdict, MutationError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = mutants
            .mutants
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|m| verdict_for(spec, m, target, equivalence_bound))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("mutant evaluation panicked"))
            .collect()
    });
    let mut per_mutant = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    per_mutant.sort_by_key(|v| v.id);
    let total = per_mutant.len();
    let killed = per_mutant
        .iter()
        .filter(|v| v.verdict == Verdict::Killed)
        .count();
    let non_equivalent = per_mutant
        .iter()
        .filter(|v| v.verdict != Verdict::NotKilledBounded)
        .count();
    Ok(ScoreReport {
        schema: SCHEMA_VERSION,
        total,
        killed,
        survived: total - killed,
        invalid: mutants.invalid,
        score: killed as f64 / total as f64,
        non_equivalent,
        non_equivalent_score: if non_equivalent == 0 {
            1.0
        } else {
            killed as f64 / non_equivalent as f64
        },
        equivalence_bound,
        per_mutant,
    })
}

/// Re-checks a witness against the specification and the mutant.
pub fn witness_replays(
    spec: &Model,
    mutant: &Model,
    witness: &Witness,
) -> Result<bool, MutationError> {
    Ok(match (spec, mutant, witness) {
        (
            Model::Sxm(s),
            Model::Sxm(m),
            Witness::Case {
                input,
                expected,
                observed,
            },
        )
        | (
            Model::Sxm(s),
            Model::Sxm(m),
            Witness::Difference {
                input,
                expected,
                observed,
            },
        ) => {
            &observe_sxm(s, input)? == expected
                && &observe_sxm(m, input)? == observed
                && expected != observed
        }
        (
            Model::PSystem(s),
            Model::PSystem(m),
            Witness::Unreachable {
                configuration,
                depth,
            },
        ) => {
            reachable_configurations(s, *depth)?.contains(configuration)
                && !reachable_configurations(m, *depth)?.contains(configuration)
        }
        (
            Model::PSystem(s),
            Model::PSystem(m),
            Witness::ReachabilityDifference {
                configuration,
                depth,
            },
        ) => {
            reachable_configurations(s, *depth)?.contains(configuration)
                != reachable_configurations(m, *depth)?.contains(configuration)
        }
        _ => false,
    })
}
