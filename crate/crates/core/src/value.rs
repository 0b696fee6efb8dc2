//! Closed term universe shared by every model: atoms, integers, finite
//! sequences and multisets of atoms.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Reserved atom for the undefined value (`⊥`, `⊥_M`). Never a user symbol.
pub const UNDEFINED: &str = "⊥";
/// Reserved atom for the empty symbol `λ`. Never a user symbol.
pub const NULL: &str = "λ";

/// Returns true for atoms that user alphabets may not contain.
pub fn is_reserved(symbol: &str) -> bool {
    symbol == UNDEFINED || symbol == NULL
}

/// A finite, immutable value.
///
/// Ordering is atoms (lexicographic), then integers, then sequences, then
/// multisets; equality is structural.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "serde_json::Value", into = "serde_json::Value")]
pub enum Value {
    Atom(String),
    Int(i64),
    Seq(Vec<Value>),
    Bag(Multiset),
}

impl Value {
    pub fn atom(s: impl Into<String>) -> Self {
        Value::Atom(s.into())
    }

    pub fn undefined() -> Self {
        Value::Atom(UNDEFINED.to_string())
    }

    pub fn is_undefined(&self) -> bool {
        matches!(self, Value::Atom(a) if a == UNDEFINED)
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Value::Atom(a) => Some(a),
            _ => None,
        }
    }

    pub fn as_seq(&self) -> Option<&[Value]> {
        match self {
            Value::Seq(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Atom(a) => write!(f, "{a}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Seq(items) => {
                write!(f, "[")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{item}")?;
                }
                write!(f, "]")
            }
            Value::Bag(m) => write!(f, "{{{}}}", m.canonical()),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ValueError {
    #[error("non-integer number {0} is not a value")]
    NonInteger(String),
    #[error("null is not a value")]
    Null,
    #[error("booleans are not values")]
    Bool,
    #[error("object values must have the single key \"bag\" holding a multiset string, got {0}")]
    BadObject(String),
}

impl TryFrom<serde_json::Value> for Value {
    type Error = ValueError;

    fn try_from(json: serde_json::Value) -> Result<Self, Self::Error> {
        use serde_json::Value as J;
        match json {
            J::String(s) => Ok(Value::Atom(s)),
            J::Number(n) => n
                .as_i64()
                .map(Value::Int)
                .ok_or_else(|| ValueError::NonInteger(n.to_string())),
            J::Array(items) => items
                .into_iter()
                .map(Value::try_from)
                .collect::<Result<Vec<_>, _>>()
                .map(Value::Seq),
            J::Object(map) => {
                if map.len() == 1 {
                    if let Some(J::String(s)) = map.get("bag") {
                        return Ok(Value::Bag(Multiset::parse(s)));
                    }
                }
                Err(ValueError::BadObject(J::Object(map).to_string()))
            }
            J::Null => Err(ValueError::Null),
            J::Bool(_) => Err(ValueError::Bool),
        }
    }
}

impl From<Value> for serde_json::Value {
    fn from(v: Value) -> Self {
        use serde_json::Value as J;
        match v {
            Value::Atom(a) => J::String(a),
            Value::Int(i) => J::from(i),
            Value::Seq(items) => J::Array(items.into_iter().map(Into::into).collect()),
            Value::Bag(m) => {
                let mut map = serde_json::Map::new();
                map.insert("bag".into(), J::String(m.canonical()));
                J::Object(map)
            }
        }
    }
}

/// A multiset of atoms. Zero counts are never stored.
///
/// The canonical text form lists every symbol as often as its multiplicity,
/// sorted: `{c:2, f:1}` is `"ccf"`. When any symbol is longer than one
/// character the symbols are separated by single spaces instead.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub struct Multiset {
    counts: BTreeMap<String, u32>,
}

impl Multiset {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses a canonical (or any unsorted) multiset string. Whitespace
    /// separates multi-character symbols; otherwise every character is one
    /// symbol. `""` and `"λ"` are the empty multiset.
    pub fn parse(text: &str) -> Self {
        let mut m = Multiset::new();
        let trimmed = text.trim();
        if trimmed.is_empty() || trimmed == NULL {
            return m;
        }
        if trimmed.contains(char::is_whitespace) {
            for sym in trimmed.split_whitespace() {
                m.insert(sym, 1);
            }
        } else {
            for ch in trimmed.chars() {
                m.insert(&ch.to_string(), 1);
            }
        }
        m
    }

    pub fn canonical(&self) -> String {
        let single = self.counts.keys().all(|k| k.chars().count() == 1);
        let symbols = self.symbols_expanded();
        if single {
            symbols.concat()
        } else {
            symbols.join(" ")
        }
    }

    fn symbols_expanded(&self) -> Vec<&str> {
        self.counts
            .iter()
            .flat_map(|(s, &n)| std::iter::repeat_n(s.as_str(), n as usize))
            .collect()
    }

    pub fn insert(&mut self, symbol: &str, n: u32) {
        if n == 0 {
            return;
        }
        *self.counts.entry(symbol.to_string()).or_insert(0) += n;
    }

    pub fn count(&self, symbol: &str) -> u32 {
        self.counts.get(symbol).copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Total number of symbol occurrences.
    pub fn size(&self) -> u64 {
        self.counts.values().map(|&n| u64::from(n)).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.counts.iter().map(|(s, &n)| (s.as_str(), n))
    }

    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.counts.keys().map(String::as_str)
    }

    /// True when `other` is contained in `self` with multiplicity.
    pub fn contains(&self, other: &Multiset) -> bool {
        other.iter().all(|(s, n)| self.count(s) >= n)
    }

    /// How many disjoint copies of `other` fit in `self`. `other` must be
    /// nonempty.
    pub fn times_contains(&self, other: &Multiset) -> u32 {
        other
            .iter()
            .map(|(s, n)| self.count(s) / n)
            .min()
            .unwrap_or(0)
    }

    /// Adds `other` scaled by `times`.
    pub fn add_scaled(&mut self, other: &Multiset, times: u32) {
        for (s, n) in other.iter() {
            self.insert(s, n * times);
        }
    }

    /// Removes `other` scaled by `times`. Returns false (leaving `self`
    /// untouched) if there are not enough symbols.
    pub fn remove_scaled(&mut self, other: &Multiset, times: u32) -> bool {
        if other.iter().any(|(s, n)| self.count(s) < n * times) {
            return false;
        }
        for (s, n) in other.iter() {
            let left = self.count(s) - n * times;
            if left == 0 {
                self.counts.remove(s);
            } else {
                self.counts.insert(s.to_string(), left);
            }
        }
        true
    }
}

impl Ord for Multiset {
    fn cmp(&self, other: &Self) -> Ordering {
        self.symbols_expanded().cmp(&other.symbols_expanded())
    }
}

impl PartialOrd for Multiset {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Multiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

impl From<Multiset> for String {
    fn from(m: Multiset) -> Self {
        m.canonical()
    }
}

impl From<String> for Multiset {
    fn from(s: String) -> Self {
        Multiset::parse(&s)
    }
}

impl<'a> FromIterator<&'a str> for Multiset {
    fn from_iter<T: IntoIterator<Item = &'a str>>(iter: T) -> Self {
        let mut m = Multiset::new();
        for s in iter {
            m.insert(s, 1);
        }
        m
    }
}
