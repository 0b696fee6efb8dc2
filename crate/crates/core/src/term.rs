//! The small term language processing functions are written in: memory
//! patterns with variables, integer guards, and update terms with integer
//! arithmetic.
//!
//! JSON encoding (shared by patterns and terms):
//!
//! * `"_"` wildcard (patterns only), `"?x"` variable, any other string an atom
//! * integers are integer literals, arrays are sequences
//! * `{"bag": "ccf"}` a multiset literal, `{"lit": v}` any literal value
//! * terms only: `{"+": [t, t]}`, `"-"`, `"*"`, `"/"`, `"mod"`
//!
//! Guards are `[op, term, term]` with `op` one of `< <= > >= == !=`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::value::{Multiset, Value, ValueError};

pub type Bindings = BTreeMap<String, Value>;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TermError {
    #[error("unbound variable ?{0}")]
    Unbound(String),
    #[error("arithmetic on non-integer value {0}")]
    NotInteger(Value),
    #[error("integer overflow")]
    Overflow,
    #[error("division by zero")]
    DivisionByZero,
    #[error("malformed term: {0}")]
    Malformed(String),
    #[error(transparent)]
    Value(#[from] ValueError),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "serde_json::Value", into = "serde_json::Value")]
pub enum Pattern {
    Any,
    Var(String),
    Lit(Value),
    Seq(Vec<Pattern>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

impl ArithOp {
    fn key(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
            ArithOp::Mod => "mod",
        }
    }

    fn from_key(k: &str) -> Option<Self> {
        Some(match k {
            "+" => ArithOp::Add,
            "-" => ArithOp::Sub,
            "*" => ArithOp::Mul,
            "/" => ArithOp::Div,
            "mod" => ArithOp::Mod,
            _ => return None,
        })
    }

    fn apply(self, a: i64, b: i64) -> Result<i64, TermError> {
        match self {
            ArithOp::Add => a.checked_add(b).ok_or(TermError::Overflow),
            ArithOp::Sub => a.checked_sub(b).ok_or(TermError::Overflow),
            ArithOp::Mul => a.checked_mul(b).ok_or(TermError::Overflow),
            ArithOp::Div if b == 0 => Err(TermError::DivisionByZero),
            ArithOp::Div => a.checked_div_euclid(b).ok_or(TermError::Overflow),
            ArithOp::Mod if b == 0 => Err(TermError::DivisionByZero),
            ArithOp::Mod => a.checked_rem_euclid(b).ok_or(TermError::Overflow),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "serde_json::Value", into = "serde_json::Value")]
pub enum Term {
    Var(String),
    Lit(Value),
    Seq(Vec<Term>),
    Arith(ArithOp, Box<Term>, Box<Term>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    fn key(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }

    fn from_key(k: &str) -> Option<Self> {
        Some(match k {
            "<" => CmpOp::Lt,
            "<=" => CmpOp::Le,
            ">" => CmpOp::Gt,
            ">=" => CmpOp::Ge,
            "==" => CmpOp::Eq,
            "!=" => CmpOp::Ne,
            _ => return None,
        })
    }
}

/// A comparison between two terms. Ordering comparisons use the total order
/// on values, so they are meaningful on integers and well-defined elsewhere.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "serde_json::Value", into = "serde_json::Value")]
pub struct Guard {
    pub op: CmpOp,
    pub lhs: Term,
    pub rhs: Term,
}

impl Pattern {
    pub fn var(name: &str) -> Self {
        Pattern::Var(name.to_string())
    }

    /// Matches `value`, extending `bindings`. A repeated variable must bind
    /// equal values. On failure `bindings` may hold partial bindings.
    pub fn matches(&self, value: &Value, bindings: &mut Bindings) -> bool {
        match self {
            Pattern::Any => true,
            Pattern::Var(name) => match bindings.get(name) {
                Some(bound) => bound == value,
                None => {
                    bindings.insert(name.clone(), value.clone());
                    true
                }
            },
            Pattern::Lit(lit) => lit == value,
            Pattern::Seq(items) => match value {
                Value::Seq(vs) if vs.len() == items.len() => {
                    items.iter().zip(vs).all(|(p, v)| p.matches(v, bindings))
                }
                _ => false,
            },
        }
    }
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(name.to_string())
    }

    pub fn eval(&self, bindings: &Bindings) -> Result<Value, TermError> {
        match self {
            Term::Var(name) => bindings
                .get(name)
                .cloned()
                .ok_or_else(|| TermError::Unbound(name.clone())),
            Term::Lit(v) => Ok(v.clone()),
            Term::Seq(items) => items
                .iter()
                .map(|t| t.eval(bindings))
                .collect::<Result<Vec<_>, _>>()
                .map(Value::Seq),
            Term::Arith(op, a, b) => {
                let a = a.eval(bindings)?;
                let b = b.eval(bindings)?;
                let x = a.as_int().ok_or_else(|| TermError::NotInteger(a.clone()))?;
                let y = b.as_int().ok_or_else(|| TermError::NotInteger(b.clone()))?;
                op.apply(x, y).map(Value::Int)
            }
        }
    }
}

impl Guard {
    pub fn holds(&self, bindings: &Bindings) -> Result<bool, TermError> {
        let a = self.lhs.eval(bindings)?;
        let b = self.rhs.eval(bindings)?;
        Ok(match self.op {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        })
    }
}

// ---------------------------------------------------------------------------
// JSON encoding
// ---------------------------------------------------------------------------

fn string_needs_lit(s: &str) -> bool {
    s == "_" || s.starts_with('?')
}

fn lit_object(v: Value) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    map.insert("lit".into(), v.into());
    serde_json::Value::Object(map)
}

/// Literal encoding shared by patterns and terms.
fn literal_to_json(v: Value) -> serde_json::Value {
    match v {
        Value::Atom(a) if string_needs_lit(&a) => lit_object(Value::Atom(a)),
        Value::Seq(_) => lit_object(v),
        other => other.into(),
    }
}

fn parse_var(s: &str) -> Option<&str> {
    s.strip_prefix('?').filter(|rest| !rest.is_empty())
}

impl TryFrom<serde_json::Value> for Pattern {
    type Error = TermError;

    fn try_from(json: serde_json::Value) -> Result<Self, Self::Error> {
        use serde_json::Value as J;
        match json {
            J::String(s) if s == "_" => Ok(Pattern::Any),
            J::String(s) => Ok(match parse_var(&s) {
                Some(name) => Pattern::Var(name.to_string()),
                None => Pattern::Lit(Value::Atom(s)),
            }),
            J::Array(items) => items
                .into_iter()
                .map(Pattern::try_from)
                .collect::<Result<Vec<_>, _>>()
                .map(Pattern::Seq),
            J::Object(mut map) if map.len() == 1 && map.contains_key("lit") => {
                Ok(Pattern::Lit(Value::try_from(map.remove("lit").unwrap())?))
            }
            other => Ok(Pattern::Lit(Value::try_from(other)?)),
        }
    }
}

impl From<Pattern> for serde_json::Value {
    fn from(p: Pattern) -> Self {
        match p {
            Pattern::Any => serde_json::Value::String("_".into()),
            Pattern::Var(name) => serde_json::Value::String(format!("?{name}")),
            Pattern::Lit(v) => literal_to_json(v),
            Pattern::Seq(items) => {
                serde_json::Value::Array(items.into_iter().map(Into::into).collect())
            }
        }
    }
}

impl TryFrom<serde_json::Value> for Term {
    type Error = TermError;

    fn try_from(json: serde_json::Value) -> Result<Self, Self::Error> {
        use serde_json::Value as J;
        match json {
            J::String(s) => Ok(match parse_var(&s) {
                Some(name) => Term::Var(name.to_string()),
                None if s == "_" => return Err(TermError::Malformed("wildcard in term".into())),
                None => Term::Lit(Value::Atom(s)),
            }),
            J::Array(items) => items
                .into_iter()
                .map(Term::try_from)
                .collect::<Result<Vec<_>, _>>()
                .map(Term::Seq),
            J::Object(mut map) if map.len() == 1 => {
                let (key, arg) = map
                    .iter_mut()
                    .next()
                    .map(|(k, v)| (k.clone(), v.take()))
                    .unwrap();
                if key == "lit" {
                    return Ok(Term::Lit(Value::try_from(arg)?));
                }
                if key == "bag" {
                    return match arg {
                        J::String(s) => Ok(Term::Lit(Value::Bag(Multiset::parse(&s)))),
                        other => Err(TermError::Malformed(format!(
                            "bag expects a string, got {other}"
                        ))),
                    };
                }
                let op = ArithOp::from_key(&key)
                    .ok_or_else(|| TermError::Malformed(format!("unknown operator {key:?}")))?;
                match arg {
                    J::Array(mut args) if args.len() == 2 => {
                        let b = Term::try_from(args.pop().unwrap())?;
                        let a = Term::try_from(args.pop().unwrap())?;
                        Ok(Term::Arith(op, Box::new(a), Box::new(b)))
                    }
                    other => Err(TermError::Malformed(format!(
                        "{key} expects two arguments, got {other}"
                    ))),
                }
            }
            other => Ok(Term::Lit(Value::try_from(other)?)),
        }
    }
}

impl From<Term> for serde_json::Value {
    fn from(t: Term) -> Self {
        match t {
            Term::Var(name) => serde_json::Value::String(format!("?{name}")),
            Term::Lit(Value::Atom(a)) if a == "_" => lit_object(Value::Atom(a)),
            Term::Lit(v) => literal_to_json(v),
            Term::Seq(items) => {
                serde_json::Value::Array(items.into_iter().map(Into::into).collect())
            }
            Term::Arith(op, a, b) => {
                let mut map = serde_json::Map::new();
                map.insert(
                    op.key().into(),
                    serde_json::Value::Array(vec![(*a).into(), (*b).into()]),
                );
                serde_json::Value::Object(map)
            }
        }
    }
}

impl TryFrom<serde_json::Value> for Guard {
    type Error = TermError;

    fn try_from(json: serde_json::Value) -> Result<Self, Self::Error> {
        match json {
            serde_json::Value::Array(mut items) if items.len() == 3 => {
                let rhs = Term::try_from(items.pop().unwrap())?;
                let lhs = Term::try_from(items.pop().unwrap())?;
                let op = items
                    .pop()
                    .and_then(|o| o.as_str().and_then(CmpOp::from_key))
                    .ok_or_else(|| TermError::Malformed("guard operator".into()))?;
                Ok(Guard { op, lhs, rhs })
            }
            other => Err(TermError::Malformed(format!(
                "guard must be [op, term, term], got {other}"
            ))),
        }
    }
}

impl From<Guard> for serde_json::Value {
    fn from(g: Guard) -> Self {
        serde_json::Value::Array(vec![g.op.key().into(), g.lhs.into(), g.rhs.into()])
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", serde_json::Value::from(self.clone()))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", serde_json::Value::from(self.clone()))
    }
}
