//! JSON schema for SXM model files.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Case, MemoryDomain, ProcessingFunction, Sxm};
use crate::value::Value;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainFile {
    Finite(Vec<Value>),
    Range { lo: i64, hi: i64 },
    Open { sample: Vec<Value> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NextStateFile {
    pub from: String,
    #[serde(rename = "fn")]
    pub function: String,
    pub to: Vec<String>,
}

pub type CaseFile = Case;
pub type FunctionFile = ProcessingFunction;

/// On-disk form of an [`Sxm`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SxmFile {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub states: Vec<String>,
    pub initial_states: Vec<String>,
    pub terminal_states: Vec<String>,
    pub memory_domain: DomainFile,
    pub initial_memory: Value,
    pub functions: Vec<FunctionFile>,
    pub next_state: Vec<NextStateFile>,
}

impl From<DomainFile> for MemoryDomain {
    fn from(d: DomainFile) -> Self {
        match d {
            DomainFile::Finite(vs) => MemoryDomain::Finite(vs.into_iter().collect()),
            DomainFile::Range { lo, hi } => MemoryDomain::Range { lo, hi },
            DomainFile::Open { sample } => MemoryDomain::Open {
                sample: sample.into_iter().collect(),
            },
        }
    }
}

impl From<&MemoryDomain> for DomainFile {
    fn from(d: &MemoryDomain) -> Self {
        match d {
            MemoryDomain::Finite(vs) => DomainFile::Finite(vs.iter().cloned().collect()),
            MemoryDomain::Range { lo, hi } => DomainFile::Range { lo: *lo, hi: *hi },
            MemoryDomain::Open { sample } => DomainFile::Open {
                sample: sample.iter().cloned().collect(),
            },
        }
    }
}

fn set(items: Vec<String>) -> BTreeSet<String> {
    items.into_iter().collect()
}

impl From<SxmFile> for Sxm {
    fn from(f: SxmFile) -> Self {
        let mut next_state: BTreeMap<(String, String), BTreeSet<String>> = BTreeMap::new();
        for entry in f.next_state {
            next_state
                .entry((entry.from, entry.function))
                .or_default()
                .extend(entry.to);
        }
        Sxm {
            inputs: set(f.inputs),
            outputs: set(f.outputs),
            states: set(f.states),
            initial_states: set(f.initial_states),
            terminal_states: set(f.terminal_states),
            memory_domain: f.memory_domain.into(),
            initial_memory: f.initial_memory,
            functions: f.functions,
            next_state,
        }
    }
}

impl From<&Sxm> for SxmFile {
    fn from(m: &Sxm) -> Self {
        let list = |s: &BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>();
        SxmFile {
            inputs: list(&m.inputs),
            outputs: list(&m.outputs),
            states: list(&m.states),
            initial_states: list(&m.initial_states),
            terminal_states: list(&m.terminal_states),
            memory_domain: (&m.memory_domain).into(),
            initial_memory: m.initial_memory.clone(),
            functions: m.functions.clone(),
            next_state: m
                .next_state
                .iter()
                .map(|((from, function), to)| NextStateFile {
                    from: from.clone(),
                    function: function.clone(),
                    to: to.iter().cloned().collect(),
                })
                .collect(),
        }
    }
}

impl Serialize for Sxm {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        SxmFile::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Sxm {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        SxmFile::deserialize(deserializer).map(Sxm::from)
    }
}
