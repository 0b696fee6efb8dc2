//! JSON schema for communicating systems: each component is an SXM object
//! with six extra keys.

use serde::{Deserialize, Serialize};

use super::{Csxm, CsxmSystem};
use crate::sxm::{DomainFile, FunctionFile, NextStateFile, Sxm, SxmFile};
use crate::value::Value;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsxmFile {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub states: Vec<String>,
    pub initial_states: Vec<String>,
    pub terminal_states: Vec<String>,
    pub memory_domain: DomainFile,
    pub initial_memory: Value,
    pub in_port_domain: Vec<Value>,
    pub out_port_domain: Vec<Value>,
    pub ordinary_states: Vec<String>,
    pub communicating_states: Vec<String>,
    pub ordinary_functions: Vec<String>,
    pub communicating_functions: Vec<String>,
    pub functions: Vec<FunctionFile>,
    pub next_state: Vec<NextStateFile>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub components: Vec<CsxmFile>,
}

impl From<CsxmFile> for Csxm {
    fn from(f: CsxmFile) -> Self {
        let base = Sxm::from(SxmFile {
            inputs: f.inputs,
            outputs: f.outputs,
            states: f.states,
            initial_states: f.initial_states,
            terminal_states: f.terminal_states,
            memory_domain: f.memory_domain,
            initial_memory: f.initial_memory,
            functions: f.functions,
            next_state: f.next_state,
        });
        Csxm {
            base,
            in_port_domain: f.in_port_domain.into_iter().collect(),
            out_port_domain: f.out_port_domain.into_iter().collect(),
            ordinary_states: f.ordinary_states.into_iter().collect(),
            communicating_states: f.communicating_states.into_iter().collect(),
            ordinary_functions: f.ordinary_functions,
            communicating_functions: f.communicating_functions,
        }
    }
}

impl From<&Csxm> for CsxmFile {
    fn from(c: &Csxm) -> Self {
        let s = SxmFile::from(&c.base);
        CsxmFile {
            inputs: s.inputs,
            outputs: s.outputs,
            states: s.states,
            initial_states: s.initial_states,
            terminal_states: s.terminal_states,
            memory_domain: s.memory_domain,
            initial_memory: s.initial_memory,
            in_port_domain: c.in_port_domain.iter().cloned().collect(),
            out_port_domain: c.out_port_domain.iter().cloned().collect(),
            ordinary_states: c.ordinary_states.iter().cloned().collect(),
            communicating_states: c.communicating_states.iter().cloned().collect(),
            ordinary_functions: c.ordinary_functions.clone(),
            communicating_functions: c.communicating_functions.clone(),
            functions: s.functions,
            next_state: s.next_state,
        }
    }
}

impl From<SystemFile> for CsxmSystem {
    fn from(f: SystemFile) -> Self {
        CsxmSystem {
            components: f.components.into_iter().map(Csxm::from).collect(),
        }
    }
}

impl From<&CsxmSystem> for SystemFile {
    fn from(s: &CsxmSystem) -> Self {
        SystemFile {
            components: s.components.iter().map(CsxmFile::from).collect(),
        }
    }
}

impl Serialize for CsxmSystem {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        SystemFile::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CsxmSystem {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        SystemFile::deserialize(deserializer).map(CsxmSystem::from)
    }
}

impl Serialize for Csxm {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        CsxmFile::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Csxm {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        CsxmFile::deserialize(deserializer).map(Csxm::from)
    }
}
