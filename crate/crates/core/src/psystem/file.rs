//! JSON schema for P-system files.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Membrane, PRule, PSystem, Target};
use crate::value::Multiset;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MembraneFile {
    pub id: usize,
    #[serde(default)]
    pub children: Vec<MembraneFile>,
}

/// A right-hand-side target: `"here"` or a compartment id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
enum TargetFile {
    Id(usize),
    Word(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleFile {
    pub name: String,
    pub lhs: String,
    rhs: Vec<(String, TargetFile)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PSystemFile {
    pub alphabet: Vec<String>,
    pub structure: MembraneFile,
    /// Compartment id to canonical multiset string.
    #[serde(default)]
    pub initial: BTreeMap<usize, String>,
    #[serde(default)]
    pub rules: BTreeMap<usize, Vec<RuleFile>>,
}

impl From<MembraneFile> for Membrane {
    fn from(m: MembraneFile) -> Self {
        Membrane {
            id: m.id,
            children: m.children.into_iter().map(Membrane::from).collect(),
        }
    }
}

impl From<&Membrane> for MembraneFile {
    fn from(m: &Membrane) -> Self {
        MembraneFile {
            id: m.id,
            children: m.children.iter().map(MembraneFile::from).collect(),
        }
    }
}

impl TryFrom<PSystemFile> for PSystem {
    type Error = String;

    fn try_from(f: PSystemFile) -> Result<Self, Self::Error> {
        let mut rules = BTreeMap::new();
        for (id, list) in f.rules {
            let mut converted = Vec::new();
            for r in list {
                let rhs = r
                    .rhs
                    .into_iter()
                    .map(|(s, t)| match t {
                        TargetFile::Id(k) => Ok((s, Target::In(k))),
                        TargetFile::Word(w) if w == "here" => Ok((s, Target::Here)),
                        TargetFile::Word(w) => {
                            Err(format!("rule {}: unknown target {w:?}", r.name))
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                converted.push(PRule {
                    name: r.name,
                    compartment: id,
                    lhs: Multiset::parse(&r.lhs),
                    rhs,
                });
            }
            rules.insert(id, converted);
        }
        Ok(PSystem {
            alphabet: f.alphabet.into_iter().collect(),
            structure: f.structure.into(),
            initial: f
                .initial
                .into_iter()
                .map(|(id, s)| (id, Multiset::parse(&s)))
                .collect(),
            rules,
        })
    }
}

impl From<&PSystem> for PSystemFile {
    fn from(ps: &PSystem) -> Self {
        PSystemFile {
            alphabet: ps.alphabet.iter().cloned().collect(),
            structure: (&ps.structure).into(),
            initial: ps
                .initial
                .iter()
                .map(|(id, m)| (*id, m.canonical()))
                .collect(),
            rules: ps
                .rules
                .iter()
                .map(|(id, list)| {
                    let list = list
                        .iter()
                        .map(|r| RuleFile {
                            name: r.name.clone(),
                            lhs: r.lhs.canonical(),
                            rhs: r
                                .rhs
                                .iter()
                                .map(|(s, t)| {
                                    let t = match t {
                                        Target::Here => TargetFile::Word("here".into()),
                                        Target::In(k) => TargetFile::Id(*k),
                                    };
                                    (s.clone(), t)
                                })
                                .collect(),
                        })
                        .collect();
                    (*id, list)
                })
                .collect(),
        }
    }
}

impl Serialize for PSystem {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        PSystemFile::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PSystem {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let file = PSystemFile::deserialize(deserializer)?;
        PSystem::try_from(file).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let ps: PSystem = serde_json::from_str(include_str!("../../models/ps2.json")).unwrap();
        let back: PSystem = serde_json::from_str(&serde_json::to_string(&ps).unwrap()).unwrap();
        assert_eq!(back, ps);
    }

    #[test]
    fn bad_target_word() {
        let text = include_str!("../../models/ps2.json").replace("\"here\"]]}", "\"there\"]]}");
        assert!(serde_json::from_str::<PSystem>(&text).is_err());
    }
}
