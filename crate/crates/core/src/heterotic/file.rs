//! Heterotic system files: a P system file and a Control file, referenced
//! by path relative to the system file, plus the seed and depth cap.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    build_heterotic_system, wrap_psystem_as_csxm, BranchChoice, HeteroticError, HeteroticSystem,
    WrapOptions,
};
use crate::csxms::Csxm;
use crate::psystem::{PConfiguration, PSystem};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeteroticFile {
    pub psystem: String,
    pub control: String,
    pub seed: u64,
    pub depth_cap: usize,
    /// Keep every branch of the Base instead of the seeded one.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub all_branches: bool,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, HeteroticError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HeteroticError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| HeteroticError::Parse(format!("{}: {e}", path.display())))
}

impl HeteroticFile {
    /// Builds the system, reading the referenced files relative to `dir`.
    /// `seed` overrides the file's seed.
    pub fn build(&self, dir: &Path, seed: Option<u64>) -> Result<HeteroticSystem, HeteroticError> {
        let ps: PSystem = read_json(&dir.join(&self.psystem))?;
        let control: Csxm = read_json(&dir.join(&self.control))?;
        let starts = control
            .out_port_domain
            .iter()
            .map(|v| {
                let cfg = PConfiguration::from_value(v).ok_or_else(|| {
                    HeteroticError::PortIncompatibility(format!(
                        "Control may send {v}, which is not a configuration"
                    ))
                })?;
                ps.check_configuration(&cfg).map_err(|e| {
                    HeteroticError::PortIncompatibility(format!("Control may send {cfg}: {e}"))
                })?;
                Ok::<_, HeteroticError>(cfg)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let branch = if self.all_branches {
            BranchChoice::AllBranches
        } else {
            BranchChoice::Seeded(seed.unwrap_or(self.seed))
        };
        let base = wrap_psystem_as_csxm(
            &ps,
            &WrapOptions {
                depth_cap: self.depth_cap,
                branch,
                starts,
            },
        )?;
        build_heterotic_system(base, control)
    }
}

pub fn load_heterotic_system(
    path: &Path,
    seed: Option<u64>,
) -> Result<HeteroticSystem, HeteroticError> {
    let file: HeteroticFile = read_json(path)?;
    file.build(path.parent().unwrap_or(Path::new(".")), seed)
}
