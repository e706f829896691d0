use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Advisor, AdvisorError, AdvisorMode, CostSpec};
use crate::estimators::{DiscretionModel, TabularModel};
use crate::rules::RuleSet;

pub const BUNDLE_FORMAT: u32 = 1;

/// Provenance written next to the advisor artifacts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub format: u32,
    pub mode: Option<AdvisorMode>,
    pub negative_precision: f64,
    #[serde(default)]
    pub variant: Option<String>,
    #[serde(default)]
    pub seeds: BTreeMap<String, u64>,
    /// Fingerprints of the data the advisor was trained on.
    #[serde(default)]
    pub data: BTreeMap<String, String>,
    /// SHA-256 of each artifact file.
    #[serde(default)]
    pub artifacts: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

const FILES: [&str; 4] = ["ruleset.json", "discretion.json", "outcome.json", "costs.json"];

impl Advisor {
    /// Write the advisor as a bundle directory. `manifest` supplies seeds and
    /// data fingerprints; mode, precision and artifact hashes are filled in here.
    pub fn save_bundle(&self, dir: &Path, manifest: &BundleManifest) -> Result<BundleManifest, AdvisorError> {
        std::fs::create_dir_all(dir)?;
        let contents = [
            serde_json::to_string_pretty(&self.rule_set)?,
            serde_json::to_string_pretty(&self.discretion)?,
            serde_json::to_string_pretty(&self.outcome)?,
            serde_json::to_string_pretty(&self.costs)?,
        ];
        let mut m = manifest.clone();
        m.format = BUNDLE_FORMAT;
        m.mode = Some(self.mode);
        m.negative_precision = self.negative_precision;
        m.artifacts.clear();
        for (name, body) in FILES.iter().zip(&contents) {
            std::fs::write(dir.join(name), body)?;
            m.artifacts.insert(name.to_string(), sha256_hex(body.as_bytes()));
        }
        std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&m)?)?;
        Ok(m)
    }

    pub fn load_bundle(dir: &Path) -> Result<(Advisor, BundleManifest), AdvisorError> {
        let read = |name: &str| -> Result<String, AdvisorError> {
            std::fs::read_to_string(dir.join(name))
                .map_err(|e| AdvisorError::Bundle(format!("{}: {e}", dir.join(name).display())))
        };
        let manifest: BundleManifest = serde_json::from_str(&read("manifest.json")?)?;
        let mut bodies = Vec::new();
        for name in FILES {
            let body = read(name)?;
            if let Some(expected) = manifest.artifacts.get(name) {
                if *expected != sha256_hex(body.as_bytes()) {
                    return Err(AdvisorError::Bundle(format!("{name} does not match its manifest hash")));
                }
            }
            bodies.push(body);
        }
        let rule_set: RuleSet = serde_json::from_str(&bodies[0])?;
        let discretion: DiscretionModel = serde_json::from_str(&bodies[1])?;
        let outcome: Option<TabularModel> = serde_json::from_str(&bodies[2])?;
        let costs: CostSpec = serde_json::from_str(&bodies[3])?;
        costs.validate()?;
        let mode = manifest
            .mode
            .ok_or_else(|| AdvisorError::Bundle("manifest has no mode".into()))?;
        if mode == AdvisorMode::TeamRules && outcome.is_none() {
            return Err(AdvisorError::MissingOutcomeModel);
        }
        let advisor = Advisor {
            rule_set,
            discretion,
            outcome,
            costs,
            mode,
            negative_precision: manifest.negative_precision,
        };
        Ok((advisor, manifest))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundle_round_trip_and_tamper_check() {
        let dir = tempfile::tempdir().unwrap();
        let a = Advisor {
            mode: AdvisorMode::TaskOnly,
            negative_precision: 0.8,
            ..Advisor::silent()
        };
        let mut m = BundleManifest::default();
        m.seeds.insert("train".into(), 4);
        a.save_bundle(dir.path(), &m).unwrap();
        let (back, man) = Advisor::load_bundle(dir.path()).unwrap();
        assert_eq!(back, a);
        assert_eq!(man.seeds["train"], 4);
        std::fs::write(dir.path().join("costs.json"), r#"{"alpha":0.3}"#).unwrap();
        assert!(matches!(Advisor::load_bundle(dir.path()), Err(AdvisorError::Bundle(_))));
    }
}
