use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{HarnessError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

impl Provenance {
    pub fn new(config_hash: String, seed: u64) -> Self {
        Self {
            config_hash,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// A named pass/fail statement with the measured value and the rule applied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub rule: String,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub scenario: String,
    pub checks: Vec<Check>,
    /// Free-form statistics, keyed for stable JSON order.
    pub stats: BTreeMap<String, Value>,
    pub pass: bool,
    pub provenance: Provenance,
}

impl StudyReport {
    pub fn new(scenario: &str, provenance: Provenance) -> Self {
        Self {
            scenario: scenario.to_string(),
            checks: Vec::new(),
            stats: BTreeMap::new(),
            pass: true,
            provenance,
        }
    }

    pub fn check(&mut self, name: &str, value: f64, rule: &str, pass: bool) {
        self.pass &= pass;
        self.checks.push(Check {
            name: name.to_string(),
            value,
            rule: rule.to_string(),
            pass,
        });
    }

    pub fn stat(&mut self, key: &str, value: impl Serialize) {
        self.stats.insert(
            key.to_string(),
            serde_json::to_value(value).expect("statistic serializes"),
        );
    }

    /// Appends the checks and statistics of `other` under a prefix.
    pub fn absorb(&mut self, prefix: &str, other: StudyReport) {
        for c in other.checks {
            self.check(&format!("{prefix}.{}", c.name), c.value, &c.rule, c.pass);
        }
        for (k, v) in other.stats {
            self.stats.insert(format!("{prefix}.{k}"), v);
        }
        self.pass &= other.pass;
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "{}: {}",
            self.scenario,
            if self.pass { "PASS" } else { "FAIL" }
        );
        for c in &self.checks {
            s.push_str(&format!(
                "\n  [{}] {} = {:.6} ({})",
                if c.pass { "ok" } else { "FAIL" },
                c.name,
                c.value,
                c.rule
            ));
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|e| HarnessError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Whether this report was produced from a config with hash `hash`.
    pub fn matches(&self, hash: &str) -> bool {
        self.provenance.config_hash == hash
    }
}
