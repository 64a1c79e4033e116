use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sle4rho_core::boundary::{AdmissibilityMargin, BoundarySpec, MeasurePair, MeasureSpec};
use sle4rho_core::driver::SleConfig;

use crate::{HarnessError, Result};

/// One experiment. Field names in JSON are camelCase; everything except
/// `scenario` has a default, so `{"scenario": "chordal"}` is a valid file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: String,
    /// Inline boundary data; ignored when `boundaryFile` is set.
    #[serde(default = "empty_boundary")]
    pub boundary: BoundarySpec,
    /// JSON file holding a boundary spec, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_file: Option<PathBuf>,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_eps_coll")]
    pub eps_coll: f64,
    /// Atoms per side when the boundary carries density.
    #[serde(default = "default_quantize")]
    pub quantize: usize,
    /// `[c, C]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<[f64; 2]>,
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default)]
    pub seed: u64,
    /// Capacity-time horizon.
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Observation point `[x, y]`.
    #[serde(default = "default_z")]
    pub z: [f64; 2],
    /// Radius-time grid step and end.
    #[serde(default = "default_ds")]
    pub ds: f64,
    #[serde(default = "default_s_max")]
    pub s_max: f64,
    /// Keep every `curveStride`-th curve point.
    #[serde(default = "default_stride")]
    pub curve_stride: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn empty_boundary() -> BoundarySpec {
    BoundarySpec::Measures(MeasureSpec::default())
}
fn default_kappa() -> f64 {
    4.0
}
fn default_dt() -> f64 {
    1e-3
}
fn default_eps_coll() -> f64 {
    1e-6
}
fn default_quantize() -> usize {
    64
}
fn default_paths() -> usize {
    10
}
fn default_horizon() -> f64 {
    1.0
}
fn default_z() -> [f64; 2] {
    [0.0, 1.0]
}
fn default_ds() -> f64 {
    0.01
}
fn default_s_max() -> f64 {
    1.0
}
fn default_stride() -> usize {
    1
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn new(scenario: &str, pair: &MeasurePair) -> Self {
        let mut c: Self = serde_json::from_value(serde_json::json!({ "scenario": scenario }))
            .expect("defaults deserialize");
        c.boundary = BoundarySpec::from_pair(pair);
        c
    }

    /// Reads, resolves `boundaryFile` and validates.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut cfg: Self = serde_json::from_str(&text)?;
        if let Some(rel) = cfg.boundary_file.take() {
            let file = path.parent().unwrap_or(Path::new(".")).join(rel);
            let text = fs::read_to_string(&file).map_err(|e| HarnessError::io(&file, e))?;
            cfg.boundary = serde_json::from_str(&text)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("kappa", self.kappa),
            ("dt", self.dt),
            ("epsColl", self.eps_coll),
            ("horizon", self.horizon),
            ("ds", self.ds),
            ("sMax", self.s_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(HarnessError::Config(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.paths == 0 || self.curve_stride == 0 || self.quantize == 0 {
            return Err(HarnessError::Config(
                "paths, curveStride and quantize must be at least 1".into(),
            ));
        }
        if !(self.z[1] > 0.0) {
            return Err(HarnessError::Config(format!(
                "observation point must lie in the upper half-plane, got {:?}",
                self.z
            )));
        }
        self.pair()?;
        Ok(())
    }

    pub fn pair(&self) -> Result<MeasurePair> {
        Ok(self.boundary.to_pair()?)
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.z[0], self.z[1])
    }

    pub fn sle(&self) -> Result<SleConfig> {
        let mut s = SleConfig::new(self.pair()?, self.dt, self.seed).with_kappa(self.kappa);
        s.eps_coll = self.eps_coll;
        s.quantize = self.quantize;
        if let Some([c, big_c]) = self.margin {
            s = s.with_margin(AdmissibilityMargin::new(c, big_c)?);
        }
        s.validate()?;
        Ok(s)
    }

    /// SHA-256 of the canonical JSON form (fields in declaration order).
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"scenario": "x"}"#).unwrap();
        assert_eq!(c.dt, 1e-3);
        assert_eq!(c.pair().unwrap(), MeasurePair::empty());
        c.validate().unwrap();
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::new("a", &MeasurePair::empty());
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn rejects_bad_grids_and_fields() {
        let mut c = ExperimentConfig::new("a", &MeasurePair::empty());
        c.ds = 0.0;
        assert!(c.validate().is_err());
        assert!(
            serde_json::from_str::<ExperimentConfig>(r#"{"scenario": "x", "dtt": 1}"#).is_err()
        );
    }
}
