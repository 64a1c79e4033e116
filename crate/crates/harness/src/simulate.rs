use std::fs;
use std::path::PathBuf;

use sle4rho_core::loewner::extract_curve_strided;
use sle4rho_core::observable::{observe_path, Evaluator, ObserveOptions};
use sle4rho_core::par;

use crate::config::ExperimentConfig;
use crate::output::{ensure_dir, path_file, write_curve, write_driving, write_observable};
use crate::{HarnessError, Result};

/// Which per-path files to emit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Outputs {
    pub driving: bool,
    pub curve: bool,
    pub observable: bool,
}

impl Outputs {
    pub const ALL: Self = Self {
        driving: true,
        curve: true,
        observable: true,
    };
    pub const CURVE: Self = Self {
        driving: false,
        curve: true,
        observable: false,
    };
    pub const OBSERVABLE: Self = Self {
        driving: false,
        curve: false,
        observable: true,
    };
}

/// Simulates `cfg.paths` paths and writes `driving_NNNN.csv`,
/// `curve_NNNN.csv` and `observable_NNNN.csv` into `cfg.out`. Paths stopped by
/// a threshold event are written up to the stop, with the events in
/// `events_NNNN.json`. Returns the files written, in path order.
pub fn run_simulate(cfg: &ExperimentConfig, what: Outputs) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let sle = cfg.sle()?;
    let opts = ObserveOptions::grid(cfg.horizon);
    let z = cfg.z();
    let results = par::map_indexed(cfg.paths, |i| {
        observe_path(&sle, i as u64, z, &Evaluator::Bv, &opts).map(|(tr, sim)| {
            let curve = what
                .curve
                .then(|| extract_curve_strided(&sim.path, cfg.curve_stride));
            (tr, sim, curve)
        })
    });
    ensure_dir(&cfg.out)?;
    let mut files = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        let (tr, sim, curve) = r?;
        if what.driving {
            let p = path_file(&cfg.out, "driving", i, "csv");
            write_driving(&p, &sim)?;
            files.push(p);
        }
        if let Some(c) = curve {
            let p = path_file(&cfg.out, "curve", i, "csv");
            write_curve(&p, &c)?;
            files.push(p);
        }
        if what.observable {
            let p = path_file(&cfg.out, "observable", i, "csv");
            write_observable(&p, &tr)?;
            files.push(p);
        }
        if !sim.events.is_empty() {
            let p = path_file(&cfg.out, "events", i, "json");
            let text = serde_json::to_string_pretty(&sim.events)?;
            fs::write(&p, text + "\n").map_err(|e| HarnessError::io(&p, e))?;
            files.push(p);
        }
    }
    Ok(files)
}
