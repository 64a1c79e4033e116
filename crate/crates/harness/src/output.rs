//! CSV writers. Headers are fixed and documented in the README.

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use csv::Writer;
use sle4rho_core::driver::Simulation;
use sle4rho_core::loewner::CurveSample;
use sle4rho_core::observable::ObservableTrace;

use crate::{HarnessError, Result};

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

fn writer(path: &Path) -> Result<Writer<File>> {
    let f = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(Writer::from_writer(f))
}

/// `k,t,w,b,zero_minus,zero_plus,v0,…` — one `v<i>` column per force point,
/// left points first, each side in increasing order.
pub fn write_driving(path: &Path, sim: &Simulation) -> Result<()> {
    let mut w = writer(path)?;
    let mut header: Vec<String> = ["k", "t", "w", "b", "zero_minus", "zero_plus"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..sim.path.force.len()).map(|i| format!("v{i}")));
    w.write_record(&header)?;
    let d = &sim.path;
    for k in 0..d.w.len() {
        let mut row = vec![
            k.to_string(),
            d.time(k).to_string(),
            d.w[k].to_string(),
            sim.brownian[k].to_string(),
            sim.zero_minus[k].to_string(),
            sim.zero_plus[k].to_string(),
        ];
        row.extend(d.force.iter().map(|f| f.v[k].to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// `k,t,x,y`.
pub fn write_curve(path: &Path, c: &CurveSample) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["k", "t", "x", "y"])?;
    for (k, (t, z)) in c.times.iter().zip(&c.points).enumerate() {
        w.write_record([
            k.to_string(),
            t.to_string(),
            z.re.to_string(),
            z.im.to_string(),
        ])?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// `k,t,c,c_ode,eta,u`.
pub fn write_observable(path: &Path, tr: &ObservableTrace) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["k", "t", "c", "c_ode", "eta", "u"])?;
    for k in 0..tr.times.len() {
        w.write_record([
            k.to_string(),
            tr.times[k].to_string(),
            tr.c[k].to_string(),
            tr.c_ode[k].to_string(),
            tr.eta[k].to_string(),
            tr.u[k].to_string(),
        ])?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Plot data with a caller-supplied header; rows must match its width.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header)?;
    for r in rows {
        debug_assert_eq!(r.len(), header.len());
        w.write_record(r.iter().map(|x| x.to_string()))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn path_file(dir: &Path, kind: &str, index: usize, ext: &str) -> PathBuf {
    dir.join(format!("{kind}_{index:04}.{ext}"))
}
