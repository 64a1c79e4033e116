use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sle4rho_core::boundary::{
    cdf_left, cdf_right, check_admissible, default_probe_grid, measure_to_function, quantize_pair,
    reversed_pair, sampled_pair, AdmissibilityMargin, BoundaryFunction, MeasurePair,
};
use sle4rho_core::driver::{simulate_indexed, SleConfig};
use sle4rho_core::loewner::{dstar_points, extract_curve_strided};
use sle4rho_core::par;
use sle4rho_core::stats::{ks_two_sample, ks_two_sample_critical, mean, variance};
use sle4rho_core::LAMBDA;

use crate::report::{Provenance, StudyReport};
use crate::{HarnessError, Result};

/// Ensemble parameters shared by the studies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudySettings {
    pub paths: usize,
    pub seed: u64,
    pub dt: f64,
    pub horizon: f64,
    pub stride: usize,
}

impl StudySettings {
    fn sle(&self, pair: MeasurePair) -> SleConfig {
        SleConfig::new(pair, self.dt, self.seed)
    }

    fn provenance(&self, what: &impl Serialize) -> Provenance {
        use sha2::{Digest, Sha256};
        let bytes = serde_json::to_vec(&(self, what)).expect("settings serialize");
        Provenance::new(hex::encode(Sha256::digest(bytes)), self.seed)
    }
}

/// One resolution of the approximation study. `ks` and `dstar` compare this
/// resolution with the next one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxRow {
    pub n: usize,
    pub sup_error: f64,
    pub bound: f64,
    pub ks: f64,
    pub ks_slack: f64,
    pub dstar_mean: f64,
    pub dstar_se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxStudy {
    pub report: StudyReport,
    pub rows: Vec<ApproxRow>,
}

fn sup_error(f: &BoundaryFunction, g: &BoundaryFunction, probe: &[f64]) -> f64 {
    probe
        .iter()
        .chain(g.breaks())
        .flat_map(|&x| {
            [
                (f.eval(x) - g.eval(x)).abs(),
                (f.left_limit(x) - g.left_limit(x)).abs(),
            ]
        })
        .fold(0.0, f64::max)
}

fn max_cdf_gap(a: &MeasurePair, b: &MeasurePair, probe: &[f64]) -> f64 {
    // the gap peaks just inside the atoms of either measure
    let atoms = [a.left(), a.right(), b.left(), b.right()]
        .into_iter()
        .flat_map(|m| m.atoms().iter().map(|x| x.location))
        .filter(|&x| x != 0.0)
        .flat_map(|x| [x, x - x.signum() * 1e-9 * (1.0 + x.abs())]);
    probe
        .iter()
        .copied()
        .chain(atoms)
        .map(|x| {
            if x >= 0.0 {
                (cdf_right(a.right(), x) - cdf_right(b.right(), x)).abs()
            } else {
                (cdf_left(a.left(), x) - cdf_left(b.left(), x)).abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Quantises `f` at each resolution, simulates matched-seed ensembles and
/// records the sup-error of `Fₙ`, the KS distance between the laws of `W`
/// at the horizon for `n` and the next resolution, and the mean `d_*`
/// distance between matched curves. The last comparison uses `2·n_max`.
pub fn run_approximation_study(
    f: &BoundaryFunction,
    resolutions: &[usize],
    s: &StudySettings,
) -> Result<ApproxStudy> {
    if resolutions.is_empty() || resolutions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HarnessError::Config(
            "resolutions must be nonempty and increasing".into(),
        ));
    }
    let loose = AdmissibilityMargin::new(1e-9, 1e9)?;
    if !check_admissible(f, &loose, &default_probe_grid()) {
        return Err(HarnessError::Config(
            "boundary data is not admissible".into(),
        ));
    }
    let pair = sampled_pair(f, 100, 40.0)?;
    let probe: Vec<f64> = (-8000..=8000).map(|k| k as f64 * 5e-3).collect();
    let mut levels = resolutions.to_vec();
    levels.push(2 * resolutions.last().unwrap());

    let ensembles = levels
        .iter()
        .map(|&n| {
            let cfg = s.sle(quantize_pair(&pair, n)?);
            let out = par::map_indexed(s.paths, |i| {
                simulate_indexed(&cfg, s.horizon, i as u64).map(|sim| {
                    let w1 = *sim.path.w.last().unwrap();
                    let curve = extract_curve_strided(&sim.path, s.stride).points;
                    (w1, curve, sim.stopped())
                })
            });
            out.into_iter().collect::<sle4rho_core::Result<Vec<_>>>()
        })
        .collect::<sle4rho_core::Result<Vec<_>>>()?;

    let mut rep = StudyReport::new("approx", s.provenance(&(resolutions, "approx")));
    let mut rows = Vec::new();
    // F itself is only available through its sampled measure pair
    let sampling = sup_error(f, &measure_to_function(&pair), &probe);
    rep.stat("sampling_error", sampling);
    for (k, &n) in resolutions.iter().enumerate() {
        let q = quantize_pair(&pair, n)?;
        let err = sup_error(f, &measure_to_function(&q), &probe);
        let gap = max_cdf_gap(&pair, &q, &probe);
        rep.stat(&format!("cdf_gap_{n}"), gap);
        let (a, b) = (&ensembles[k], &ensembles[k + 1]);
        let wa: Vec<f64> = a.iter().map(|e| e.0).collect();
        let wb: Vec<f64> = b.iter().map(|e| e.0).collect();
        let ks = ks_two_sample(&wa, &wb).statistic;
        let d: Vec<f64> = a
            .iter()
            .zip(b)
            .map(|(x, y)| dstar_points(&x.1, &y.1))
            .collect();
        rows.push(ApproxRow {
            n,
            sup_error: err,
            bound: LAMBDA * gap + sampling,
            ks,
            ks_slack: ks_two_sample_critical(wa.len(), wb.len()),
            dstar_mean: mean(&d),
            dstar_se: (variance(&d) / d.len() as f64).sqrt(),
        });
    }
    let stopped: usize = ensembles.iter().flatten().filter(|e| e.2).count();
    rep.stat("stopped_paths", stopped);
    rep.check("stopped_paths", stopped as f64, "= 0", stopped == 0);
    for r in &rows {
        rep.check(
            &format!("sup_error_{}", r.n),
            r.sup_error,
            &format!("≤ λ·CDF gap + sampling = {:.6}", r.bound),
            r.sup_error <= r.bound + 1e-9,
        );
    }
    for w in rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        rep.check(
            &format!("sup_error_decreasing_{}_{}", a.n, b.n),
            b.sup_error - a.sup_error,
            "< 0",
            b.sup_error < a.sup_error,
        );
        rep.check(
            &format!("ks_nonincreasing_{}_{}", a.n, b.n),
            b.ks - a.ks,
            &format!("≤ 95% KS slack {:.4}", b.ks_slack),
            b.ks <= a.ks + b.ks_slack,
        );
        let slack = 1.96 * (a.dstar_se.powi(2) + b.dstar_se.powi(2)).sqrt();
        rep.check(
            &format!("dstar_nonincreasing_{}_{}", a.n, b.n),
            b.dstar_mean - a.dstar_mean,
            &format!("≤ 1.96 SE = {slack:.4}"),
            b.dstar_mean <= a.dstar_mean + slack,
        );
    }
    rep.stat("rows", &rows);
    Ok(ApproxStudy { report: rep, rows })
}

/// Point where the segment `a → b` crosses the circle `|z| = r`, assuming
/// exactly one endpoint lies inside.
fn circle_crossing(a: Complex64, b: Complex64, r: f64) -> Complex64 {
    // |a + s(b - a)|² = r², root in [0, 1]
    let d = b - a;
    let (qa, qb, qc) = (
        d.norm_sqr(),
        2.0 * (a.re * d.re + a.im * d.im),
        a.norm_sqr() - r * r,
    );
    let disc = (qb * qb - 4.0 * qa * qc).max(0.0).sqrt();
    let s = [(-qb + disc) / (2.0 * qa), (-qb - disc) / (2.0 * qa)]
        .into_iter()
        .filter(|s| (-1e-12..=1.0 + 1e-12).contains(s))
        .fold(f64::NAN, |acc, s| if acc.is_nan() { s } else { acc.min(s) });
    a + d * s.clamp(0.0, 1.0)
}

/// Argument of the first exit from the unit disk.
pub fn first_exit_arg(points: &[Complex64]) -> Option<f64> {
    let k = points.iter().position(|z| z.norm() > 1.0)?;
    if k == 0 {
        return Some(points[0].arg());
    }
    Some(circle_crossing(points[k - 1], points[k], 1.0).arg())
}

/// The same functional for the curve `-1/γ'` traversed from 0: the image
/// of the last exit of `γ'` from the unit disk. `None` when `γ'` is still
/// inside at the end of the sample.
pub fn reversed_exit_arg(points: &[Complex64]) -> Option<f64> {
    let k = points.iter().rposition(|z| z.norm() <= 1.0)?;
    let next = points.get(k + 1)?;
    Some(PI - circle_crossing(points[k], *next, 1.0).arg())
}

/// Largest argument on `γ ∩ {1/2 ≤ |z| ≤ 1}`.
pub fn annulus_max_arg(points: &[Complex64]) -> Option<f64> {
    points
        .iter()
        .filter(|z| (0.5..=1.0).contains(&z.norm()))
        .map(|z| z.arg())
        .reduce(f64::max)
}

/// The same set functional evaluated on `-1/γ'`.
pub fn reversed_annulus_max_arg(points: &[Complex64]) -> Option<f64> {
    points
        .iter()
        .filter(|z| (1.0..=2.0).contains(&z.norm()))
        .map(|z| PI - z.arg())
        .reduce(f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReversalSamples {
    pub forward_exit: Vec<f64>,
    pub reversed_exit: Vec<f64>,
    pub forward_annulus: Vec<f64>,
    pub reversed_annulus: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReversalStudy {
    pub report: StudyReport,
    pub samples: ReversalSamples,
}

/// Simulates the pair forward and `reversed` (by default the measure
/// reversal of `pair`), maps the second ensemble by `z ↦ -1/z` and compares
/// the laws of two scale-free functionals by two-sample KS. Passes when
/// every p-value is at least `min_p`.
pub fn run_reversal_study(
    pair: &MeasurePair,
    reversed: Option<&MeasurePair>,
    s: &StudySettings,
    min_p: f64,
) -> Result<ReversalStudy> {
    let rev = match reversed {
        Some(r) => r.clone(),
        None => reversed_pair(pair)?,
    };
    let fwd_cfg = s.sle(pair.clone());
    // the reversed ensemble uses an independent stream
    let mut rev_cfg = s.sle(rev.clone());
    rev_cfg.seed = s.seed ^ 0x5bd1_e995;
    let curves = |cfg: &SleConfig| -> Result<Vec<(Vec<Complex64>, bool)>> {
        let out = par::map_indexed(s.paths, |i| {
            simulate_indexed(cfg, s.horizon, i as u64).map(|sim| {
                (
                    extract_curve_strided(&sim.path, s.stride).points,
                    sim.stopped(),
                )
            })
        });
        Ok(out.into_iter().collect::<sle4rho_core::Result<Vec<_>>>()?)
    };
    let fwd = curves(&fwd_cfg)?;
    let bwd = curves(&rev_cfg)?;
    let samples = ReversalSamples {
        forward_exit: fwd.iter().filter_map(|c| first_exit_arg(&c.0)).collect(),
        reversed_exit: bwd.iter().filter_map(|c| reversed_exit_arg(&c.0)).collect(),
        forward_annulus: fwd.iter().filter_map(|c| annulus_max_arg(&c.0)).collect(),
        reversed_annulus: bwd
            .iter()
            .filter_map(|c| reversed_annulus_max_arg(&c.0))
            .collect(),
    };
    let mut rep = StudyReport::new("reversal", s.provenance(&(pair, &rev, "reversal")));
    let stopped = fwd.iter().chain(&bwd).filter(|c| c.1).count();
    rep.stat("stopped_paths", stopped);
    rep.stat(
        "reversed_pair",
        sle4rho_core::boundary::BoundarySpec::from_pair(&rev),
    );
    for (name, a, b) in [
        ("exit_arg", &samples.forward_exit, &samples.reversed_exit),
        (
            "annulus_max_arg",
            &samples.forward_annulus,
            &samples.reversed_annulus,
        ),
    ] {
        if a.len() < s.paths / 2 || b.len() < s.paths / 2 {
            return Err(HarnessError::Config(format!(
                "{name}: too few defined samples ({} / {}); lengthen the horizon",
                a.len(),
                b.len()
            )));
        }
        let ks = ks_two_sample(a, b);
        rep.stat(&format!("{name}_forward_mean"), mean(a));
        rep.stat(&format!("{name}_reversed_mean"), mean(b));
        rep.stat(&format!("{name}_ks_statistic"), ks.statistic);
        rep.check(
            &format!("{name}_ks_p"),
            ks.p_value,
            &format!("≥ {min_p}"),
            ks.p_value >= min_p,
        );
    }
    Ok(ReversalStudy {
        report: rep,
        samples,
    })
}
