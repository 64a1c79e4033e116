//! Acceptance bundles. Default sizes are the acceptance sizes; `paths` and
//! `dt` in [`SuiteOptions`] override them for quick runs.

use std::path::PathBuf;

use num_complex::Complex64;
use sle4rho_core::boundary::{BoundaryFunction, MeasurePair, PiecewiseConstant};
use sle4rho_core::crossing::{ball_surrogate, comparison_pair, partial_sum_condition, BallOptions};
use sle4rho_core::dgff::{
    covariance_check, extract_interface, green_matrix, markov_check, ordering_check, Dgff, Lattice,
    SubBox,
};
use sle4rho_core::driver::{quadratic_variation, simulate_ensemble, SleConfig};
use sle4rho_core::loewner::{extract_curve_strided, forward_flow, radius_clock, DrivingPath};
use sle4rho_core::observable::{
    bm_test, observe_ensemble, qv_consistency, reparam, BmThresholds, Evaluator, ObserveOptions,
};
use sle4rho_core::stats::mean;
use sle4rho_core::LAMBDA;

use crate::output::{ensure_dir, write_table};
use crate::report::{Provenance, StudyReport};
use crate::studies::{run_approximation_study, run_reversal_study, StudySettings};
use crate::{HarnessError, Result};

pub const SUITES: [&str; 9] = [
    "loewner-oracle",
    "qv",
    "bm",
    "threshold",
    "crossing",
    "dgff",
    "mono",
    "approx",
    "reversal",
];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SuiteOptions {
    pub seed: u64,
    pub paths: Option<usize>,
    pub dt: Option<f64>,
    /// Directory for the JSON report and plot-data CSVs.
    pub out: Option<PathBuf>,
}

impl SuiteOptions {
    fn paths(&self, default: usize) -> usize {
        self.paths.unwrap_or(default)
    }

    fn dt(&self, default: f64) -> f64 {
        self.dt.unwrap_or(default)
    }

    fn provenance(&self, name: &str) -> Provenance {
        use sha2::{Digest, Sha256};
        let key = format!("{name}|{}|{:?}|{:?}", self.seed, self.paths, self.dt);
        Provenance::new(hex::encode(Sha256::digest(key.as_bytes())), self.seed)
    }

    fn table(&self, file: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        if let Some(dir) = &self.out {
            ensure_dir(dir)?;
            write_table(&dir.join(file), header, rows)?;
        }
        Ok(())
    }
}

/// Runs a named suite and, with `out` set, writes `suite_<name>.json`.
pub fn run_suite(name: &str, opts: &SuiteOptions) -> Result<StudyReport> {
    let rep = match name {
        "loewner-oracle" => loewner_oracle(opts)?,
        "qv" => qv(opts)?,
        "bm" => bm(opts)?,
        "threshold" => threshold(opts)?,
        "crossing" => crossing(opts)?,
        "dgff" => dgff(opts)?,
        "mono" => mono(opts)?,
        "approx" => approx(opts)?,
        "reversal" => reversal(opts)?,
        other => return Err(HarnessError::UnknownSuite(other.to_string())),
    };
    if let Some(dir) = &opts.out {
        ensure_dir(dir)?;
        rep.write(&dir.join(format!("suite_{name}.json")))?;
    }
    Ok(rep)
}

/// Vertical slit: `γ(t) = 2i√t`, `g_t(i) = i√(1-4t)`, swallowing at `1/4`,
/// `C_t(i) = -log(1-4t)`.
pub fn loewner_oracle(opts: &SuiteOptions) -> Result<StudyReport> {
    let mut rep = StudyReport::new("loewner-oracle", opts.provenance("loewner-oracle"));
    let dt = 1e-5;
    let d = DrivingPath::zero(dt, 30_000);

    let curve = extract_curve_strided(&d.truncated(20_000), 100);
    let sup = curve
        .times
        .iter()
        .zip(&curve.points)
        .map(|(t, z)| (z - Complex64::new(0.0, 2.0 * t.sqrt())).norm())
        .fold(0.0, f64::max);
    rep.check("curve_sup_error", sup, "≤ 1e-3", sup <= 1e-3);

    let g_err = [0.05, 0.1, 0.2, 0.24]
        .iter()
        .map(|&t| {
            let p = forward_flow(&d, Complex64::i(), t);
            (p.g - Complex64::new(0.0, (1.0 - 4.0 * t).sqrt())).norm()
        })
        .fold(0.0, f64::max);
    rep.check("g_t(i)_error", g_err, "≤ 1e-6", g_err <= 1e-6);

    let swallow = forward_flow(&d, Complex64::i(), 0.3).swallow_time;
    let s_err = swallow.map_or(f64::INFINITY, |s| (s - 0.25).abs());
    rep.check("swallow_time_error", s_err, "≤ 1e-6", s_err <= 1e-6);

    let rc = radius_clock(&d.truncated(24_000), Complex64::i());
    let mut direct = 0.0f64;
    let mut ode = 0.0f64;
    let mut rows = Vec::new();
    for k in 0..rc.c.len() {
        let exact = -(1.0 - 4.0 * rc.times[k]).ln();
        direct = direct.max((rc.c[k] - exact).abs());
        ode = ode.max((rc.c_ode[k] - rc.c[k]).abs());
        if k % 1000 == 0 {
            rows.push(vec![rc.times[k], rc.c[k], rc.c_ode[k], exact]);
        }
    }
    rep.check("radius_direct_error", direct, "≤ 1e-6", direct <= 1e-6);
    rep.check("radius_ode_vs_direct", ode, "≤ 10·dt", ode <= 10.0 * dt);
    opts.table("loewner_radius.csv", &["t", "c", "c_ode", "exact"], &rows)?;
    Ok(rep)
}

/// Realised quadratic variation of the chordal driving function on `[0, 1]`.
pub fn qv(opts: &SuiteOptions) -> Result<StudyReport> {
    let mut rep = StudyReport::new("qv", opts.provenance("qv"));
    let cfg = SleConfig::new(MeasurePair::empty(), opts.dt(1e-4), opts.seed);
    let sims = simulate_ensemble(&cfg, 1.0, opts.paths(100))?;
    let qvs: Vec<f64> = sims.iter().map(|s| quadratic_variation(&s.path)).collect();
    let m = mean(&qvs);
    rep.stat("paths", qvs.len());
    rep.check("mean_qv", m, "∈ [3.8, 4.2]", (3.8..=4.2).contains(&m));
    let rows: Vec<Vec<f64>> = qvs
        .iter()
        .enumerate()
        .map(|(i, q)| vec![i as f64, *q])
        .collect();
    opts.table("qv.csv", &["path", "qv"], &rows)?;
    Ok(rep)
}

fn bm_case(name: &str, pair: MeasurePair, opts: &SuiteOptions) -> Result<StudyReport> {
    let mut rep = StudyReport::new(name, opts.provenance(name));
    let n = opts.paths(200);
    let cfg = SleConfig::new(pair, opts.dt(1e-4), opts.seed);
    let ds = 0.005;
    let traces = observe_ensemble(
        &cfg,
        n,
        Complex64::i(),
        &Evaluator::Bv,
        &ObserveOptions {
            horizon: 8.0,
            stop_at_c: Some(1.05),
            resolve_c: Some(0.1 * ds),
        },
    )?;
    let re: Vec<Vec<f64>> = traces
        .iter()
        .map(|t| reparam(t, ds, 1.0))
        .collect::<sle4rho_core::Result<_>>()?;
    let th = BmThresholds::default();
    let r = bm_test(&re, ds, &th)?;
    rep.stat("bm", r);
    rep.check("ks_p", r.ks_p_value, "≥ 0.01", r.ks_p_value >= th.min_p);
    rep.check(
        "variance_ratio",
        r.variance_ratio,
        "∈ [0.9, 1.1]",
        (th.variance_band.0..=th.variance_band.1).contains(&r.variance_ratio),
    );
    rep.check(
        "lag1_autocorr",
        r.lag1_autocorr.abs(),
        "≤ 0.1",
        r.lag1_autocorr.abs() <= th.max_autocorr,
    );
    // QV of η on the capacity grid against the radius clock
    let short = observe_ensemble(
        &cfg,
        n,
        Complex64::i(),
        &Evaluator::Bv,
        &ObserveOptions::grid(0.1),
    )?;
    let q = mean(&short.iter().map(qv_consistency).collect::<Vec<_>>());
    rep.check("qv_vs_c_relative_error", q, "≤ 0.15", q <= 0.15);
    let rows: Vec<Vec<f64>> = re[0]
        .iter()
        .enumerate()
        .map(|(j, e)| vec![j as f64 * ds, *e])
        .collect();
    opts.table(&format!("{name}_eta_tilde_path0.csv"), &["s", "eta"], &rows)?;
    Ok(rep)
}

/// Brownian-motion test of `η̃(i)` for the chordal case and for `ρᴿ = -3/2`
/// at `0⁺`.
pub fn bm(opts: &SuiteOptions) -> Result<StudyReport> {
    let mut rep = StudyReport::new("bm", opts.provenance("bm"));
    rep.absorb(
        "chordal",
        bm_case("bm_chordal", MeasurePair::empty(), opts)?,
    );
    rep.absorb(
        "rho_minus_1.5",
        bm_case("bm_rho", comparison_pair(0.5 * LAMBDA, LAMBDA)?, opts)?,
    );
    Ok(rep)
}

/// Configurations satisfying the partial-sum condition for `c = λ/2`,
/// `C = λ`.
pub fn threshold_configs() -> Result<Vec<(&'static str, MeasurePair)>> {
    Ok(vec![
        ("chordal", MeasurePair::empty()),
        ("comparison", comparison_pair(0.5 * LAMBDA, LAMBDA)?),
        (
            "mixed",
            MeasurePair::atomic(&[(-1.0, -1.5)], &[(0.0, -0.5), (0.5, -1.0), (2.0, 0.5)])?,
        ),
        (
            "near_band_edge",
            MeasurePair::atomic(&[(-0.3, -1.45), (-2.0, 0.4)], &[(0.2, -1.45), (1.0, 0.45)])?,
        ),
    ])
}

/// No threshold events and `Z > 0` on the grid over many seeds.
pub fn threshold(opts: &SuiteOptions) -> Result<StudyReport> {
    let mut rep = StudyReport::new("threshold", opts.provenance("threshold"));
    let n = opts.paths(1000);
    let (c, big_c) = (0.5 * LAMBDA, LAMBDA);
    for (name, pair) in threshold_configs()? {
        let ok = partial_sum_condition(&pair, c, big_c)?;
        rep.check(&format!("{name}.partial_sums"), ok as u8 as f64, "= 1", ok);
        let cfg = SleConfig::new(pair, opts.dt(1e-3), opts.seed);
        let sims = simulate_ensemble(&cfg, 1.0, n)?;
        let events: usize = sims.iter().map(|s| s.events.len()).sum();
        let z_min = sims
            .iter()
            .map(|s| s.monitor.z_min)
            .fold(f64::INFINITY, f64::min);
        rep.stat(&format!("{name}.bessel_regime"), sims[0].monitor.active);
        rep.check(
            &format!("{name}.threshold_events"),
            events as f64,
            "= 0",
            events == 0,
        );
        rep.check(&format!("{name}.z_min"), z_min, "> 0", z_min > 0.0);
    }
    Ok(rep)
}

/// Ball-hitting surrogate for the comparison process.
pub fn crossing(opts: &SuiteOptions) -> Result<StudyReport> {
    let mut rep = StudyReport::new("crossing", opts.provenance("crossing"));
    let cfg = SleConfig::new(
        comparison_pair(0.5 * LAMBDA, LAMBDA)?,
        opts.dt(1e-3),
        opts.seed,
    );
    let nus = [0.4, 0.2, 0.1, 0.05];
    let est = ball_surrogate(&cfg, &nus, opts.paths(200), &BallOptions::default())?;
    let last = est.last().unwrap();
    rep.check("p_hit_0.05", last.p, "≤ 0.5", last.p <= 0.5);
    rep.check("ci_upper_0.05", last.ci.1, "< 0.5", last.ci.1 < 0.5);
    for w in est.windows(2) {
        rep.check(
            &format!("monotone_{}_{}", w[0].nu, w[1].nu),
            w[1].p - w[0].ci.1,
            "p(ν') ≤ CI upper of p(ν)",
            w[1].p <= w[0].ci.1,
        );
    }
    let rows: Vec<Vec<f64>> = est
        .iter()
        .map(|e| vec![e.nu, e.p, e.ci.0, e.ci.1, e.unresolved as f64])
        .collect();
    rep.stat("estimates", &est);
    opts.table(
        "ball_hits.csv",
        &["nu", "p", "ci_low", "ci_high", "unresolved"],
        &rows,
    )?;
    Ok(rep)
}

fn shifted_chordal(by: f64) -> BoundaryFunction {
    PiecewiseConstant::chordal().shifted(by).into()
}

/// Sampler covariance on a 32×32 interior and the Markov decomposition.
pub fn dgff(opts: &SuiteOptions) -> Result<StudyReport> {
    let mut rep = StudyReport::new("dgff", opts.provenance("dgff"));
    let n = opts.paths(5000);
    let l = Lattice::new(34, 34, 1.0)?;
    let xs: Vec<Vec<f64>> = Dgff::new(&l)?
        .samples(&l, opts.seed, n)
        .into_iter()
        .map(|f| f.fluctuation)
        .collect();
    let cov = covariance_check(&xs, &green_matrix(&l)?)?;
    rep.stat("covariance", &cov);
    rep.check(
        "covariance_max_z",
        cov.max_z,
        &format!("≤ {:.3} (family-wise 4 SE)", cov.threshold),
        cov.pass,
    );
    drop(xs);
    let l = Lattice::from_function(20, 20, 1.0, &shifted_chordal(0.0))?;
    let samples = Dgff::new(&l)?.samples(&l, opts.seed.wrapping_add(1), n);
    let m = markov_check(
        &samples,
        SubBox {
            i0: 6,
            j0: 5,
            i1: 13,
            j1: 12,
        },
    )?;
    rep.stat("markov", &m);
    rep.check(
        "markov_residual_covariance",
        m.covariance.max_z,
        "≤ threshold",
        m.covariance.pass,
    );
    rep.check(
        "markov_cross_correlation",
        m.cross_max_z,
        &format!("≤ {:.3}", m.cross_threshold),
        m.cross_max_z <= m.cross_threshold,
    );
    Ok(rep)
}

/// Same-sample ordering of interfaces for `F = chordal + 0.2λ` and
/// `F - 0.4λ` on 64×64.
pub fn mono(opts: &SuiteOptions) -> Result<StudyReport> {
    let mut rep = StudyReport::new("mono", opts.provenance("mono"));
    let n = opts.paths(200);
    let hi = Lattice::from_function(64, 64, 1.0, &shifted_chordal(0.2 * LAMBDA))?;
    let lo = hi.with_boundary(&shifted_chordal(-0.2 * LAMBDA))?;
    let dgff = Dgff::new(&hi)?;
    let mut ordered = 0;
    let mut simple = 0;
    for f in dgff.samples(&hi, opts.seed, n) {
        let a = extract_interface(&f);
        let b = extract_interface(&f.rebased(&dgff, &lo));
        simple += (a.is_simple() && b.is_simple()) as usize;
        ordered += ordering_check(&a, &b) as usize;
    }
    let freq = ordered as f64 / n as f64;
    rep.stat("samples", n);
    rep.check("ordering_frequency", freq, "≥ 0.95", freq >= 0.95);
    rep.check(
        "simple_interfaces",
        simple as f64 / n as f64,
        "= 1",
        simple == n,
    );
    Ok(rep)
}

/// Approximation convergence for `F = (λ/2)·tanh`.
pub fn approx(opts: &SuiteOptions) -> Result<StudyReport> {
    let s = StudySettings {
        paths: opts.paths(200),
        seed: opts.seed,
        dt: opts.dt(1e-3),
        horizon: 1.0,
        stride: 5,
    };
    let study = run_approximation_study(&BoundaryFunction::half_tanh(), &[4, 8, 16, 32], &s)?;
    let rows: Vec<Vec<f64>> = study
        .rows
        .iter()
        .map(|r| {
            vec![
                r.n as f64,
                r.sup_error,
                r.bound,
                r.ks,
                r.ks_slack,
                r.dstar_mean,
                r.dstar_se,
            ]
        })
        .collect();
    opts.table(
        "approx.csv",
        &[
            "n",
            "sup_error",
            "bound",
            "ks",
            "ks_slack",
            "dstar_mean",
            "dstar_se",
        ],
        &rows,
    )?;
    Ok(study.report)
}

/// Force point used for the reversal negative control.
pub fn control_pair() -> Result<MeasurePair> {
    Ok(MeasurePair::atomic(&[], &[(0.0, 1.0)])?)
}

/// Chordal reversibility, and the negative control that pairs `ρᴿ = 1` at
/// `0⁺` with the sign-flipped reversed measure.
pub fn reversal(opts: &SuiteOptions) -> Result<StudyReport> {
    let mut rep = StudyReport::new("reversal", opts.provenance("reversal"));
    let s = StudySettings {
        paths: opts.paths(200),
        seed: opts.seed,
        dt: opts.dt(1e-3),
        horizon: 4.0,
        stride: 2,
    };
    let chordal = run_reversal_study(&MeasurePair::empty(), None, &s, 0.01)?;
    rep.absorb("chordal", chordal.report);

    let p = control_pair()?;
    let wrong = sle4rho_core::boundary::reversed_pair(&p)?.negated();
    let control = run_reversal_study(&p, Some(&wrong), &s, 0.01)?;
    rep.stat("control.report", &control.report);
    let min_p = control
        .report
        .checks
        .iter()
        .map(|c| c.value)
        .fold(f64::INFINITY, f64::min);
    rep.check("control_rejected_min_p", min_p, "< 0.01", min_p < 0.01);
    let rows: Vec<Vec<f64>> = chordal
        .samples
        .forward_exit
        .iter()
        .zip(&chordal.samples.reversed_exit)
        .map(|(a, b)| vec![*a, *b])
        .collect();
    opts.table("reversal_exit_args.csv", &["forward", "reversed"], &rows)?;
    Ok(rep)
}
