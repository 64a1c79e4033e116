//! The level-line observable `η_t(z)`: the bounded harmonic extension of the
//! boundary data seen from `f_t(z) = g_t(z) - W_t`. For atomic data it is a
//! finite sum of arguments; for general regulated data a tracked boundary mesh
//! supplies the harmonic-measure quadrature. Under the coupling, `η` run in
//! conformal-radius time is a standard Brownian motion.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryFunction, Side};
use crate::driver::{simulate_tracked, SdeState, Simulation, SleConfig, Trackers};
use crate::stats::{ks_normal, mean};
use crate::{par, Error, Result, LAMBDA};

use std::f64::consts::PI;

fn arg_upper(g: Complex64, x: f64) -> f64 {
    (g - x).arg()
}

/// Closed form for atomic data:
///
/// ```text
/// 2η = -Σ ρᴸ arg(g - Vᴸ) - arg(g - W) + (π - arg(g - W)) + Σ ρᴿ (π - arg(g - Vᴿ))
/// ```
pub fn eta_bv(s: &SdeState, g: Complex64) -> Result<f64> {
    if !(g.im > 0.0) {
        return Err(Error::Swallowed { time: s.t });
    }
    let aw = arg_upper(g, s.w);
    let mut two_eta = -aw + (PI - aw);
    for p in &s.points {
        let a = arg_upper(g, p.v);
        two_eta += match p.side {
            Side::Negative => -p.mass * a,
            Side::Positive => p.mass * (PI - a),
        };
    }
    Ok(0.5 * two_eta)
}

/// Boundary data seen from the image domain, as `(a, b, value)` segments
/// covering ℝ. `mesh` holds `(y, image)` pairs sorted by `y`, without 0.
fn image_segments(
    w: f64,
    v0m: f64,
    v0p: f64,
    mesh: &[(f64, f64)],
    f: &BoundaryFunction,
) -> Vec<(f64, f64, f64, bool)> {
    // the flag marks segments on which F may vary
    let varies = |a: f64, b: f64| {
        let m = 0.5 * (a + b);
        let (fa, fm, fb) = (f.right_limit(a), f.eval(m), f.left_limit(b));
        !(fa == fm && fm == fb)
    };
    let neg: Vec<(f64, f64)> = mesh.iter().copied().filter(|p| p.0 < 0.0).collect();
    let pos: Vec<(f64, f64)> = mesh.iter().copied().filter(|p| p.0 > 0.0).collect();
    let mut segs = Vec::with_capacity(mesh.len() + 4);
    let mut prev_img = f64::NEG_INFINITY;
    let mut prev_y = f64::NEG_INFINITY;
    for &(y, img) in &neg {
        let value = if prev_y.is_infinite() {
            f.minus_inf()
        } else {
            f.eval(0.5 * (prev_y + y))
        };
        let v = !prev_y.is_infinite() && varies(prev_y, y);
        segs.push((prev_img, img, value, v));
        prev_img = img;
        prev_y = y;
    }
    let value = if prev_y.is_infinite() {
        f.minus_inf()
    } else {
        f.eval(0.5 * prev_y)
    };
    segs.push((
        prev_img,
        v0m,
        value,
        !prev_y.is_infinite() && varies(prev_y, 0.0),
    ));
    segs.push((v0m, w, -LAMBDA, false));
    segs.push((w, v0p, LAMBDA, false));
    let mut prev_img = v0p;
    let mut prev_y = 0.0;
    for &(y, img) in &pos {
        segs.push((prev_img, img, f.eval(0.5 * (prev_y + y)), varies(prev_y, y)));
        prev_img = img;
        prev_y = y;
    }
    segs.push((prev_img, f64::INFINITY, f.plus_inf(), false));
    segs
}

/// Harmonic measure of `[a, b)` seen from `g`.
pub fn harmonic_measure(g: Complex64, a: f64, b: f64) -> f64 {
    let arg_at = |x: f64| {
        if x == f64::INFINITY {
            PI
        } else if x == f64::NEG_INFINITY {
            0.0
        } else {
            arg_upper(g, x)
        }
    };
    (arg_at(b) - arg_at(a)) / PI
}

/// Harmonic-measure weights of the image segments (for diagnostics).
pub fn general_weights(
    w: f64,
    v0m: f64,
    v0p: f64,
    mesh: &[(f64, f64)],
    f: &BoundaryFunction,
    g: Complex64,
) -> Vec<f64> {
    image_segments(w, v0m, v0p, mesh, f)
        .iter()
        .map(|s| harmonic_measure(g, s.0, s.1))
        .collect()
}

/// Quadrature form for general data. `mesh` is the tracked boundary mesh as
/// `(y, g_t(y))` sorted by `y`; the segments next to the curve carry `∓λ`.
/// With `max_angle` set, a segment on which `F` is not constant may subtend
/// at most that angle from `g`.
pub fn eta_general(
    g: Complex64,
    w: f64,
    v0m: f64,
    v0p: f64,
    mesh: &[(f64, f64)],
    f: &BoundaryFunction,
    max_angle: Option<f64>,
) -> Result<f64> {
    if !(g.im > 0.0) {
        return Err(Error::Swallowed { time: f64::NAN });
    }
    let mut eta = 0.0;
    for (a, b, value, varies) in image_segments(w, v0m, v0p, mesh, f) {
        let h = harmonic_measure(g, a, b);
        if let (Some(max), true) = (max_angle, varies) {
            if h * PI > max {
                return Err(Error::MeshTooCoarse {
                    angle: h * PI,
                    max_angle: max,
                });
            }
        }
        eta += value * h;
    }
    Ok(eta)
}

pub fn u_process(eta: f64, fz: Complex64) -> f64 {
    eta + fz.arg()
}

/// Breakpoints of `f` plus a symmetric geometric grid from `10⁻³` to `10³`.
pub fn default_mesh(f: &BoundaryFunction) -> Vec<f64> {
    let mut ys: Vec<f64> = f.breaks().iter().copied().filter(|&b| b != 0.0).collect();
    let mut r = 1e-3;
    while r <= 1e3 {
        ys.push(r);
        ys.push(-r);
        r *= 1.1;
    }
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    ys
}

#[derive(Clone, Debug)]
pub enum Evaluator {
    Bv,
    General {
        f: BoundaryFunction,
        mesh: Vec<f64>,
        max_angle: Option<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableTrace {
    pub z: Complex64,
    pub times: Vec<f64>,
    pub eta: Vec<f64>,
    /// `C_t(z)` from the conformal radius.
    pub c: Vec<f64>,
    /// `C_t(z)` from trapezoid integration of `4 Im(f)²/|f|⁴`.
    pub c_ode: Vec<f64>,
    pub u: Vec<f64>,
    pub swallow_time: Option<f64>,
}

impl ObservableTrace {
    pub fn max_c(&self) -> f64 {
        *self.c.last().unwrap()
    }
}

/// Where and how long to observe.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObserveOptions {
    pub horizon: f64,
    /// Stop once `C` passes this value.
    pub stop_at_c: Option<f64>,
    /// Maximum growth of `C` between recorded samples (see
    /// [`Trackers::resolving`](crate::driver::Trackers::resolving)); without
    /// it samples are taken on the capacity grid only.
    pub resolve_c: Option<f64>,
}

impl ObserveOptions {
    pub fn grid(horizon: f64) -> Self {
        Self {
            horizon,
            stop_at_c: None,
            resolve_c: None,
        }
    }
}

/// Simulates path `index` and evaluates `η`, `C` and `U` at `z` until `z` is
/// swallowed, the horizon is reached, or `C` passes `stop_at_c`.
pub fn observe_path(
    cfg: &SleConfig,
    index: u64,
    z: Complex64,
    eval: &Evaluator,
    opts: &ObserveOptions,
) -> Result<(ObservableTrace, Simulation)> {
    let ObserveOptions {
        horizon,
        stop_at_c,
        resolve_c,
    } = *opts;
    let mesh: Vec<f64> = match eval {
        Evaluator::Bv => Vec::new(),
        Evaluator::General { mesh, .. } => mesh.iter().copied().filter(|&y| y != 0.0).collect(),
    };
    let mut trackers = Trackers::new(&[z], &mesh);
    if let Some(dc) = resolve_c {
        trackers = trackers.resolving(dc);
    }
    let cr0 = (2.0 * z.im).ln();
    let rate = |f: Complex64| 4.0 * f.im * f.im / f.norm_sqr().powi(2);
    let mut tr = ObservableTrace {
        z,
        times: Vec::new(),
        eta: Vec::new(),
        c: Vec::new(),
        c_ode: Vec::new(),
        u: Vec::new(),
        swallow_time: None,
    };
    let mut failure: Option<Error> = None;
    let mut last = (0.0, z);
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(mesh.len());
    let sim = simulate_tracked(cfg, horizon, index, &mut trackers, |s, tk, _| {
        let p = &tk.interior[0];
        if p.swallowed {
            tr.swallow_time = p.swallow_time;
            return false;
        }
        let f = p.g - s.w;
        let eta = match eval {
            Evaluator::Bv => eta_bv(s, p.g),
            Evaluator::General {
                f: bf, max_angle, ..
            } => {
                pairs.clear();
                pairs.extend(
                    mesh.iter()
                        .zip(&tk.boundary)
                        .map(|(&y, &(_, img))| (y, img)),
                );
                eta_general(p.g, s.w, s.zero_minus, s.zero_plus, &pairs, bf, *max_angle)
            }
        };
        let eta = match eta {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e);
                return false;
            }
        };
        let cr = 2.0 * p.g.im / p.log_deriv.exp();
        let first = tr.c.is_empty();
        let c = if first {
            0.0
        } else {
            (cr0 - cr.ln()).max(*tr.c.last().unwrap())
        };
        let c_ode = if first {
            0.0
        } else {
            tr.c_ode.last().unwrap() + 0.5 * (s.t - last.0) * (rate(last.1) + rate(f))
        };
        last = (s.t, f);
        tr.times.push(s.t);
        tr.eta.push(eta);
        tr.c.push(c);
        tr.c_ode.push(c_ode);
        tr.u.push(u_process(eta, f));
        stop_at_c.is_none_or(|cap| c < cap)
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((tr, sim))
}

/// Traces for paths `0..n`, in index order.
pub fn observe_ensemble(
    cfg: &SleConfig,
    n: usize,
    z: Complex64,
    eval: &Evaluator,
    opts: &ObserveOptions,
) -> Result<Vec<ObservableTrace>> {
    par::map_indexed(n, |i| {
        observe_path(cfg, i as u64, z, eval, opts).map(|r| r.0)
    })
    .into_iter()
    .collect()
}

/// `η̃(s) = η(τ(s))` on `s = 0, ds, 2ds, …` up to `min(s_max, max C)`,
/// interpolating linearly in `C`.
pub fn reparam(trace: &ObservableTrace, ds: f64, s_max: f64) -> Result<Vec<f64>> {
    if !(ds > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "radius step must be positive, got {ds}"
        )));
    }
    let top = trace.max_c().min(s_max);
    let n = (top / ds + 1e-9).floor() as usize;
    let mut out = Vec::with_capacity(n + 1);
    for j in 0..=n {
        out.push(eta_at_radius(trace, j as f64 * ds)?);
    }
    Ok(out)
}

/// `η(τ(s))` for a single radius time.
pub fn eta_at_radius(trace: &ObservableTrace, s: f64) -> Result<f64> {
    let c = &trace.c;
    let top = trace.max_c();
    if !(0.0..=top).contains(&s) {
        return Err(Error::OutOfRange {
            query: s,
            low: 0.0,
            high: top,
        });
    }
    let k = c.partition_point(|&v| v < s);
    if k == 0 {
        return Ok(trace.eta[0]);
    }
    let (c0, c1) = (c[k - 1], c[k]);
    if c1 == c0 {
        return Ok(trace.eta[k]);
    }
    let a = (s - c0) / (c1 - c0);
    Ok(trace.eta[k - 1] + a * (trace.eta[k] - trace.eta[k - 1]))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BmThresholds {
    pub min_p: f64,
    pub variance_band: (f64, f64),
    pub max_autocorr: f64,
    pub min_paths: usize,
    /// `η̃` is a Brownian motion stopped on leaving `(-barrier, barrier)`.
    /// Cells starting within `buffer_sds·√ds` of the barrier are skipped, a
    /// decision taken on information at the start of the cell only.
    pub barrier: Option<f64>,
    pub buffer_sds: f64,
}

impl Default for BmThresholds {
    fn default() -> Self {
        Self {
            min_p: 0.01,
            variance_band: (0.9, 1.1),
            max_autocorr: 0.1,
            min_paths: 50,
            barrier: Some(LAMBDA),
            buffer_sds: 5.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BmTestReport {
    pub n_paths: usize,
    pub n_increments: usize,
    pub ks_statistic: f64,
    pub ks_p_value: f64,
    /// Mean square of the normalised increments.
    pub variance_ratio: f64,
    pub mean_increment: f64,
    pub lag1_autocorr: f64,
    pub pass: bool,
}

/// Pools the increments of `η̃` over cells of width `ds` (each trace is a
/// `reparam` output), normalises by `√ds` and tests them against `N(0, 1)`.
/// Lag-1 correlation is taken over adjacent retained cells of the same path.
pub fn bm_test(traces: &[Vec<f64>], ds: f64, th: &BmThresholds) -> Result<BmTestReport> {
    if traces.len() < th.min_paths {
        return Err(Error::InsufficientData(format!(
            "{} paths, need {}",
            traces.len(),
            th.min_paths
        )));
    }
    let scale = ds.sqrt();
    let limit = th
        .barrier
        .map_or(f64::INFINITY, |b| b - th.buffer_sds * scale);
    let mut pooled = Vec::new();
    let mut num = 0.0;
    let mut den = 0.0;
    for tr in traces {
        let mut prev: Option<f64> = None;
        for w in tr.windows(2) {
            if w[0].abs() > limit {
                prev = None;
                continue;
            }
            let x = (w[1] - w[0]) / scale;
            if let Some(p) = prev {
                num += p * x;
                den += p * p;
            }
            pooled.push(x);
            prev = Some(x);
        }
    }
    if pooled.len() < 2 {
        return Err(Error::InsufficientData("no radius-time increments".into()));
    }
    let ks = ks_normal(&pooled, 0.0, 1.0);
    let variance_ratio = pooled.iter().map(|x| x * x).sum::<f64>() / pooled.len() as f64;
    let lag1 = if den > 0.0 { num / den } else { 0.0 };
    let pass = ks.p_value >= th.min_p
        && (th.variance_band.0..=th.variance_band.1).contains(&variance_ratio)
        && lag1.abs() <= th.max_autocorr;
    Ok(BmTestReport {
        n_paths: traces.len(),
        n_increments: pooled.len(),
        ks_statistic: ks.statistic,
        ks_p_value: ks.p_value,
        variance_ratio,
        mean_increment: mean(&pooled),
        lag1_autocorr: lag1,
        pass,
    })
}

/// `|Σ(Δη)² - C_T| / C_T` on the capacity grid.
pub fn qv_consistency(trace: &ObservableTrace) -> f64 {
    let qv: f64 = trace.eta.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    let c = trace.max_c();
    (qv - c).abs() / c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{measure_to_function, MeasurePair};
    use crate::driver::SdeState;

    fn state(pair: &MeasurePair) -> SdeState {
        SdeState::initial(pair).unwrap()
    }

    #[test]
    fn eta_bv_examples() {
        let empty = state(&MeasurePair::empty());
        assert!(eta_bv(&empty, Complex64::i()).unwrap().abs() < 1e-15);
        let z = Complex64::from_polar(1.0, PI / 4.0);
        assert!((eta_bv(&empty, z).unwrap() - PI / 4.0).abs() < 1e-15);
        let atom = state(&MeasurePair::atomic(&[], &[(1.0, 1.0)]).unwrap());
        assert!((eta_bv(&atom, Complex64::i()).unwrap() - PI / 8.0).abs() < 1e-15);
        assert!(eta_bv(&empty, Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn u_examples() {
        assert!((u_process(0.0, Complex64::i()) - LAMBDA).abs() < 1e-15);
        let z = Complex64::from_polar(1.0, PI / 4.0);
        assert!((u_process(PI / 4.0, z) - LAMBDA).abs() < 1e-15);
    }

    #[test]
    fn general_matches_bv_at_time_zero() {
        let pair =
            MeasurePair::atomic(&[(-2.0, 0.25), (-0.5, -0.5)], &[(0.0, -0.5), (1.0, 1.0)]).unwrap();
        let f = measure_to_function(&pair);
        let mesh: Vec<(f64, f64)> = default_mesh(&f).into_iter().map(|y| (y, y)).collect();
        let s = state(&pair);
        for z in [
            Complex64::i(),
            Complex64::new(0.3, 0.2),
            Complex64::new(-4.0, 1.5),
        ] {
            let a = eta_bv(&s, z).unwrap();
            let b = eta_general(z, 0.0, 0.0, 0.0, &mesh, &f, Some(0.1)).unwrap();
            assert!((a - b).abs() < 1e-12, "{z}: {a} vs {b}");
            let weights = general_weights(0.0, 0.0, 0.0, &mesh, &f, z);
            assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_data_on_imaginary_axis() {
        // F ≡ 0 off the origin: symmetric ∓λ segments vanish on the axis too
        let f: BoundaryFunction = crate::boundary::PiecewiseConstant::new(vec![], vec![0.0])
            .unwrap()
            .into();
        let mesh: Vec<(f64, f64)> = default_mesh(&f).into_iter().map(|y| (y, y)).collect();
        let eta = eta_general(Complex64::new(0.0, 2.0), 0.0, 0.0, 0.0, &mesh, &f, None).unwrap();
        assert!(eta.abs() < 1e-12);
    }

    #[test]
    fn coarse_mesh_rejected() {
        let f = BoundaryFunction::half_tanh();
        let mesh = vec![(-1.0, -1.0), (1.0, 1.0)];
        let r = eta_general(
            Complex64::new(0.5, 0.1),
            0.0,
            0.0,
            0.0,
            &mesh,
            &f,
            Some(0.2),
        );
        assert!(matches!(r, Err(Error::MeshTooCoarse { .. })));
    }

    fn synthetic(n: usize, cells: usize, ds: f64, drift: f64, seed: u64) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                let mut rng = crate::rng::path_rng(seed, i as u64);
                let mut x = 0.0;
                let mut v = vec![0.0];
                for _ in 0..cells {
                    x += drift * ds + ds.sqrt() * crate::rng::normal(&mut rng);
                    v.push(x);
                }
                v
            })
            .collect()
    }

    #[test]
    fn bm_test_calibration_and_power() {
        let th = BmThresholds {
            barrier: None,
            ..Default::default()
        };
        let ok = bm_test(&synthetic(200, 200, 0.005, 0.0, 1), 0.005, &th).unwrap();
        assert!(ok.pass, "{ok:?}");
        let drifted = bm_test(&synthetic(200, 200, 0.005, 0.5, 1), 0.005, &th).unwrap();
        assert!(!drifted.pass, "{drifted:?}");
        assert!(bm_test(&synthetic(10, 20, 0.005, 0.0, 1), 0.005, &th).is_err());
    }

    #[test]
    fn reparam_slit_oracle() {
        // W ≡ 0 via κ → 0 is not available, so build the trace by hand
        let dt = 1e-4;
        let d = crate::loewner::DrivingPath::zero(dt, 2400);
        let rc = crate::loewner::radius_clock(&d, Complex64::i());
        let tr = ObservableTrace {
            z: Complex64::i(),
            times: rc.times.clone(),
            eta: rc.times.clone(),
            c: rc.c.clone(),
            c_ode: rc.c_ode.clone(),
            u: vec![0.0; rc.c.len()],
            swallow_time: None,
        };
        // η := t, so η̃(s) is τ(s) = (1 - e^{-s})/4
        let ds = 0.05;
        for (j, v) in reparam(&tr, ds, 1.0).unwrap().iter().enumerate() {
            let s = j as f64 * ds;
            assert!((v - (1.0 - (-s).exp()) / 4.0).abs() < 1e-6);
        }
        let constant = ObservableTrace {
            eta: vec![0.3; rc.c.len()],
            ..tr
        };
        assert!(reparam(&constant, ds, 1.0)
            .unwrap()
            .iter()
            .all(|&v| v == 0.3));
        assert!(eta_at_radius(&constant, 100.0).is_err());
    }
}
