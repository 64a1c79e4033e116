//! Driving process with atomic force points:
//!
//! ```text
//! dW = √κ dB + Σ ρᵢ / (W - Vᵢ) dt,      dVᵢ = 2 / (Vᵢ - W) dt
//! ```
//!
//! `W` takes Euler steps with an adaptive size that shrinks near force points;
//! force points are carried by the exact slit map of each step. Points that
//! come within `eps_coll` of `W` are "in contact": their drift is switched off
//! and they are pushed off `W` by the slit map alone. A step of `W` past a
//! force point is reflected about it. A contact set whose mass reaches `-2`
//! ends the run.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary::{quantize_pair, AdmissibilityMargin, MeasurePair, Side};
use crate::loewner::{step_boundary, DrivingPath, ForceTrajectory, SlitStep, TrackedPoint};
use crate::rng::{bridge_rng, normal, path_rng, PathRng};
use crate::{par, Error, Result};

pub const THRESHOLD_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SleConfig {
    pub kappa: f64,
    pub pair: MeasurePair,
    pub margin: Option<AdmissibilityMargin>,
    pub dt: f64,
    pub eps_coll: f64,
    pub seed: u64,
    /// Atoms per side used when `pair` carries density.
    pub quantize: usize,
}

impl SleConfig {
    pub fn new(pair: MeasurePair, dt: f64, seed: u64) -> Self {
        Self {
            kappa: 4.0,
            pair,
            margin: None,
            dt,
            eps_coll: 1e-6,
            seed,
            quantize: 64,
        }
    }

    pub fn with_margin(mut self, m: AdmissibilityMargin) -> Self {
        self.margin = Some(m);
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0) || !(self.dt > 0.0) || !(self.eps_coll > 0.0) || self.quantize == 0 {
            return Err(Error::InvalidConfig(format!(
                "need kappa, dt, eps_coll > 0 and quantize ≥ 1 (kappa={}, dt={}, eps_coll={}, quantize={})",
                self.kappa, self.dt, self.eps_coll, self.quantize
            )));
        }
        Ok(())
    }

    /// The atomic pair actually simulated.
    pub fn atomic_pair(&self) -> Result<MeasurePair> {
        if self.pair.is_atomic() {
            Ok(self.pair.clone())
        } else {
            quantize_pair(&self.pair, self.quantize)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForcePoint {
    pub side: Side,
    pub x0: f64,
    pub mass: f64,
    pub v: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdeState {
    pub t: f64,
    pub w: f64,
    /// Accumulated Brownian value.
    pub b: f64,
    /// Left points (ascending), then right points (ascending).
    pub points: Vec<ForcePoint>,
    /// Images of `0⁻` and `0⁺` (massless trackers).
    pub zero_minus: f64,
    pub zero_plus: f64,
}

impl SdeState {
    pub fn initial(pair: &MeasurePair) -> Result<Self> {
        if !pair.is_atomic() {
            return Err(Error::InvalidMeasure(
                "simulation needs an atomic pair".into(),
            ));
        }
        let mut points: Vec<ForcePoint> = pair
            .left()
            .atoms()
            .iter()
            .map(|a| ForcePoint {
                side: Side::Negative,
                x0: a.location,
                mass: a.mass,
                v: a.location,
            })
            .collect();
        points.extend(pair.right().atoms().iter().map(|a| ForcePoint {
            side: Side::Positive,
            x0: a.location,
            mass: a.mass,
            v: a.location,
        }));
        Ok(Self {
            t: 0.0,
            w: 0.0,
            b: 0.0,
            points,
            zero_minus: 0.0,
            zero_plus: 0.0,
        })
    }

    pub fn vl(&self) -> impl Iterator<Item = f64> + '_ {
        self.points
            .iter()
            .filter(|p| p.side == Side::Negative)
            .map(|p| p.v)
    }

    pub fn vr(&self) -> impl Iterator<Item = f64> + '_ {
        self.points
            .iter()
            .filter(|p| p.side == Side::Positive)
            .map(|p| p.v)
    }

    fn in_contact(&self, p: &ForcePoint, eps: f64) -> bool {
        (p.v - self.w).abs() < eps
    }

    /// Total mass of the points in contact with `W` on each side.
    pub fn contact_mass(&self, eps: f64) -> (f64, f64) {
        let mut l = 0.0;
        let mut r = 0.0;
        for p in &self.points {
            if self.in_contact(p, eps) {
                match p.side {
                    Side::Negative => l += p.mass,
                    Side::Positive => r += p.mass,
                }
            }
        }
        (l, r)
    }
}

/// `Σ ρᵢ/(W - Vᵢ)` over points not in contact. Errors if a point is in
/// contact, so callers that want contact handling use [`advance`].
pub fn drift(s: &SdeState, eps_coll: f64) -> Result<f64> {
    let mut d = 0.0;
    for p in &s.points {
        if s.in_contact(p, eps_coll) {
            return Err(Error::Degenerate(format!(
                "force point at {} is in contact with W",
                p.v
            )));
        }
        d += p.mass / (s.w - p.v);
    }
    Ok(d)
}

fn free_drift(s: &SdeState, eps: f64) -> (f64, f64) {
    let mut d = 0.0;
    let mut gap = f64::INFINITY;
    for p in &s.points {
        if s.in_contact(p, eps) {
            continue;
        }
        d += p.mass / (s.w - p.v);
        gap = gap.min((p.v - s.w).abs());
    }
    // the images of 0± bound every force point; they set the step scale even
    // when they carry no mass
    for z in [s.zero_minus, s.zero_plus] {
        let g = (z - s.w).abs();
        if g >= eps {
            gap = gap.min(g);
        }
    }
    (d, gap)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEvent {
    pub time: f64,
    pub side: Side,
    pub mass: f64,
}

fn threshold(s: &SdeState, eps: f64) -> Option<ThresholdEvent> {
    let (l, r) = s.contact_mass(eps);
    let limit = -2.0 + THRESHOLD_TOL;
    if l <= limit {
        Some(ThresholdEvent {
            time: s.t,
            side: Side::Negative,
            mass: l,
        })
    } else if r <= limit {
        Some(ThresholdEvent {
            time: s.t,
            side: Side::Positive,
            mass: r,
        })
    } else {
        None
    }
}

/// Adaptive step size for the current state.
pub fn step_size(s: &SdeState, kappa: f64, dt: f64, eps: f64) -> f64 {
    let (d, gap) = free_drift(s, eps);
    if gap.is_finite() {
        dt.min((gap / 4.0).powi(2) / kappa)
            .min(gap / (4.0 * d.abs() + 1.0))
    } else {
        dt
    }
}

/// One substep of length at most `max_step` driven by the standard normal
/// `xi`. Returns the slit step that was applied (driving value at the start
/// of the substep and its length).
pub fn advance(s: &mut SdeState, kappa: f64, eps: f64, max_step: f64, xi: f64) -> SlitStep {
    let (d, _) = free_drift(s, eps);
    let delta = step_size(s, kappa, max_step, eps);
    let step = SlitStep { w: s.w, dt: delta };
    let db = delta.sqrt() * xi;
    let mut w = s.w + kappa.sqrt() * db + d * delta;
    for p in &mut s.points {
        p.v = step_boundary(step, p.v, p.side);
    }
    s.zero_minus = step_boundary(step, s.zero_minus, Side::Negative);
    s.zero_plus = step_boundary(step, s.zero_plus, Side::Positive);

    let lo = s.zero_minus;
    let hi = s.zero_plus;
    // reflect an overshoot about the point that was crossed, repeatedly if it
    // exceeds the whole gap (only likely on the first step, where W = 0±)
    let width = hi - lo;
    if width > 0.0 && (w > hi || w < lo) {
        let u = (w - lo).rem_euclid(2.0 * width);
        w = lo + if u > width { 2.0 * width - u } else { u };
    }
    w = w.clamp(lo, hi);

    s.w = w;
    s.b += db;
    s.t += delta;
    step
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesselMonitor {
    /// `min_k Z_k` over grid indices `k ≥ 1`, `Z = V(0⁺) - W`.
    pub z_min: f64,
    /// Whether `0⁺` came into contact with `W` after the start.
    pub hit_zero: bool,
    /// Whether the configuration is in the regime the comparison covers.
    pub active: bool,
}

/// Configurations where the gap dominates a Bessel process of dimension at
/// least 3: every outward partial sum on the right is ≥ 0 and every one on
/// the left is ≤ 0, so no force point pulls `W` towards `0⁺`.
pub fn bessel_regime(pair: &MeasurePair) -> bool {
    let mut acc = 0.0;
    let right_ok = pair.right().atoms_outward().iter().all(|a| {
        acc += a.mass;
        acc >= 0.0
    });
    let mut acc = 0.0;
    let left_ok = pair.left().atoms_outward().iter().all(|a| {
        acc += a.mass;
        acc <= 0.0
    });
    right_ok && left_ok
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    pub path: DrivingPath,
    pub events: Vec<ThresholdEvent>,
    pub monitor: BesselMonitor,
    /// Images of `0⁻` and `0⁺` on the grid.
    pub zero_minus: Vec<f64>,
    pub zero_plus: Vec<f64>,
    /// Driving Brownian motion `B` on the grid (`W = √κ B + drift + reflection`).
    pub brownian: Vec<f64>,
    /// Internal substeps taken.
    pub substeps: usize,
}

impl Simulation {
    pub fn stopped(&self) -> bool {
        !self.events.is_empty()
    }
}

/// Simulates path number `index` of the ensemble keyed by `cfg.seed`.
pub fn simulate_indexed(cfg: &SleConfig, horizon: f64, index: u64) -> Result<Simulation> {
    simulate_tracked(cfg, horizon, index, &mut Trackers::default(), |_, _, _| {
        true
    })
}

pub fn simulate(cfg: &SleConfig, horizon: f64) -> Result<Simulation> {
    simulate_indexed(cfg, horizon, 0)
}

/// `n` independent paths, ordered by index.
pub fn simulate_ensemble(cfg: &SleConfig, horizon: f64, n: usize) -> Result<Vec<Simulation>> {
    par::map_indexed(n, |i| simulate_indexed(cfg, horizon, i as u64))
        .into_iter()
        .collect()
}

/// Extra points carried through every internal substep of a simulation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trackers {
    pub interior: Vec<TrackedPoint>,
    /// Boundary points: side and current image.
    pub boundary: Vec<(Side, f64)>,
    /// When set, substeps are shortened so that `C_t(z)` of every live
    /// interior point grows by at most this much per substep, and the
    /// observer also sees every substep.
    pub resolve_c: Option<f64>,
}

impl Trackers {
    pub fn new(interior: &[Complex64], boundary: &[f64]) -> Self {
        Self {
            interior: interior.iter().map(|&z| TrackedPoint::new(z)).collect(),
            boundary: boundary
                .iter()
                .map(|&x| {
                    (
                        if x < 0.0 {
                            Side::Negative
                        } else {
                            Side::Positive
                        },
                        x,
                    )
                })
                .collect(),
            resolve_c: None,
        }
    }

    pub fn resolving(mut self, dc: f64) -> Self {
        self.resolve_c = Some(dc);
        self
    }

    /// Longest substep allowed by `resolve_c` (`dC/dt ≤ 4/|f|²`).
    fn step_cap(&self, w: f64) -> f64 {
        let Some(dc) = self.resolve_c else {
            return f64::INFINITY;
        };
        self.interior
            .iter()
            .filter(|p| !p.swallowed)
            .map(|p| 0.25 * dc * (p.g - w).norm_sqr())
            .fold(f64::INFINITY, f64::min)
    }

    fn apply(&mut self, step: SlitStep, t_end: f64) {
        for p in &mut self.interior {
            p.advance(step, t_end);
        }
        for (side, x) in &mut self.boundary {
            *x = step_boundary(step, *x, *side);
        }
    }
}

/// Like [`simulate_indexed`], additionally flowing `trackers` through the
/// same substeps. `observe(state, trackers, on_grid)` is called at every grid
/// time (starting with 0) and, with `resolve_c` set, after every substep;
/// returning `false` ends the run early.
pub fn simulate_tracked(
    cfg: &SleConfig,
    horizon: f64,
    index: u64,
    trackers: &mut Trackers,
    observe: impl FnMut(&SdeState, &Trackers, bool) -> bool,
) -> Result<Simulation> {
    cfg.validate()?;
    if !(horizon > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let pair = cfg.atomic_pair()?;
    let mut rng = path_rng(cfg.seed, index);
    let mut bridge = bridge_rng(cfg.seed, index);
    run(
        cfg,
        &pair,
        horizon,
        &mut rng,
        &mut bridge,
        trackers,
        observe,
    )
}

fn run(
    cfg: &SleConfig,
    pair: &MeasurePair,
    horizon: f64,
    rng: &mut PathRng,
    bridge: &mut PathRng,
    trackers: &mut Trackers,
    mut observe: impl FnMut(&SdeState, &Trackers, bool) -> bool,
) -> Result<Simulation> {
    let n = (horizon / cfg.dt).round().max(1.0) as usize;
    let mut s = SdeState::initial(pair)?;
    let eps = cfg.eps_coll;
    let mut w = Vec::with_capacity(n + 1);
    let mut traj: Vec<Vec<f64>> = vec![Vec::with_capacity(n + 1); s.points.len()];
    let mut zm = Vec::with_capacity(n + 1);
    let mut zp = Vec::with_capacity(n + 1);
    let mut bs = Vec::with_capacity(n + 1);
    let record = |s: &SdeState,
                  w: &mut Vec<f64>,
                  traj: &mut Vec<Vec<f64>>,
                  zm: &mut Vec<f64>,
                  zp: &mut Vec<f64>,
                  bs: &mut Vec<f64>| {
        w.push(s.w);
        bs.push(s.b);
        for (t, p) in traj.iter_mut().zip(&s.points) {
            t.push(p.v);
        }
        zm.push(s.zero_minus);
        zp.push(s.zero_plus);
    };
    record(&s, &mut w, &mut traj, &mut zm, &mut zp, &mut bs);
    let mut go_on = observe(&s, trackers, true);

    let mut events = Vec::new();
    let mut z_min = f64::INFINITY;
    let mut hit_zero = false;
    let mut substeps = 0;
    'grid: for k in 0..n {
        if !go_on {
            break;
        }
        let t_end = (k + 1) as f64 * cfg.dt;
        // one normal per grid step; substeps bridge between its endpoints
        let mut rest_b = (t_end - s.t).sqrt() * normal(rng);
        loop {
            if let Some(e) = threshold(&s, eps) {
                events.push(e);
                break 'grid;
            }
            let remaining = t_end - s.t;
            if remaining <= 1e-12 * cfg.dt {
                break;
            }
            let cap = remaining.min(trackers.step_cap(s.w));
            let delta = step_size(&s, cfg.kappa, cap, eps);
            let db = if delta >= remaining * (1.0 - 1e-12) {
                rest_b
            } else {
                let f = delta / remaining;
                f * rest_b + (delta * (1.0 - f)).sqrt() * normal(bridge)
            };
            rest_b -= db;
            let step = advance(&mut s, cfg.kappa, eps, delta, db / delta.sqrt());
            trackers.apply(step, s.t);
            substeps += 1;
            if trackers.resolve_c.is_some()
                && t_end - s.t > 1e-12 * cfg.dt
                && !observe(&s, trackers, false)
            {
                break 'grid;
            }
            if s.zero_plus - s.w < eps {
                hit_zero = true;
            }
        }
        s.t = t_end;
        record(&s, &mut w, &mut traj, &mut zm, &mut zp, &mut bs);
        z_min = z_min.min(s.zero_plus - s.w);
        if go_on {
            go_on = observe(&s, trackers, true);
        }
    }

    let force = s
        .points
        .iter()
        .zip(traj)
        .map(|(p, v)| ForceTrajectory {
            side: p.side,
            x0: p.x0,
            mass: p.mass,
            v,
        })
        .collect();
    Ok(Simulation {
        path: DrivingPath {
            dt: cfg.dt,
            w,
            force,
        },
        events,
        monitor: BesselMonitor {
            z_min,
            hit_zero,
            active: bessel_regime(pair),
        },
        zero_minus: zm,
        zero_plus: zp,
        brownian: bs,
        substeps,
    })
}

/// `max |V_t - x - ∫₀ᵗ 2ds/(V - W)|` over force points and grid times, with
/// the integral by trapezoid on the grid. Each point is followed only until
/// it first comes within `4√dt` of `W`.
pub fn integral_residual(d: &DrivingPath) -> f64 {
    let floor = 4.0 * d.dt.sqrt();
    let mut worst: f64 = 0.0;
    for f in &d.force {
        let mut integral = 0.0;
        let rate = |k: usize| 2.0 / (f.v[k] - d.w[k]);
        if (f.v[0] - d.w[0]).abs() < floor {
            continue;
        }
        for k in 1..f.v.len() {
            if (f.v[k] - d.w[k]).abs() < floor {
                break;
            }
            integral += 0.5 * d.dt * (rate(k - 1) + rate(k));
            worst = worst.max((f.v[k] - f.x0 - integral).abs());
        }
    }
    worst
}

/// Fraction of grid times at which some force point sits within `tol` of `W`.
pub fn contact_fraction(d: &DrivingPath, tol: f64) -> f64 {
    if d.w.len() < 2 {
        return 0.0;
    }
    let hits = (1..d.w.len())
        .filter(|&k| d.force.iter().any(|f| (f.v[k] - d.w[k]).abs() < tol))
        .count();
    hits as f64 / (d.w.len() - 1) as f64
}

/// `Σ (ΔW)²` over the grid.
pub fn quadratic_variation(d: &DrivingPath) -> f64 {
    d.w.windows(2).map(|p| (p[1] - p[0]).powi(2)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state_with(w: f64, pts: &[(Side, f64, f64)]) -> SdeState {
        SdeState {
            t: 0.0,
            w,
            b: 0.0,
            points: pts
                .iter()
                .map(|&(side, v, mass)| ForcePoint {
                    side,
                    x0: v,
                    mass,
                    v,
                })
                .collect(),
            zero_minus: w,
            zero_plus: w,
        }
    }

    #[test]
    fn drift_examples() {
        assert_eq!(drift(&state_with(0.0, &[]), 1e-6).unwrap(), 0.0);
        assert_eq!(
            drift(&state_with(0.0, &[(Side::Positive, 1.0, 1.0)]), 1e-6).unwrap(),
            -1.0
        );
        let s = state_with(
            0.0,
            &[(Side::Negative, -0.7, 0.3), (Side::Positive, 0.7, 0.3)],
        );
        assert_eq!(drift(&s, 1e-6).unwrap(), 0.0);
        assert!(drift(&state_with(0.0, &[(Side::Positive, 0.0, 1.0)]), 1e-6).is_err());
    }

    #[test]
    fn empty_pair_increments_are_scaled_noise() {
        let mut s = SdeState::initial(&MeasurePair::empty()).unwrap();
        let step = advance(&mut s, 4.0, 1e-6, 1e-4, 0.37);
        assert_eq!(step.dt, 1e-4);
        assert!((s.w - 2.0 * 0.37 * 1e-2).abs() < 1e-15);
    }

    #[test]
    fn deterministic_given_seed() {
        let pair = MeasurePair::atomic(&[(-1.0, 0.5)], &[(0.0, -0.5), (2.0, 1.0)]).unwrap();
        let cfg = SleConfig::new(pair, 1e-3, 11);
        let a = simulate(&cfg, 0.5).unwrap();
        let b = simulate(&cfg, 0.5).unwrap();
        assert_eq!(a, b);
        assert!(a.path.ordering_holds());
        assert_ne!(simulate_indexed(&cfg, 0.5, 1).unwrap().path.w, a.path.w);
    }

    #[test]
    fn comparison_config_never_stops() {
        // ρᴿ = -1.5 at 0⁺
        let pair = MeasurePair::atomic(&[], &[(0.0, -1.5)]).unwrap();
        let cfg = SleConfig::new(pair, 1e-3, 5);
        for sim in simulate_ensemble(&cfg, 0.5, 20).unwrap() {
            assert!(sim.events.is_empty());
            assert!(sim.path.ordering_holds());
        }
    }

    #[test]
    fn immediate_threshold_for_heavy_atom_at_origin() {
        let pair = MeasurePair::atomic(&[], &[(0.0, -2.0)]).unwrap();
        let sim = simulate(&SleConfig::new(pair, 1e-3, 1), 0.1).unwrap();
        assert_eq!(sim.events.len(), 1);
        assert_eq!(sim.events[0].time, 0.0);
        assert_eq!(sim.path.w.len(), 1);
    }

    #[test]
    fn far_force_point_residual_small() {
        let dt = 1e-3;
        let pair = MeasurePair::atomic(&[], &[(10.0, 1.0)]).unwrap();
        let sim = simulate(&SleConfig::new(pair, dt, 3), 0.1).unwrap();
        let r = integral_residual(&sim.path);
        assert!(r <= 10.0 * dt, "residual {r}");
        assert_eq!(integral_residual(&DrivingPath::zero(dt, 10)), 0.0);
    }

    #[test]
    fn bessel_regime_classification() {
        assert!(bessel_regime(
            &MeasurePair::atomic(&[], &[(0.0, 2.0)]).unwrap()
        ));
        assert!(!bessel_regime(
            &MeasurePair::atomic(&[], &[(0.0, -1.5)]).unwrap()
        ));
        assert!(bessel_regime(&MeasurePair::empty()));
    }
}
