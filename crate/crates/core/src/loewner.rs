//! Chordal Loewner zipper. Driving functions are piecewise constant on a
//! uniform capacity grid; over one step with constant driving `w` and
//! duration `dt` the Loewner flow is the exact vertical-slit map
//! `z ↦ w + sqrt((z - w)² + 4dt)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary::Side;
use crate::{Error, Result};

/// Points with `Im g` below this are treated as swallowed.
pub const SWALLOW_IM: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForceTrajectory {
    pub side: Side,
    /// Starting location on ℝ.
    pub x0: f64,
    pub mass: f64,
    /// Image `V_k` on the driving grid.
    pub v: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrivingPath {
    pub dt: f64,
    /// `W_k = W(k·dt)`, `W_0 = 0`.
    pub w: Vec<f64>,
    pub force: Vec<ForceTrajectory>,
}

impl DrivingPath {
    pub fn new(dt: f64, w: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "dt must be positive, got {dt}"
            )));
        }
        if w.first() != Some(&0.0) {
            return Err(Error::InvalidConfig("driving path must start at 0".into()));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "driving path has non-finite values".into(),
            ));
        }
        Ok(Self {
            dt,
            w,
            force: Vec::new(),
        })
    }

    /// `W ≡ 0` on `[0, n·dt]`.
    pub fn zero(dt: f64, n: usize) -> Self {
        Self {
            dt,
            w: vec![0.0; n + 1],
            force: Vec::new(),
        }
    }

    pub fn from_fn(dt: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(dt, (0..=n).map(|k| f(k as f64 * dt)).collect())
    }

    /// Number of steps.
    pub fn steps(&self) -> usize {
        self.w.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.steps() as f64 * self.dt
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn step(&self, k: usize) -> SlitStep {
        SlitStep {
            w: self.w[k],
            dt: self.dt,
        }
    }

    /// Grid index for a time on the grid (rounded).
    pub fn index_of(&self, t: f64) -> usize {
        ((t / self.dt).round() as usize).min(self.steps())
    }

    /// Checks `max Vᴸ ≤ W ≤ min Vᴿ` at every index.
    pub fn ordering_holds(&self) -> bool {
        (0..self.w.len()).all(|k| {
            self.force.iter().all(|f| match f.side {
                Side::Negative => f.v[k] <= self.w[k],
                Side::Positive => f.v[k] >= self.w[k],
            })
        })
    }

    /// Keeps only the first `n + 1` samples.
    pub fn truncated(&self, n: usize) -> Self {
        let keep = (n + 1).min(self.w.len());
        Self {
            dt: self.dt,
            w: self.w[..keep].to_vec(),
            force: self
                .force
                .iter()
                .map(|f| ForceTrajectory {
                    v: f.v[..keep].to_vec(),
                    ..f.clone()
                })
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlitStep {
    pub w: f64,
    pub dt: f64,
}

/// Square root of `v` on the branch with `Im ≥ 0`; on the real axis the sign
/// follows `sign_hint`.
fn sqrt_upper(v: Complex64, sign_hint: f64) -> Complex64 {
    let mut s = v.sqrt();
    if s.im < 0.0 || (s.im == 0.0 && s.re * sign_hint < 0.0) {
        s = -s;
    }
    s
}

/// One forward slit step. Errors when the point is absorbed into the slit.
pub fn step_map(s: SlitStep, z: Complex64) -> Result<Complex64> {
    let u = z - s.w;
    let v = u * u + 4.0 * s.dt;
    if u.im > 0.0 && u.re == 0.0 && u.im * u.im <= 4.0 * s.dt {
        return Err(Error::Swallowed { time: s.dt });
    }
    Ok(s.w + sqrt_upper(v, u.re))
}

/// Log-derivative of the slit step at `z`: `(z - w) / sqrt((z - w)² + 4dt)`.
pub fn step_log_derivative(s: SlitStep, z: Complex64) -> f64 {
    let u = z - s.w;
    (u / sqrt_upper(u * u + 4.0 * s.dt, u.re)).norm().ln()
}

/// Inverse slit step: `ζ ↦ w + sqrt((ζ - w)² - 4dt)`.
pub fn inverse_step_map(s: SlitStep, zeta: Complex64) -> Complex64 {
    let u = zeta - s.w;
    s.w + sqrt_upper(u * u - 4.0 * s.dt, u.re)
}

/// Forward slit step for a boundary point on the given side of the driving
/// value. A point on the wrong side (or exactly at `w`) is sent to the slit
/// foot on its own side.
pub fn step_boundary(s: SlitStep, x: f64, side: Side) -> f64 {
    let u = x - s.w;
    let r = (u * u + 4.0 * s.dt).sqrt();
    match side {
        Side::Positive => s.w + if u >= 0.0 { r } else { (4.0 * s.dt).sqrt() },
        Side::Negative => s.w - if u <= 0.0 { r } else { (4.0 * s.dt).sqrt() },
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackedPoint {
    pub z0: Complex64,
    pub g: Complex64,
    /// `log|g′(z0)|`.
    pub log_deriv: f64,
    pub swallowed: bool,
    pub swallow_time: Option<f64>,
}

impl TrackedPoint {
    pub fn new(z0: Complex64) -> Self {
        Self {
            z0,
            g: z0,
            log_deriv: 0.0,
            swallowed: false,
            swallow_time: None,
        }
    }

    /// Advances through one step ending at capacity time `t_end`.
    pub fn advance(&mut self, s: SlitStep, t_end: f64) {
        if self.swallowed {
            return;
        }
        match step_map(s, self.g) {
            Ok(g) if self.z0.im == 0.0 || g.im >= SWALLOW_IM => {
                self.log_deriv += step_log_derivative(s, self.g);
                self.g = g;
            }
            _ => {
                self.swallowed = true;
                self.swallow_time = Some(t_end);
            }
        }
    }
}

/// Flows `z` from grid index `k0` to `k1`.
pub fn flow_range(d: &DrivingPath, mut p: TrackedPoint, k0: usize, k1: usize) -> TrackedPoint {
    for k in k0..k1 {
        p.advance(d.step(k), d.time(k + 1));
    }
    p
}

/// `g_t(z)` and `log|g_t′(z)|` at `t_end` (rounded to the grid).
pub fn forward_flow(d: &DrivingPath, z: Complex64, t_end: f64) -> TrackedPoint {
    flow_range(d, TrackedPoint::new(z), 0, d.index_of(t_end))
}

/// `CR(z, ℍ∖K_t) = 2 Im f / |g′|` with `f = g - w`.
pub fn conformal_radius(p: &TrackedPoint, _w: f64) -> Result<f64> {
    if p.swallowed {
        return Err(Error::Swallowed {
            time: p.swallow_time.unwrap_or(f64::NAN),
        });
    }
    Ok(2.0 * p.g.im / p.log_deriv.exp())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub times: Vec<f64>,
    pub points: Vec<Complex64>,
}

impl CurveSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Curve traversed backwards, with times left as they are.
    pub fn reversed(&self) -> Self {
        Self {
            times: self.times.clone(),
            points: self.points.iter().rev().copied().collect(),
        }
    }

    /// Prefix up to (and including) the first index where `stop` holds.
    pub fn until(&self, stop: impl Fn(Complex64) -> bool) -> Self {
        let end = self
            .points
            .iter()
            .position(|&z| stop(z))
            .map_or(self.len(), |i| i + 1);
        Self {
            times: self.times[..end].to_vec(),
            points: self.points[..end].to_vec(),
        }
    }
}

/// Tip of the curve at every grid time (zipper, `O(n²)`).
pub fn extract_curve(d: &DrivingPath) -> CurveSample {
    extract_curve_strided(d, 1)
}

/// Tip at every `stride`-th grid time (plus the final one); cost
/// `O(n²/stride)`.
pub fn extract_curve_strided(d: &DrivingPath, stride: usize) -> CurveSample {
    let stride = stride.max(1);
    let n = d.steps();
    let mut idx: Vec<usize> = (0..=n).step_by(stride).collect();
    if *idx.last().unwrap() != n {
        idx.push(n);
    }
    let mut times = Vec::with_capacity(idx.len());
    let mut points = Vec::with_capacity(idx.len());
    for &k in &idx {
        times.push(d.time(k));
        points.push(curve_tip(d, k));
    }
    CurveSample { times, points }
}

/// Tip of the curve at grid time `k`, `O(k)`.
pub fn curve_tip(d: &DrivingPath, k: usize) -> Complex64 {
    if k == 0 {
        return Complex64::new(0.0, 0.0);
    }
    // the step ending at k drove with W_{k-1}; its slit tip maps to it
    let mut z = Complex64::new(d.w[k - 1], 0.0);
    for j in (0..k).rev() {
        z = inverse_step_map(d.step(j), z);
    }
    z
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadiusClock {
    pub z: Complex64,
    pub times: Vec<f64>,
    /// `C_k` from the conformal radius directly.
    pub c: Vec<f64>,
    /// `C_k` from trapezoid integration of `4 Im(f)²/|f|⁴`.
    pub c_ode: Vec<f64>,
    /// `f_k = g_k(z) - W_k`.
    pub f: Vec<Complex64>,
    pub swallow_time: Option<f64>,
}

impl RadiusClock {
    pub fn max_c(&self) -> f64 {
        *self.c.last().unwrap()
    }

    /// `τ(s) = inf{t : C_t = s}` by linear interpolation.
    pub fn tau(&self, s: f64) -> Result<f64> {
        let top = self.max_c();
        if !(0.0..=top).contains(&s) {
            return Err(Error::OutOfRange {
                query: s,
                low: 0.0,
                high: top,
            });
        }
        let k = self.c.partition_point(|&c| c < s);
        if k == 0 {
            return Ok(self.times[0]);
        }
        let (c0, c1) = (self.c[k - 1], self.c[k]);
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        if c1 == c0 {
            return Ok(t0);
        }
        Ok(t0 + (s - c0) / (c1 - c0) * (t1 - t0))
    }

    /// Grid index whose time is the last one with `C ≤ s`.
    pub fn index_at_or_before(&self, s: f64) -> usize {
        self.c.partition_point(|&c| c <= s).saturating_sub(1)
    }
}

/// `C_t(z) = log CR(z, ℍ) - log CR(z, ℍ∖K_t)`, stopped at swallowing.
pub fn radius_clock(d: &DrivingPath, z: Complex64) -> RadiusClock {
    let cr0 = (2.0 * z.im).ln();
    let mut p = TrackedPoint::new(z);
    let rate = |f: Complex64| 4.0 * f.im * f.im / f.norm_sqr().powi(2);
    let mut times = vec![0.0];
    let mut c = vec![0.0];
    let mut c_ode = vec![0.0];
    let mut fs = vec![z - d.w[0]];
    for k in 0..d.steps() {
        p.advance(d.step(k), d.time(k + 1));
        if p.swallowed {
            break;
        }
        let f = p.g - d.w[k + 1];
        let cr = conformal_radius(&p, d.w[k + 1]).expect("not swallowed");
        times.push(d.time(k + 1));
        // C is monotone in exact arithmetic; guard against roundoff
        c.push((cr0 - cr.ln()).max(*c.last().unwrap()));
        let prev = *fs.last().unwrap();
        c_ode.push(c_ode.last().unwrap() + 0.5 * d.dt * (rate(prev) + rate(f)));
        fs.push(f);
    }
    RadiusClock {
        z,
        times,
        c,
        c_ode,
        f: fs,
        swallow_time: p.swallow_time,
    }
}

fn phi(z: Complex64) -> Complex64 {
    let i = Complex64::i();
    if !z.is_finite() {
        return Complex64::new(1.0, 0.0);
    }
    (z - i) / (z + i)
}

/// Hausdorff distance between the images of two point sets under
/// `φ(z) = (z - i)/(z + i)`. Non-finite points stand for `∞`.
pub fn dstar_distance(a: &CurveSample, b: &CurveSample) -> f64 {
    dstar_points(&a.points, &b.points)
}

pub fn dstar_points(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return if a.is_empty() && b.is_empty() {
            0.0
        } else {
            f64::INFINITY
        };
    }
    let pa: Vec<Complex64> = a.iter().map(|&z| phi(z)).collect();
    let pb: Vec<Complex64> = b.iter().map(|&z| phi(z)).collect();
    let directed = |x: &[Complex64], y: &[Complex64]| {
        x.iter()
            .map(|p| {
                y.iter()
                    .map(|q| (p - q).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    directed(&pa, &pb).max(directed(&pb, &pa))
}

/// `d_*`-diameter of a point set.
pub fn dstar_diameter(a: &[Complex64]) -> f64 {
    let p: Vec<Complex64> = a.iter().map(|&z| phi(z)).collect();
    let mut best: f64 = 0.0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            best = best.max((p[i] - p[j]).norm());
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HcapReport {
    /// `max_k |t_k - hcap_k/2| / t_k`.
    pub max_relative_error: f64,
    /// Capacity times recovered by re-driving the polyline.
    pub recovered: Vec<f64>,
}

/// Driving function of a polyline by the zipper with vertical slits: each new
/// point is mapped by the slits so far and its image `w` adds the slit
/// `ξ = Re w`, `Δt = (Im w)²/4`. Returns capacity times and driving values,
/// one per point, starting from `(0, Re points[0])`.
pub fn weld(points: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    let n = points.len();
    let mut times = Vec::with_capacity(n);
    let mut drive = Vec::with_capacity(n);
    let Some(first) = points.first() else {
        return (times, drive);
    };
    times.push(0.0);
    drive.push(first.re);
    let mut steps: Vec<SlitStep> = Vec::with_capacity(n);
    let mut total = 0.0;
    for p in &points[1..] {
        let mut z = *p;
        for s in &steps {
            z = step_map(*s, z).unwrap_or(Complex64::new(s.w, 0.0));
        }
        let s = SlitStep {
            w: z.re,
            dt: z.im.max(0.0).powi(2) / 4.0,
        };
        total += s.dt;
        steps.push(s);
        times.push(total);
        drive.push(z.re);
    }
    (times, drive)
}

/// Re-drives the sampled curve with vertical slits (see [`weld`]) and
/// compares the accumulated capacity with the sample times.
pub fn hcap_check(c: &CurveSample) -> HcapReport {
    let (recovered, _) = weld(&c.points);
    let worst = c
        .times
        .iter()
        .zip(&recovered)
        .filter(|(t, _)| **t > 0.0)
        .map(|(t, r)| (r - t).abs() / t)
        .fold(0.0, f64::max);
    HcapReport {
        max_relative_error: worst,
        recovered,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn slit_map_examples() {
        let t = 0.2;
        let g = step_map(SlitStep { w: 0.0, dt: t }, c(0.0, 1.0)).unwrap();
        assert!((g - c(0.0, (1.0 - 4.0 * t).sqrt())).norm() < 1e-15);
        let g = step_map(SlitStep { w: 0.0, dt: 0.3 }, c(2.0, 0.0)).unwrap();
        assert_eq!(g, c((4.0f64 + 1.2).sqrt(), 0.0));
        assert!(step_map(SlitStep { w: 0.0, dt: 0.25 }, c(0.0, 1.0)).is_err());
        // negative reals stay negative
        let g = step_map(SlitStep { w: 0.0, dt: 0.3 }, c(-2.0, 0.0)).unwrap();
        assert!(g.re < -2.0 && g.im == 0.0);
    }

    #[test]
    fn inverse_undoes_forward() {
        let s = SlitStep { w: 0.3, dt: 0.01 };
        for z in [c(0.1, 0.5), c(-3.0, 0.01), c(4.0, 2.0)] {
            let back = inverse_step_map(s, step_map(s, z).unwrap());
            assert!((back - z).norm() < 1e-12, "{z} -> {back}");
        }
    }

    #[test]
    fn forward_flow_slit() {
        let d = DrivingPath::zero(1e-3, 300);
        let p = forward_flow(&d, c(0.0, 1.0), 0.2);
        assert!((p.g - c(0.0, 0.2f64.sqrt())).norm() < 1e-12);
        assert!((p.log_deriv - (-0.5 * 0.2f64.ln())).abs() < 1e-10);
        let p = forward_flow(&d, c(0.0, 1.0), 0.3);
        assert!(p.swallowed);
        let st = p.swallow_time.unwrap();
        assert!((st - 0.25).abs() <= 1e-3 + 1e-12, "{st}");
        // far points: g ≈ z + 2t/z
        let z = c(50.0, 0.0);
        let p = forward_flow(&d, z, 0.3);
        assert!((p.g - (z + 0.6 / z)).norm() < 1e-5);
    }

    #[test]
    fn conformal_radius_examples() {
        let d = DrivingPath::zero(1e-3, 200);
        assert_eq!(
            conformal_radius(&TrackedPoint::new(c(0.0, 1.0)), 0.0).unwrap(),
            2.0
        );
        assert_eq!(
            conformal_radius(&TrackedPoint::new(c(0.0, 2.0)), 0.0).unwrap(),
            4.0
        );
        let p = forward_flow(&d, c(0.0, 1.0), 0.1);
        assert!((conformal_radius(&p, 0.0).unwrap() - 2.0 * 0.6).abs() < 1e-12);
    }

    #[test]
    fn radius_clock_slit() {
        let dt = 1e-4;
        let d = DrivingPath::zero(dt, 2400);
        let rc = radius_clock(&d, c(0.0, 1.0));
        assert_eq!(rc.c[0], 0.0);
        for k in (0..rc.c.len()).step_by(100) {
            let t = rc.times[k];
            let exact = -(1.0 - 4.0 * t).ln();
            assert!((rc.c[k] - exact).abs() < 1e-10);
            assert!((rc.c_ode[k] - exact).abs() < 10.0 * dt, "t={t}");
        }
        assert!((rc.tau(2f64.ln()).unwrap() - 0.125).abs() < 1e-6);
        assert!(rc.tau(rc.max_c() + 1.0).is_err());
    }

    #[test]
    fn vertical_slit_curve() {
        let d = DrivingPath::zero(1e-3, 500);
        let cs = extract_curve(&d);
        assert_eq!(cs.points[0], c(0.0, 0.0));
        for (t, z) in cs.times.iter().zip(&cs.points) {
            assert!((z - c(0.0, 2.0 * t.sqrt())).norm() < 1e-10);
        }
        let r = hcap_check(&cs);
        assert!(r.max_relative_error < 1e-10);
        assert_eq!(
            hcap_check(&CurveSample {
                times: vec![],
                points: vec![]
            })
            .max_relative_error,
            0.0
        );
    }

    #[test]
    fn strided_curve_matches_full() {
        let d = DrivingPath::from_fn(1e-3, 200, |t| (7.0 * t).sin()).unwrap();
        let full = extract_curve(&d);
        let part = extract_curve_strided(&d, 7);
        for (t, z) in part.times.iter().zip(&part.points) {
            let k = d.index_of(*t);
            assert_eq!(*z, full.points[k]);
        }
        assert_eq!(*part.times.last().unwrap(), d.horizon());
    }

    #[test]
    fn dstar_examples() {
        let a = CurveSample {
            times: vec![0.0],
            points: vec![c(0.0, 1.0)],
        };
        assert_eq!(dstar_distance(&a, &a), 0.0);
        let inf = CurveSample {
            times: vec![0.0],
            points: vec![c(f64::INFINITY, 0.0)],
        };
        assert!((dstar_distance(&a, &inf) - 1.0).abs() < 1e-15);
        let far = CurveSample {
            times: vec![0.0],
            points: vec![c(1e9, 1.0)],
        };
        assert!(dstar_distance(&a, &far) <= 2.0);
    }
}
