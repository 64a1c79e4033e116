//! Quadrilaterals, their conformal modulus, curve crossings, and the
//! ball-hitting estimate for the comparison process.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary::MeasurePair;
use crate::driver::{simulate_tracked, SleConfig, Trackers};
use crate::loewner::{curve_tip, CurveSample, DrivingPath};
use crate::stats::binomial_ci;
use crate::{par, Error, Result, LAMBDA};

const ARC_TOL: f64 = 1e-9;

/// Simple polygon in the closed upper half-plane, counterclockwise, with its
/// boundary split into four arcs. Arc `k` runs from vertex `arcs[k]` to
/// vertex `arcs[k + 1]` (cyclically).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quadrilateral {
    vertices: Vec<Complex64>,
    arcs: [usize; 4],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    Inside,
    Outside,
    /// On the boundary; bit `k` set when the point lies on arc `k`.
    Boundary(u8),
}

impl Quadrilateral {
    pub fn new(vertices: Vec<Complex64>, arcs: [usize; 4]) -> Result<Self> {
        let n = vertices.len();
        if n < 4 {
            return Err(Error::Degenerate(
                "a quadrilateral needs four corners".into(),
            ));
        }
        if arcs.windows(2).any(|w| w[0] >= w[1]) || arcs[3] >= n {
            return Err(Error::Degenerate(format!(
                "arc starts {arcs:?} must increase below {n}"
            )));
        }
        if vertices
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()) || z.im < -ARC_TOL)
        {
            return Err(Error::Degenerate(
                "vertices must lie in the closed upper half-plane".into(),
            ));
        }
        let q = Self { vertices, arcs };
        if q.signed_area() <= 0.0 {
            return Err(Error::Degenerate(
                "polygon must be counterclockwise with positive area".into(),
            ));
        }
        if !q.is_simple() {
            return Err(Error::Degenerate("polygon is not simple".into()));
        }
        Ok(q)
    }

    /// Concatenates four arcs; each arc lists its points from its start up
    /// to, but excluding, the start of the next.
    pub fn from_arcs(sides: [Vec<Complex64>; 4]) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut arcs = [0; 4];
        for (k, s) in sides.into_iter().enumerate() {
            arcs[k] = vertices.len();
            vertices.extend(s);
        }
        Self::new(vertices, arcs)
    }

    /// `[x0, x0 + w] × [y0, y0 + h]` with arc 0 the left side and arc 2 the
    /// right side, so the modulus is `w / h`.
    pub fn rectangle(x0: f64, y0: f64, w: f64, h: f64) -> Result<Self> {
        let c = Complex64::new;
        Self::new(
            vec![c(x0, y0 + h), c(x0, y0), c(x0 + w, y0), c(x0 + w, y0 + h)],
            [0, 1, 2, 3],
        )
    }

    pub fn vertices(&self) -> &[Complex64] {
        &self.vertices
    }

    pub fn arcs(&self) -> [usize; 4] {
        self.arcs
    }

    /// The same polygon with the roles of the arc pairs exchanged; its
    /// modulus is the reciprocal.
    pub fn conjugate(&self) -> Self {
        let a = self.arcs;
        // rotate the vertex list so the new first arc starts at index 0
        let n = self.vertices.len();
        let vertices = (0..n).map(|i| self.vertices[(i + a[1]) % n]).collect();
        let arcs = [0, a[2] - a[1], a[3] - a[1], n - a[1] + a[0]];
        Self { vertices, arcs }
    }

    /// Splits every edge into `k` equal pieces.
    pub fn subdivided(&self, k: usize) -> Self {
        let k = k.max(1);
        let n = self.vertices.len();
        let mut vertices = Vec::with_capacity(n * k);
        for i in 0..n {
            let (a, b) = self.edge(i);
            for s in 0..k {
                vertices.push(a + (b - a) * (s as f64 / k as f64));
            }
        }
        Self {
            vertices,
            arcs: self.arcs.map(|i| i * k),
        }
    }

    /// Image under `f`, vertex by vertex (subdivide first for curved images).
    pub fn mapped(&self, f: impl Fn(Complex64) -> Complex64) -> Result<Self> {
        Self::new(self.vertices.iter().map(|&z| f(z)).collect(), self.arcs)
    }

    pub fn edge(&self, i: usize) -> (Complex64, Complex64) {
        let n = self.vertices.len();
        (self.vertices[i], self.vertices[(i + 1) % n])
    }

    /// Arc containing edge `i`.
    pub fn arc_of_edge(&self, i: usize) -> usize {
        (0..4).rev().find(|&k| i >= self.arcs[k]).unwrap_or(3)
    }

    fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let (a, b) = self.edge(i);
                a.re * b.im - b.re * a.im
            })
            .sum::<f64>()
            / 2.0
    }

    fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        for i in 0..n {
            for j in i + 1..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (a, b) = self.edge(i);
                let (c, d) = self.edge(j);
                if segments_touch(a, b, c, d) {
                    return false;
                }
            }
        }
        true
    }

    pub fn locate(&self, p: Complex64) -> Location {
        let n = self.vertices.len();
        let mut mask = 0u8;
        for i in 0..n {
            let (a, b) = self.edge(i);
            if segment_distance(p, a, b) <= ARC_TOL {
                mask |= 1 << self.arc_of_edge(i);
                // a corner belongs to both arcs it joins
                if (p - a).norm() <= ARC_TOL {
                    mask |= 1 << self.arc_of_edge((i + n - 1) % n);
                }
            }
        }
        if mask != 0 {
            return Location::Boundary(mask);
        }
        // even-odd rule
        let mut inside = false;
        for i in 0..n {
            let (a, b) = self.edge(i);
            if (a.im > p.im) != (b.im > p.im) {
                let x = a.re + (p.im - a.im) / (b.im - a.im) * (b.re - a.re);
                if x > p.re {
                    inside = !inside;
                }
            }
        }
        if inside {
            Location::Inside
        } else {
            Location::Outside
        }
    }

    /// Parameters `t ∈ [0, 1]` where the segment `p → q` meets the boundary,
    /// with the polygon edge met.
    fn hits(&self, p: Complex64, q: Complex64) -> Vec<(f64, usize)> {
        let mut out = Vec::new();
        for i in 0..self.vertices.len() {
            let (a, b) = self.edge(i);
            for t in segment_params(p, q, a, b) {
                out.push((t, i));
            }
        }
        out.sort_by(|x, y| x.0.total_cmp(&y.0));
        out
    }

    /// Length of the part of segment `p → q` strictly inside the polygon.
    fn inside_length(&self, p: Complex64, q: Complex64) -> f64 {
        let mut ts: Vec<f64> = self.hits(p, q).into_iter().map(|h| h.0).collect();
        ts.push(0.0);
        ts.push(1.0);
        ts.sort_by(f64::total_cmp);
        let len = (q - p).norm();
        ts.windows(2)
            .filter(|w| w[1] > w[0])
            .filter(|w| self.locate(p + (q - p) * (0.5 * (w[0] + w[1]))) == Location::Inside)
            .map(|w| (w[1] - w[0]) * len)
            .sum()
    }
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let l2 = d.norm_sqr();
    if l2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * d.conj()).re / l2).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

/// Parameters along `p → q` of its intersections with `a → b` (both ends of
/// the overlap for collinear segments).
fn segment_params(p: Complex64, q: Complex64, a: Complex64, b: Complex64) -> Vec<f64> {
    let r = q - p;
    let s = b - a;
    let denom = cross(r, s);
    let ap = a - p;
    let scale = r.norm() * s.norm();
    if denom.abs() <= 1e-14 * scale {
        if cross(ap, r).abs() > 1e-12 * scale.max(1e-300) {
            return Vec::new();
        }
        // collinear: project the other segment's ends
        let l2 = r.norm_sqr();
        if l2 == 0.0 {
            return Vec::new();
        }
        let t0 = (ap * r.conj()).re / l2;
        let t1 = ((b - p) * r.conj()).re / l2;
        let (lo, hi) = (t0.min(t1).max(0.0), t0.max(t1).min(1.0));
        return if lo <= hi { vec![lo, hi] } else { Vec::new() };
    }
    let t = cross(ap, s) / denom;
    let u = cross(ap, r) / denom;
    let tol = 1e-12;
    if (-tol..=1.0 + tol).contains(&t) && (-tol..=1.0 + tol).contains(&u) {
        vec![t.clamp(0.0, 1.0)]
    } else {
        Vec::new()
    }
}

fn segments_touch(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> bool {
    !segment_params(a, b, c, d).is_empty()
}

/// Conformal modulus by the Dirichlet energy of the potential that is 0 on
/// arc 0, 1 on arc 2 and insulated on arcs 1 and 3: `L = 1 / energy`.
/// Finite volumes on a square grid with `mesh` cells across the longer side
/// of the bounding box; Dirichlet cuts use the Shortley–Weller distance and
/// every edge conductance is scaled by the part of its dual face inside the
/// polygon.
pub fn modulus(q: &Quadrilateral, mesh: usize) -> Result<f64> {
    if mesh < 4 {
        return Err(Error::InvalidConfig(format!("mesh {mesh} is too coarse")));
    }
    let (mut lo, mut hi) = (q.vertices[0], q.vertices[0]);
    for z in &q.vertices {
        lo = Complex64::new(lo.re.min(z.re), lo.im.min(z.im));
        hi = Complex64::new(hi.re.max(z.re), hi.im.max(z.im));
    }
    let h = (hi.re - lo.re).max(hi.im - lo.im) / mesh as f64;
    let nx = ((hi.re - lo.re) / h).ceil() as usize;
    let ny = ((hi.im - lo.im) / h).ceil() as usize;
    let node = |i: usize, j: usize| lo + Complex64::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);

    let mut id = vec![usize::MAX; nx * ny];
    let mut nodes = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            if q.locate(node(i, j)) == Location::Inside {
                id[j * nx + i] = nodes.len();
                nodes.push((i, j));
            }
        }
    }
    if nodes.is_empty() {
        return Err(Error::Degenerate(
            "mesh does not resolve the polygon".into(),
        ));
    }

    // per node: neighbours with conductance, Dirichlet conductance to 0 and to 1
    let rows: Vec<(Vec<(usize, f64)>, f64, f64)> = par::map_indexed(nodes.len(), |k| {
        let (i, j) = nodes[k];
        let p = node(i, j);
        let mut nb = Vec::with_capacity(4);
        let (mut c0, mut c1) = (0.0, 0.0);
        for (di, dj) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
            let d = Complex64::new(di as f64, dj as f64) * h;
            let normal = Complex64::new(-(dj as f64), di as f64) * (0.5 * h);
            let qpt = p + d;
            let first = q.hits(p, qpt).into_iter().find(|x| x.0 > 0.0);
            match first {
                None => {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    let m = p + d * 0.5;
                    let frac = q.inside_length(m - normal, m + normal) / h;
                    if a >= 0 && b >= 0 && (a as usize) < nx && (b as usize) < ny {
                        let other = id[b as usize * nx + a as usize];
                        if other != usize::MAX && frac > 0.0 {
                            nb.push((other, frac));
                        }
                    }
                }
                Some((t, e)) => {
                    let arc = q.arc_of_edge(e);
                    if arc == 0 || arc == 2 {
                        let m = p + d * (0.5 * t);
                        let frac = q.inside_length(m - normal, m + normal) / h;
                        let c = frac / t.max(1e-2);
                        if arc == 0 {
                            c0 += c;
                        } else {
                            c1 += c;
                        }
                    }
                }
            }
        }
        (nb, c0, c1)
    });

    // symmetrise the internal conductances (dual faces are shared)
    let n = nodes.len();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (k, (nb, _, _)) in rows.iter().enumerate() {
        for &(o, c) in nb {
            if o > k {
                let c_back = rows[o].0.iter().find(|x| x.0 == k).map_or(c, |x| x.1);
                let c = 0.5 * (c + c_back);
                adj[k].push((o, c));
                adj[o].push((k, c));
            }
        }
    }
    let diag: Vec<f64> = (0..n)
        .map(|k| adj[k].iter().map(|x| x.1).sum::<f64>() + rows[k].1 + rows[k].2)
        .collect();
    if diag.iter().all(|&d| d == 0.0)
        || rows.iter().all(|r| r.1 == 0.0)
        || rows.iter().all(|r| r.2 == 0.0)
    {
        return Err(Error::Degenerate(
            "mesh does not reach both Dirichlet arcs".into(),
        ));
    }
    let b: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let apply = |x: &[f64], y: &mut [f64]| {
        for k in 0..n {
            let mut s = diag[k] * x[k];
            for &(o, c) in &adj[k] {
                s -= c * x[o];
            }
            y[k] = s;
        }
    };
    let u = conjugate_gradient(&apply, &diag, &b, 1e-10, 20 * n + 1000)?;

    let mut energy = 0.0;
    for k in 0..n {
        for &(o, c) in &adj[k] {
            if o > k {
                energy += c * (u[k] - u[o]).powi(2);
            }
        }
        energy += rows[k].1 * u[k].powi(2) + rows[k].2 * (1.0 - u[k]).powi(2);
    }
    if energy <= 0.0 {
        return Err(Error::Degenerate("zero energy".into()));
    }
    Ok(1.0 / energy)
}

/// Jacobi-preconditioned conjugate gradients for an SPD operator.
fn conjugate_gradient(
    apply: &impl Fn(&[f64], &mut [f64]),
    diag: &[f64],
    b: &[f64],
    rtol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = b.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r
        .iter()
        .zip(diag)
        .map(|(r, d)| if *d > 0.0 { r / d } else { 0.0 })
        .collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok(x);
    }
    for _ in 0..max_iter {
        apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        if dot(&r, &r).sqrt() <= rtol * b_norm {
            return Ok(x);
        }
        for k in 0..n {
            z[k] = if diag[k] > 0.0 { r[k] / diag[k] } else { 0.0 };
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(Error::Degenerate(
        "conjugate gradients did not converge".into(),
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrossingQuery {
    pub curve: CurveSample,
    pub quad: Quadrilateral,
}

impl CrossingQuery {
    pub fn detect(&self) -> bool {
        detect_crossing(&self.curve.points, &self.quad)
    }
}

/// Whether some piece of the polyline lies in the open quadrilateral apart
/// from its two ends, one on arc 0 and the other on arc 2.
pub fn detect_crossing(curve: &[Complex64], q: &Quadrilateral) -> bool {
    // walk the polyline as a sequence of boundary contacts and open pieces
    let mut entry: Option<u8> = None;
    let mut inside = false;
    let mut visit = |loc: Location| -> bool {
        match loc {
            Location::Boundary(mask) => {
                if inside {
                    if let Some(e) = entry {
                        let crossed =
                            (e & 1 != 0 && mask & 4 != 0) || (e & 4 != 0 && mask & 1 != 0);
                        if crossed {
                            return true;
                        }
                    }
                }
                entry = Some(mask);
                inside = false;
            }
            Location::Inside => inside = true,
            Location::Outside => {
                entry = None;
                inside = false;
            }
        }
        false
    };
    if let Some(&z) = curve.first() {
        if visit(q.locate(z)) {
            return true;
        }
    }
    for w in curve.windows(2) {
        let (p, r) = (w[0], w[1]);
        let mut ts: Vec<f64> = q.hits(p, r).into_iter().map(|h| h.0).collect();
        ts.push(0.0);
        ts.push(1.0);
        ts.sort_by(f64::total_cmp);
        ts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        for pair in ts.windows(2) {
            let mid = p + (r - p) * (0.5 * (pair[0] + pair[1]));
            if visit(q.locate(mid)) || visit(q.locate(p + (r - p) * pair[1])) {
                return true;
            }
        }
    }
    false
}

/// `ν(M) = (e^{πM}/16 - 1)⁻¹`.
pub fn nu_of_m(m: f64) -> Result<f64> {
    let denom = (std::f64::consts::PI * m).exp() / 16.0 - 1.0;
    if !(m > 0.0) || !(denom > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "ν(M) needs exp(πM) > 16, got M = {m}"
        )));
    }
    Ok(1.0 / denom)
}

/// Every partial sum of atom masses, taken from the origin outward, lies in
/// `[-2 + c/λ, -1 + C/λ]` on both sides.
pub fn partial_sum_condition(pair: &MeasurePair, c: f64, big_c: f64) -> Result<bool> {
    if !pair.is_atomic() {
        return Err(Error::InvalidMeasure(
            "the partial-sum condition needs atomic measures".into(),
        ));
    }
    let (lo, hi) = (-2.0 + c / LAMBDA, -1.0 + big_c / LAMBDA);
    let tol = 1e-12;
    let ok = |atoms: Vec<(f64, f64)>| {
        let mut acc = 0.0;
        atoms.into_iter().all(|(_, m)| {
            acc += m;
            acc >= lo - tol && acc <= hi + tol
        })
    };
    let outward = |m: &crate::boundary::RadonMeasure| -> Vec<(f64, f64)> {
        m.atoms_outward()
            .into_iter()
            .map(|a| (a.location, a.mass))
            .collect()
    };
    Ok(ok(outward(pair.left())) && ok(outward(pair.right())))
}

/// `ρᴸ = -1 + C/λ` at `0⁻` and `ρᴿ = -2 + c/λ` at `0⁺`.
pub fn comparison_pair(c: f64, big_c: f64) -> Result<MeasurePair> {
    let left = -1.0 + big_c / LAMBDA;
    let right = -2.0 + c / LAMBDA;
    let l: Vec<(f64, f64)> = if left != 0.0 {
        vec![(0.0, left)]
    } else {
        Vec::new()
    };
    MeasurePair::atomic(&l, &[(0.0, right)])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallOptions {
    /// Capacity time after which an undecided path is reported unresolved.
    pub horizon: f64,
    /// Grid stride of the coarse curve pass.
    pub stride: usize,
    /// Coarse chords closer than this to the ball boundary are refined to
    /// every grid point.
    pub refine_margin: f64,
    /// A real point counts as swallowed once its image is this close to the
    /// image of `0⁺`.
    pub swallow_tol: f64,
}

impl Default for BallOptions {
    fn default() -> Self {
        Self {
            horizon: 20.0,
            stride: 8,
            refine_margin: 0.25,
            swallow_tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallEstimate {
    pub nu: f64,
    pub hits: usize,
    /// Paths for which neither a hit nor the enclosure of the ball was seen
    /// before the horizon. They count as hits in `p_upper`.
    pub unresolved: usize,
    pub paths: usize,
    pub p: f64,
    /// 95% Clopper–Pearson interval for the hit probability, with unresolved
    /// paths counted as misses for the lower and as hits for the upper end.
    pub ci: (f64, f64),
}

/// Outcome of one path against balls `B(1, ν)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallPath {
    /// Distance from 1 to the curve up to the stopping time.
    pub distance: f64,
    /// Swallow times of `1 - ν` and `1 + ν`, per radius.
    pub swallow: Vec<(Option<f64>, Option<f64>)>,
}

impl BallPath {
    /// The curve met `B(1, ν)`: it came within `ν` of 1, or it landed on
    /// `[1 - ν, 1 + ν]` (the landing that swallows `1 - ν` leaves `1 + ν`
    /// outside the hull).
    pub fn hit(&self, k: usize, nu: f64) -> Option<bool> {
        if self.distance <= nu {
            return Some(true);
        }
        match self.swallow[k] {
            (Some(a), Some(b)) => Some(b > a),
            (Some(_), None) => Some(true),
            (None, _) => None,
        }
    }
}

/// Distance from `center` to the curve of `d`, refining near the ball.
pub fn curve_distance(d: &DrivingPath, center: Complex64, radius: f64, opts: &BallOptions) -> f64 {
    let n = d.steps();
    let stride = opts.stride.max(1);
    let mut idx: Vec<usize> = (0..=n).step_by(stride).collect();
    if *idx.last().unwrap() != n {
        idx.push(n);
    }
    let pts: Vec<Complex64> = idx.iter().map(|&k| curve_tip(d, k)).collect();
    let mut best = (pts[0] - center).norm();
    for (w, iw) in pts.windows(2).zip(idx.windows(2)) {
        let coarse = segment_distance(center, w[0], w[1]);
        if coarse > radius + opts.refine_margin {
            best = best.min(coarse);
            continue;
        }
        let mut prev = w[0];
        for k in iw[0] + 1..=iw[1] {
            let z = if k == iw[1] { w[1] } else { curve_tip(d, k) };
            best = best.min(segment_distance(center, prev, z));
            prev = z;
        }
    }
    best
}

/// Runs path `index` until the largest ball is enclosed or the horizon.
pub fn ball_path(cfg: &SleConfig, nus: &[f64], index: u64, opts: &BallOptions) -> Result<BallPath> {
    let pts: Vec<f64> = nus.iter().flat_map(|&v| [1.0 - v, 1.0 + v]).collect();
    let mut trackers = Trackers::new(&[], &pts);
    // with no interior points this only makes the observer see every substep
    trackers.resolve_c = Some(f64::INFINITY);
    let mut times: Vec<Option<f64>> = vec![None; pts.len()];
    let r_max = nus.iter().copied().fold(0.0, f64::max);
    let far_index = 2 * nus.iter().position(|&v| v == r_max).unwrap() + 1;
    let sim = simulate_tracked(cfg, opts.horizon, index, &mut trackers, |s, tr, _| {
        for (j, (_, x)) in tr.boundary.iter().enumerate() {
            if times[j].is_none() && *x - s.zero_plus <= opts.swallow_tol * (1.0 + x.abs()) {
                times[j] = Some(s.t);
            }
        }
        times[far_index].is_none()
    })?;
    if let Some(e) = sim.events.first() {
        return Err(Error::Threshold {
            time: e.time,
            mass: e.mass,
        });
    }
    let distance = curve_distance(&sim.path, Complex64::new(1.0, 0.0), r_max, opts);
    Ok(BallPath {
        distance,
        swallow: times.chunks(2).map(|c| (c[0], c[1])).collect(),
    })
}

/// Monte Carlo estimates of `P(curve meets the closed ball B(1, ν))`, one per
/// `ν`, from a single ensemble.
pub fn ball_surrogate(
    cfg: &SleConfig,
    nus: &[f64],
    n_paths: usize,
    opts: &BallOptions,
) -> Result<Vec<BallEstimate>> {
    if nus.is_empty() || nus.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidConfig("ball radii must be positive".into()));
    }
    let paths: Vec<BallPath> = par::map_indexed(n_paths, |i| ball_path(cfg, nus, i as u64, opts))
        .into_iter()
        .collect::<Result<_>>()?;
    Ok(nus
        .iter()
        .enumerate()
        .map(|(k, &nu)| {
            let outcomes: Vec<Option<bool>> = paths.iter().map(|p| p.hit(k, nu)).collect();
            let hits = outcomes.iter().filter(|o| **o == Some(true)).count();
            let unresolved = outcomes.iter().filter(|o| o.is_none()).count();
            let lo = binomial_ci(hits, n_paths, 0.95).0;
            let hi = binomial_ci(hits + unresolved, n_paths, 0.95).1;
            BallEstimate {
                nu,
                hits,
                unresolved,
                paths: n_paths,
                p: hits as f64 / n_paths as f64,
                ci: (lo, hi),
            }
        })
        .collect())
}
