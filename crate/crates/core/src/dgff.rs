//! Discrete Gaussian free field on a rectangular grid.
//!
//! The bottom row of the grid stands for the real line: vertex `i` sits at
//! `x = (i - nx/2 + 1/2)·spacing`, so the origin lies between the two middle
//! vertices. The left edge and the left half of the top row carry `F(-∞)`,
//! the right edge and the right half of the top row carry `F(+∞)`.
//!
//! The zero-boundary field has covariance `2π(-Δ)⁻¹`, with `Δ` the graph
//! Laplacian (diagonal 4). With that scaling the lattice Green function
//! behaves like `-log|z-w|` at large separation, matching the continuum
//! normalisation in which the level-line heights are `±π/2`.

use std::collections::VecDeque;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryFunction, Side};
use crate::rng::{normal, path_rng};
use crate::stats::normal_quantile;
use crate::{par, Error, Result};

pub const GREEN_SCALE: f64 = 2.0 * PI;
/// Largest interior (in vertices) for which a dense Green matrix is built.
pub const DENSE_CAP: usize = 64 * 64;
const TIE_SHIFT: f64 = 1e-12;
/// Factor between continuum and lattice boundary heights. Fitted once so that
/// the driving function of the chordal interface on a 64×64 grid has variance
/// ≈ 4t; the fit is 1 within Monte Carlo error, which the `2π` covariance
/// scale predicts.
pub const HEIGHT_CALIBRATION: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
    /// Values on all `nx·ny` vertices; interior entries are ignored.
    boundary: Vec<f64>,
}

impl Lattice {
    pub fn new(nx: usize, ny: usize, spacing: f64) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::InvalidConfig(format!(
                "lattice {nx}×{ny} has no interior"
            )));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidConfig(format!("spacing {spacing}")));
        }
        Ok(Self {
            nx,
            ny,
            spacing,
            boundary: vec![0.0; nx * ny],
        })
    }

    pub fn from_function(nx: usize, ny: usize, spacing: f64, f: &BoundaryFunction) -> Result<Self> {
        let mut l = Self::new(nx, ny, spacing)?;
        l.set_boundary(f)?;
        Ok(l)
    }

    /// Replaces the boundary data by the values of `f`.
    pub fn set_boundary(&mut self, f: &BoundaryFunction) -> Result<()> {
        for j in 0..self.ny {
            for i in 0..self.nx {
                if !self.is_boundary(i, j) {
                    continue;
                }
                let v = HEIGHT_CALIBRATION
                    * if j == 0 {
                        f.eval(self.bottom_coordinate(i))
                    } else {
                        match self.arc(i, j) {
                            Side::Negative => f.minus_inf(),
                            Side::Positive => f.plus_inf(),
                        }
                    };
                if !v.is_finite() {
                    return Err(Error::InvalidFunction(format!(
                        "non-finite boundary value at ({i}, {j})"
                    )));
                }
                self.boundary[j * self.nx + i] = v;
            }
        }
        Ok(())
    }

    pub fn with_boundary(&self, f: &BoundaryFunction) -> Result<Self> {
        let mut l = self.clone();
        l.set_boundary(f)?;
        Ok(l)
    }

    /// First column on the positive side of the origin.
    pub fn origin_column(&self) -> usize {
        self.nx / 2
    }

    pub fn bottom_coordinate(&self, i: usize) -> f64 {
        (i as f64 - self.origin_column() as f64 + 0.5) * self.spacing
    }

    /// Vertex position in half-plane coordinates.
    pub fn position(&self, i: f64, j: f64) -> Complex64 {
        Complex64::new(
            (i - self.origin_column() as f64 + 0.5) * self.spacing,
            j * self.spacing,
        )
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx - 1 || j == self.ny - 1
    }

    /// Which of the two boundary arcs (split at the origin and at the middle
    /// of the top row) a boundary vertex belongs to.
    pub fn arc(&self, i: usize, j: usize) -> Side {
        if i == 0 {
            Side::Negative
        } else if i == self.nx - 1 {
            Side::Positive
        } else if j == 0 || j == self.ny - 1 {
            if i < self.origin_column() {
                Side::Negative
            } else {
                Side::Positive
            }
        } else {
            panic!("({i}, {j}) is not a boundary vertex")
        }
    }

    pub fn boundary_value(&self, i: usize, j: usize) -> f64 {
        self.boundary[j * self.nx + i]
    }

    pub fn interior_dims(&self) -> (usize, usize) {
        (self.nx - 2, self.ny - 2)
    }

    pub fn interior_len(&self) -> usize {
        (self.nx - 2) * (self.ny - 2)
    }

    pub fn interior_index(&self, i: usize, j: usize) -> Option<usize> {
        if self.is_boundary(i, j) {
            None
        } else {
            Some((j - 1) * (self.nx - 2) + (i - 1))
        }
    }

    pub fn same_shape(&self, other: &Lattice) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.spacing == other.spacing
    }
}

/// Cholesky factor of a symmetric positive-definite band matrix, stored by
/// rows: `band[k·(w+1) + d] = L[k][k-d]`.
#[derive(Clone, Debug)]
struct BandCholesky {
    n: usize,
    w: usize,
    band: Vec<f64>,
}

impl BandCholesky {
    fn new(n: usize, w: usize, entry: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut band = vec![0.0; n * (w + 1)];
        for k in 0..n {
            let lo = k.saturating_sub(w);
            for c in lo..=k {
                let mut s = entry(k, c);
                let plo = lo.max(c.saturating_sub(w));
                for p in plo..c {
                    s -= band[k * (w + 1) + (k - p)] * band[c * (w + 1) + (c - p)];
                }
                if c == k {
                    if s <= 0.0 {
                        return Err(Error::Degenerate("matrix is not positive definite".into()));
                    }
                    band[k * (w + 1)] = s.sqrt();
                } else {
                    band[k * (w + 1) + (k - c)] = s / band[c * (w + 1)];
                }
            }
        }
        Ok(Self { n, w, band })
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.band[r * (self.w + 1) + (r - c)]
    }

    /// Solves `L y = b` in place.
    fn forward(&self, b: &mut [f64]) {
        for k in 0..self.n {
            let mut s = b[k];
            for c in k.saturating_sub(self.w)..k {
                s -= self.at(k, c) * b[c];
            }
            b[k] = s / self.at(k, k);
        }
    }

    /// Solves `Lᵀ x = y` in place.
    fn backward(&self, y: &mut [f64]) {
        for k in (0..self.n).rev() {
            let mut s = y[k];
            for r in k + 1..(k + self.w + 1).min(self.n) {
                s -= self.at(r, k) * y[r];
            }
            y[k] = s / self.at(k, k);
        }
    }

    fn solve(&self, b: &mut [f64]) {
        self.forward(b);
        self.backward(b);
    }
}

/// Factorised Dirichlet Laplacian of a grid interior, shared read-only by all
/// samples on that grid.
#[derive(Clone, Debug)]
pub struct Dgff {
    mx: usize,
    my: usize,
    chol: BandCholesky,
}

impl Dgff {
    pub fn new(l: &Lattice) -> Result<Self> {
        let (mx, my) = l.interior_dims();
        Self::for_interior(mx, my)
    }

    fn for_interior(mx: usize, my: usize) -> Result<Self> {
        let chol = BandCholesky::new(mx * my, mx, |k, c| {
            if k == c {
                4.0
            } else if (k - c == 1 && k % mx != 0) || k - c == mx {
                -1.0
            } else {
                0.0
            }
        })?;
        Ok(Self { mx, my, chol })
    }

    pub fn interior_len(&self) -> usize {
        self.mx * self.my
    }

    fn check(&self, l: &Lattice) {
        assert_eq!(
            l.interior_dims(),
            (self.mx, self.my),
            "lattice does not match the factorisation"
        );
    }

    /// Zero-boundary sample with covariance `2π(-Δ)⁻¹`.
    pub fn fluctuation(&self, seed: u64, index: u64) -> Vec<f64> {
        let mut rng = path_rng(seed, index);
        let s = GREEN_SCALE.sqrt();
        let mut z: Vec<f64> = (0..self.interior_len())
            .map(|_| s * normal(&mut rng))
            .collect();
        self.chol.backward(&mut z);
        z
    }

    /// Discrete-harmonic extension of the lattice's boundary data.
    pub fn harmonic(&self, l: &Lattice) -> Vec<f64> {
        self.check(l);
        let mut b = vec![0.0; self.interior_len()];
        for j in 1..l.ny - 1 {
            for i in 1..l.nx - 1 {
                let mut s = 0.0;
                for (a, c) in [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)] {
                    if l.is_boundary(a, c) {
                        s += l.boundary_value(a, c);
                    }
                }
                b[(j - 1) * self.mx + (i - 1)] = s;
            }
        }
        self.chol.solve(&mut b);
        b
    }

    pub fn sample(&self, l: &Lattice, seed: u64, index: u64) -> LatticeField {
        LatticeField {
            lattice: l.clone(),
            mean: self.harmonic(l),
            fluctuation: self.fluctuation(seed, index),
        }
    }

    /// `n` independent samples, parallel over indices.
    pub fn samples(&self, l: &Lattice, seed: u64, n: usize) -> Vec<LatticeField> {
        let mean = self.harmonic(l);
        par::map_indexed(n, |k| LatticeField {
            lattice: l.clone(),
            mean: mean.clone(),
            fluctuation: self.fluctuation(seed, k as u64),
        })
    }
}

/// One sample (index 0 of the stream keyed by `seed`).
pub fn sample(l: &Lattice, seed: u64) -> Result<LatticeField> {
    Ok(Dgff::new(l)?.sample(l, seed, 0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeField {
    pub lattice: Lattice,
    /// Harmonic extension of the boundary data, on interior vertices.
    pub mean: Vec<f64>,
    /// Zero-boundary part, on interior vertices.
    pub fluctuation: Vec<f64>,
}

impl LatticeField {
    /// A deterministic field: given interior values, no fluctuation.
    pub fn deterministic(lattice: Lattice, values: Vec<f64>) -> Result<Self> {
        if values.len() != lattice.interior_len() {
            return Err(Error::InvalidConfig(
                "interior value count does not match the lattice".into(),
            ));
        }
        let n = values.len();
        Ok(Self {
            lattice,
            mean: values,
            fluctuation: vec![0.0; n],
        })
    }

    /// The same fluctuation over different boundary data.
    pub fn rebased(&self, dgff: &Dgff, l: &Lattice) -> Self {
        assert!(self.lattice.same_shape(l));
        Self {
            lattice: l.clone(),
            mean: dgff.harmonic(l),
            fluctuation: self.fluctuation.clone(),
        }
    }

    pub fn interior_values(&self) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.fluctuation)
            .map(|(a, b)| a + b)
            .collect()
    }

    /// Field value at any vertex, boundary data included.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        match self.lattice.interior_index(i, j) {
            Some(k) => self.mean[k] + self.fluctuation[k],
            None => self.lattice.boundary_value(i, j),
        }
    }

    pub fn negated(&self) -> Self {
        let mut lattice = self.lattice.clone();
        lattice.boundary.iter_mut().for_each(|v| *v = -*v);
        Self {
            lattice,
            mean: self.mean.iter().map(|v| -v).collect(),
            fluctuation: self.fluctuation.iter().map(|v| -v).collect(),
        }
    }
}

/// Dense symmetric matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GreenMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl GreenMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

/// `2π(-Δ)⁻¹` on the interior of `l`.
pub fn green_matrix(l: &Lattice) -> Result<GreenMatrix> {
    let n = l.interior_len();
    if n > DENSE_CAP {
        return Err(Error::SizeCap {
            interior: n,
            cap: DENSE_CAP,
        });
    }
    let dgff = Dgff::new(l)?;
    let cols = par::map_indexed(n, |c| {
        let mut e = vec![0.0; n];
        e[c] = GREEN_SCALE;
        dgff.chol.solve(&mut e);
        e
    });
    let mut data = vec![0.0; n * n];
    for (c, col) in cols.iter().enumerate() {
        for r in 0..n {
            data[r * n + c] = col[r];
        }
    }
    // the inverse of a symmetric matrix is symmetric; make it exactly so
    for r in 0..n {
        for c in 0..r {
            let v = 0.5 * (data[r * n + c] + data[c * n + r]);
            data[r * n + c] = v;
            data[c * n + r] = v;
        }
    }
    Ok(GreenMatrix { n, data })
}

/// Entrywise comparison of an empirical second-moment matrix with a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub samples: usize,
    pub entries: usize,
    /// Largest `|Ĉ_ij - G_ij| / SE_ij`.
    pub max_z: f64,
    /// Entries beyond 4 standard errors.
    pub beyond_4se: usize,
    /// `max(4, z)` with `z` the Bonferroni quantile at the family level.
    pub threshold: f64,
    pub pass: bool,
}

/// Family-wise significance level of the entrywise tests.
pub const FAMILY_ALPHA: f64 = 0.01;

pub fn bonferroni_threshold(entries: usize) -> f64 {
    normal_quantile(1.0 - FAMILY_ALPHA / (2.0 * entries.max(1) as f64)).max(4.0)
}

/// Compares `E[x xᵀ]` (zero mean known) of the vectors in `xs` with `g`,
/// using the Gaussian standard error `√((G_ii G_jj + G_ij²)/n)`.
pub fn covariance_check(xs: &[Vec<f64>], g: &GreenMatrix) -> Result<CovarianceReport> {
    let n = g.n;
    if xs.len() < 2 {
        return Err(Error::InsufficientData("need at least two samples".into()));
    }
    if xs.iter().any(|x| x.len() != n) {
        return Err(Error::InvalidConfig(
            "sample length does not match the matrix".into(),
        ));
    }
    let acc = second_moments(xs, n);
    let m = xs.len() as f64;
    let mut max_z: f64 = 0.0;
    let mut beyond = 0;
    for i in 0..n {
        for j in 0..=i {
            let se = ((g.get(i, i) * g.get(j, j) + g.get(i, j).powi(2)) / m).sqrt();
            let z = (acc[i * n + j] / m - g.get(i, j)).abs() / se;
            if z > 4.0 {
                beyond += 1;
            }
            max_z = max_z.max(z);
        }
    }
    let entries = n * (n + 1) / 2;
    let threshold = bonferroni_threshold(entries);
    Ok(CovarianceReport {
        samples: xs.len(),
        entries,
        max_z,
        beyond_4se: beyond,
        threshold,
        pass: max_z <= threshold,
    })
}

/// Lower triangle of `Σ x xᵀ`, accumulated in parallel over sample chunks.
fn second_moments(xs: &[Vec<f64>], n: usize) -> Vec<f64> {
    let chunk = 64;
    let parts = par::map_indexed(xs.len().div_ceil(chunk), |c| {
        let mut acc = vec![0.0; n * n];
        for x in &xs[c * chunk..((c + 1) * chunk).min(xs.len())] {
            for i in 0..n {
                let xi = x[i];
                let row = &mut acc[i * n..i * n + i + 1];
                for (a, xj) in row.iter_mut().zip(&x[..=i]) {
                    *a += xi * xj;
                }
            }
        }
        acc
    });
    let mut total = vec![0.0; n * n];
    for p in parts {
        total.iter_mut().zip(p).for_each(|(t, v)| *t += v);
    }
    total
}

/// Rectangle of vertices `[i0, i1] × [j0, j1]`. The perimeter may run along
/// the lattice boundary; the whole grid is the trivial box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubBox {
    pub i0: usize,
    pub j0: usize,
    pub i1: usize,
    pub j1: usize,
}

impl SubBox {
    fn validate(&self, l: &Lattice) -> Result<()> {
        let ok =
            self.i1 < l.nx && self.j1 < l.ny && self.i1 >= self.i0 + 2 && self.j1 >= self.j0 + 2;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "{self:?} is not strictly inside the lattice"
            )))
        }
    }

    /// The box as a lattice of its own, with zero boundary data.
    pub fn lattice(&self, spacing: f64) -> Lattice {
        Lattice::new(self.i1 - self.i0 + 1, self.j1 - self.j0 + 1, spacing).expect("validated box")
    }

    fn contains_open(&self, i: usize, j: usize) -> bool {
        i > self.i0 && i < self.i1 && j > self.j0 && j < self.j1
    }
}

/// Field values inside `sub`, minus (when `subtract` holds) the harmonic
/// extension of the values on its perimeter.
pub fn markov_residuals(
    samples: &[LatticeField],
    sub: SubBox,
    subtract: bool,
) -> Result<Vec<Vec<f64>>> {
    let first = samples
        .first()
        .ok_or_else(|| Error::InsufficientData("no samples".into()))?;
    sub.validate(&first.lattice)?;
    let local = sub.lattice(first.lattice.spacing);
    let dgff = Dgff::new(&local)?;
    let (bx, by) = (local.nx, local.ny);
    Ok(samples
        .iter()
        .map(|f| {
            let mut local = local.clone();
            for j in 0..by {
                for i in 0..bx {
                    if local.is_boundary(i, j) {
                        local.boundary[j * bx + i] = f.value(sub.i0 + i, sub.j0 + j);
                    }
                }
            }
            let h = if subtract {
                dgff.harmonic(&local)
            } else {
                vec![0.0; dgff.interior_len()]
            };
            let mut r = Vec::with_capacity(h.len());
            for j in 1..by - 1 {
                for i in 1..bx - 1 {
                    r.push(f.value(sub.i0 + i, sub.j0 + j) - h[(j - 1) * (bx - 2) + (i - 1)]);
                }
            }
            r
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovReport {
    /// Residual covariance against the sub-box Green matrix.
    pub covariance: CovarianceReport,
    /// Largest standardised correlation between a residual and a value
    /// outside the open box.
    pub cross_max_z: f64,
    pub cross_threshold: f64,
    pub pass: bool,
}

/// Markov decomposition test on independent samples of the same lattice.
pub fn markov_check(samples: &[LatticeField], sub: SubBox) -> Result<MarkovReport> {
    let res = markov_residuals(samples, sub, true)?;
    let l = &samples[0].lattice;
    let g = green_matrix(&sub.lattice(l.spacing))?;
    let covariance = covariance_check(&res, &g)?;

    // outside values, centred by the known mean
    let outside: Vec<(usize, usize)> = (1..l.ny - 1)
        .flat_map(|j| (1..l.nx - 1).map(move |i| (i, j)))
        .filter(|&(i, j)| !sub.contains_open(i, j))
        .collect();
    let m = samples.len() as f64;
    let k = res[0].len();
    let cross = par::map_indexed(outside.len(), |o| {
        let (i, j) = outside[o];
        let idx = l.interior_index(i, j).unwrap();
        let var_o = samples
            .iter()
            .map(|f| f.fluctuation[idx].powi(2))
            .sum::<f64>()
            / m;
        let mut worst: f64 = 0.0;
        for a in 0..k {
            let c = samples
                .iter()
                .zip(&res)
                .map(|(f, r)| f.fluctuation[idx] * r[a])
                .sum::<f64>()
                / m;
            let se = (g.get(a, a) * var_o / m).sqrt();
            worst = worst.max(c.abs() / se);
        }
        worst
    });
    let cross_max_z = cross.into_iter().fold(0.0, f64::max);
    let cross_threshold = bonferroni_threshold(outside.len() * k);
    let pass = covariance.pass && cross_max_z <= cross_threshold;
    Ok(MarkovReport {
        covariance,
        cross_max_z,
        cross_threshold,
        pass,
    })
}

/// A primal edge crossed by the interface: `left` is on the non-positive
/// side, `right` on the positive side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crossing {
    pub left: (usize, usize),
    pub right: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interface {
    pub nx: usize,
    pub ny: usize,
    /// Crossed edges in order, from the origin edge to the exit edge.
    pub crossings: Vec<Crossing>,
    /// Vertices reachable from the positive boundary arc without crossing the
    /// interface, row-major over all `nx·ny` vertices.
    pub right_set: Vec<bool>,
    /// Whether the exploration reached the exit edge.
    pub complete: bool,
}

impl Interface {
    pub fn len(&self) -> usize {
        self.crossings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.crossings.is_empty()
    }

    pub fn is_right(&self, i: usize, j: usize) -> bool {
        self.right_set[j * self.nx + i]
    }

    /// Midpoints of the crossed edges in half-plane coordinates.
    pub fn points(&self, l: &Lattice) -> Vec<Complex64> {
        self.crossings
            .iter()
            .map(|c| {
                let i = 0.5 * (c.left.0 + c.right.0) as f64;
                let j = 0.5 * (c.left.1 + c.right.1) as f64;
                l.position(i, j)
            })
            .collect()
    }

    /// No dual edge is used twice. A saddle face can be traversed twice, by
    /// two arcs that touch but do not cross.
    pub fn is_simple(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.crossings
            .iter()
            .all(|c| seen.insert((c.left, c.right)) && !seen.contains(&(c.right, c.left)))
    }

    /// Number of crossings, other than those within `exclude` lattice units
    /// of either endpoint, that have a boundary vertex.
    pub fn boundary_contacts(&self, exclude: f64) -> usize {
        let (Some(a), Some(b)) = (self.crossings.first(), self.crossings.last()) else {
            return 0;
        };
        let mid = |c: &Crossing| {
            (
                0.5 * (c.left.0 + c.right.0) as f64,
                0.5 * (c.left.1 + c.right.1) as f64,
            )
        };
        let (pa, pb) = (mid(a), mid(b));
        let far = |p: (f64, f64), q: (f64, f64)| (p.0 - q.0).hypot(p.1 - q.1) > exclude;
        let on_boundary =
            |(i, j): (usize, usize)| i == 0 || j == 0 || i == self.nx - 1 || j == self.ny - 1;
        self.crossings
            .iter()
            .filter(|c| {
                let p = mid(c);
                far(p, pa) && far(p, pb) && (on_boundary(c.left) || on_boundary(c.right))
            })
            .count()
    }
}

/// Sign used by the exploration: boundary vertices take the sign of their
/// arc, interior vertices the sign of the field (zero counts as positive
/// after the tie shift).
fn positive(f: &LatticeField, i: usize, j: usize) -> bool {
    let l = &f.lattice;
    if l.is_boundary(i, j) {
        l.arc(i, j) == Side::Positive
    } else {
        let v = f.value(i, j);
        (if v == 0.0 { v + TIE_SHIFT } else { v }) > 0.0
    }
}

/// Explores the interface between non-positive and positive vertices, from
/// the bottom edge at the origin to the middle of the top row. In a saddle
/// face the walk turns left.
pub fn extract_interface(f: &LatticeField) -> Interface {
    let l = &f.lattice;
    let (nx, ny) = (l.nx, l.ny);
    let o = l.origin_column();
    let mut crossings = vec![Crossing {
        left: (o - 1, 0),
        right: (o, 0),
    }];
    let exit = Crossing {
        left: (o - 1, ny - 1),
        right: (o, ny - 1),
    };
    let mut complete = false;
    // every face is entered at most four times
    for _ in 0..4 * nx * ny {
        let c = *crossings.last().unwrap();
        if c == exit {
            complete = true;
            break;
        }
        let (lx, ly) = (c.left.0 as isize, c.left.1 as isize);
        let (rx, ry) = (c.right.0 as isize, c.right.1 as isize);
        // heading: (left - right) rotated clockwise
        let (dx, dy) = (ly - ry, -(lx - rx));
        let a = (lx + dx, ly + dy);
        let b = (rx + dx, ry + dy);
        let inside =
            |p: (isize, isize)| p.0 >= 0 && p.1 >= 0 && p.0 < nx as isize && p.1 < ny as isize;
        if !inside(a) || !inside(b) {
            break;
        }
        let a = (a.0 as usize, a.1 as usize);
        let b = (b.0 as usize, b.1 as usize);
        let next = if positive(f, a.0, a.1) {
            Crossing {
                left: c.left,
                right: a,
            }
        } else if positive(f, b.0, b.1) {
            Crossing { left: a, right: b }
        } else {
            Crossing {
                left: b,
                right: c.right,
            }
        };
        crossings.push(next);
    }
    let right_set = flood_right(l, &crossings);
    Interface {
        nx,
        ny,
        crossings,
        right_set,
        complete,
    }
}

fn flood_right(l: &Lattice, crossings: &[Crossing]) -> Vec<bool> {
    let (nx, ny) = (l.nx, l.ny);
    let id = |(i, j): (usize, usize)| j * nx + i;
    let cut: std::collections::HashSet<(usize, usize)> = crossings
        .iter()
        .map(|c| {
            let (a, b) = (id(c.left), id(c.right));
            (a.min(b), a.max(b))
        })
        .collect();
    let mut seen = vec![false; nx * ny];
    let mut queue = VecDeque::new();
    for j in 0..ny {
        for i in 0..nx {
            if l.is_boundary(i, j) && l.arc(i, j) == Side::Positive {
                seen[id((i, j))] = true;
                queue.push_back((i, j));
            }
        }
    }
    while let Some((i, j)) = queue.pop_front() {
        let mut nbrs = Vec::with_capacity(4);
        if i > 0 {
            nbrs.push((i - 1, j));
        }
        if j > 0 {
            nbrs.push((i, j - 1));
        }
        if i + 1 < nx {
            nbrs.push((i + 1, j));
        }
        if j + 1 < ny {
            nbrs.push((i, j + 1));
        }
        for q in nbrs {
            let (a, b) = (id((i, j)), id(q));
            if seen[b] || cut.contains(&(a.min(b), a.max(b))) {
                continue;
            }
            seen[b] = true;
            queue.push_back(q);
        }
    }
    seen
}

/// `a` lies weakly left of `b`: everything right of `b` is right of `a`.
pub fn ordering_check(a: &Interface, b: &Interface) -> bool {
    assert_eq!(
        (a.nx, a.ny),
        (b.nx, b.ny),
        "interfaces live on different lattices"
    );
    a.right_set
        .iter()
        .zip(&b.right_set)
        .all(|(&ra, &rb)| ra || !rb)
}
