//! Finite Radon measure pairs on the two half-lines and the regulated boundary
//! functions they induce through
//!
//! ```text
//! F(x) =  λ (1 + ρᴿ([0, x])),   x ≥ 0
//! F(x) = -λ (1 + ρᴸ((x, 0])),   x < 0
//! ```
//!
//! Measures are restricted to atoms plus piecewise-constant densities. Smooth
//! densities are brought in through [`RadonMeasure::from_cumulative`], which
//! samples a cumulative mass function on a grid; CDF queries on the result are
//! exact at the grid nodes.
//!
//! Both formulas are right-continuous in `x` (on the negative side the atom at
//! `x` is excluded from `(x, 0]`), so that is the canonical representative.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, LAMBDA};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    /// `(-∞, 0]`, carrying ρᴸ.
    Negative,
    /// `[0, ∞)`, carrying ρᴿ.
    Positive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// Constant density on `[start, end]` (coordinates, `start < end`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityPiece {
    pub start: f64,
    pub end: f64,
    pub density: f64,
}

impl DensityPiece {
    pub fn mass(&self) -> f64 {
        self.density * (self.end - self.start)
    }

    fn mass_in(&self, lo: f64, hi: f64) -> f64 {
        let a = self.start.max(lo);
        let b = self.end.min(hi);
        if b > a {
            self.density * (b - a)
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadonMeasure {
    side: Side,
    atoms: Vec<Atom>,
    density: Vec<DensityPiece>,
}

impl RadonMeasure {
    pub fn empty(side: Side) -> Self {
        Self {
            side,
            atoms: Vec::new(),
            density: Vec::new(),
        }
    }

    /// Builds a measure, sorting atoms and pieces by coordinate and merging
    /// atoms that share a location.
    pub fn new(side: Side, atoms: Vec<Atom>, density: Vec<DensityPiece>) -> Result<Self> {
        let mut atoms = atoms;
        for a in &atoms {
            if !a.location.is_finite() || !a.mass.is_finite() {
                return Err(Error::InvalidMeasure(format!("non-finite atom {a:?}")));
            }
            let on_side = match side {
                Side::Negative => a.location <= 0.0,
                Side::Positive => a.location >= 0.0,
            };
            if !on_side {
                return Err(Error::InvalidMeasure(format!(
                    "atom at {} does not lie on the {side:?} half-line",
                    a.location
                )));
            }
        }
        atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if last.location == a.location => last.mass += a.mass,
                _ => merged.push(a),
            }
        }

        let mut density = density;
        for p in &density {
            if !(p.start.is_finite() && p.end.is_finite() && p.density.is_finite())
                || p.start >= p.end
            {
                return Err(Error::InvalidMeasure(format!("bad density piece {p:?}")));
            }
            let on_side = match side {
                Side::Negative => p.end <= 0.0,
                Side::Positive => p.start >= 0.0,
            };
            if !on_side {
                return Err(Error::InvalidMeasure(format!(
                    "density piece [{}, {}] does not lie on the {side:?} half-line",
                    p.start, p.end
                )));
            }
        }
        density.sort_by(|a, b| a.start.total_cmp(&b.start));
        for w in density.windows(2) {
            if w[1].start < w[0].end {
                return Err(Error::InvalidMeasure("overlapping density pieces".into()));
            }
        }
        Ok(Self {
            side,
            atoms: merged,
            density,
        })
    }

    pub fn atomic(side: Side, atoms: Vec<Atom>) -> Result<Self> {
        Self::new(side, atoms, Vec::new())
    }

    /// Samples a cumulative mass function `cum(x)` (mass between 0 and `x`,
    /// continuous part only, `cum(0) = 0`) on `nodes` and stores it as
    /// piecewise-constant density. `nodes` are coordinates on the measure's
    /// side, in any order; mass beyond the outermost node is dropped.
    pub fn from_cumulative(
        side: Side,
        atoms: Vec<Atom>,
        cum: impl Fn(f64) -> f64,
        nodes: &[f64],
    ) -> Result<Self> {
        let mut xs: Vec<f64> = nodes.to_vec();
        xs.push(0.0);
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let mut pieces = Vec::with_capacity(xs.len());
        for w in xs.windows(2) {
            let (a, b) = (w[0], w[1]);
            // cumulative mass measured away from the origin on either side
            let m = match side {
                Side::Positive => cum(b) - cum(a),
                Side::Negative => cum(a) - cum(b),
            };
            if m != 0.0 {
                pieces.push(DensityPiece {
                    start: a,
                    end: b,
                    density: m / (b - a),
                });
            }
        }
        Self::new(side, atoms, pieces)
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn density(&self) -> &[DensityPiece] {
        &self.density
    }

    pub fn is_atomic(&self) -> bool {
        self.density.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.iter().all(|a| a.mass == 0.0) && self.density.iter().all(|p| p.density == 0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum::<f64>()
            + self.density.iter().map(|p| p.mass()).sum::<f64>()
    }

    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass.abs()).sum::<f64>()
            + self.density.iter().map(|p| p.mass().abs()).sum::<f64>()
    }

    /// Mass accumulated from the origin out to `x` on this measure's side:
    /// `ρᴿ([0, x])` for the positive side, `ρᴸ((x, 0])` for the negative side.
    /// Points on the wrong side get zero.
    pub fn cumulative(&self, x: f64) -> f64 {
        match self.side {
            Side::Positive => {
                if x < 0.0 {
                    return 0.0;
                }
                let atoms: f64 = self
                    .atoms
                    .iter()
                    .take_while(|a| a.location <= x)
                    .map(|a| a.mass)
                    .sum();
                atoms + self.density.iter().map(|p| p.mass_in(0.0, x)).sum::<f64>()
            }
            Side::Negative => {
                if x >= 0.0 {
                    return 0.0;
                }
                let atoms: f64 = self
                    .atoms
                    .iter()
                    .filter(|a| a.location > x)
                    .map(|a| a.mass)
                    .sum();
                atoms + self.density.iter().map(|p| p.mass_in(x, 0.0)).sum::<f64>()
            }
        }
    }

    /// The other one-sided version of [`cumulative`](Self::cumulative):
    /// `ρᴿ([0, x))` and `ρᴸ([x, 0])`.
    fn cumulative_other(&self, x: f64) -> f64 {
        let at_x: f64 = self
            .atoms
            .iter()
            .filter(|a| a.location == x)
            .map(|a| a.mass)
            .sum();
        match self.side {
            Side::Positive => self.cumulative(x) - at_x,
            Side::Negative => {
                if x > 0.0 {
                    0.0
                } else if x == 0.0 {
                    at_x
                } else {
                    self.cumulative(x) + at_x
                }
            }
        }
    }

    /// Atoms ordered by distance from the origin (nearest first).
    pub fn atoms_outward(&self) -> Vec<Atom> {
        let mut v = self.atoms.clone();
        if self.side == Side::Negative {
            v.reverse();
        }
        v
    }

    /// Negates every mass.
    pub fn negated(&self) -> Self {
        Self {
            side: self.side,
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    location: a.location,
                    mass: -a.mass,
                })
                .collect(),
            density: self
                .density
                .iter()
                .map(|p| DensityPiece {
                    density: -p.density,
                    ..*p
                })
                .collect(),
        }
    }
}

/// `ρᴿ([0, x])`.
pub fn cdf_right(m: &RadonMeasure, x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    m.cumulative(x)
}

/// `ρᴸ((x, 0])`.
pub fn cdf_left(m: &RadonMeasure, x: f64) -> f64 {
    debug_assert!(x < 0.0);
    m.cumulative(x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurePair {
    left: RadonMeasure,
    right: RadonMeasure,
}

impl MeasurePair {
    pub fn new(left: RadonMeasure, right: RadonMeasure) -> Result<Self> {
        if left.side != Side::Negative || right.side != Side::Positive {
            return Err(Error::InvalidMeasure(
                "measure sides do not match their slots".into(),
            ));
        }
        Ok(Self { left, right })
    }

    pub fn empty() -> Self {
        Self {
            left: RadonMeasure::empty(Side::Negative),
            right: RadonMeasure::empty(Side::Positive),
        }
    }

    /// Purely atomic pair from `(location, mass)` lists.
    pub fn atomic(left: &[(f64, f64)], right: &[(f64, f64)]) -> Result<Self> {
        let mk = |v: &[(f64, f64)]| {
            v.iter()
                .map(|&(location, mass)| Atom { location, mass })
                .collect()
        };
        Self::new(
            RadonMeasure::atomic(Side::Negative, mk(left))?,
            RadonMeasure::atomic(Side::Positive, mk(right))?,
        )
    }

    pub fn left(&self) -> &RadonMeasure {
        &self.left
    }

    pub fn right(&self) -> &RadonMeasure {
        &self.right
    }

    pub fn is_atomic(&self) -> bool {
        self.left.is_atomic() && self.right.is_atomic()
    }

    pub fn negated(&self) -> Self {
        Self {
            left: self.left.negated(),
            right: self.right.negated(),
        }
    }
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Piecewise-constant function. `values[0]` holds on `(-∞, breaks[0])`,
/// `values[k]` between `breaks[k-1]` and `breaks[k]`. At a breakpoint the
/// function takes the value of the piece to the right.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseConstant {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseConstant {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breaks.len() + 1 {
            return Err(Error::InvalidFunction(format!(
                "{} values for {} breakpoints",
                values.len(),
                breaks.len()
            )));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidFunction(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if breaks.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidFunction(
                "non-finite breakpoint or value".into(),
            ));
        }
        Ok(Self { breaks, values })
    }

    /// Same as [`new`](Self::new) but with the values at ±∞ given explicitly;
    /// they must match the outermost pieces.
    pub fn with_limits(
        breaks: Vec<f64>,
        values: Vec<f64>,
        minus_inf: f64,
        plus_inf: f64,
    ) -> Result<Self> {
        let pc = Self::new(breaks, values)?;
        if pc.minus_inf() != minus_inf || pc.plus_inf() != plus_inf {
            return Err(Error::InvalidFunction(
                "values at ±∞ disagree with the outer pieces".into(),
            ));
        }
        Ok(pc)
    }

    /// `-λ` on `(-∞, 0)`, `+λ` on `[0, ∞)`.
    pub fn chordal() -> Self {
        Self {
            breaks: vec![0.0],
            values: vec![-LAMBDA, LAMBDA],
        }
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn minus_inf(&self) -> f64 {
        self.values[0]
    }

    pub fn plus_inf(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.values[self.breaks.partition_point(|&b| b <= x)]
    }

    pub fn left_limit(&self, x: f64) -> f64 {
        self.values[self.breaks.partition_point(|&b| b < x)]
    }

    pub fn right_limit(&self, x: f64) -> f64 {
        self.values[self.breaks.partition_point(|&b| b <= x)]
    }

    /// Pieces as `(lo, hi, value)` with infinite outer ends.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let n = self.breaks.len();
        (0..=n).map(move |k| {
            let lo = if k == 0 {
                f64::NEG_INFINITY
            } else {
                self.breaks[k - 1]
            };
            let hi = if k == n {
                f64::INFINITY
            } else {
                self.breaks[k]
            };
            (lo, hi, self.values[k])
        })
    }

    /// Adds a constant to every value.
    pub fn shifted(&self, by: f64) -> Self {
        Self {
            breaks: self.breaks.clone(),
            values: self.values.iter().map(|v| v + by).collect(),
        }
    }

    /// Multiplies every value by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            breaks: self.breaks.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Regulated function given through callbacks.
#[derive(Clone)]
pub struct GeneralFunction {
    eval: RealFn,
    left: RealFn,
    right: RealFn,
    minus_inf: f64,
    plus_inf: f64,
    breaks: Vec<f64>,
}

impl GeneralFunction {
    pub fn new(
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        left_limit: impl Fn(f64) -> f64 + Send + Sync + 'static,
        right_limit: impl Fn(f64) -> f64 + Send + Sync + 'static,
        minus_inf: f64,
        plus_inf: f64,
    ) -> Result<Self> {
        if !minus_inf.is_finite() || !plus_inf.is_finite() {
            return Err(Error::InvalidFunction("limits at ±∞ must be finite".into()));
        }
        Ok(Self {
            eval: Arc::new(eval),
            left: Arc::new(left_limit),
            right: Arc::new(right_limit),
            minus_inf,
            plus_inf,
            breaks: Vec::new(),
        })
    }

    /// Continuous on `ℝ∖{0}` with a possible jump at 0 handled by the side
    /// convention.
    pub fn continuous(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        minus_inf: f64,
        plus_inf: f64,
    ) -> Result<Self> {
        let f: RealFn = Arc::new(f);
        let (a, b, c) = (f.clone(), f.clone(), f);
        let mut g = Self::new(
            move |x| a(x),
            move |x| b(x),
            move |x| c(x),
            minus_inf,
            plus_inf,
        )?;
        g.breaks = vec![0.0];
        Ok(g)
    }

    /// Known discontinuity locations (always probed).
    pub fn with_breaks(mut self, breaks: Vec<f64>) -> Self {
        self.breaks = breaks;
        self
    }
}

impl fmt::Debug for GeneralFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralFunction")
            .field("minus_inf", &self.minus_inf)
            .field("plus_inf", &self.plus_inf)
            .field("breaks", &self.breaks)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug)]
pub enum BoundaryFunction {
    PiecewiseConstant(PiecewiseConstant),
    General(GeneralFunction),
}

impl BoundaryFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::PiecewiseConstant(p) => p.eval(x),
            Self::General(g) => {
                if x == f64::NEG_INFINITY {
                    g.minus_inf
                } else if x == f64::INFINITY {
                    g.plus_inf
                } else {
                    (g.eval)(x)
                }
            }
        }
    }

    pub fn left_limit(&self, x: f64) -> f64 {
        match self {
            Self::PiecewiseConstant(p) => p.left_limit(x),
            Self::General(g) => (g.left)(x),
        }
    }

    pub fn right_limit(&self, x: f64) -> f64 {
        match self {
            Self::PiecewiseConstant(p) => p.right_limit(x),
            Self::General(g) => (g.right)(x),
        }
    }

    pub fn minus_inf(&self) -> f64 {
        match self {
            Self::PiecewiseConstant(p) => p.minus_inf(),
            Self::General(g) => g.minus_inf,
        }
    }

    pub fn plus_inf(&self) -> f64 {
        match self {
            Self::PiecewiseConstant(p) => p.plus_inf(),
            Self::General(g) => g.plus_inf,
        }
    }

    /// Known discontinuities: all breakpoints for the piecewise variant.
    pub fn breaks(&self) -> &[f64] {
        match self {
            Self::PiecewiseConstant(p) => &p.breaks,
            Self::General(g) => &g.breaks,
        }
    }

    pub fn as_piecewise(&self) -> Option<&PiecewiseConstant> {
        match self {
            Self::PiecewiseConstant(p) => Some(p),
            Self::General(_) => None,
        }
    }

    /// `(λ/2)·tanh(x)`, the smooth bounded-variation example used throughout
    /// the tests and studies.
    pub fn half_tanh() -> Self {
        Self::General(
            GeneralFunction::continuous(|x| 0.5 * LAMBDA * x.tanh(), -0.5 * LAMBDA, 0.5 * LAMBDA)
                .unwrap(),
        )
    }
}

impl From<PiecewiseConstant> for BoundaryFunction {
    fn from(p: PiecewiseConstant) -> Self {
        Self::PiecewiseConstant(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityMargin {
    /// Gap from `±λ`.
    pub c: f64,
    /// Uniform bound on `|F|`.
    pub big_c: f64,
}

impl AdmissibilityMargin {
    pub fn new(c: f64, big_c: f64) -> Result<Self> {
        if !(c > 0.0) || !(big_c >= LAMBDA) {
            return Err(Error::InvalidConfig(format!(
                "margin needs c > 0 and C ≥ λ, got c={c}, C={big_c}"
            )));
        }
        Ok(Self { c, big_c })
    }
}

/// `F = λ(1 + ρᴿ([0,x]))` on `[0,∞)`, `F = -λ(1 + ρᴸ((x,0]))` on `(-∞,0)`.
pub fn measure_to_function(p: &MeasurePair) -> BoundaryFunction {
    if p.is_atomic() {
        let mut breaks = Vec::new();
        let mut values = Vec::new();
        // left side, accumulated from the origin outward
        let mut acc: f64 = p
            .left
            .atoms()
            .iter()
            .filter(|a| a.location == 0.0)
            .map(|a| a.mass)
            .sum();
        let mut left_pieces = vec![-LAMBDA * (1.0 + acc)];
        let mut left_breaks = Vec::new();
        for a in p.left.atoms().iter().rev() {
            if a.location < 0.0 {
                acc += a.mass;
                left_breaks.push(a.location);
                left_pieces.push(-LAMBDA * (1.0 + acc));
            }
        }
        left_breaks.reverse();
        left_pieces.reverse();
        breaks.extend(left_breaks);
        values.extend(left_pieces);
        // the origin always separates the two sides
        let r0: f64 = p
            .right
            .atoms()
            .iter()
            .filter(|a| a.location == 0.0)
            .map(|a| a.mass)
            .sum();
        let mut acc = r0;
        breaks.push(0.0);
        values.push(LAMBDA * (1.0 + acc));
        for a in p.right.atoms() {
            if a.location > 0.0 {
                acc += a.mass;
                breaks.push(a.location);
                values.push(LAMBDA * (1.0 + acc));
            }
        }
        return BoundaryFunction::PiecewiseConstant(simplify(breaks, values));
    }

    let pair = Arc::new(p.clone());
    let (p1, p2, p3) = (pair.clone(), pair.clone(), pair.clone());
    let eval = move |x: f64| {
        if x >= 0.0 {
            LAMBDA * (1.0 + p1.right.cumulative(x))
        } else {
            -LAMBDA * (1.0 + p1.left.cumulative(x))
        }
    };
    let left_limit = move |x: f64| {
        if x > 0.0 {
            LAMBDA * (1.0 + p2.right.cumulative_other(x))
        } else {
            // F(x⁻) for x ≤ 0 includes the atom at x
            -LAMBDA * (1.0 + p2.left.cumulative_other(x))
        }
    };
    let right_limit = move |x: f64| {
        if x >= 0.0 {
            LAMBDA * (1.0 + p3.right.cumulative(x))
        } else {
            -LAMBDA * (1.0 + p3.left.cumulative(x))
        }
    };
    let minus_inf = -LAMBDA * (1.0 + p.left.total_mass());
    let plus_inf = LAMBDA * (1.0 + p.right.total_mass());
    let mut breaks: Vec<f64> = p
        .left
        .atoms()
        .iter()
        .chain(p.right.atoms())
        .map(|a| a.location)
        .collect();
    breaks.push(0.0);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let g = GeneralFunction::new(eval, left_limit, right_limit, minus_inf, plus_inf)
        .expect("finite measure gives finite limits")
        .with_breaks(breaks);
    BoundaryFunction::General(g)
}

/// Drops breakpoints across which the value does not change.
fn simplify(breaks: Vec<f64>, values: Vec<f64>) -> PiecewiseConstant {
    let mut b2 = Vec::with_capacity(breaks.len());
    let mut v2 = vec![values[0]];
    for (b, v) in breaks.into_iter().zip(values.into_iter().skip(1)) {
        if v != *v2.last().unwrap() {
            b2.push(b);
            v2.push(v);
        }
    }
    PiecewiseConstant {
        breaks: b2,
        values: v2,
    }
}

/// Inverse of [`measure_to_function`] on piecewise-constant data.
pub fn function_to_measure(f: &BoundaryFunction) -> Result<MeasurePair> {
    let pc = f.as_piecewise().ok_or(Error::NotPiecewiseConstant)?;
    let mut left = Vec::new();
    let mut right = Vec::new();
    let f0m = pc.left_limit(0.0);
    let f0p = pc.right_limit(0.0);
    let m0l = -f0m / LAMBDA - 1.0;
    let m0r = f0p / LAMBDA - 1.0;
    if m0l != 0.0 {
        left.push(Atom {
            location: 0.0,
            mass: m0l,
        });
    }
    if m0r != 0.0 {
        right.push(Atom {
            location: 0.0,
            mass: m0r,
        });
    }
    for &b in pc.breaks() {
        if b == 0.0 {
            continue;
        }
        let jump = (pc.right_limit(b) - pc.left_limit(b)) / LAMBDA;
        if jump == 0.0 {
            continue;
        }
        if b < 0.0 {
            left.push(Atom {
                location: b,
                mass: jump,
            });
        } else {
            right.push(Atom {
                location: b,
                mass: jump,
            });
        }
    }
    MeasurePair::new(
        RadonMeasure::atomic(Side::Negative, left)?,
        RadonMeasure::atomic(Side::Positive, right)?,
    )
}

fn admissible_at(x_nonneg: bool, v: f64, margin: &AdmissibilityMargin) -> bool {
    if v.abs() > margin.big_c {
        return false;
    }
    if x_nonneg {
        v >= -LAMBDA + margin.c
    } else {
        v <= LAMBDA - margin.c
    }
}

/// Checks `F ≤ λ-c` on `(-∞,0)`, `F ≥ -λ+c` on `[0,∞)` and `|F| ≤ C`.
/// Exact for the piecewise-constant variant (the probe grid is ignored);
/// sampled on `probe` plus one-sided limits and ±∞ otherwise.
pub fn check_admissible(f: &BoundaryFunction, margin: &AdmissibilityMargin, probe: &[f64]) -> bool {
    match f {
        BoundaryFunction::PiecewiseConstant(pc) => pc.pieces().all(|(lo, hi, v)| {
            // a piece [lo, hi) meets (-∞,0) iff lo < 0 and [0,∞) iff hi > 0;
            // a break at exactly 0 belongs to the right piece
            let meets_neg = lo < 0.0;
            let meets_pos = hi > 0.0;
            (!meets_neg || admissible_at(false, v, margin))
                && (!meets_pos || admissible_at(true, v, margin))
        }),
        BoundaryFunction::General(_) => {
            let ends = admissible_at(false, f.minus_inf(), margin)
                && admissible_at(true, f.plus_inf(), margin);
            ends && probe.iter().chain(f.breaks()).all(|&x| {
                let nonneg = x >= 0.0;
                admissible_at(nonneg, f.eval(x), margin)
                    && admissible_at(x > 0.0, f.left_limit(x), margin)
                    && admissible_at(nonneg, f.right_limit(x), margin)
            })
        }
    }
}

/// Default probe grid: symmetric geometric grid out to `±10³` plus a linear
/// core on `[-4, 4]`.
pub fn default_probe_grid() -> Vec<f64> {
    let mut xs = vec![0.0];
    let mut r = 1e-4;
    while r <= 1e3 {
        xs.push(r);
        xs.push(-r);
        r *= 1.05;
    }
    for k in 1..=800 {
        let x = k as f64 * 0.005;
        xs.push(x);
        xs.push(-x);
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

/// Uniform piecewise-constant approximation with `sup |F - Fₙ| ≤ eps`, built
/// by quantising the range of `F` into bands of width `2·eps` (level sets),
/// separately on each half-line. Breakpoints are located by bisection between
/// probe points. Passing `preserve` fails when `c - eps ≤ 0`.
pub fn approximate(
    f: &BoundaryFunction,
    eps: f64,
    preserve: Option<&AdmissibilityMargin>,
) -> Result<PiecewiseConstant> {
    if !(eps > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "approximation tolerance must be positive, got {eps}"
        )));
    }
    if let Some(m) = preserve {
        if m.c - eps <= 0.0 {
            return Err(Error::AdmissibilityLost { margin: m.c, eps });
        }
    }
    let g = match f {
        BoundaryFunction::PiecewiseConstant(pc) => return Ok(pc.clone()),
        BoundaryFunction::General(g) => g,
    };
    let level = |v: f64| (v / (2.0 * eps)).round() * (2.0 * eps);

    // far enough out that the tails sit within eps/2 of the limits
    let mut reach = 1e3;
    while reach < 1e12
        && ((g.eval)(reach) - g.plus_inf)
            .abs()
            .max(((g.eval)(-reach) - g.minus_inf).abs())
            > 0.5 * eps
    {
        reach *= 4.0;
    }
    let mut probe: Vec<f64> = default_probe_grid()
        .into_iter()
        .map(|x| x * reach / 1e3)
        .collect();
    probe.extend(g.breaks.iter().copied().filter(|b| b.abs() < reach));
    probe.sort_by(f64::total_cmp);
    probe.dedup();

    let value_at = |x: f64| (g.eval)(x);
    let mut breaks: Vec<f64> = Vec::new();
    // the tails keep the exact limits: they are already within eps/2 of them
    let mut values: Vec<f64> = vec![g.minus_inf];
    let push = |b: f64, v: f64, breaks: &mut Vec<f64>, values: &mut Vec<f64>| {
        if v != *values.last().unwrap() {
            if breaks.last().is_some_and(|&l| l >= b) {
                *values.last_mut().unwrap() = v;
            } else {
                breaks.push(b);
                values.push(v);
            }
        }
    };

    // leftmost probe: the tail value holds out to -reach
    let mut prev_x = probe[0];
    let mut prev_level = level(value_at(prev_x));
    push(prev_x, prev_level, &mut breaks, &mut values);
    for &x in &probe[1..] {
        let lv = level(value_at(x));
        let jump_at_x = g.breaks.contains(&x) || x == 0.0;
        if lv != prev_level {
            if jump_at_x {
                // discontinuity sits exactly on the probe point: left limit
                // governs (prev, x), the side convention decides x itself
                let ll = level((g.left)(x));
                if ll != prev_level {
                    let b = bisect_level(&value_at, &level, prev_x, x, prev_level);
                    push(b, ll, &mut breaks, &mut values);
                }
                push(x, lv, &mut breaks, &mut values);
            } else {
                let b = bisect_level(&value_at, &level, prev_x, x, prev_level);
                push(b, lv, &mut breaks, &mut values);
            }
        } else if jump_at_x {
            let ll = level((g.left)(x));
            if ll != prev_level {
                let b = bisect_level(&value_at, &level, prev_x, x, prev_level);
                push(b, ll, &mut breaks, &mut values);
                push(x, lv, &mut breaks, &mut values);
            }
        }
        prev_x = x;
        prev_level = lv;
    }
    push(reach * 1.0000001, g.plus_inf, &mut breaks, &mut values);
    Ok(simplify(breaks, values))
}

/// First point in `(a, b]` where the level differs from `level_a`, to
/// within floating resolution.
fn bisect_level(
    value_at: &impl Fn(f64) -> f64,
    level: &impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    level_a: f64,
) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if level(value_at(mid)) == level_a {
            a = mid;
        } else {
            b = mid;
        }
    }
    b
}

/// Replaces the density part of `m` by at most `n` atoms (plus the original
/// atoms): the continuous mass is cut outward from the origin into chunks of
/// equal total variation, additionally split at original atom locations, and
/// each chunk's signed mass is placed at its outer end. Total mass is
/// preserved; `ρᴿ([0, x])` matches the input at every output atom, and on the
/// negative side `ρᴸ([x, 0])` does.
pub fn quantize_measure(m: &RadonMeasure, n: usize) -> Result<RadonMeasure> {
    if n == 0 {
        return Err(Error::InvalidConfig("quantize_measure needs n ≥ 1".into()));
    }
    if m.is_atomic() {
        return Ok(m.clone());
    }
    // distance-from-origin coordinates so both sides walk outward
    let sign = match m.side {
        Side::Positive => 1.0,
        Side::Negative => -1.0,
    };
    let mut pieces: Vec<(f64, f64, f64)> = m
        .density
        .iter()
        .map(|p| {
            let (a, b) = (p.start * sign, p.end * sign);
            (a.min(b), a.max(b), p.density)
        })
        .collect();
    pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
    let tv: f64 = pieces.iter().map(|p| (p.1 - p.0) * p.2.abs()).sum();
    let chunk = tv / n as f64;
    let mut cuts: Vec<f64> = m.atoms.iter().map(|a| a.location * sign).collect();
    let mut acc = 0.0;
    let mut next = 1;
    for &(a, b, d) in &pieces {
        let w = (b - a) * d.abs();
        while next < n && acc + w >= chunk * next as f64 && d != 0.0 {
            let need = chunk * next as f64 - acc;
            cuts.push(a + need / d.abs());
            next += 1;
        }
        acc += w;
    }
    if let Some(last) = pieces.last() {
        cuts.push(last.1);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut atoms: Vec<Atom> = m.atoms.clone();
    let mut lo = 0.0;
    for &c in &cuts {
        let mass: f64 = pieces
            .iter()
            .map(|&(a, b, d)| {
                let (s, e) = (a.max(lo), b.min(c));
                if e > s {
                    d * (e - s)
                } else {
                    0.0
                }
            })
            .sum();
        if mass != 0.0 {
            atoms.push(Atom {
                location: c * sign,
                mass,
            });
        }
        lo = c;
    }
    RadonMeasure::atomic(m.side, atoms)
}

pub fn quantize_pair(p: &MeasurePair, n: usize) -> Result<MeasurePair> {
    MeasurePair::new(
        quantize_measure(&p.left, n)?,
        quantize_measure(&p.right, n)?,
    )
}

/// Boundary data as read from JSON configuration. Either a measure pair
///
/// ```json
/// {"atomsL": [[x, mass]], "atomsR": [...], "densityL": [[a, b, value]], "densityR": [...]}
/// ```
///
/// or piecewise-constant data
///
/// ```json
/// {"piecewise": {"breaks": [...], "values": [...], "minusInf": v, "plusInf": v}}
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundarySpec {
    Piecewise { piecewise: PiecewiseSpec },
    Measures(MeasureSpec),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    #[serde(rename = "atomsL", default)]
    pub atoms_l: Vec<[f64; 2]>,
    #[serde(rename = "atomsR", default)]
    pub atoms_r: Vec<[f64; 2]>,
    #[serde(rename = "densityL", default)]
    pub density_l: Vec<[f64; 3]>,
    #[serde(rename = "densityR", default)]
    pub density_r: Vec<[f64; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseSpec {
    pub breaks: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(rename = "minusInf")]
    pub minus_inf: f64,
    #[serde(rename = "plusInf")]
    pub plus_inf: f64,
}

impl BoundarySpec {
    pub fn to_pair(&self) -> Result<MeasurePair> {
        match self {
            Self::Measures(m) => {
                let atoms = |v: &[[f64; 2]]| {
                    v.iter()
                        .map(|a| Atom {
                            location: a[0],
                            mass: a[1],
                        })
                        .collect()
                };
                let dens = |v: &[[f64; 3]]| {
                    v.iter()
                        .map(|d| DensityPiece {
                            start: d[0],
                            end: d[1],
                            density: d[2],
                        })
                        .collect()
                };
                MeasurePair::new(
                    RadonMeasure::new(Side::Negative, atoms(&m.atoms_l), dens(&m.density_l))?,
                    RadonMeasure::new(Side::Positive, atoms(&m.atoms_r), dens(&m.density_r))?,
                )
            }
            Self::Piecewise { .. } => function_to_measure(&self.to_function()?),
        }
    }

    pub fn to_function(&self) -> Result<BoundaryFunction> {
        match self {
            Self::Piecewise { piecewise: p } => Ok(PiecewiseConstant::with_limits(
                p.breaks.clone(),
                p.values.clone(),
                p.minus_inf,
                p.plus_inf,
            )?
            .into()),
            Self::Measures(_) => Ok(measure_to_function(&self.to_pair()?)),
        }
    }

    pub fn from_pair(p: &MeasurePair) -> Self {
        Self::Measures(MeasureSpec {
            atoms_l: p.left.atoms.iter().map(|a| [a.location, a.mass]).collect(),
            atoms_r: p.right.atoms.iter().map(|a| [a.location, a.mass]).collect(),
            density_l: p
                .left
                .density
                .iter()
                .map(|d| [d.start, d.end, d.density])
                .collect(),
            density_r: p
                .right
                .density
                .iter()
                .map(|d| [d.start, d.end, d.density])
                .collect(),
        })
    }
}

/// The half-tanh pair: atoms of mass `-1` at `0⁻` and `0⁺` plus density
/// `sech²/2` on both half-lines, sampled on a grid out to `±reach`.
pub fn half_tanh_pair(nodes_per_unit: usize, reach: f64) -> MeasurePair {
    let n = (reach * nodes_per_unit as f64).ceil() as usize;
    let pos: Vec<f64> = (1..=n).map(|k| k as f64 / nodes_per_unit as f64).collect();
    let neg: Vec<f64> = pos.iter().map(|x| -x).collect();
    let right = RadonMeasure::from_cumulative(
        Side::Positive,
        vec![Atom {
            location: 0.0,
            mass: -1.0,
        }],
        |x| 0.5 * x.tanh(),
        &pos,
    )
    .unwrap();
    let left = RadonMeasure::from_cumulative(
        Side::Negative,
        vec![Atom {
            location: 0.0,
            mass: -1.0,
        }],
        |x| 0.5 * (-x).tanh(),
        &neg,
    )
    .unwrap();
    MeasurePair::new(left, right).unwrap()
}

/// The measure pair of `f`, exact for piecewise-constant data; otherwise the
/// continuous part is sampled on nodes spaced `1/nodes_per_unit` out to
/// `±reach`, with the jumps at `0±` kept as atoms.
pub fn sampled_pair(
    f: &BoundaryFunction,
    nodes_per_unit: usize,
    reach: f64,
) -> Result<MeasurePair> {
    if f.as_piecewise().is_some() {
        return function_to_measure(f);
    }
    if nodes_per_unit == 0 || !(reach > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "sampling needs nodes_per_unit ≥ 1 and reach > 0 (got {nodes_per_unit}, {reach})"
        )));
    }
    let n = (reach * nodes_per_unit as f64).ceil() as usize;
    let pos: Vec<f64> = (1..=n).map(|k| k as f64 / nodes_per_unit as f64).collect();
    let neg: Vec<f64> = pos.iter().map(|x| -x).collect();
    let (fp, fm) = (f.right_limit(0.0), f.left_limit(0.0));
    let atom = |mass: f64| {
        if mass == 0.0 {
            vec![]
        } else {
            vec![Atom {
                location: 0.0,
                mass,
            }]
        }
    };
    let right = RadonMeasure::from_cumulative(
        Side::Positive,
        atom(fp / LAMBDA - 1.0),
        |x| (f.eval(x) - fp) / LAMBDA,
        &pos,
    )?;
    let left = RadonMeasure::from_cumulative(
        Side::Negative,
        atom(-fm / LAMBDA - 1.0),
        |x| -(f.eval(x) - fm) / LAMBDA,
        &neg,
    )?;
    MeasurePair::new(left, right)
}

/// Maps boundary data through the reversal `z ↦ -1/z` combined with the sign
/// flip of the field: `F̃(y) = -F(-1/y)`.
pub fn reversed_function(f: &PiecewiseConstant) -> PiecewiseConstant {
    // a breakpoint b ≠ 0 maps to -1/b; the origin and ±∞ swap
    let mut pieces: Vec<(f64, f64, f64)> = Vec::new();
    for (lo, hi, v) in f.pieces() {
        let map = |x: f64| {
            if x == 0.0 {
                // approached from the side of the piece
                if hi <= 0.0 {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                }
            } else if x.is_infinite() {
                0.0
            } else {
                -1.0 / x
            }
        };
        if lo < 0.0 && hi > 0.0 {
            // piece straddles the origin: split it
            pieces.push((map_pt(lo, false), f64::INFINITY, -v));
            pieces.push((f64::NEG_INFINITY, map_pt(hi, true), -v));
        } else {
            let (a, b) = (map(lo), map(hi));
            pieces.push((a.min(b), a.max(b), -v));
        }
    }
    pieces.retain(|p| p.1 > p.0);
    pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut breaks = Vec::new();
    let mut values = vec![pieces[0].2];
    for p in &pieces[1..] {
        breaks.push(p.0);
        values.push(p.2);
    }
    simplify(breaks, values)
}

fn map_pt(x: f64, positive_side: bool) -> f64 {
    if x.is_infinite() {
        0.0
    } else if x == 0.0 {
        if positive_side {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    } else {
        -1.0 / x
    }
}

/// Measure pair of the time-reversed process: `F̃(y) = -F(-1/y)` converted
/// back to measures.
pub fn reversed_pair(p: &MeasurePair) -> Result<MeasurePair> {
    let f = measure_to_function(p);
    let pc = f.as_piecewise().ok_or(Error::NotPiecewiseConstant)?;
    function_to_measure(&reversed_function(pc).into())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sech2_right() -> RadonMeasure {
        let nodes: Vec<f64> = (1..=4000).map(|k| k as f64 * 0.01).collect();
        RadonMeasure::from_cumulative(
            Side::Positive,
            vec![Atom {
                location: 0.0,
                mass: -1.0,
            }],
            |x| 0.5 * x.tanh(),
            &nodes,
        )
        .unwrap()
    }

    #[test]
    fn cdf_right_examples() {
        assert_eq!(cdf_right(&RadonMeasure::empty(Side::Positive), 5.0), 0.0);
        let m = RadonMeasure::atomic(
            Side::Positive,
            vec![Atom {
                location: 1.0,
                mass: 0.75,
            }],
        )
        .unwrap();
        assert_eq!(cdf_right(&m, 2.0), 0.75);
        assert_eq!(cdf_right(&m, 1.0), 0.75);
        assert_eq!(cdf_right(&m, 0.999), 0.0);
        let want = -1.0 + 0.5 * 1f64.tanh();
        assert!((cdf_right(&sech2_right(), 1.0) - want).abs() < 1e-14);
    }

    #[test]
    fn cdf_left_examples() {
        assert_eq!(cdf_left(&RadonMeasure::empty(Side::Negative), -1.0), 0.0);
        let m = RadonMeasure::atomic(
            Side::Negative,
            vec![Atom {
                location: -0.5,
                mass: 0.3,
            }],
        )
        .unwrap();
        assert_eq!(cdf_left(&m, -1.0), 0.3);
        assert_eq!(cdf_left(&m, -0.25), 0.0);
        // (x, 0] excludes x itself
        assert_eq!(cdf_left(&m, -0.5), 0.0);
    }

    #[test]
    fn rejects_atoms_on_wrong_side() {
        assert!(RadonMeasure::atomic(
            Side::Positive,
            vec![Atom {
                location: -1.0,
                mass: 1.0
            }]
        )
        .is_err());
        assert!(RadonMeasure::atomic(
            Side::Negative,
            vec![Atom {
                location: 0.5,
                mass: 1.0
            }]
        )
        .is_err());
        assert!(MeasurePair::new(
            RadonMeasure::empty(Side::Positive),
            RadonMeasure::empty(Side::Positive)
        )
        .is_err());
    }

    #[test]
    fn chordal_data_from_empty_pair() {
        let f = measure_to_function(&MeasurePair::empty());
        let pc = f.as_piecewise().unwrap();
        assert_eq!(pc, &PiecewiseConstant::chordal());
        assert_eq!(f.eval(3.0), LAMBDA);
        assert_eq!(f.eval(0.0), LAMBDA);
        assert_eq!(f.eval(-3.0), -LAMBDA);
    }

    #[test]
    fn single_right_atom_gives_step() {
        let p = MeasurePair::atomic(&[], &[(1.0, 1.0)]).unwrap();
        let f = measure_to_function(&p);
        assert_eq!(f.eval(0.5), LAMBDA);
        assert_eq!(f.eval(1.0), 2.0 * LAMBDA);
        assert_eq!(f.eval(7.0), 2.0 * LAMBDA);
        assert_eq!(f.eval(-2.0), -LAMBDA);
        let back = function_to_measure(&f).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn smooth_pair_gives_half_tanh() {
        let right = sech2_right();
        let p = MeasurePair::new(RadonMeasure::empty(Side::Negative), right).unwrap();
        let f = measure_to_function(&p);
        for &x in &[0.0, 0.3, 1.0, 2.5, 10.0] {
            assert!(
                (f.eval(x) - 0.5 * LAMBDA * f64::tanh(x)).abs() < 1e-5,
                "x={x}"
            );
        }
        // grid nodes are exact
        assert!((f.eval(1.0) - 0.5 * LAMBDA * 1f64.tanh()).abs() < 1e-14);
    }

    #[test]
    fn function_to_measure_examples() {
        let chordal: BoundaryFunction = PiecewiseConstant::chordal().into();
        let p = function_to_measure(&chordal).unwrap();
        assert!(p.left().atoms().is_empty() && p.right().atoms().is_empty());

        let f: BoundaryFunction =
            PiecewiseConstant::new(vec![0.0, 1.0], vec![-LAMBDA, LAMBDA, 2.0 * LAMBDA])
                .unwrap()
                .into();
        let p = function_to_measure(&f).unwrap();
        assert_eq!(
            p.right().atoms(),
            &[Atom {
                location: 1.0,
                mass: 1.0
            }]
        );

        let f: BoundaryFunction = PiecewiseConstant::new(vec![0.0], vec![-LAMBDA, 0.0])
            .unwrap()
            .into();
        let p = function_to_measure(&f).unwrap();
        assert_eq!(
            p.right().atoms(),
            &[Atom {
                location: 0.0,
                mass: -1.0
            }]
        );

        assert_eq!(
            function_to_measure(&BoundaryFunction::half_tanh()),
            Err(Error::NotPiecewiseConstant)
        );
    }

    #[test]
    fn left_atoms_round_trip() {
        let p = MeasurePair::atomic(
            &[(-2.0, 0.5), (-0.5, -0.25), (0.0, 0.125)],
            &[(0.0, -0.5), (3.0, 0.75)],
        )
        .unwrap();
        let f = measure_to_function(&p);
        assert_eq!(f.eval(-1.0), -LAMBDA * (1.0 - 0.25 + 0.125));
        assert_eq!(f.eval(-0.5), -LAMBDA * (1.0 + 0.125));
        assert_pair_close(&function_to_measure(&f).unwrap(), &p, 1e-12);
    }

    fn assert_pair_close(a: &MeasurePair, b: &MeasurePair, tol: f64) {
        for (x, y) in [(a.left(), b.left()), (a.right(), b.right())] {
            assert_eq!(x.atoms().len(), y.atoms().len(), "{a:?} vs {b:?}");
            for (u, v) in x.atoms().iter().zip(y.atoms()) {
                assert_eq!(u.location, v.location);
                assert!((u.mass - v.mass).abs() <= tol, "{u:?} vs {v:?}");
            }
        }
    }

    #[test]
    fn admissibility_examples() {
        let probe = default_probe_grid();
        let m = AdmissibilityMargin::new(0.1 * LAMBDA, LAMBDA).unwrap();
        assert!(check_admissible(
            &PiecewiseConstant::chordal().into(),
            &m,
            &probe
        ));
        let bad: BoundaryFunction =
            PiecewiseConstant::new(vec![0.0, 1.0], vec![-LAMBDA, LAMBDA, -1.5 * LAMBDA])
                .unwrap()
                .into();
        let wide = AdmissibilityMargin::new(0.1 * LAMBDA, 2.0 * LAMBDA).unwrap();
        assert!(!check_admissible(&bad, &wide, &probe));
        let m = AdmissibilityMargin::new(0.4 * LAMBDA, LAMBDA).unwrap();
        assert!(check_admissible(&BoundaryFunction::half_tanh(), &m, &probe));
        // C bound
        let tall: BoundaryFunction = PiecewiseConstant::new(vec![0.0], vec![-LAMBDA, 1.5 * LAMBDA])
            .unwrap()
            .into();
        assert!(!check_admissible(
            &tall,
            &AdmissibilityMargin::new(0.1, LAMBDA).unwrap(),
            &probe
        ));
        assert!(AdmissibilityMargin::new(0.0, LAMBDA).is_err());
        assert!(AdmissibilityMargin::new(0.1, 1.0).is_err());
    }

    #[test]
    fn piece_straddling_origin_checked_on_both_sides() {
        // F ≡ 0.95λ everywhere: fine on [0,∞), too high on (-∞,0) for c=0.1λ
        let f: BoundaryFunction = PiecewiseConstant::new(vec![], vec![0.95 * LAMBDA])
            .unwrap()
            .into();
        let m = AdmissibilityMargin::new(0.1 * LAMBDA, LAMBDA).unwrap();
        assert!(!check_admissible(&f, &m, &[]));
        let f: BoundaryFunction = PiecewiseConstant::new(vec![], vec![0.0]).unwrap().into();
        assert!(check_admissible(&f, &m, &[]));
    }

    fn sup_error(f: &BoundaryFunction, g: &PiecewiseConstant) -> f64 {
        let mut xs = default_probe_grid();
        xs.extend(g.breaks().iter().copied());
        xs.extend(g.breaks().iter().map(|b| b + 1e-9));
        xs.extend(g.breaks().iter().map(|b| b - 1e-9));
        let mut worst: f64 = 0.0;
        for x in xs {
            worst = worst.max((f.eval(x) - g.eval(x)).abs());
        }
        worst
            .max((f.plus_inf() - g.plus_inf()).abs())
            .max((f.minus_inf() - g.minus_inf()).abs())
    }

    #[test]
    fn approximate_is_identity_on_piecewise() {
        let pc = PiecewiseConstant::new(vec![-1.0, 0.0, 2.0], vec![0.1, -0.2, 0.3, 0.4]).unwrap();
        assert_eq!(approximate(&pc.clone().into(), 0.01, None).unwrap(), pc);
    }

    #[test]
    fn approximate_half_tanh() {
        let f = BoundaryFunction::half_tanh();
        let a = approximate(&f, LAMBDA / 8.0, None).unwrap();
        assert!(a.values().len() <= 8, "{} levels", a.values().len());
        assert!(sup_error(&f, &a) <= LAMBDA / 8.0 + 1e-12);
        let b = approximate(&f, LAMBDA / 16.0, None).unwrap();
        assert!(sup_error(&f, &b) <= LAMBDA / 16.0 + 1e-12);
        assert!(b.breaks().len() <= 2 * a.breaks().len() + 2);
    }

    #[test]
    fn approximate_preserving_margin() {
        let f = BoundaryFunction::half_tanh();
        let m = AdmissibilityMargin::new(0.4 * LAMBDA, LAMBDA).unwrap();
        let a = approximate(&f, 0.1 * LAMBDA, Some(&m)).unwrap();
        let reduced = AdmissibilityMargin::new(0.3 * LAMBDA - 1e-12, LAMBDA).unwrap();
        assert!(check_admissible(&a.into(), &reduced, &[]));
        assert!(matches!(
            approximate(&f, 0.5 * LAMBDA, Some(&m)),
            Err(Error::AdmissibilityLost { .. })
        ));
    }

    #[test]
    fn quantize_examples() {
        let atomic = RadonMeasure::atomic(
            Side::Positive,
            vec![Atom {
                location: 1.0,
                mass: 0.3,
            }],
        )
        .unwrap();
        assert_eq!(quantize_measure(&atomic, 3).unwrap(), atomic);

        let nodes: Vec<f64> = (1..=4000).map(|k| k as f64 * 0.01).collect();
        let dens =
            RadonMeasure::from_cumulative(Side::Positive, vec![], |x| 0.5 * x.tanh(), &nodes)
                .unwrap();
        let q = quantize_measure(&dens, 1).unwrap();
        assert_eq!(q.atoms().len(), 1);
        assert!((q.atoms()[0].mass - 0.5).abs() < 1e-15);

        let gap = |q: &RadonMeasure| {
            let mut worst: f64 = 0.0;
            for k in 0..4000 {
                let x = k as f64 * 0.01 + 0.005;
                worst = worst.max((q.cumulative(x) - dens.cumulative(x)).abs());
            }
            worst
        };
        let mut last = f64::INFINITY;
        for n in [1, 2, 4, 8, 16, 32] {
            let q = quantize_measure(&dens, n).unwrap();
            assert!(q.atoms().len() <= n);
            let g = gap(&q);
            assert!(g <= last + 1e-15, "n={n}: {g} > {last}");
            assert!(g <= 0.5 / n as f64 + 1e-12);
            last = g;
        }
    }

    #[test]
    fn half_tanh_pair_reproduces_function() {
        let f = measure_to_function(&half_tanh_pair(50, 40.0));
        let g = BoundaryFunction::half_tanh();
        for x in [-30.0, -2.0, -0.5, -0.01, 0.0, 0.01, 0.5, 2.0, 30.0] {
            assert!(
                (f.eval(x) - g.eval(x)).abs() < LAMBDA / 50.0,
                "x={x}: {} vs {}",
                f.eval(x),
                g.eval(x)
            );
        }
    }

    #[test]
    fn quantize_matches_cdf_at_atoms_on_both_sides() {
        let p = half_tanh_pair(50, 40.0);
        for m in [p.left(), p.right()] {
            let q = quantize_measure(m, 7).unwrap();
            assert!(q.atoms().len() <= 7 + 1);
            assert!((q.total_mass() - m.total_mass()).abs() < 1e-14);
            for a in q.atoms() {
                // on the negative side the atom sits at the outer chunk end, so
                // the closed-interval mass is the one that matches
                let (got, want) = match m.side() {
                    Side::Positive => (q.cumulative(a.location), m.cumulative(a.location)),
                    Side::Negative => (
                        q.cumulative_other(a.location),
                        m.cumulative_other(a.location),
                    ),
                };
                assert!((got - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn sampled_half_tanh_matches_the_closed_form_pair() {
        let a = sampled_pair(&BoundaryFunction::half_tanh(), 50, 40.0).unwrap();
        let b = half_tanh_pair(50, 40.0);
        for x in [-3.0, -0.5, -0.01, 0.01, 0.7, 5.0] {
            let (fa, fb) = (
                measure_to_function(&a).eval(x),
                measure_to_function(&b).eval(x),
            );
            assert!((fa - fb).abs() < 1e-12, "{x}: {fa} vs {fb}");
        }
    }

    #[test]
    fn reversal_of_chordal_is_chordal() {
        assert_eq!(
            reversed_pair(&MeasurePair::empty()).unwrap(),
            MeasurePair::empty()
        );
    }

    #[test]
    fn reversal_of_right_atom() {
        // F = λ on [0,1), 2λ beyond; F̃(y) = -F(-1/y): -2λ on (-1,0), -λ below -1
        let p = MeasurePair::atomic(&[], &[(1.0, 1.0)]).unwrap();
        let r = reversed_pair(&p).unwrap();
        assert_eq!(
            r.left().atoms(),
            &[
                Atom {
                    location: -1.0,
                    mass: -1.0
                },
                Atom {
                    location: 0.0,
                    mass: 1.0
                }
            ]
        );
        assert!(r.right().atoms().is_empty());
        // involution
        assert_eq!(reversed_pair(&r).unwrap(), p);
    }

    #[test]
    fn spec_json_parses() {
        let s: BoundarySpec = serde_json::from_str(r#"{"atomsR": [[0.0, -1.5]]}"#).unwrap();
        let p = s.to_pair().unwrap();
        assert_eq!(
            p.right().atoms(),
            &[Atom {
                location: 0.0,
                mass: -1.5
            }]
        );
        let s: BoundarySpec = serde_json::from_str(
            r#"{"piecewise": {"breaks": [0.0], "values": [-1.5707963267948966, 1.5707963267948966],
                "minusInf": -1.5707963267948966, "plusInf": 1.5707963267948966}}"#,
        )
        .unwrap();
        assert_eq!(
            s.to_function().unwrap().as_piecewise().unwrap(),
            &PiecewiseConstant::chordal()
        );
        assert!(s.to_pair().unwrap().left().atoms().is_empty());
    }
}
