//! Mass and q-mass embeddings into projective coordinate space.
//!
//! A point of `P^S` is a sequence `[x_n | n ∈ Z]`, with `x_n` the (q-)mass of
//! `T^n k_x`. Every sequence produced here has the same shape: a left tail and a
//! right tail, each a geometric (or, at `q = 1`, affine) progression starting from
//! an anchor index. [`MassFunction`] stores an explicit window of values together
//! with both tails, so any index can be evaluated.
//!
//! For a canonical chart with triangle coordinates `(a, b, c)` (the q-masses of
//! `k_x`, `T k_x`, `O_X`) the sequence is
//!
//! ```text
//! [ ⋯ : a + cq + cq² : a + cq : a : b : b + c : b + c + cq⁻¹ : ⋯ ]
//! ```
//!
//! with `a` at index `twist`. On the wall `b = a + qc`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chart::{central_charge, phase_of_stable, ChartPoint, Region, StabilityPoint};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::hn::hn_oracle;
use crate::mukai::ObjectAtom;

/// Tolerance on the q-triangle margins, relative to `max(a, b, c)`.
pub const EPS_TRIANGLE: f64 = 1e-12;
/// Pattern-matching tolerance for normalized sequences.
pub const MATCH_TOL: f64 = 1e-9;
/// A normalized coordinate below this counts as zero.
pub const ZERO_TOL: f64 = 1e-10;
/// Default coordinate window.
pub const DEFAULT_WINDOW: Window = Window { lo: -16, hi: 16 };

const NEWTON_MAX_ITER: usize = 200;
const BISECTION_GRID: usize = 2000;

pub(crate) fn check_q(q: f64) -> Result<()> {
    if q.is_finite() && q > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("q must be a positive real, got {q}")))
    }
}

/// Closed integer interval of indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[i64; 2]", into = "[i64; 2]")]
pub struct Window {
    pub lo: i64,
    pub hi: i64,
}

impl Window {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidArgument(format!("empty window [{lo}, {hi}]")));
        }
        Ok(Window { lo, hi })
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, k: i64) -> bool {
        self.lo <= k && k <= self.hi
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<i64> {
        self.lo..=self.hi
    }

    pub fn shifted(&self, by: i64) -> Window {
        Window {
            lo: self.lo + by,
            hi: self.hi + by,
        }
    }
}

impl From<[i64; 2]> for Window {
    fn from(w: [i64; 2]) -> Self {
        Window { lo: w[0], hi: w[1] }
    }
}

impl From<Window> for [i64; 2] {
    fn from(w: Window) -> Self {
        [w.lo, w.hi]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailKind {
    Affine,
    Geometric,
}

/// A progression leaving `anchor` away from the kink.
///
/// For a right tail, `x_{anchor+j} = value + coefficient · (1 + ratio + ⋯ + ratio^{j−1})`;
/// a left tail is the mirror image, `x_{anchor−j}` with the same formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tail {
    pub kind: TailKind,
    pub anchor: i64,
    pub value: f64,
    pub coefficient: f64,
    pub ratio: f64,
}

/// `1 + r + ⋯ + r^{j−1}`.
fn geometric_sum(r: f64, j: u64) -> f64 {
    if j == 0 {
        0.0
    } else if r == 1.0 {
        j as f64
    } else {
        let jf = j as f64;
        // expm1/ln_1p keep the sum accurate for r near 1
        ((jf * (r - 1.0).ln_1p()).exp_m1()) / (r - 1.0)
    }
}

impl Tail {
    pub fn new(anchor: i64, value: f64, coefficient: f64, ratio: f64) -> Self {
        let kind = if ratio == 1.0 {
            TailKind::Affine
        } else {
            TailKind::Geometric
        };
        Tail {
            kind,
            anchor,
            value,
            coefficient,
            ratio,
        }
    }

    fn eval_steps(&self, j: u64) -> f64 {
        self.value + self.coefficient * geometric_sum(self.ratio, j)
    }

    fn scaled(self, s: f64) -> Self {
        Tail {
            value: self.value * s,
            coefficient: self.coefficient * s,
            ..self
        }
    }

    fn shifted(self, by: i64) -> Self {
        Tail {
            anchor: self.anchor + by,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tails {
    pub left: Tail,
    pub right: Tail,
}

impl Tails {
    /// Evaluates the sequence at any index. Indices strictly between the two anchors
    /// do not occur for well-formed tails (`right.anchor ≤ left.anchor + 1`).
    pub fn eval(&self, k: i64) -> f64 {
        if k >= self.right.anchor {
            self.right.eval_steps((k - self.right.anchor) as u64)
        } else if k <= self.left.anchor {
            self.left.eval_steps((self.left.anchor - k) as u64)
        } else {
            f64::NAN
        }
    }
}

/// Tails of `Σ s_i · f_i` for sequences sharing the left ratio and the right ratio.
///
/// Each summand must already be in its tail regime on the far side of the combined
/// anchors, which holds because the combined left anchor is the minimum of the left
/// anchors and the right anchor the maximum of the right anchors.
pub fn combine_tails(terms: &[(f64, Tails)]) -> Tails {
    let left_anchor = terms
        .iter()
        .map(|(_, t)| t.left.anchor)
        .min()
        .expect("nonempty combination");
    let right_anchor = terms
        .iter()
        .map(|(_, t)| t.right.anchor)
        .max()
        .expect("nonempty combination");
    let sum = |k: i64| terms.iter().map(|(s, t)| s * t.eval(k)).sum::<f64>();
    let left_inc = terms
        .iter()
        .map(|(s, t)| s * (t.eval(left_anchor - 1) - t.eval(left_anchor)))
        .sum();
    let right_inc = terms
        .iter()
        .map(|(s, t)| s * (t.eval(right_anchor + 1) - t.eval(right_anchor)))
        .sum();
    Tails {
        left: Tail::new(left_anchor, sum(left_anchor), left_inc, terms[0].1.left.ratio),
        right: Tail::new(right_anchor, sum(right_anchor), right_inc, terms[0].1.right.ratio),
    }
}

/// A point of projective mass space, restricted to a coordinate window and
/// extended beyond it by closed-form tails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassFunction {
    pub q: f64,
    pub window: Window,
    pub values: Vec<f64>,
    pub tail: Tails,
}

impl MassFunction {
    /// Materializes `tails` on `window`.
    pub fn from_tails(q: f64, window: Window, tail: Tails) -> Self {
        let values = window.indices().map(|k| tail.eval(k)).collect();
        MassFunction {
            q,
            window,
            values,
            tail,
        }
    }

    pub fn value_at(&self, k: i64) -> f64 {
        if self.window.contains(k) {
            self.values[(k - self.window.lo) as usize]
        } else {
            self.tail.eval(k)
        }
    }

    /// Values on an arbitrary window, using the tails outside the stored one.
    pub fn values_on(&self, window: Window) -> Vec<f64> {
        window.indices().map(|k| self.value_at(k)).collect()
    }

    /// Same point restricted to another window.
    pub fn rewindowed(&self, window: Window) -> MassFunction {
        MassFunction {
            q: self.q,
            window,
            values: self.values_on(window),
            tail: self.tail,
        }
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Divides by the sup over the window.
    pub fn normalized(&self) -> MassFunction {
        let s = self.sup();
        if s == 0.0 {
            return self.clone();
        }
        MassFunction {
            q: self.q,
            window: self.window,
            values: self.values.iter().map(|v| v / s).collect(),
            tail: Tails {
                left: self.tail.left.scaled(1.0 / s),
                right: self.tail.right.scaled(1.0 / s),
            },
        }
    }

    /// Applies `T`: moves every coordinate one index to the right.
    pub fn shifted(&self, by: i64) -> MassFunction {
        MassFunction {
            q: self.q,
            window: self.window.shifted(by),
            values: self.values.clone(),
            tail: Tails {
                left: self.tail.left.shifted(by),
                right: self.tail.right.shifted(by),
            },
        }
    }

    /// Sup-distance between the sup-normalized restrictions to the common window.
    pub fn projective_distance(&self, other: &MassFunction) -> f64 {
        let lo = self.window.lo.max(other.window.lo);
        let hi = self.window.hi.min(other.window.hi);
        if lo > hi {
            return f64::INFINITY;
        }
        let w = Window { lo, hi };
        let x = self.values_on(w);
        let y = other.values_on(w);
        let sx = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let sy = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if sx == 0.0 || sy == 0.0 {
            return if sx == sy { 0.0 } else { f64::INFINITY };
        }
        x.iter()
            .zip(&y)
            .map(|(a, b)| (a / sx - b / sy).abs())
            .fold(0.0, f64::max)
    }

    /// Projective equality on the common window, tolerance `1e-9` after normalization.
    pub fn projectively_eq(&self, other: &MassFunction) -> bool {
        self.projective_distance(other) <= MATCH_TOL
    }
}

/// Triangle coordinates `(a, b, c)`: q-masses of `k_x`, `T k_x`, `O_X` at a
/// canonical chart.
pub fn mass_abc(chart: &ChartPoint, q: f64) -> Result<(f64, f64, f64)> {
    check_q(q)?;
    if chart.region() == Region::WPlus {
        return Err(Error::InvalidRegion(
            "mass_abc expects a canonical chart (Im z <= 0)".into(),
        ));
    }
    Ok(q_masses(
        chart,
        q,
        [ObjectAtom::sky(0), ObjectAtom::sky(1), ObjectAtom::structure(0)],
    ))
}

/// q-masses of `(T^{-1} k_x, k_x, O_X)` at a chart in `W_+`, the coordinates of the
/// cell `Δ_{-1}`.
pub fn wplus_abc(chart: &ChartPoint, q: f64) -> Result<(f64, f64, f64)> {
    check_q(q)?;
    if chart.region() != Region::WPlus {
        return Err(Error::InvalidRegion("wplus_abc expects Im z > 0".into()));
    }
    Ok(q_masses(
        chart,
        q,
        [ObjectAtom::sky(-1), ObjectAtom::sky(0), ObjectAtom::structure(0)],
    ))
}

fn q_masses(chart: &ChartPoint, q: f64, atoms: [ObjectAtom; 3]) -> (f64, f64, f64) {
    let m = |atom: ObjectAtom| {
        let phase = phase_of_stable(chart, atom).expect("atom is stable in this region");
        central_charge(chart, atom.class()).norm() * q.powf(phase)
    };
    (m(atoms[0]), m(atoms[1]), m(atoms[2]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TriangleStatus {
    StrictInterior,
    OnWallBeqAplusQC,
    Violated,
}

impl fmt::Display for TriangleStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Margins of the three q-triangle inequalities
/// `b < a + qc`, `a < b + c`, `c < a + b/q`, relative to `max(a, b, c)`.
fn triangle_margins(a: f64, b: f64, c: f64, q: f64) -> [f64; 3] {
    let scale = a.max(b).max(c);
    [(a + q * c - b) / scale, (b + c - a) / scale, (a + b / q - c) / scale]
}

/// Classifies `(a, b, c)` against the q-triangle inequalities. The wall case is
/// `b = a + qc` with the other two inequalities strict.
pub fn triangle_check(a: f64, b: f64, c: f64, q: f64) -> TriangleStatus {
    if !(a > 0.0 && b > 0.0 && c > 0.0 && q > 0.0) {
        return TriangleStatus::Violated;
    }
    let [m1, m2, m3] = triangle_margins(a, b, c, q);
    if m2 <= EPS_TRIANGLE || m3 <= EPS_TRIANGLE {
        TriangleStatus::Violated
    } else if m1.abs() <= EPS_TRIANGLE {
        TriangleStatus::OnWallBeqAplusQC
    } else if m1 > 0.0 {
        TriangleStatus::StrictInterior
    } else {
        TriangleStatus::Violated
    }
}

/// Tails of the mass sequence of `T^twist σ_z`, for any chart (canonical or not).
fn point_tails(p: &StabilityPoint, q: f64) -> Result<Tails> {
    let t = p.twist;
    Ok(match p.chart.region() {
        Region::WMinus | Region::WZero => {
            let (a, b, c) = mass_abc(&p.chart, q)?;
            Tails {
                left: Tail::new(t, a, c * q, q),
                right: Tail::new(t + 1, b, c, 1.0 / q),
            }
        }
        Region::WPlus => {
            // factors: T^n k_x = [k_x, O_X[1], …, O_X[2−n]] for n ≥ 1 and
            // [O_X[−n], …, O_X[2], T^{-1} k_x] for n ≤ −2
            let (a, b, c) = wplus_abc(&p.chart, q)?;
            Tails {
                left: Tail::new(t - 1, a, c * q * q, q),
                right: Tail::new(t, b, c * q, 1.0 / q),
            }
        }
    })
}

/// The (q-)mass sequence of `T^twist σ_z` on `window`.
///
/// Points in `W_+` are accepted as well; their sequence is projectively equal to
/// that of the canonical form.
pub fn mass_vector(p: &StabilityPoint, q: f64, window: Window) -> Result<MassFunction> {
    check_q(q)?;
    Ok(MassFunction::from_tails(q, window, point_tails(p, q)?))
}

/// Mass sequences for a batch of points.
pub fn mass_batch(points: &[StabilityPoint], q: f64, window: Window, exec: Exec) -> Result<Vec<MassFunction>> {
    exec.map(points, |p| mass_vector(p, q, window)).into_iter().collect()
}

/// `Σ |Z(x_i)| q^{φ(x_i)}` over the oracle HN factors of `T^n k_x`.
pub fn mass_from_factors(chart: &ChartPoint, n: i64, q: f64) -> Result<f64> {
    check_q(q)?;
    Ok(hn_oracle(chart, n)?.iter().map(|f| f.q_mass(chart, q)).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InvertCell {
    /// `(a, b, c)` are the masses of `(k_x, T k_x, O_X)`; result in `W_-`.
    Delta0,
    /// `(a, b, c)` are the masses of `(T^{-1} k_x, k_x, O_X)`; result in `W_+`.
    DeltaMinus1,
    /// Wall `b = a + qc`; result on the negative real axis.
    I0,
}

impl fmt::Display for InvertCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InvertCell::Delta0 => "delta0",
            InvertCell::DeltaMinus1 => "delta-1",
            InvertCell::I0 => "i0",
        })
    }
}

/// Result of an inversion with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inversion {
    pub chart: ChartPoint,
    /// Sup-distance between the normalized target and the normalized masses of `chart`.
    pub residual: f64,
    pub iterations: usize,
}

/// Inverts triangle coordinates back to a chart parameter.
pub fn invert_cell(a: f64, b: f64, c: f64, cell: InvertCell, q: f64) -> Result<ChartPoint> {
    invert_cell_detailed(a, b, c, cell, q).map(|inv| inv.chart)
}

pub fn invert_cell_detailed(a: f64, b: f64, c: f64, cell: InvertCell, q: f64) -> Result<Inversion> {
    check_q(q)?;
    let violation = || Error::TriangleViolation {
        a,
        b,
        c,
        q,
        cell: cell.to_string(),
    };
    // Δ_{-1} coordinates in the Δ_0 convention carry the mass of O_X[1]
    let status = match cell {
        InvertCell::DeltaMinus1 => triangle_check(a, b, q * c, q),
        _ => triangle_check(a, b, c, q),
    };
    let expected = match cell {
        InvertCell::I0 => TriangleStatus::OnWallBeqAplusQC,
        _ => TriangleStatus::StrictInterior,
    };
    if status != expected {
        return Err(violation());
    }

    if cell == InvertCell::I0 {
        let chart = ChartPoint::new(Complex64::new(-q * c / a, 0.0))?;
        return finish(chart, a, b, c, cell, q, 0);
    }
    if q == 1.0 {
        let chart = cosine_rule(a, b, c, cell)?;
        return finish(chart, a, b, c, cell, q, 0);
    }
    let (z, iterations) = solve_q(a, b, c, cell, q)?;
    let chart = ChartPoint::new(z)?;
    finish(chart, a, b, c, cell, q, iterations)
}

fn finish(chart: ChartPoint, a: f64, b: f64, c: f64, cell: InvertCell, q: f64, iterations: usize) -> Result<Inversion> {
    let model = match cell {
        InvertCell::DeltaMinus1 => wplus_abc(&chart, q)?,
        _ => mass_abc(&chart, q)?,
    };
    let residual = triple_distance((a, b, c), model);
    Ok(Inversion {
        chart,
        residual,
        iterations,
    })
}

fn triple_distance(x: (f64, f64, f64), y: (f64, f64, f64)) -> f64 {
    let sx = x.0.max(x.1).max(x.2);
    let sy = y.0.max(y.1).max(y.2);
    let d = |u: f64, v: f64| (u / sx - v / sy).abs();
    d(x.0, y.0).max(d(x.1, y.1)).max(d(x.2, y.2))
}

fn clamped_acos(x: f64) -> f64 {
    x.clamp(-1.0, 1.0).acos()
}

/// Closed-form inverses at `q = 1` by the cosine rule.
fn cosine_rule(a: f64, b: f64, c: f64, cell: InvertCell) -> Result<ChartPoint> {
    match cell {
        InvertCell::Delta0 => {
            let theta = clamped_acos((a * a + b * b - c * c) / (2.0 * a * b));
            ChartPoint::new(-(Complex64::from_polar(b / a, theta) - 1.0))
        }
        InvertCell::DeltaMinus1 => {
            let theta = clamped_acos((b * b + c * c - a * a) / (2.0 * b * c));
            ChartPoint::new(Complex64::from_polar(c / b, theta))
        }
        InvertCell::I0 => ChartPoint::new(Complex64::new(-c / a, 0.0)),
    }
}

/// Residual equations in polar coordinates `z = e^{s + iθ}`:
///
/// ```text
/// F1 = ln|z − 1| + κ·arg(z − 1) + k1
/// F2 = s + κ·θ + k2,              κ = ln q / π
/// ```
struct QSystem {
    kappa: f64,
    k1: f64,
    k2: f64,
    theta_lo: f64,
    theta_hi: f64,
}

impl QSystem {
    fn new(a: f64, b: f64, c: f64, cell: InvertCell, q: f64) -> Self {
        let kappa = q.ln() / PI;
        match cell {
            // b/a = |1−w| q^{arg(1−w)/π}, c/a = |w| q^{arg(−w)/π − 1}
            InvertCell::Delta0 => QSystem {
                kappa,
                k1: kappa * PI - (b / a).ln(),
                k2: -(c / a).ln(),
                theta_lo: -PI,
                theta_hi: 0.0,
            },
            // a/b = |z−1| q^{arg(z−1)/π − 1}, c/b = |z| q^{arg(z)/π − 2}
            _ => QSystem {
                kappa,
                k1: -kappa * PI - (a / b).ln(),
                k2: -2.0 * kappa * PI - (c / b).ln(),
                theta_lo: 0.0,
                theta_hi: PI,
            },
        }
    }

    fn residual(&self, s: f64, theta: f64) -> [f64; 2] {
        let z = Complex64::from_polar(s.exp(), theta);
        let u = z - 1.0;
        [
            u.norm().ln() + self.kappa * u.im.atan2(u.re) + self.k1,
            s + self.kappa * theta + self.k2,
        ]
    }

    fn jacobian(&self, s: f64, theta: f64) -> [[f64; 2]; 2] {
        let z = Complex64::from_polar(s.exp(), theta);
        let h = z / (z - 1.0);
        [[h.re + self.kappa * h.im, -h.im + self.kappa * h.re], [1.0, self.kappa]]
    }

    fn in_domain(&self, theta: f64) -> bool {
        theta > self.theta_lo && theta < self.theta_hi
    }

    /// `s` solving the second equation for given `θ`.
    fn s_of_theta(&self, theta: f64) -> f64 {
        -self.k2 - self.kappa * theta
    }
}

fn sup_norm(v: [f64; 2]) -> f64 {
    v[0].abs().max(v[1].abs())
}

/// Numeric inverse for `q ≠ 1`: damped Newton in `(ln|z|, arg z)`, falling back to
/// bisection on the one-dimensional reduction `θ ↦ F1(s(θ), θ)`.
fn solve_q(a: f64, b: f64, c: f64, cell: InvertCell, q: f64) -> Result<(Complex64, usize)> {
    let sys = QSystem::new(a, b, c, cell, q);

    let start_theta = cosine_rule(a, b, c, cell)
        .ok()
        .map(|p| p.z().arg())
        .filter(|t| sys.in_domain(*t))
        .unwrap_or(0.5 * (sys.theta_lo + sys.theta_hi));
    let (mut s, mut theta) = (sys.s_of_theta(start_theta), start_theta);
    let mut f = sys.residual(s, theta);
    for iter in 1..=NEWTON_MAX_ITER {
        if sup_norm(f) < 1e-14 {
            return Ok((Complex64::from_polar(s.exp(), theta), iter - 1));
        }
        let j = sys.jacobian(s, theta);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !det.is_finite() || det.abs() < 1e-300 {
            break;
        }
        let ds = (f[0] * j[1][1] - f[1] * j[0][1]) / det;
        let dt = (j[0][0] * f[1] - j[1][0] * f[0]) / det;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let (s2, t2) = (s - lambda * ds, theta - lambda * dt);
            if sys.in_domain(t2) {
                let f2 = sys.residual(s2, t2);
                if sup_norm(f2) < sup_norm(f) {
                    s = s2;
                    theta = t2;
                    f = f2;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            if sup_norm(f) < 1e-12 {
                return Ok((Complex64::from_polar(s.exp(), theta), iter));
            }
            break;
        }
    }
    bisect_reduced(&sys)
}

fn bisect_reduced(sys: &QSystem) -> Result<(Complex64, usize)> {
    let g = |theta: f64| sys.residual(sys.s_of_theta(theta), theta)[0];
    let width = sys.theta_hi - sys.theta_lo;
    let grid: Vec<f64> = (1..BISECTION_GRID)
        .map(|i| sys.theta_lo + width * i as f64 / BISECTION_GRID as f64)
        .collect();
    let bracket = grid.windows(2).find(|w| {
        let (ga, gb) = (g(w[0]), g(w[1]));
        ga.is_finite() && gb.is_finite() && ga.signum() != gb.signum()
    });
    let Some(w) = bracket else {
        return Err(Error::NoConvergence {
            iterations: NEWTON_MAX_ITER,
            residual: f64::NAN,
        });
    };
    let (mut lo, mut hi) = (w[0], w[1]);
    let mut glo = g(lo);
    let mut iterations = 0;
    while hi - lo > 1e-16 * width && iterations < NEWTON_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if gm.signum() == glo.signum() {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let theta = 0.5 * (lo + hi);
    let s = sys.s_of_theta(theta);
    let res = sup_norm(sys.residual(s, theta));
    if res > 1e-9 {
        return Err(Error::NoConvergence {
            iterations,
            residual: res,
        });
    }
    Ok((Complex64::from_polar(s.exp(), theta), NEWTON_MAX_ITER + iterations))
}

/// Cells and boundary strata of the closure of the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellId {
    Delta(i64),
    Interval(i64),
    EdgePP(i64),
    VertexP(i64),
    RedPoint,
    BlueQHom,
    Outside,
}

/// Values of the triangle-cell shape with kink at `n`:
/// `a` at `n`, `b` at `n + 1`, left increments `cq, cq², …`, right increments `c, c/q, …`.
fn cell_tails(n: i64, a: f64, b: f64, c: f64, q: f64) -> Tails {
    Tails {
        left: Tail::new(n, a, c * q, q),
        right: Tail::new(n + 1, b, c, 1.0 / q),
    }
}

fn close(x: f64, y: f64) -> bool {
    (x - y).abs() <= MATCH_TOL * x.abs().max(y.abs())
}

/// Locates the cell or boundary stratum containing a mass point.
///
/// The stored window is extended through the tails to cover both anchors, and
/// every comparison is relative to the entries involved. A sup-normalized window
/// would not do: far from the kink the geometric tails dwarf the kink values.
pub fn classify_mass_point(f: &MassFunction) -> Result<CellId> {
    let w = f.window;
    if w.len() < 4 {
        return Err(Error::AmbiguousWindow { lo: w.lo, hi: w.hi });
    }
    let q = f.q;
    check_q(q)?;
    let anchors = [f.tail.left.anchor, f.tail.right.anchor];
    let lo = anchors.iter().map(|a| a - 2).fold(w.lo, i64::min).max(w.lo - 64);
    let hi = anchors.iter().map(|a| a + 2).fold(w.hi, i64::max).min(w.hi + 64);
    let scan = Window { lo, hi };
    let g = f.values_on(scan);
    if g.iter().any(|v| !v.is_finite() || *v < 0.0) || g.iter().all(|v| *v == 0.0) {
        return Ok(CellId::Outside);
    }
    let at = |k: i64| g[(k - lo) as usize];
    let matches = |expected: &Tails, scale: f64| scan.indices().all(|k| close(scale * expected.eval(k), at(k)));

    let zeros: Vec<i64> = scan
        .indices()
        .filter(|&k| {
            let neighbours = [k - 1, k + 1].into_iter().filter(|j| scan.contains(*j)).map(at);
            at(k) <= ZERO_TOL * neighbours.fold(0.0, f64::max)
        })
        .collect();
    match zeros.as_slice() {
        [] => {}
        [n] => {
            let vertex = Tails {
                left: Tail::new(*n, 0.0, 1.0, q),
                right: Tail::new(*n, 0.0, 1.0, 1.0 / q),
            };
            let scale = if scan.contains(n + 1) { at(n + 1) } else { at(n - 1) / q };
            return Ok(if matches(&vertex, scale) {
                CellId::VertexP(*n)
            } else {
                CellId::Outside
            });
        }
        _ => return Ok(CellId::Outside),
    }

    if g.windows(2).all(|p| close(p[0], p[1])) {
        return Ok(CellId::RedPoint);
    }
    if (q - 1.0).abs() > 1e-12 && g.windows(2).all(|p| close(p[0], q * p[1])) {
        return Ok(CellId::BlueQHom);
    }

    for n in (lo + 1)..=(hi - 2) {
        let (a, b) = (at(n), at(n + 1));
        let c_left = (at(n - 1) - a) / q;
        let c_right = at(n + 2) - b;
        if c_left <= 0.0 || !close(c_left, c_right) {
            continue;
        }
        let c = 0.5 * (c_left + c_right);
        if !matches(&cell_tails(n, a, b, c, q), 1.0) {
            continue;
        }
        let [m1, m2, m3] = triangle_margins(a, b, c, q);
        let strict = |m: f64| m > EPS_TRIANGLE;
        let on = |m: f64| m.abs() <= EPS_TRIANGLE;
        if strict(m1) && strict(m2) && strict(m3) {
            return Ok(CellId::Delta(n));
        }
        if on(m1) && strict(m2) && strict(m3) {
            return Ok(CellId::Interval(n));
        }
        if on(m3) && strict(m1) && strict(m2) {
            return Ok(CellId::EdgePP(n));
        }
    }
    Ok(CellId::Outside)
}

/// A canonical point's own cell.
pub fn expected_cell(p: &StabilityPoint) -> CellId {
    match p.chart.region() {
        Region::WMinus => CellId::Delta(p.twist),
        Region::WZero => CellId::Interval(p.twist),
        Region::WPlus => CellId::Delta(p.twist - 1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::canonicalize;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn chart(re: f64, im: f64) -> ChartPoint {
        ChartPoint::new(Complex64::new(re, im)).unwrap()
    }

    fn point(twist: i64, re: f64, im: f64) -> StabilityPoint {
        StabilityPoint::new(twist, chart(re, im))
    }

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn mass_abc_examples() {
        let (a, b, c) = mass_abc(&chart(0.0, -1.0), 1.0).unwrap();
        assert_abs_diff_eq!(a, 1.0);
        assert_abs_diff_eq!(b, SQRT2, epsilon = 1e-15);
        assert_abs_diff_eq!(c, 1.0);
        let (a, b, c) = mass_abc(&chart(-2.0, 0.0), 1.0).unwrap();
        assert_eq!((a, b, c), (1.0, 3.0, 2.0));
        let (a, b, c) = mass_abc(&chart(0.0, -1.0), 2.0).unwrap();
        assert_abs_diff_eq!(a, 2.0);
        assert_relative_eq!(b, SQRT2 * 2f64.powf(1.25), max_relative = 1e-15);
        assert_relative_eq!(c, SQRT2, max_relative = 1e-15);
        assert!(mass_abc(&chart(0.0, 1.0), 1.0).is_err());
        assert!(mass_abc(&chart(0.0, -1.0), 0.0).is_err());
    }

    #[test]
    fn triangle_check_examples() {
        assert_eq!(triangle_check(1.0, SQRT2, 1.0, 1.0), TriangleStatus::StrictInterior);
        assert_eq!(triangle_check(1.0, 3.0, 2.0, 1.0), TriangleStatus::OnWallBeqAplusQC);
        assert_eq!(triangle_check(1.0, 5.0, 1.0, 1.0), TriangleStatus::Violated);
        assert_eq!(triangle_check(0.0, 1.0, 1.0, 1.0), TriangleStatus::Violated);
        assert_eq!(triangle_check(3.0, 1.0, 1.0, 1.0), TriangleStatus::Violated);
    }

    #[test]
    fn mass_vector_examples() {
        let f = mass_vector(&point(0, 0.0, -1.0), 1.0, DEFAULT_WINDOW).unwrap();
        assert_relative_eq!(f.value_at(3), 2.0 + SQRT2, max_relative = 1e-15);
        assert_eq!(f.value_at(0), 1.0);
        let f = mass_vector(&point(0, 0.0, -1.0), 2.0, DEFAULT_WINDOW).unwrap();
        assert_relative_eq!(f.value_at(2), SQRT2 * 2f64.powf(1.25) + SQRT2, max_relative = 1e-15);
        let f = mass_vector(&point(0, 0.0, -1.0), 1.0, Window::new(-2, 3).unwrap()).unwrap();
        let expected = [3.0, 2.0, 1.0, SQRT2, 1.0 + SQRT2, 2.0 + SQRT2];
        for (v, e) in f.values.iter().zip(expected) {
            assert_relative_eq!(*v, e, max_relative = 1e-15);
        }
        let f = mass_vector(&point(0, -2.0, 0.0), 1.0, Window::new(-1, 1).unwrap()).unwrap();
        assert_eq!(f.values, vec![3.0, 1.0, 3.0]);
    }

    #[test]
    fn tails_extend_beyond_window() {
        let p = point(2, -0.4, -1.3);
        let narrow = mass_vector(&p, 2.7, Window::new(0, 1).unwrap()).unwrap();
        let wide = mass_vector(&p, 2.7, Window::new(-20, 20).unwrap()).unwrap();
        for k in -20..=20 {
            assert_relative_eq!(narrow.value_at(k), wide.value_at(k), max_relative = 1e-15);
        }
        assert_eq!(wide.tail.left.kind, TailKind::Geometric);
        let affine = mass_vector(&p, 1.0, DEFAULT_WINDOW).unwrap();
        assert_eq!(affine.tail.right.kind, TailKind::Affine);
    }

    #[test]
    fn mass_from_factors_examples() {
        assert_relative_eq!(
            mass_from_factors(&chart(0.0, -1.0), -2, 1.0).unwrap(),
            3.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            mass_from_factors(&chart(0.0, -1.0), 1, 1.0).unwrap(),
            SQRT2,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            mass_from_factors(&chart(-2.0, 0.0), 2, 1.0).unwrap(),
            5.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn wplus_points_match_their_canonical_form() {
        for (re, im) in [(0.0, 1.0), (2.0, 0.3), (-3.0, 0.01), (0.7, 4.0)] {
            let canon = canonicalize(5, Complex64::new(re, im)).unwrap();
            for q in [1.0, 0.5, 2.7] {
                let raw = mass_vector(&point(5, re, im), q, DEFAULT_WINDOW).unwrap();
                let can = mass_vector(&canon, q, DEFAULT_WINDOW).unwrap();
                assert!(raw.projective_distance(&can) <= 1e-9, "z = {re}+{im}i, q = {q}");
            }
        }
    }

    #[test]
    fn canonicalize_agrees_with_cosine_rule() {
        for (re, im) in [(0.0, 1.0), (2.0, 0.3), (-3.0, 0.01), (0.7, 4.0)] {
            let z = Complex64::new(re, im);
            let canon = canonicalize(0, z).unwrap();
            let (a, b, c) = ((z - 1.0).norm(), 1.0, z.norm());
            let w = invert_cell(a, b, c, InvertCell::Delta0, 1.0).unwrap();
            assert!((w.z() - canon.chart.z()).norm() <= 1e-12 * (1.0 + w.z().norm()));
        }
    }

    #[test]
    fn invert_examples() {
        let z = invert_cell(1.0, SQRT2, 1.0, InvertCell::Delta0, 1.0).unwrap().z();
        assert_abs_diff_eq!(z.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(z.im, -1.0, epsilon = 1e-15);
        let z = invert_cell(SQRT2, 1.0, 1.0, InvertCell::DeltaMinus1, 1.0).unwrap().z();
        assert_abs_diff_eq!(z.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(z.im, 1.0, epsilon = 1e-15);
        let z = invert_cell(1.0, 3.0, 2.0, InvertCell::I0, 1.0).unwrap().z();
        assert_eq!(z, Complex64::new(-2.0, 0.0));
        assert!(matches!(
            invert_cell(1.0, 5.0, 1.0, InvertCell::Delta0, 1.0),
            Err(Error::TriangleViolation { .. })
        ));
        assert!(matches!(
            invert_cell(1.0, SQRT2, 1.0, InvertCell::I0, 1.0),
            Err(Error::TriangleViolation { .. })
        ));
    }

    #[test]
    fn q_inversion_round_trips() {
        for q in [0.5, 2.0, 5.0] {
            for (re, im) in [(0.0, -1.0), (-3.0, -0.2), (4.0, -0.5), (0.1, -0.05)] {
                let p = chart(re, im);
                let (a, b, c) = mass_abc(&p, q).unwrap();
                let inv = invert_cell_detailed(a, b, c, InvertCell::Delta0, q).unwrap();
                assert!((inv.chart.z() - p.z()).norm() <= 1e-9, "q={q} z={}", p.z());
                assert!(inv.residual <= 1e-12);
                let pp = chart(re, -im);
                let (a, b, c) = wplus_abc(&pp, q).unwrap();
                let inv = invert_cell_detailed(a, b, c, InvertCell::DeltaMinus1, q).unwrap();
                assert!((inv.chart.z() - pp.z()).norm() <= 1e-9, "q={q} z={}", pp.z());
            }
            let wall = chart(-1.7, 0.0);
            let (a, b, c) = mass_abc(&wall, q).unwrap();
            let z = invert_cell(a, b, c, InvertCell::I0, q).unwrap().z();
            assert_relative_eq!(z.re, -1.7, max_relative = 1e-14);
        }
    }

    #[test]
    fn bisection_fallback_solves_the_reduced_system() {
        let p = chart(0.3, -0.8);
        let q = 3.0;
        let (a, b, c) = mass_abc(&p, q).unwrap();
        let (z, _) = bisect_reduced(&QSystem::new(a, b, c, InvertCell::Delta0, q)).unwrap();
        assert!((z - p.z()).norm() <= 1e-9);
    }

    #[test]
    fn classify_examples() {
        let f = mass_vector(&point(0, 0.0, -1.0), 1.0, DEFAULT_WINDOW).unwrap();
        assert_eq!(classify_mass_point(&f).unwrap(), CellId::Delta(0));
        let f = mass_vector(&point(-3, -2.0, 0.0), 2.0, DEFAULT_WINDOW).unwrap();
        assert_eq!(classify_mass_point(&f).unwrap(), CellId::Interval(-3));
        let ones = MassFunction::from_tails(
            1.0,
            DEFAULT_WINDOW,
            Tails {
                left: Tail::new(0, 1.0, 0.0, 1.0),
                right: Tail::new(0, 1.0, 0.0, 1.0),
            },
        );
        assert_eq!(classify_mass_point(&ones).unwrap(), CellId::RedPoint);
        let tiny = ones.rewindowed(Window::new(0, 2).unwrap());
        assert!(matches!(classify_mass_point(&tiny), Err(Error::AmbiguousWindow { .. })));
    }

    #[test]
    fn far_kink_is_found_through_tails() {
        let f = mass_vector(&point(40, -0.2, -0.9), 1.0, DEFAULT_WINDOW).unwrap();
        assert_eq!(classify_mass_point(&f).unwrap(), CellId::Delta(40));
    }
}
