//! The closure of the mass image and its boundary.
//!
//! Boundary strata are the vertices `P_n`, the all-ones point `Q`, and at `q ≠ 1`
//! the point `[⋯ : q : 1 : q⁻¹ : ⋯]` given by the q-dimension of `Hom*(O_X, T^n k_x)`.
//! [`pi_param`] parametrizes the whole closure by a strip coordinate and a ray.
//! The rest of the module covers the lax stability conditions sitting at the red
//! point and at `P_0`, together with the phase data of `I_{m,n}` near the edges.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chart::{arg_over_pi, central_charge, ChartPoint, Region};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::mass::{check_q, combine_tails, MassFunction, Tail, Tails, Window};
use crate::mukai::{MukaiVector, ObjectAtom};

fn vertex_tails(n: i64, q: f64) -> Tails {
    Tails {
        left: Tail::new(n, 0.0, 1.0, q),
        right: Tail::new(n, 0.0, 1.0, 1.0 / q),
    }
}

/// All ones, anchored at `n` so it never widens the anchors of a combination.
fn ones_tails(n: i64, q: f64) -> Tails {
    Tails {
        left: Tail::new(n, 1.0, 0.0, q),
        right: Tail::new(n, 1.0, 0.0, 1.0 / q),
    }
}

/// `K·q^{−k}`, written in the shared tail shape.
fn power_tails(k: f64, q: f64) -> Tails {
    Tails {
        left: Tail::new(0, k, k * (q - 1.0), q),
        right: Tail::new(0, k, k * (1.0 / q - 1.0), 1.0 / q),
    }
}

/// The vertex `P_n`: zero at `n`, `1 + q + ⋯ + q^{j−1}` at `n − j` and
/// `1 + q⁻¹ + ⋯ + q^{−(j−1)}` at `n + j`.
pub fn vertex_p(n: i64, q: f64, window: Window) -> Result<MassFunction> {
    check_q(q)?;
    Ok(MassFunction::from_tails(q, window, vertex_tails(n, q)))
}

/// The red point `Q = [⋯ : 1 : 1 : 1 : ⋯]`.
pub fn vertex_q(window: Window) -> MassFunction {
    MassFunction::from_tails(1.0, window, ones_tails(0, 1.0))
}

/// Total q-dimension of `Hom*(O_X, T^n k_x)`, namely `q^{−n}`.
pub fn hom_functional(n: i64, q: f64) -> f64 {
    match i32::try_from(n) {
        Ok(n) => q.powi(-n),
        Err(_) => q.powf(-(n as f64)),
    }
}

/// A point of the closed strip `R̄ × I`, with `I` the rays `[v:w]` in the closed
/// positive quadrant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquareCoord {
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub q: f64,
}

impl SquareCoord {
    pub fn new(u: f64, v: f64, w: f64, q: f64) -> Result<Self> {
        check_q(q)?;
        if u.is_nan() {
            return Err(Error::InvalidArgument("u must not be NaN".into()));
        }
        if !(v >= 0.0 && w >= 0.0 && v.is_finite() && w.is_finite()) || v + w == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "ray [{v}:{w}] must be non-negative and nonzero"
            )));
        }
        Ok(SquareCoord { u, v, w, q })
    }

    /// Whether this point lies in the set collapsed to the red point.
    pub fn is_collapsed(&self) -> bool {
        self.v == 0.0 || (self.u == f64::NEG_INFINITY && self.q >= 1.0) || (self.u == f64::INFINITY && self.q <= 1.0)
    }

    /// The action of `T`: `(u, [v:w]) ↦ (u + 1, [qv:w])`.
    pub fn twisted(&self) -> SquareCoord {
        SquareCoord {
            u: self.u + 1.0,
            v: self.q * self.v,
            ..*self
        }
    }
}

/// `wQ + (1 − t) q^{−n} v P_n + t q^{−n−1} v P_{n+1}` on the square `[n, n + 1]`.
///
/// Window values are summed term by term in that order, so the endpoint `t = 1` of
/// square `n − 1` and the endpoint `t = 0` of square `n` agree exactly.
pub fn pi_square(n: i64, t: f64, v: f64, w: f64, q: f64, window: Window) -> Result<MassFunction> {
    check_q(q)?;
    let alpha = (1.0 - t) * hom_functional(n, q) * v;
    let beta = t * hom_functional(n + 1, q) * v;
    let (pn, pn1) = (vertex_tails(n, q), vertex_tails(n + 1, q));
    let values = window
        .indices()
        .map(|k| w + alpha * pn.eval(k) + beta * pn1.eval(k))
        .collect();
    let tail = combine_tails(&[(w, ones_tails(n, q)), (alpha, pn), (beta, pn1)]);
    Ok(MassFunction {
        q,
        window,
        values,
        tail,
    })
}

/// The parametrization `π_q` of the closure of the mass image.
///
/// At infinite `u` the value is the limit along the strip. For `q > 1` the end
/// `+∞` lands on `wQ + v[⋯ : q : 1 : q⁻¹ : ⋯]/(q − 1)` and `−∞` collapses to `Q`.
/// For `q < 1` the ends swap. At `q = 1` both ends collapse.
pub fn pi_param(s: &SquareCoord, window: Window) -> Result<MassFunction> {
    let s = SquareCoord::new(s.u, s.v, s.w, s.q)?;
    let q = s.q;
    if s.u.is_finite() {
        let n = s.u.floor();
        if n.abs() > 1e15 {
            return Err(Error::InvalidArgument(format!("u = {} is out of range", s.u)));
        }
        return pi_square(n as i64, s.u - n, s.v, s.w, q, window);
    }
    if s.is_collapsed() {
        return Ok(MassFunction::from_tails(q, window, ones_tails(0, q)));
    }
    // q^{−n}P_n converges to q^{−k}/(q − 1) (q > 1, n → +∞)
    // or to q^{1−k}/(1 − q) (q < 1, n → −∞)
    let k = if q > 1.0 { 1.0 / (q - 1.0) } else { q / (1.0 - q) };
    let tail = combine_tails(&[(s.w, ones_tails(0, q)), (s.v, power_tails(k, q))]);
    let values = window.indices().map(|i| s.w + s.v * k * hom_functional(i, q)).collect();
    Ok(MassFunction {
        q,
        window,
        values,
        tail,
    })
}

/// Numerical shadow of a lax stability condition on the basis `[O_X], [k_x]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaxDescriptor {
    pub z_o: Complex64,
    pub z_k: Complex64,
    pub massless: Vec<ObjectAtom>,
    pub support_property: bool,
}

impl LaxDescriptor {
    /// The limit at `Q`: `O_X` becomes massless, the support property survives.
    pub fn red_point() -> Self {
        LaxDescriptor {
            z_o: Complex64::new(0.0, 0.0),
            z_k: Complex64::new(-1.0, 0.0),
            massless: vec![ObjectAtom::structure(0)],
            support_property: true,
        }
    }

    /// The limit at `P_0`: `k_x` becomes massless and the support property fails.
    pub fn vertex_p0() -> Self {
        LaxDescriptor {
            z_o: Complex64::new(1.0, 0.0),
            z_k: Complex64::new(0.0, 0.0),
            massless: vec![ObjectAtom::sky(0)],
            support_property: false,
        }
    }

    pub fn central_charge(&self, r: i64, m: i64) -> Complex64 {
        self.z_o * r as f64 + self.z_k * m as f64
    }
}

/// `|Z(v)| / ‖v‖` for `v = r[O_X] + m[k_x]`, with `[O_X], [k_x]` orthonormal.
pub fn support_ratio(r: i64, m: i64, lax: &LaxDescriptor) -> f64 {
    let (rf, mf) = (r as f64, m as f64);
    lax.central_charge(r, m).norm() / rf.hypot(mf)
}

fn require_wminus(chart: &ChartPoint) -> Result<()> {
    if chart.region() == Region::WMinus {
        Ok(())
    } else {
        Err(Error::InvalidRegion(format!(
            "expected a WMinus chart, got {}",
            chart.region()
        )))
    }
}

/// Phase `arg(n − m z)/π` of the stable sheaf `I_{m,n}`.
pub fn imn_phase(chart: &ChartPoint, m: u32, n: u32) -> Result<f64> {
    require_wminus(chart)?;
    if m < 1 || n < m {
        return Err(Error::InvalidArgument(format!(
            "I_{{m,n}} needs n >= m >= 1, got m={m}, n={n}"
        )));
    }
    Ok(arg_over_pi(Complex64::new(n as f64, 0.0) - chart.z() * m as f64))
}

fn ratio_phase(chart: &ChartPoint, m: u64, n: u64) -> f64 {
    arg_over_pi(Complex64::new(n as f64, 0.0) - chart.z() * m as f64)
}

/// Phases of `I_{m,n}` on either side of the slope `n/m = 1 + t`, over `m ≤ depth`.
///
/// Returns `(sup φ over n/m > 1 + t, inf φ over n/m < 1 + t)`; the value `1 + t`
/// itself is excluded. Both converge to `arg((1 + t) − z)/π`.
pub fn threshold_witness(chart: &ChartPoint, t: f64, depth: u32) -> Result<(f64, f64)> {
    require_wminus(chart)?;
    if !(t > 0.0 && t.is_finite()) || depth == 0 {
        return Err(Error::InvalidArgument(format!(
            "need t > 0 and depth >= 1, got t={t}, depth={depth}"
        )));
    }
    let s = 1.0 + t;
    let mut sup_below = f64::NEG_INFINITY;
    let mut inf_above = f64::INFINITY;
    for m in 1..=u64::from(depth) {
        let sm = s * m as f64;
        let above = sm.floor() as u64 + 1;
        sup_below = sup_below.max(ratio_phase(chart, m, above));
        let below = sm.ceil() as u64 - 1;
        if below >= m {
            inf_above = inf_above.min(ratio_phase(chart, m, below));
        }
    }
    Ok((sup_below, inf_above))
}

/// Classes `r[O_X] + n[k_x]` carrying a semistable object of the lax stability
/// condition at the red point.
pub fn semistable_class_predicate(r: i64, n: i64) -> bool {
    (r == 0 && n >= 1) || (r >= 1 && n == 0) || (r >= 1 && -n >= r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudPoint {
    pub r: i64,
    pub n: i64,
    pub phase: f64,
}

impl CloudPoint {
    pub fn class(&self) -> MukaiVector {
        MukaiVector::from_basis(self.r, self.n)
    }

    /// The same object shifted by one: negated class, phase plus one.
    pub fn shifted(&self) -> CloudPoint {
        CloudPoint {
            r: -self.r,
            n: -self.n,
            phase: self.phase + 1.0,
        }
    }
}

/// Phases at `chart` of every class admitted by [`semistable_class_predicate`]
/// with `|r| ≤ r_max`, `|n| ≤ n_max`, sorted by `(r, n)`.
pub fn phase_cloud(chart: &ChartPoint, r_max: u32, n_max: u32, exec: Exec) -> Result<Vec<CloudPoint>> {
    require_wminus(chart)?;
    let (r_max, n_max) = (i64::from(r_max), i64::from(n_max));
    let classes: Vec<(i64, i64)> = (0..=r_max)
        .flat_map(|r| (-n_max..=n_max).map(move |n| (r, n)))
        .filter(|&(r, n)| semistable_class_predicate(r, n))
        .collect();
    Ok(exec.map(&classes, |&(r, n)| {
        let mut phase = arg_over_pi(central_charge(chart, MukaiVector::from_basis(r, n)));
        if phase <= 0.0 {
            phase += 2.0;
        }
        CloudPoint { r, n, phase }
    }))
}

/// `x` with 12 significant digits in plain decimal notation.
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding can carry into a new leading digit
    let digits = s.chars().filter(char::is_ascii_digit).collect::<String>();
    let significant = digits.trim_start_matches('0').len();
    if significant > 12 && decimals > 0 {
        format!("{x:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}

/// CSV with columns `r,n,phase`.
pub fn cloud_csv(points: &[CloudPoint]) -> String {
    let mut out = String::from("r,n,phase\n");
    for p in points {
        writeln!(out, "{},{},{}", p.r, p.n, format_sig12(p.phase)).expect("writing to a String");
    }
    out
}
