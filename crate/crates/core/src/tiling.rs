//! Ideal-triangle tilings of the image, drawn in the upper half-plane or, after
//! the Cayley transform, in the unit disk.
//!
//! The basic triangle has vertices `0, 1, ∞`; its translates are the images under
//! powers of `g(x) = qx + 1`, which is how `T` acts on the cell coordinates.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary::CloudPoint;
use crate::error::{Error, Result};
use crate::mass::check_q;

pub const MAX_DEPTH: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RenderMode {
    DiskTiling,
    HalfPlaneTiling,
    PhaseCloud,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderSpec {
    pub mode: RenderMode,
    pub q: f64,
    pub depth: u32,
    pub size: u32,
    /// Straight chords instead of hyperbolic geodesics.
    pub chords: bool,
}

impl RenderSpec {
    pub fn validate(&self) -> Result<()> {
        check_q(self.q)?;
        if self.depth < 1 || self.depth > MAX_DEPTH {
            return Err(Error::InvalidArgument(format!(
                "depth must lie in 1..={MAX_DEPTH}, got {}",
                self.depth
            )));
        }
        if self.size < 16 {
            return Err(Error::InvalidArgument(format!("size {} is too small", self.size)));
        }
        Ok(())
    }
}

/// An ideal triangle with vertices `left`, `right` on the real line and `∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdealTriangle {
    pub index: i64,
    pub left: f64,
    pub right: f64,
}

/// `g^k(0)` for `k = −depth ..= depth + 1`, with `g(x) = qx + 1`.
pub fn orbit(q: f64, depth: u32) -> Result<Vec<f64>> {
    check_q(q)?;
    let d = depth as usize;
    let mut left = vec![0.0];
    for _ in 0..d {
        let x = *left.last().expect("nonempty");
        left.push((x - 1.0) / q);
    }
    let mut right = vec![0.0];
    for _ in 0..=d {
        let x = *right.last().expect("nonempty");
        right.push(q * x + 1.0);
    }
    left.reverse();
    left.extend_from_slice(&right[1..]);
    Ok(left)
}

/// The `2·depth + 1` translates of the basic triangle, in orbit order.
pub fn triangles(q: f64, depth: u32) -> Result<Vec<IdealTriangle>> {
    let xs = orbit(q, depth)?;
    Ok(xs
        .windows(2)
        .enumerate()
        .map(|(i, w)| IdealTriangle {
            index: i as i64 - i64::from(depth),
            left: w[0],
            right: w[1],
        })
        .collect())
}

/// The accumulation point `1/(1 − q)` of the orbit, fixed by `g`.
pub fn fixed_point(q: f64) -> Option<f64> {
    (q != 1.0).then(|| 1.0 / (1.0 - q))
}

/// `(z − i)/(z + i)`, with `∞ ↦ 1`.
pub fn cayley(x: f64) -> Complex64 {
    if x.is_infinite() {
        return Complex64::new(1.0, 0.0);
    }
    let z = Complex64::new(x, 0.0);
    (z - Complex64::i()) / (z + Complex64::i())
}

type Pt = (f64, f64);

fn fmt_num(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

fn fmt_pt(p: Pt) -> String {
    format!("{} {}", fmt_num(p.0), fmt_num(p.1))
}

/// Circular arc from `a` to `b` through `m`, as an SVG path segment.
fn arc_through(a: Pt, m: Pt, b: Pt, radius: f64) -> String {
    let cross = (m.0 - a.0) * (b.1 - m.1) - (m.1 - a.1) * (b.0 - m.0);
    let sweep = u8::from(cross > 0.0);
    // the arc is large iff m lies farther than the radius from the chord
    let mid = ((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0);
    let large = u8::from((m.0 - mid.0).hypot(m.1 - mid.1) > radius);
    format!("A {r} {r} 0 {large} {sweep} {}", fmt_pt(b), r = fmt_num(radius))
}

struct Canvas {
    body: String,
}

impl Canvas {
    fn path(&mut self, class: &str, d: &str, extra: &str) {
        writeln!(self.body, r#"  <path class="{class}" d="{d}"{extra}/>"#).expect("writing to a String");
    }

    fn dot(&mut self, class: &str, p: Pt, r: f64, fill: &str) {
        writeln!(
            self.body,
            r#"  <circle class="{class}" cx="{}" cy="{}" r="{}" fill="{fill}"/>"#,
            fmt_num(p.0),
            fmt_num(p.1),
            fmt_num(r)
        )
        .expect("writing to a String");
    }

    fn finish(self, size: u32) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" viewBox=\"0 0 {size} {size}\">\n\
             <rect width=\"{size}\" height=\"{size}\" fill=\"white\"/>\n{}</svg>\n",
            self.body
        )
    }
}

const STROKE: &str = r#" fill="none" stroke="black" stroke-width="1""#;

fn triangle_attrs(t: &IdealTriangle) -> String {
    format!(
        r#" data-k="{}" data-left="{}" data-right="{}"{STROKE}"#,
        t.index, t.left, t.right
    )
}

fn render_halfplane(spec: &RenderSpec, tris: &[IdealTriangle]) -> String {
    let size = f64::from(spec.size);
    let xmin = tris.first().map_or(0.0, |t| t.left);
    let xmax = tris.last().map_or(1.0, |t| t.right);
    let margin = 0.05 * size;
    let scale = (size - 2.0 * margin) / (xmax - xmin);
    let base = size - margin;
    let to_screen = |x: f64| margin + (x - xmin) * scale;
    let mut canvas = Canvas { body: String::new() };
    canvas.path(
        "axis",
        &format!("M {} L {}", fmt_pt((0.0, base)), fmt_pt((size, base))),
        r#" stroke="gray""#,
    );
    for t in tris {
        let (x0, x1) = (to_screen(t.left), to_screen(t.right));
        let r = (x1 - x0) / 2.0;
        let geodesic = if spec.chords {
            format!("L {}", fmt_pt((x1, base)))
        } else {
            arc_through((x0, base), ((x0 + x1) / 2.0, base - r), (x1, base), r)
        };
        let d = format!(
            "M {} L {} M {} {} M {} L {}",
            fmt_pt((x0, 0.0)),
            fmt_pt((x0, base)),
            fmt_pt((x0, base)),
            geodesic,
            fmt_pt((x1, base)),
            fmt_pt((x1, 0.0))
        );
        canvas.path("triangle", &d, &triangle_attrs(t));
    }
    if let Some(p) = fixed_point(spec.q) {
        canvas.dot("blue-point", (to_screen(p), base), 3.0, "blue");
    }
    canvas.finish(spec.size)
}

fn render_disk(spec: &RenderSpec, tris: &[IdealTriangle]) -> String {
    let size = f64::from(spec.size);
    let (cx, cy, radius) = (size / 2.0, size / 2.0, 0.45 * size);
    let to_screen = |w: Complex64| (cx + radius * w.re, cy - radius * w.im);
    let geodesic = |a: Complex64, b: Complex64| -> String {
        let (sa, sb) = (to_screen(a), to_screen(b));
        let half_angle = ((a / b).arg().abs()) / 2.0;
        if spec.chords || half_angle.cos() < 1e-9 || (a - b).norm() < 1e-12 {
            return format!("L {}", fmt_pt(sb));
        }
        // circle orthogonal to the unit circle through a and b
        let dir = (a + b) / (a + b).norm();
        let center = dir / half_angle.cos();
        let r = half_angle.tan();
        let nearest = center - dir * r;
        arc_through(sa, to_screen(nearest), sb, radius * r)
    };
    let mut canvas = Canvas { body: String::new() };
    let circle = format!(
        "M {} A {r} {r} 0 1 1 {} A {r} {r} 0 1 1 {}",
        fmt_pt((cx + radius, cy)),
        fmt_pt((cx - radius, cy)),
        fmt_pt((cx + radius, cy)),
        r = fmt_num(radius)
    );
    canvas.path("boundary", &circle, r#" fill="none" stroke="gray""#);
    let inf = cayley(f64::INFINITY);
    for t in tris {
        let (a, b) = (cayley(t.left), cayley(t.right));
        let d = format!(
            "M {} {} {} {}",
            fmt_pt(to_screen(a)),
            geodesic(a, b),
            geodesic(b, inf),
            geodesic(inf, a)
        );
        canvas.path("triangle", &d, &triangle_attrs(t));
    }
    if let Some(p) = fixed_point(spec.q) {
        // the side of the fixed point away from the orbit carries no triangles
        let beyond = if spec.q > 1.0 { p - 1.0 } else { p + 1.0 };
        let (sp, sm, si) = (to_screen(cayley(p)), to_screen(cayley(beyond)), to_screen(inf));
        let d = format!("M {} {}", fmt_pt(sp), arc_through(sp, sm, si, radius));
        canvas.path(
            "boundary-interval",
            &d,
            r#" fill="none" stroke="blue" stroke-width="3""#,
        );
        canvas.dot("blue-point", sp, 4.0, "blue");
    }
    canvas.dot("red-point", to_screen(inf), 4.0, "red");
    canvas.finish(spec.size)
}

/// SVG for the tiling modes. Output is a pure function of `spec`.
pub fn render_tiling(spec: &RenderSpec) -> Result<String> {
    spec.validate()?;
    let tris = triangles(spec.q, spec.depth)?;
    match spec.mode {
        RenderMode::HalfPlaneTiling => Ok(render_halfplane(spec, &tris)),
        RenderMode::DiskTiling => Ok(render_disk(spec, &tris)),
        RenderMode::PhaseCloud => Err(Error::InvalidArgument(
            "phase clouds render via render_phase_cloud".into(),
        )),
    }
}

/// Scatter plot of phases against the slope `n/r` (torsion classes at the right edge).
pub fn render_phase_cloud(points: &[CloudPoint], size: u32) -> String {
    let s = f64::from(size);
    let margin = 0.05 * s;
    let slope = |p: &CloudPoint| {
        if p.r == 0 {
            0.0
        } else {
            (p.r as f64) / (p.r as f64 - p.n as f64)
        }
    };
    let mut canvas = Canvas { body: String::new() };
    for p in points {
        let x = margin + slope(p) * (s - 2.0 * margin);
        let y = s - margin - (p.phase / 2.0) * (s - 2.0 * margin);
        canvas.dot("phase", (x, y), 1.5, "black");
    }
    canvas.finish(size)
}
