//! Standard stability conditions and the chart `R = C − R_{≥0}`.
//!
//! A chart parameter `z` names the standard stability condition with
//! `Z(k_x) = −1` and `Z(O_X) = −z`. Points with `Im z < 0` have heart `Coh X`,
//! points with `Im z ≥ 0` have the tilted heart. Every point of the projectivized
//! stability manifold is `T^n σ_z` for a unique `n` and a unique `z` with
//! `Im z ≤ 0`; that pair is a canonical [`StabilityPoint`].

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mukai::{AtomKind, MukaiVector, ObjectAtom};

/// Minimum distance from the forbidden ray `R_{≥0}`.
pub const EPS_DOMAIN: f64 = 1e-12;
/// Wall tolerance for chart parameters produced by computation.
pub const EPS_WALL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    WMinus,
    WZero,
    WPlus,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::WMinus => "WMinus",
            Region::WZero => "WZero",
            Region::WPlus => "WPlus",
        })
    }
}

fn distance_to_ray(z: Complex64) -> f64 {
    if z.re >= 0.0 {
        z.im.abs()
    } else {
        z.norm()
    }
}

fn check_domain(z: Complex64) -> Result<()> {
    let distance = distance_to_ray(z);
    if !z.re.is_finite() || !z.im.is_finite() || distance.is_nan() || distance < EPS_DOMAIN {
        return Err(Error::Domain {
            re: z.re,
            im: z.im,
            distance,
        });
    }
    Ok(())
}

/// Region of a chart parameter. The imaginary part is compared to zero exactly.
pub fn region(z: Complex64) -> Result<Region> {
    region_with_tolerance(z, 0.0)
}

/// Region with a wall band: `|Im z| ≤ eps` (and `Re z < 0`) counts as the wall.
pub fn region_with_tolerance(z: Complex64, eps: f64) -> Result<Region> {
    check_domain(z)?;
    Ok(if z.im.abs() <= eps && z.re < 0.0 {
        Region::WZero
    } else if z.im < 0.0 {
        Region::WMinus
    } else {
        Region::WPlus
    })
}

/// A validated chart parameter together with its region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    z: Complex64,
    region: Region,
}

impl ChartPoint {
    pub fn new(z: Complex64) -> Result<Self> {
        Ok(ChartPoint { z, region: region(z)? })
    }

    /// Like [`new`](Self::new) but snaps `|Im z| ≤ EPS_WALL` onto the wall. Used for
    /// parameters that come out of floating-point computation.
    pub fn computed(z: Complex64) -> Result<Self> {
        let region = region_with_tolerance(z, EPS_WALL)?;
        let z = if region == Region::WZero {
            Complex64::new(z.re, 0.0)
        } else {
            z
        };
        Ok(ChartPoint { z, region })
    }

    pub fn from_parts(re: f64, im: f64) -> Result<Self> {
        ChartPoint::new(Complex64::new(re, im))
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn is_canonical(&self) -> bool {
        self.region != Region::WPlus
    }
}

/// `Z(v) = −v1·z − v2 + v1`, the linear extension of `Z(k_x) = −1`, `Z(O_X) = −z`.
pub fn central_charge(p: &ChartPoint, v: MukaiVector) -> Complex64 {
    let (v1, v2) = (v.v1 as f64, v.v2 as f64);
    Complex64::new(v1 - v2, 0.0) - p.z * v1
}

/// Principal argument divided by π, in `(−1, 1]`.
pub(crate) fn arg_over_pi(w: Complex64) -> f64 {
    w.im.atan2(w.re) / PI
}

/// Normalized phase of an atom that is stable (or, on the wall, semistable) in the
/// region of `p`.
///
/// The phase of each atom is pinned per region instead of being reduced modulo 2:
///
/// | region | `k_x` | `O_X` | `T k_x` | `T^{-1} k_x` |
/// |--------|-------|-------|---------|--------------|
/// | `W_-`  | 1 | `arg(−z)/π` | `1 + arg(1−z)/π` | n/a |
/// | `W_0`  | 1 | 0 | 1 | 1 |
/// | `W_+`  | 1 | `arg(z)/π − 1` | n/a | `arg(z−1)/π` |
///
/// `I_{m,n}` (for `n ≥ m ≥ 1`) is stable in `W_-` with phase `arg(n − m z)/π`.
pub fn phase_of_stable(p: &ChartPoint, atom: ObjectAtom) -> Result<f64> {
    let z = p.z;
    let one = Complex64::new(1.0, 0.0);
    let base = match (p.region, atom.kind) {
        (_, AtomKind::SkyTwist(0)) => Some(1.0),
        (Region::WMinus, AtomKind::Structure) => Some(arg_over_pi(-z)),
        (Region::WZero, AtomKind::Structure) => Some(0.0),
        (Region::WPlus, AtomKind::Structure) => Some(arg_over_pi(z) - 1.0),
        (Region::WMinus, AtomKind::SkyTwist(1)) => Some(1.0 + arg_over_pi(one - z)),
        (Region::WZero, AtomKind::SkyTwist(1) | AtomKind::SkyTwist(-1)) => Some(1.0),
        (Region::WPlus, AtomKind::SkyTwist(-1)) => Some(arg_over_pi(z - one)),
        (Region::WMinus, AtomKind::IdealMN { m, n }) if n >= m && m >= 1 => {
            Some(arg_over_pi(Complex64::new(n as f64, 0.0) - z * m as f64))
        }
        _ => None,
    };
    match base {
        Some(phi) => Ok(phi + atom.shift as f64),
        None => Err(Error::NotStable {
            atom: atom.to_string(),
            region: p.region.to_string(),
        }),
    }
}

/// A point of the projectivized stability manifold: `T^twist σ_z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityPoint {
    pub twist: i64,
    pub chart: ChartPoint,
}

impl StabilityPoint {
    pub fn new(twist: i64, chart: ChartPoint) -> Self {
        StabilityPoint { twist, chart }
    }

    pub fn is_canonical(&self) -> bool {
        self.chart.is_canonical()
    }
}

/// Chart parameter `w` with `σ_w ≅ T σ_z` (up to the C-action), for `z` in `W_+`.
///
/// Applying `T` sends `(Z(k_x), Z(O_X)) = (−1, −z)` to `(Z(T^{-1}k_x), Z(O_X[1])) =
/// (z − 1, z)`; renormalizing `Z(k_x) = −1` gives `w = z / (z − 1)`.
pub(crate) fn twist_forward_parameter(z: Complex64) -> Complex64 {
    // z·conj(z − 1) / |z − 1|², written out so that Im w = −Im z / |z − 1|² keeps its sign
    let d = (z - 1.0).norm_sqr();
    Complex64::new((z.norm_sqr() - z.re) / d, -z.im / d)
}

/// Brings `T^twist σ_z` into canonical form. Points in `W_+` move to `W_-` by one
/// application of `T`, since `T W_+ = W_-`.
pub fn canonicalize(twist: i64, z: Complex64) -> Result<StabilityPoint> {
    let p = ChartPoint::new(z)?;
    if p.region != Region::WPlus {
        return Ok(StabilityPoint::new(twist, p));
    }
    let w = twist_forward_parameter(z);
    Ok(StabilityPoint::new(twist - 1, ChartPoint::new(w)?))
}
