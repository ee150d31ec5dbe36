//! Harder–Narasimhan factors of the semi-rigid objects `T^n k_x`.
//!
//! Two independent routes produce the factor lists: [`hn_closed_form`] writes down
//! the factors directly, while [`hn_oracle`] grows them one exact triangle at a
//! time from the stable base objects `k_x` and `T k_x`, using
//!
//! ```text
//! T^{n-1} k_x → T^n k_x → O_X[2-n] →      (n ≥ 2, append on the right)
//! O_X[-n] → T^n k_x → T^{n+1} k_x →       (n ≤ -1, prepend on the left)
//! ```
//!
//! and checking the phase order at every step.

use serde::{Deserialize, Serialize};

use crate::chart::{central_charge, phase_of_stable, ChartPoint, Region};
use crate::error::{Error, Result};
use crate::mukai::{AtomKind, ObjectAtom};

/// Slack used when the oracle compares phases.
pub const PHASE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub atom: ObjectAtom,
    pub phase: f64,
}

impl Factor {
    /// `|Z(atom)| · q^phase`.
    pub fn q_mass(&self, chart: &ChartPoint, q: f64) -> f64 {
        central_charge(chart, self.atom.class()).norm() * q.powf(self.phase)
    }
}

/// HN factors in decreasing order of phase.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FactorList(pub Vec<Factor>);

impl FactorList {
    pub fn atoms(&self) -> Vec<ObjectAtom> {
        self.0.iter().map(|f| f.atom).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Factor> {
        self.0.iter()
    }

    /// Highest and lowest phase, `(φ⁺, φ⁻)`.
    pub fn spread(&self) -> (f64, f64) {
        let hi = self.0.first().map_or(f64::NAN, |f| f.phase);
        let lo = self.0.last().map_or(f64::NAN, |f| f.phase);
        (hi, lo)
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.0.windows(2).all(|w| w[0].phase > w[1].phase)
    }
}

fn canonical_region(chart: &ChartPoint) -> Result<Region> {
    match chart.region() {
        Region::WPlus => Err(Error::InvalidRegion(
            "HN factors are tabulated for canonical charts (Im z <= 0); canonicalize first".into(),
        )),
        r => Ok(r),
    }
}

/// Atoms of the HN factors of `T^n k_x`, in decreasing order of phase.
pub fn closed_form_atoms(region: Region, n: i64) -> Result<Vec<ObjectAtom>> {
    let o = ObjectAtom::structure;
    match region {
        Region::WPlus => Err(Error::InvalidRegion(
            "closed forms cover WMinus and WZero; WPlus follows by twist equivariance".into(),
        )),
        Region::WMinus => Ok(match n {
            0 | 1 => vec![ObjectAtom::sky(n)],
            n if n >= 2 => std::iter::once(ObjectAtom::sky(1))
                .chain((2 - n..=0).rev().map(o))
                .collect(),
            n => (1..=-n)
                .rev()
                .map(o)
                .chain(std::iter::once(ObjectAtom::sky(0)))
                .collect(),
        }),
        Region::WZero => Ok(match n {
            -1..=1 => vec![ObjectAtom::sky(n)],
            n if n >= 2 => std::iter::once(ObjectAtom::sky(1))
                .chain((2 - n..=0).rev().map(o))
                .collect(),
            n => (2..=-n)
                .rev()
                .map(o)
                .chain(std::iter::once(ObjectAtom::sky(-1)))
                .collect(),
        }),
    }
}

fn with_phases(chart: &ChartPoint, atoms: Vec<ObjectAtom>) -> Result<FactorList> {
    atoms
        .into_iter()
        .map(|atom| {
            Ok(Factor {
                atom,
                phase: phase_of_stable(chart, atom)?,
            })
        })
        .collect::<Result<Vec<_>>>()
        .map(FactorList)
}

/// Closed-form HN factors of `T^n k_x` with their phases at `chart`.
pub fn hn_closed_form(chart: &ChartPoint, n: i64) -> Result<FactorList> {
    let region = canonical_region(chart)?;
    with_phases(chart, closed_form_atoms(region, n)?)
}

/// HN factors of `T^n k_x` built recursively from exact triangles.
pub fn hn_oracle(chart: &ChartPoint, n: i64) -> Result<FactorList> {
    let region = canonical_region(chart)?;
    let factor = |atom: ObjectAtom| -> Result<Factor> {
        Ok(Factor {
            atom,
            phase: phase_of_stable(chart, atom)?,
        })
    };
    let structure = |shift: i64| -> Factor {
        // phase of O_X itself is pinned by the region table; shifts add
        let base = phase_of_stable(chart, ObjectAtom::structure(0)).expect("O_X is always stable");
        Factor {
            atom: ObjectAtom::structure(shift),
            phase: base + shift as f64,
        }
    };

    if n >= 1 {
        let mut list = vec![factor(ObjectAtom::sky(1))?];
        for m in 2..=n {
            let edge = structure(2 - m);
            let last = list.last().expect("nonempty").phase;
            if edge.phase < last - PHASE_SLACK {
                list.push(edge);
            } else {
                return Err(Error::PhaseOrderViolation {
                    n: m,
                    detail: format!("appended {} at phase {} after phase {}", edge.atom, edge.phase, last),
                });
            }
        }
        return Ok(FactorList(list));
    }

    let mut list = vec![factor(ObjectAtom::sky(0))?];
    for m in (n..=-1).rev() {
        let edge = structure(-m);
        let first = list[0].phase;
        if edge.phase > first + PHASE_SLACK {
            list.insert(0, edge);
        } else if region == Region::WZero && (edge.phase - first).abs() <= PHASE_SLACK && list.len() == 1 {
            // equal phases: the extension is a single semistable object, T^m k_x itself
            let merged = edge.atom.class() + list[0].atom.class();
            let atom = ObjectAtom::sky(m);
            debug_assert_eq!(merged, atom.class());
            list = vec![Factor { atom, phase: first }];
        } else {
            return Err(Error::PhaseOrderViolation {
                n: m,
                detail: format!("prepended {} at phase {} before phase {}", edge.atom, edge.phase, first),
            });
        }
    }
    Ok(FactorList(list))
}

/// `(φ⁺, φ⁻)` of `T^n k_x`; the two agree iff the object is semistable.
pub fn phase_spread(chart: &ChartPoint, n: i64) -> Result<(f64, f64)> {
    Ok(hn_closed_form(chart, n)?.spread())
}

/// Number of twists needed to make `T^n k_x` semistable, and the direction used.
///
/// While the object is not semistable, its top or bottom HN factor is a shift of
/// `O_X`; twisting by `T` (top) or `T^{-1}` (bottom) strictly shrinks the phase
/// spread. Returns `(0, +1)` for objects that are already semistable.
pub fn twist_reduce(chart: &ChartPoint, n: i64) -> Result<(u64, i8)> {
    if chart.region() != Region::WMinus {
        return Err(Error::InvalidRegion("twist reduction runs at WMinus charts".into()));
    }
    let mut current = n;
    let mut steps = 0u64;
    let mut direction = 1i8;
    loop {
        let factors = hn_closed_form(chart, current)?;
        if factors.len() <= 1 {
            return Ok((steps, direction));
        }
        let (hi, lo) = factors.spread();
        let top = factors.0[0].atom.kind;
        let bottom = factors.0[factors.len() - 1].atom.kind;
        direction = match (top, bottom) {
            (AtomKind::Structure, _) => 1,
            (_, AtomKind::Structure) => -1,
            _ => unreachable!("a non-semistable T^n k_x has an O_X shift at one end"),
        };
        current += i64::from(direction);
        steps += 1;
        let (hi2, lo2) = phase_spread(chart, current)?;
        assert!(hi2 - lo2 < hi - lo, "twist did not reduce the phase spread");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    fn chart(re: f64, im: f64) -> ChartPoint {
        ChartPoint::new(Complex64::new(re, im)).unwrap()
    }

    fn o(s: i64) -> ObjectAtom {
        ObjectAtom::structure(s)
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(
            closed_form_atoms(Region::WMinus, 3).unwrap(),
            vec![ObjectAtom::sky(1), o(0), o(-1)]
        );
        assert_eq!(
            closed_form_atoms(Region::WMinus, -2).unwrap(),
            vec![o(2), o(1), ObjectAtom::sky(0)]
        );
        assert_eq!(
            closed_form_atoms(Region::WZero, -2).unwrap(),
            vec![o(2), ObjectAtom::sky(-1)]
        );
        assert_eq!(closed_form_atoms(Region::WZero, -1).unwrap(), vec![ObjectAtom::sky(-1)]);
        assert!(closed_form_atoms(Region::WPlus, 0).is_err());
    }

    #[test]
    fn oracle_examples() {
        let minus = chart(0.0, -1.0);
        assert_eq!(hn_oracle(&minus, 1).unwrap().atoms(), vec![ObjectAtom::sky(1)]);
        assert_eq!(
            hn_oracle(&minus, 3).unwrap().atoms(),
            vec![ObjectAtom::sky(1), o(0), o(-1)]
        );
        let wall = chart(-2.0, 0.0);
        assert_eq!(
            hn_oracle(&wall, -3).unwrap().atoms(),
            vec![o(3), o(2), ObjectAtom::sky(-1)]
        );
        assert_eq!(hn_oracle(&wall, -1).unwrap().atoms(), vec![ObjectAtom::sky(-1)]);
    }

    #[test]
    fn oracle_rejects_wplus() {
        assert!(hn_oracle(&chart(0.0, 1.0), 2).is_err());
    }

    #[test]
    fn spread_examples() {
        let p = chart(0.0, -1.0);
        assert_eq!(phase_spread(&p, 0).unwrap(), (1.0, 1.0));
        let (hi, lo) = phase_spread(&p, 3).unwrap();
        assert_abs_diff_eq!(hi, 1.25, epsilon = 1e-15);
        assert_abs_diff_eq!(lo, -0.5, epsilon = 1e-15);
        let (hi, lo) = phase_spread(&p, -2).unwrap();
        assert_abs_diff_eq!(hi, 2.5, epsilon = 1e-15);
        assert_abs_diff_eq!(lo, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn twist_reduce_examples() {
        let p = chart(0.0, -1.0);
        assert_eq!(twist_reduce(&p, 0).unwrap(), (0, 1));
        assert_eq!(twist_reduce(&p, 1).unwrap(), (0, 1));
        assert_eq!(twist_reduce(&p, 5).unwrap(), (4, -1));
        assert_eq!(twist_reduce(&p, -3).unwrap(), (3, 1));
        assert!(twist_reduce(&chart(-1.0, 0.0), 3).is_err());
    }

    #[test]
    fn factor_counts() {
        let p = chart(-0.3, -0.7);
        for n in -64i64..=64 {
            let expected = match n {
                0 | 1 => 1,
                n if n >= 2 => n as usize,
                n => (1 - n) as usize,
            };
            let list = hn_closed_form(&p, n).unwrap();
            assert_eq!(list.len(), expected, "n = {n}");
            assert!(list.is_strictly_decreasing());
        }
    }
}
