//! The numerical Mukai lattice `N(X) = Z ⊕ Z` of a K3 surface with trivial
//! Picard group, and the finite vocabulary of objects whose classes we need.
//!
//! Coordinates are `(v1, v2)` with respect to the generators of `H^0` and `H^4`.
//! In these coordinates `[O_X] = (1, 1)` and `[k_x] = (0, 1)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MukaiVector {
    pub v1: i64,
    pub v2: i64,
}

impl MukaiVector {
    pub const STRUCTURE: MukaiVector = MukaiVector { v1: 1, v2: 1 };
    pub const SKYSCRAPER: MukaiVector = MukaiVector { v1: 0, v2: 1 };
    pub const ZERO: MukaiVector = MukaiVector { v1: 0, v2: 0 };

    pub const fn new(v1: i64, v2: i64) -> Self {
        MukaiVector { v1, v2 }
    }

    /// Coefficients `(r, m)` in the basis `[O_X], [k_x]`: `v = r[O_X] + m[k_x]`.
    pub fn basis_coefficients(self) -> (i64, i64) {
        (self.v1, self.v2 - self.v1)
    }

    /// Inverse of [`basis_coefficients`](Self::basis_coefficients).
    pub fn from_basis(r: i64, m: i64) -> Self {
        MukaiVector::new(r, r + m)
    }

    pub fn checked_add(self, other: Self) -> Result<Self> {
        Ok(MukaiVector::new(
            self.v1.checked_add(other.v1).ok_or(Error::Overflow)?,
            self.v2.checked_add(other.v2).ok_or(Error::Overflow)?,
        ))
    }

    pub fn checked_scale(self, k: i64) -> Result<Self> {
        Ok(MukaiVector::new(
            self.v1.checked_mul(k).ok_or(Error::Overflow)?,
            self.v2.checked_mul(k).ok_or(Error::Overflow)?,
        ))
    }
}

impl std::ops::Neg for MukaiVector {
    type Output = MukaiVector;
    fn neg(self) -> MukaiVector {
        MukaiVector::new(-self.v1, -self.v2)
    }
}

impl std::ops::Add for MukaiVector {
    type Output = MukaiVector;
    fn add(self, o: MukaiVector) -> MukaiVector {
        MukaiVector::new(self.v1 + o.v1, self.v2 + o.v2)
    }
}

impl fmt::Display for MukaiVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.v1, self.v2)
    }
}

/// Overflow-checked Mukai pairing `u·v = u1 v2 + u2 v1`.
pub fn checked_pairing(u: MukaiVector, v: MukaiVector) -> Result<i64> {
    let x = u.v1.checked_mul(v.v2).ok_or(Error::Overflow)?;
    let y = u.v2.checked_mul(v.v1).ok_or(Error::Overflow)?;
    x.checked_add(y).ok_or(Error::Overflow)
}

/// The Mukai pairing. Agrees with the Euler characteristic `χ(u, v)`.
///
/// Panics on `i64` overflow, which cannot happen for coordinates bounded by `2^31`.
pub fn pairing(u: MukaiVector, v: MukaiVector) -> i64 {
    checked_pairing(u, v).expect("Mukai pairing overflowed i64")
}

/// Action of the spherical twist in `O_X` on classes: `v ↦ v − (v·[O_X])[O_X]`.
pub fn checked_twist_class(v: MukaiVector) -> Result<MukaiVector> {
    let s = checked_pairing(v, MukaiVector::STRUCTURE)?;
    v.checked_add(-MukaiVector::STRUCTURE.checked_scale(s)?)
}

/// Action of the spherical twist on classes. This is a reflection, hence an involution.
pub fn twist_class(v: MukaiVector) -> MukaiVector {
    checked_twist_class(v).expect("twist_class overflowed i64")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassType {
    Spherical,
    SemiRigid,
    Other,
}

pub fn classify_class(v: MukaiVector) -> ClassType {
    match checked_pairing(v, v) {
        Ok(2) => ClassType::Spherical,
        Ok(0) if v != MukaiVector::ZERO => ClassType::SemiRigid,
        _ => ClassType::Other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AtomKind {
    /// `T^t k_x`.
    SkyTwist(i64),
    /// `O_X`.
    Structure,
    /// `I_{m,n}`, the kernel of a generic map `O_X^{⊕m} → O_R` onto `n` points.
    IdealMN { m: u32, n: u32 },
}

/// An atom of the object vocabulary together with a homological shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObjectAtom {
    pub kind: AtomKind,
    pub shift: i64,
}

impl ObjectAtom {
    pub const fn new(kind: AtomKind, shift: i64) -> Self {
        ObjectAtom { kind, shift }
    }

    pub const fn sky(t: i64) -> Self {
        ObjectAtom::new(AtomKind::SkyTwist(t), 0)
    }

    pub const fn structure(shift: i64) -> Self {
        ObjectAtom::new(AtomKind::Structure, shift)
    }

    pub fn shifted(self, by: i64) -> Self {
        ObjectAtom::new(self.kind, self.shift + by)
    }

    /// Mukai class of the unshifted atom.
    fn base_class(self) -> MukaiVector {
        match self.kind {
            // twist_class is an involution, so only the parity of t matters
            AtomKind::SkyTwist(t) if t.rem_euclid(2) == 0 => MukaiVector::SKYSCRAPER,
            AtomKind::SkyTwist(_) => MukaiVector::new(-1, 0),
            AtomKind::Structure => MukaiVector::STRUCTURE,
            AtomKind::IdealMN { m, n } => MukaiVector::new(m as i64, m as i64 - n as i64),
        }
    }

    /// `[atom[s]] = (−1)^s [atom]`.
    pub fn class(self) -> MukaiVector {
        let c = self.base_class();
        if self.shift.rem_euclid(2) == 0 {
            c
        } else {
            -c
        }
    }
}

impl fmt::Display for ObjectAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            AtomKind::SkyTwist(0) => write!(f, "k_x")?,
            AtomKind::SkyTwist(1) => write!(f, "T k_x")?,
            AtomKind::SkyTwist(t) => write!(f, "T^{t} k_x")?,
            AtomKind::Structure => write!(f, "O_X")?,
            AtomKind::IdealMN { m, n } => write!(f, "I_{{{m},{n}}}")?,
        }
        if self.shift != 0 {
            write!(f, "[{}]", self.shift)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pairing_examples() {
        assert_eq!(pairing(MukaiVector::new(1, 1), MukaiVector::new(0, 1)), 1);
        assert_eq!(pairing(MukaiVector::new(0, 1), MukaiVector::new(0, 1)), 0);
        assert_eq!(pairing(MukaiVector::new(1, 1), MukaiVector::new(1, 1)), 2);
    }

    #[test]
    fn twist_examples() {
        assert_eq!(twist_class(MukaiVector::new(0, 1)), MukaiVector::new(-1, 0));
        assert_eq!(twist_class(MukaiVector::new(1, 1)), MukaiVector::new(-1, -1));
        let v = MukaiVector::new(3, -5);
        assert_eq!(twist_class(twist_class(v)), v);
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify_class(MukaiVector::new(1, 1)), ClassType::Spherical);
        assert_eq!(classify_class(MukaiVector::new(0, 3)), ClassType::SemiRigid);
        assert_eq!(classify_class(MukaiVector::new(2, -1)), ClassType::Other);
        assert_eq!(classify_class(MukaiVector::ZERO), ClassType::Other);
    }

    #[test]
    fn atom_classes() {
        assert_eq!(ObjectAtom::sky(0).class(), MukaiVector::new(0, 1));
        assert_eq!(ObjectAtom::sky(1).class(), MukaiVector::new(-1, 0));
        assert_eq!(ObjectAtom::structure(0).class(), MukaiVector::new(1, 1));
        assert_eq!(ObjectAtom::structure(-3).class(), MukaiVector::new(-1, -1));
        let ideal = ObjectAtom::new(AtomKind::IdealMN { m: 2, n: 5 }, 0);
        assert_eq!(ideal.class(), MukaiVector::new(2, -3));
        // I_{1,1} = I_x and T k_x = I_x[1]
        let ix = ObjectAtom::new(AtomKind::IdealMN { m: 1, n: 1 }, 1);
        assert_eq!(ix.class(), ObjectAtom::sky(1).class());
    }

    #[test]
    fn sky_twist_classes_follow_twist_action() {
        let mut expected = MukaiVector::SKYSCRAPER;
        for t in 0..=64 {
            assert_eq!(ObjectAtom::sky(t).class(), expected);
            assert_eq!(ObjectAtom::sky(-t).class(), expected);
            expected = twist_class(expected);
        }
    }

    #[test]
    fn overflow_is_reported() {
        let big = MukaiVector::new(i64::MAX, 1);
        assert_eq!(checked_pairing(big, big), Err(Error::Overflow));
        let bound = 1i64 << 31;
        let v = MukaiVector::new(bound, -bound);
        assert_eq!(pairing(v, v), -(1i64 << 62) * 2);
    }

    proptest! {
        #[test]
        fn pairing_is_symmetric_bilinear(
            u in (-1000i64..1000, -1000i64..1000),
            v in (-1000i64..1000, -1000i64..1000),
            w in (-1000i64..1000, -1000i64..1000),
            a in -50i64..50,
            b in -50i64..50,
        ) {
            let (u, v, w) = (MukaiVector::new(u.0, u.1), MukaiVector::new(v.0, v.1), MukaiVector::new(w.0, w.1));
            prop_assert_eq!(pairing(u, v), pairing(v, u));
            let lhs = pairing(u.checked_scale(a).unwrap() + v.checked_scale(b).unwrap(), w);
            prop_assert_eq!(lhs, a * pairing(u, w) + b * pairing(v, w));
        }

        #[test]
        fn twist_is_an_involution(v1 in -1_000_000i64..=1_000_000, v2 in -1_000_000i64..=1_000_000) {
            let v = MukaiVector::new(v1, v2);
            prop_assert_eq!(twist_class(twist_class(v)), v);
            prop_assert_eq!(pairing(twist_class(v), twist_class(v)), pairing(v, v));
        }

        #[test]
        fn basis_decomposition_is_unique(v1 in -10_000i64..10_000, v2 in -10_000i64..10_000) {
            let v = MukaiVector::new(v1, v2);
            let (r, m) = v.basis_coefficients();
            prop_assert_eq!(MukaiVector::from_basis(r, m), v);
            prop_assert_eq!(MukaiVector::STRUCTURE.checked_scale(r).unwrap() + MukaiVector::SKYSCRAPER.checked_scale(m).unwrap(), v);
        }
    }
}
