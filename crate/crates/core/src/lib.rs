//! Mass and q-mass embeddings of the Bridgeland stability manifold of a generic
//! analytic K3 surface (Picard rank zero).
//!
//! The crate models the projectivized stability manifold by a twist exponent and a
//! standard chart parameter, computes Harder–Narasimhan factors of the semi-rigid
//! objects `T^n k_x`, evaluates their (q-)masses, inverts mass coordinates back to
//! stability conditions, and parametrizes the closure of the image together with
//! its boundary strata.
//!
//! Batch sweeps (verification suites, phase clouds, mass batches) take an
//! [`Exec`] strategy. With the default `parallel` feature they fan out over rayon;
//! without it every strategy runs sequentially.

pub mod boundary;
pub mod chart;
mod error;
pub mod exec;
pub mod hn;
pub mod mass;
pub mod mukai;
pub mod tiling;
pub mod verify;

pub use boundary::{
    hom_functional, imn_phase, phase_cloud, pi_param, semistable_class_predicate, support_ratio, threshold_witness,
    vertex_p, vertex_q, CloudPoint, LaxDescriptor, SquareCoord,
};
pub use chart::{canonicalize, central_charge, phase_of_stable, region, ChartPoint, Region, StabilityPoint};
pub use error::{Error, Result};
pub use exec::Exec;
pub use hn::{hn_closed_form, hn_oracle, phase_spread, twist_reduce, Factor, FactorList};
pub use mass::{
    classify_mass_point, invert_cell, mass_abc, mass_from_factors, mass_vector, triangle_check, CellId, InvertCell,
    MassFunction, Tail, TailKind, TriangleStatus, Window,
};
pub use mukai::{classify_class, pairing, twist_class, AtomKind, ClassType, MukaiVector, ObjectAtom};
