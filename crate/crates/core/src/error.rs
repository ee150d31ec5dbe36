use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The chart parameter lies on (or too close to) the forbidden ray `R_{>=0}`.
    #[error("chart parameter {re}{im:+}i lies on the forbidden ray R>=0 (distance {distance:.3e})")]
    Domain { re: f64, im: f64, distance: f64 },

    #[error("{0}")]
    InvalidRegion(String),

    #[error("{atom} is not stable in region {region}")]
    NotStable { atom: String, region: String },

    #[error("phase order violated while building factors of T^{n} k_x: {detail}")]
    PhaseOrderViolation { n: i64, detail: String },

    #[error("masses [{a}:{b}:{c}] violate the q-triangle inequalities for cell {cell} (q = {q})")]
    TriangleViolation {
        a: f64,
        b: f64,
        c: f64,
        q: f64,
        cell: String,
    },

    #[error("q-mass inversion did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("window [{lo}, {hi}] is too small to classify the mass point")]
    AmbiguousWindow { lo: i64, hi: i64 },

    #[error("integer overflow in Mukai lattice arithmetic")]
    Overflow,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
