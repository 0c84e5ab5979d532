//! Numerical verification toolkit for time-dependent metric measure spaces.
//!
//! The crate checks defining inequalities of super-, sub- and N-Ricci flows on
//! three kinds of desk-scale instances:
//!
//! - discretized time-dependent geodesic spaces with reference measures
//!   ([`space`], [`transport`], [`dynconv`], [`flowcheck`]),
//! - parametric time-dependent weighted Riemannian charts ([`riemann`]),
//! - finite-state time-dependent diffusion generators ([`gamma`]),
//!
//! plus the `D_I` transportation distance between time-dependent instances
//! ([`ddi`]).
//!
//! All numerical kernels are generic over a floating-point [`Scalar`];
//! concrete code normally uses the [`Real`] alias.

pub mod convexity;
pub mod corpus;
pub mod ddi;
pub mod dynconv;
pub mod error;
pub mod expr;
pub mod flowcheck;
pub mod gamma;
pub mod linalg;
pub mod quad;
pub mod riemann;
pub mod space;
pub mod transport;

pub use error::Error;

/// Default concrete scalar used by the CLI and most tests.
pub type Real = f64;

/// Result alias for fallible toolkit operations.
pub type Result<T> = std::result::Result<T, Error>;

/// Floating-point scalar the numerical kernels are generic over.
///
/// `f32` and `f64` both qualify. Exact types are only used inside the
/// transport simplex, which has its own weaker bound (see
/// [`transport::simplex`]).
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + std::iter::Sum<Self>
    + std::ops::AddAssign
    + std::ops::SubAssign
    + std::fmt::Debug
    + std::fmt::Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into the scalar type.
    fn real(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal must be representable")
    }
}

impl<T> Scalar for T where
    T: num_traits::Float
        + num_traits::FromPrimitive
        + std::iter::Sum<T>
        + std::ops::AddAssign
        + std::ops::SubAssign
        + std::fmt::Debug
        + std::fmt::Display
        + Default
        + Send
        + Sync
        + 'static
{
}
