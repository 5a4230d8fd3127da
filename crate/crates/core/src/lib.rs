//! Numerical laboratory for flows on the space of unimodular lattices
//! SL(n,R)/SL(n,Z) with n = 2 or 3.
//!
//! The crate simulates geodesic, horocycle and unipotent orbits, measures
//! cusp excursions through the shortest-vector observable, and provides the
//! statistical machinery (tail estimators, dependent Borel-Cantelli
//! diagnostics, continued-fraction oracles) needed to check logarithm laws
//! empirically.
//!
//! All geometry is generic over the scalar type via [`Scalar`] (any
//! `num_traits::Float` works; `f64` is the default lane, see the aliases at
//! the crate root). The Diophantine oracle runs on exact `BigRational`
//! arithmetic where floating point cannot represent the quantities involved.

pub mod borel_cantelli;
pub mod diophantine;
pub mod error;
pub mod flows;
pub mod group;
pub mod haar;
pub mod lattice;
pub mod matrix;
pub mod rng;
pub mod scalar;
pub mod stats;

pub use error::CoreError;
pub use scalar::Scalar;

/// Default-precision aliases for the main domain types.
pub type GroupElement64 = group::GroupElement<f64>;
pub type LieAlgebraElement64 = group::LieAlgebraElement<f64>;
pub type OneParamSubgroup64 = group::OneParamSubgroup<f64>;
pub type KakDecomposition64 = group::KakDecomposition<f64>;
pub type LatticePoint64 = lattice::LatticePoint<f64>;
pub type UpperHalfPoint64 = lattice::UpperHalfPoint<f64>;
pub type ExcursionSeries64 = flows::ExcursionSeries<f64>;
pub type BoxSpec64 = flows::BoxSpec<f64>;
pub type TailEstimate64 = haar::TailEstimate<f64>;
