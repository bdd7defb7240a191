//! Operator abstractions shared by every other module.
//!
//! [`FiniteOperator`] is a total map between finite id sets stored as a
//! dense table. [`VectorOperator`] is a deterministic map between real
//! vector spaces, closed under composition, powers, scaling, sums and
//! Cartesian products. Polynomials are stored low-degree-first and applied
//! with right-distributive semantics, `p(T)(v) = Σ a_i T^i(v)`.

mod finite;
mod poly;
mod vector;

pub use finite::{compose, power, FiniteOperator, FunctionSpace};
pub use poly::{FpPolynomial, OperatorPolynomial, RealPolynomial};
pub use vector::{apply_polynomial, VectorOperator, VectorOperatorSpec};
