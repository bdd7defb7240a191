//! Dense real linear algebra (one-sided Jacobi SVD, Moore–Penrose inverse)
//! and exact linear algebra over prime fields.

mod dense;
mod fp;

pub use dense::{mp_inverse, mp_residuals, svd, DenseMatrix, SvdFactors, DEFAULT_MP_TOL};
pub use fp::{fp_invert, fp_solve_kernel, FpInversion, FpMatrix, PrimeField};
