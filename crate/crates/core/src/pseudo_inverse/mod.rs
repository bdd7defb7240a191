//! Pseudo-inverses in the best-approximate-solution sense.
//!
//! `G(w)` is the smallest-norm element among the minimizers of
//! `‖T(v) - w‖`. [`Scalar1DOperator`] carries closed forms for common scalar
//! nonlinearities; [`BasOracle`] is a brute-force reference that searches a
//! finite candidate set and is used to validate every closed form.

mod oracle;
mod scalar;

pub use oracle::{
    check_pseudo_inverse, expanding_domain_pinv, grid_bas_oracle, BasOracle, ExpansionOutcome, OracleAnswer,
    PseudoInverseReport, ReportTolerances,
};
pub use scalar::{closed_form_pinv, PinvValue, Scalar1DOperator};
