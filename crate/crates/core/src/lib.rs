//! Generalized inverses for nonlinear operators.
//!
//! The crate covers four families of inverses and the machinery around them:
//!
//! * `{1,2}`-inverses of maps between finite sets ([`set_inverse`]),
//! * pseudo-inverses (best approximate solution plus the second Moore–Penrose
//!   axiom) of real operators, with closed forms for common scalar
//!   nonlinearities and a brute-force grid oracle ([`pseudo_inverse`],
//!   [`structured_inverse`], [`applied`]),
//! * Drazin and left-Drazin inverses of endofunctions ([`endofunction`]),
//! * vanishing polynomials of operators on `F_p^n` and the inverses they
//!   yield as polynomials in the operator ([`vanishing`]).
//!
//! Dense real and prime-field linear algebra lives in [`numerics`].

#![forbid(unsafe_code)]

pub mod applied;
pub mod core_ops;
pub mod endofunction;
pub mod error;
pub mod numerics;
pub mod pseudo_inverse;
pub mod set_inverse;
pub mod structured_inverse;
pub mod vanishing;
pub mod verify;

pub use error::{GenInvError, Result};
