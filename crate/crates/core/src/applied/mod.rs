//! Inverting a single neural layer and the wavelet-thresholding identity.

mod layer;
mod qp;
mod wavelet;

pub use layer::{clipped_tanh_layer_pinv, relu_layer_pinv, tanh_layer_pinv, LayerActivation, NeuralLayer};
pub use qp::{solve_least_norm_qp, KktReport, LeastNormQp, QpOutcome, QpSolution, DEFAULT_KKT_TOL, QP_MAX_ITER};
pub use wavelet::{haar_basis, wavelet_threshold_roundtrip, RoundTrip, ThresholdKind, WaveletBasis, Witness};
