//! Single layers `σ(Av)` with a full-rank weight matrix.

use serde::{Deserialize, Serialize};

use crate::core_ops::VectorOperator;
use crate::error::{GenInvError, Result};
use crate::numerics::{mp_inverse, svd, DenseMatrix, DEFAULT_MP_TOL};
use crate::pseudo_inverse::Scalar1DOperator;
use crate::structured_inverse::{projection_after_operator_pinv, ConvexSet, SourceResult, SourceSearch};

const RANK_RATIO: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerActivation {
    Tanh,
    Relu,
}

#[derive(Debug, Clone)]
pub struct NeuralLayer {
    weights: DenseMatrix,
    pinv: DenseMatrix,
    activation: LayerActivation,
    clip: Option<u32>,
}

impl NeuralLayer {
    /// `weights` must be `m × n` with `m ≤ n` and full row rank.
    pub fn new(weights: DenseMatrix, activation: LayerActivation) -> Result<Self> {
        let (m, n) = (weights.rows(), weights.cols());
        if m == 0 || m > n {
            return Err(GenInvError::invalid(format!("layer needs 0 < m ≤ n, got {m}×{n}")));
        }
        let s = svd(&weights)?.s;
        let (hi, lo) = (s[0], s[m - 1]);
        if !(lo > RANK_RATIO * hi) {
            return Err(GenInvError::invalid(format!(
                "weights are not full rank (σ_min {lo:.3e}, σ_max {hi:.3e})"
            )));
        }
        let pinv = mp_inverse(&weights, DEFAULT_MP_TOL)?;
        Ok(NeuralLayer {
            weights,
            pinv,
            activation,
            clip: None,
        })
    }

    /// Clipping to `[−1+1/k, 1−1/k]` after a tanh layer.
    pub fn with_clip(mut self, k: u32) -> Result<Self> {
        if self.activation != LayerActivation::Tanh || k < 2 {
            return Err(GenInvError::invalid("clipping needs a tanh layer and k > 1"));
        }
        self.clip = Some(k);
        Ok(self)
    }

    pub fn weights(&self) -> &DenseMatrix {
        &self.weights
    }

    pub fn activation(&self) -> LayerActivation {
        self.activation
    }

    pub fn clip(&self) -> Option<u32> {
        self.clip
    }

    pub fn dim_in(&self) -> usize {
        self.weights.cols()
    }

    pub fn dim_out(&self) -> usize {
        self.weights.rows()
    }

    fn clip_set(&self) -> Option<ConvexSet> {
        self.clip.map(|k| {
            let c = 1.0 - 1.0 / f64::from(k);
            ConvexSet::Box {
                lo: vec![-c; self.dim_out()],
                hi: vec![c; self.dim_out()],
            }
        })
    }

    fn unclipped(&self) -> VectorOperator {
        let act = match self.activation {
            LayerActivation::Tanh => Scalar1DOperator::Tanh,
            LayerActivation::Relu => Scalar1DOperator::Relu,
        };
        VectorOperator::entrywise(act, self.dim_out())
            .after(&VectorOperator::linear(self.weights.clone()))
            .expect("shapes agree")
    }

    /// The layer as an operator, clipping included.
    pub fn operator(&self) -> VectorOperator {
        let t = self.unclipped();
        match self.clip_set() {
            Some(c) => VectorOperator::projection(c).after(&t).expect("shapes agree"),
            None => t,
        }
    }

    pub fn forward(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.operator().apply(v)
    }
}

fn check_w(layer: &NeuralLayer, w: &[f64]) -> Result<()> {
    if w.len() != layer.dim_out() {
        return Err(GenInvError::dims(layer.dim_out(), w.len()));
    }
    if w.iter().any(|x| !x.is_finite()) {
        return Err(GenInvError::invalid("w must be finite"));
    }
    Ok(())
}

/// `A⁺ arctanh(w)`; undefined as soon as one `|wᵢ| ≥ 1`.
pub fn tanh_layer_pinv(layer: &NeuralLayer, w: &[f64]) -> Result<Vec<f64>> {
    if layer.activation != LayerActivation::Tanh {
        return Err(GenInvError::NotApplicable("layer activation is not tanh".into()));
    }
    check_w(layer, w)?;
    if let Some(i) = w.iter().position(|x| x.abs() >= 1.0) {
        return Err(GenInvError::NotApplicable(format!(
            "pseudo-inverse undefined at w: component {i} is {} and has no nearest image point",
            w[i]
        )));
    }
    let u: Vec<f64> = w.iter().map(|x| x.atanh()).collect();
    Ok(layer.pinv.mul_vec(&u))
}

fn layer_source(layer: &NeuralLayer, set: ConvexSet, activation: Scalar1DOperator, w: &[f64]) -> Result<Vec<f64>> {
    let base = VectorOperator::entrywise(activation.clone(), layer.dim_out())
        .after(&VectorOperator::linear(layer.weights.clone()))?;
    let inv = projection_after_operator_pinv(
        &base,
        &set,
        &[],
        SourceSearch::MonotoneLayer {
            weights: layer.weights.clone(),
            activation,
        },
    )?;
    match inv.apply(w)? {
        SourceResult::Found(v) => Ok(v),
        SourceResult::NoFeasibleSource => Err(GenInvError::VerificationFailed(
            "least-norm program infeasible; the rank certificate cannot hold".into(),
        )),
    }
}

/// Pseudo-inverse of `P_{C_k} ∘ tanh ∘ A` with `C_k = [−1+1/k, 1−1/k]^m`.
pub fn clipped_tanh_layer_pinv(layer: &NeuralLayer, w: &[f64]) -> Result<Vec<f64>> {
    let Some(set) = layer.clip_set() else {
        return Err(GenInvError::NotApplicable("layer has no clip parameter".into()));
    };
    check_w(layer, w)?;
    layer_source(layer, set, Scalar1DOperator::Tanh, w)
}

/// Pseudo-inverse of `relu ∘ A`, viewed as the projection onto the
/// nonnegative orthant after the linear map.
pub fn relu_layer_pinv(layer: &NeuralLayer, w: &[f64]) -> Result<Vec<f64>> {
    if layer.activation != LayerActivation::Relu {
        return Err(GenInvError::NotApplicable("layer activation is not relu".into()));
    }
    check_w(layer, w)?;
    layer_source(
        layer,
        ConvexSet::nonnegative_orthant(layer.dim_out()),
        Scalar1DOperator::Linear { c: 1.0 },
        w,
    )
}
