use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::poly::RealPolynomial;
use crate::error::{GenInvError, Result};
use crate::numerics::DenseMatrix;
use crate::pseudo_inverse::Scalar1DOperator;
use crate::structured_inverse::ConvexSet;

type EvalFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// A deterministic map `R^dim_in -> R^dim_out`.
#[derive(Clone)]
pub struct VectorOperator {
    dim_in: usize,
    dim_out: usize,
    label: String,
    f: Arc<EvalFn>,
}

impl fmt::Debug for VectorOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VectorOperator({}: R^{} -> R^{})", self.label, self.dim_in, self.dim_out)
    }
}

impl VectorOperator {
    pub fn new(
        dim_in: usize,
        dim_out: usize,
        label: impl Into<String>,
        f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        VectorOperator {
            dim_in,
            dim_out,
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(dim, dim, "identity", |v| v.to_vec())
    }

    pub fn linear(a: DenseMatrix) -> Self {
        Self::new(a.cols(), a.rows(), "linear", move |v| a.mul_vec(v))
    }

    /// `v -> A v + b`.
    pub fn affine(a: DenseMatrix, b: Vec<f64>) -> Result<Self> {
        if b.len() != a.rows() {
            return Err(GenInvError::dims(a.rows(), b.len()));
        }
        Ok(Self::new(a.cols(), a.rows(), "affine", move |v| {
            a.mul_vec(v).iter().zip(&b).map(|(x, y)| x + y).collect()
        }))
    }

    /// A scalar nonlinearity applied to every coordinate.
    pub fn entrywise(op: Scalar1DOperator, dim: usize) -> Self {
        let label = format!("entrywise {}", op.name());
        Self::new(dim, dim, label, move |v| v.iter().map(|&x| op.eval(x)).collect())
    }

    /// Metric projection onto a closed convex set.
    pub fn projection(set: ConvexSet) -> Self {
        let d = set.dim();
        Self::new(d, d, "projection", move |v| set.project_best_effort(v))
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_endofunction(&self) -> bool {
        self.dim_in == self.dim_out
    }

    /// Evaluates with a dimension check.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim_in {
            return Err(GenInvError::dims(self.dim_in, v.len()));
        }
        Ok((self.f)(v))
    }

    /// Evaluates without the dimension check; callers guarantee `v.len() == dim_in`.
    #[inline]
    pub fn eval(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.dim_in);
        (self.f)(v)
    }

    /// `self ∘ inner`.
    pub fn after(&self, inner: &VectorOperator) -> Result<VectorOperator> {
        if inner.dim_out != self.dim_in {
            return Err(GenInvError::dims(self.dim_in, inner.dim_out));
        }
        let (f, g) = (self.f.clone(), inner.f.clone());
        Ok(VectorOperator {
            dim_in: inner.dim_in,
            dim_out: self.dim_out,
            label: format!("({}) ∘ ({})", self.label, inner.label),
            f: Arc::new(move |v| f(&g(v))),
        })
    }

    /// `T^k`; `T^0` is the identity.
    pub fn power(&self, k: usize) -> Result<VectorOperator> {
        if !self.is_endofunction() {
            return Err(GenInvError::invalid("power requires an endofunction"));
        }
        let f = self.f.clone();
        Ok(Self::new(self.dim_in, self.dim_out, format!("({})^{k}", self.label), move |v| {
            let mut x = v.to_vec();
            for _ in 0..k {
                x = f(&x);
            }
            x
        }))
    }

    /// `v -> c T(v)`.
    pub fn scale(&self, c: f64) -> VectorOperator {
        let f = self.f.clone();
        Self::new(self.dim_in, self.dim_out, format!("{c}·({})", self.label), move |v| {
            f(v).into_iter().map(|x| c * x).collect()
        })
    }

    /// `v -> T(v) + S(v)`.
    pub fn add(&self, other: &VectorOperator) -> Result<VectorOperator> {
        if self.dim_in != other.dim_in || self.dim_out != other.dim_out {
            return Err(GenInvError::invalid("sum of operators with different dimensions"));
        }
        let (f, g) = (self.f.clone(), other.f.clone());
        Ok(Self::new(
            self.dim_in,
            self.dim_out,
            format!("({}) + ({})", self.label, other.label),
            move |v| f(v).iter().zip(g(v)).map(|(a, b)| a + b).collect(),
        ))
    }

    /// Componentwise map on the concatenation of the factors' inputs.
    pub fn product(parts: &[VectorOperator]) -> VectorOperator {
        let dim_in = parts.iter().map(|p| p.dim_in).sum();
        let dim_out = parts.iter().map(|p| p.dim_out).sum();
        let parts: Vec<VectorOperator> = parts.to_vec();
        Self::new(dim_in, dim_out, "product", move |v| {
            let mut out = Vec::with_capacity(dim_out);
            let mut offset = 0;
            for p in &parts {
                out.extend((p.f)(&v[offset..offset + p.dim_in]));
                offset += p.dim_in;
            }
            out
        })
    }
}

/// `p(T)(v) = Σ a_i T^i(v)`, iterating `T` and accumulating.
pub fn apply_polynomial(p: &RealPolynomial, t: &VectorOperator, v: &[f64]) -> Result<Vec<f64>> {
    if !t.is_endofunction() {
        return Err(GenInvError::invalid("polynomials apply to endofunctions only"));
    }
    if v.len() != t.dim_in {
        return Err(GenInvError::dims(t.dim_in, v.len()));
    }
    let mut acc = vec![0.0; v.len()];
    let mut x = v.to_vec();
    for (i, &a) in p.coeffs().iter().enumerate() {
        if i > 0 {
            x = t.eval(&x);
        }
        for (s, xi) in acc.iter_mut().zip(&x) {
            *s += a * xi;
        }
    }
    Ok(acc)
}

/// Serializable description of a [`VectorOperator`] built from the
/// supported constructors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VectorOperatorSpec {
    Identity {
        dim: usize,
    },
    Scalar {
        op: Scalar1DOperator,
        #[serde(default = "one")]
        dim: usize,
    },
    Linear {
        matrix: DenseMatrix,
    },
    Affine {
        matrix: DenseMatrix,
        offset: Vec<f64>,
    },
    Projection {
        set: ConvexSet,
    },
    Compose {
        outer: Box<VectorOperatorSpec>,
        inner: Box<VectorOperatorSpec>,
    },
    Power {
        op: Box<VectorOperatorSpec>,
        k: usize,
    },
    Scale {
        c: f64,
        op: Box<VectorOperatorSpec>,
    },
    Sum {
        left: Box<VectorOperatorSpec>,
        right: Box<VectorOperatorSpec>,
    },
    Product {
        parts: Vec<VectorOperatorSpec>,
    },
}

fn one() -> usize {
    1
}

impl VectorOperatorSpec {
    pub fn build(&self) -> Result<VectorOperator> {
        use VectorOperatorSpec::*;
        match self {
            Identity { dim } => Ok(VectorOperator::identity(*dim)),
            Scalar { op, dim } => {
                op.validate()?;
                Ok(VectorOperator::entrywise(op.clone(), *dim))
            }
            Linear { matrix } => Ok(VectorOperator::linear(matrix.clone())),
            Affine { matrix, offset } => VectorOperator::affine(matrix.clone(), offset.clone()),
            Projection { set } => {
                set.validate()?;
                Ok(VectorOperator::projection(set.clone()))
            }
            Compose { outer, inner } => outer.build()?.after(&inner.build()?),
            Power { op, k } => op.build()?.power(*k),
            Scale { c, op } => Ok(op.build()?.scale(*c)),
            Sum { left, right } => left.build()?.add(&right.build()?),
            Product { parts } => {
                let built = parts.iter().map(|p| p.build()).collect::<Result<Vec<_>>>()?;
                Ok(VectorOperator::product(&built))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idempotent() -> VectorOperator {
        // coordinate projection onto the first axis
        VectorOperator::new(2, 2, "e1", |v| vec![v[0], 0.0])
    }

    #[test]
    fn monomial_and_constant() {
        let t = VectorOperator::entrywise(Scalar1DOperator::Tanh, 2);
        let v = [0.3, -1.2];
        let x = RealPolynomial::new(vec![0.0, 1.0]);
        assert_eq!(apply_polynomial(&x, &t, &v).unwrap(), t.eval(&v));
        let c = RealPolynomial::new(vec![1.0]);
        assert_eq!(apply_polynomial(&c, &t, &v).unwrap(), v.to_vec());
    }

    #[test]
    fn idempotent_annihilated_by_x2_minus_x() {
        let p = RealPolynomial::new(vec![0.0, -1.0, 1.0]);
        let out = apply_polynomial(&p, &idempotent(), &[2.5, -7.0]).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn composition_checks_dimensions() {
        let a = VectorOperator::linear(DenseMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap());
        let t = VectorOperator::entrywise(Scalar1DOperator::Relu, 1);
        let c = t.after(&a).unwrap();
        assert_eq!((c.dim_in(), c.dim_out()), (2, 1));
        assert_eq!(c.eval(&[-1.0, -2.0]), vec![0.0]);
        assert!(a.after(&a).is_err());
        assert!(a.apply(&[1.0]).is_err());
    }

    #[test]
    fn spec_builds_from_json() {
        let s: VectorOperatorSpec = serde_json::from_str(
            r#"{"kind":"compose","outer":{"kind":"scalar","op":{"kind":"relu"}},
                "inner":{"kind":"linear","matrix":{"rows":1,"cols":2,"data":[1,-1]}}}"#,
        )
        .unwrap();
        let t = s.build().unwrap();
        assert_eq!(t.eval(&[3.0, 1.0]), vec![2.0]);
        assert_eq!(t.eval(&[1.0, 3.0]), vec![0.0]);
    }

    #[test]
    fn product_splits_input() {
        let p = VectorOperator::product(&[
            VectorOperator::entrywise(Scalar1DOperator::Relu, 1),
            VectorOperator::identity(2).scale(2.0),
        ]);
        assert_eq!(p.eval(&[-1.0, 1.0, 2.0]), vec![0.0, 2.0, 4.0]);
    }
}
