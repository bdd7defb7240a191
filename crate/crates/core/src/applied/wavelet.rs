//! Haar bases and thresholding in wavelet coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{GenInvError, Result};
use crate::numerics::DenseMatrix;
use crate::pseudo_inverse::Scalar1DOperator;

/// Orthonormal transform; rows are basis vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletBasis {
    matrix: DenseMatrix,
}

impl WaveletBasis {
    /// Accepts any square matrix with `AᵀA = I` within 1e-12.
    pub fn new(matrix: DenseMatrix) -> Result<Self> {
        if matrix.rows() != matrix.cols() {
            return Err(GenInvError::invalid("wavelet transform must be square"));
        }
        let n = matrix.rows();
        let gram = matrix.transpose().matmul(&matrix)?;
        let off = gram.sub(&DenseMatrix::identity(n))?;
        if off.data().iter().any(|x| x.abs() > 1e-12) {
            return Err(GenInvError::invalid("transform is not orthonormal"));
        }
        Ok(WaveletBasis { matrix })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn analyze(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(x)
    }

    pub fn synthesize(&self, u: &[f64]) -> Vec<f64> {
        let n = self.size();
        (0..n).map(|j| (0..n).map(|i| self.matrix.get(i, j) * u[i]).sum()).collect()
    }
}

/// `H_1 = [1]`, `H_{2n} = [H_n ⊗ (1,1); I_n ⊗ (1,−1)] / √2`.
pub fn haar_basis(n: usize) -> Result<WaveletBasis> {
    if n == 0 || !n.is_power_of_two() {
        return Err(GenInvError::invalid(format!("Haar size must be a power of two, got {n}")));
    }
    let mut h = vec![vec![1.0]];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    while h.len() < n {
        let m = h.len();
        let mut next = Vec::with_capacity(2 * m);
        for row in &h {
            next.push(row.iter().flat_map(|&x| [x * s, x * s]).collect::<Vec<f64>>());
        }
        for i in 0..m {
            let mut row = vec![0.0; 2 * m];
            row[2 * i] = s;
            row[2 * i + 1] = -s;
            next.push(row);
        }
        h = next;
    }
    WaveletBasis::new(DenseMatrix::from_rows(&h)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    Hard,
    Soft,
}

impl ThresholdKind {
    pub fn operator(self, a: f64) -> Scalar1DOperator {
        match self {
            ThresholdKind::Hard => Scalar1DOperator::HardThreshold { a },
            ThresholdKind::Soft => Scalar1DOperator::SoftThreshold { a },
        }
    }
}

/// A signal on which thresholding and the round trip disagree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub signal: Vec<f64>,
    pub denoised: Vec<f64>,
    pub roundtrip: Vec<f64>,
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundTrip {
    pub coefficients: Vec<f64>,
    /// `Aᵀσ(Ax)`
    pub denoised: Vec<f64>,
    /// `Aᵀσ̄(σ(Ax))`
    pub roundtrip: Vec<f64>,
    pub difference: f64,
    pub witness: Option<Witness>,
}

fn pipelines(basis: &WaveletBasis, op: &Scalar1DOperator, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, f64)> {
    let u = basis.analyze(x);
    let thr: Vec<f64> = u.iter().map(|&c| op.eval(c)).collect();
    let back = thr
        .iter()
        .map(|&y| {
            op.pinv(y)
                .representative()
                .ok_or_else(|| GenInvError::NotApplicable(format!("{} has no inverse at {y}", op.name())))
        })
        .collect::<Result<Vec<f64>>>()?;
    let denoised = basis.synthesize(&thr);
    let roundtrip = basis.synthesize(&back);
    let diff = denoised.iter().zip(&roundtrip).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    Ok((u, denoised, roundtrip, diff))
}

/// Thresholding in wavelet coordinates against applying `T = σA` followed
/// by its pseudo-inverse. Soft thresholding with `a > 0` also reports a
/// witness built from a single coefficient of size `a + 1`.
pub fn wavelet_threshold_roundtrip(basis: &WaveletBasis, kind: ThresholdKind, a: f64, x: &[f64]) -> Result<RoundTrip> {
    if x.len() != basis.size() {
        return Err(GenInvError::dims(basis.size(), x.len()));
    }
    let op = kind.operator(a);
    op.validate()?;
    let (coefficients, denoised, roundtrip, difference) = pipelines(basis, &op, x)?;
    let witness = if kind == ThresholdKind::Soft && a > 0.0 {
        let mut e = vec![0.0; basis.size()];
        e[0] = a + 1.0;
        let signal = basis.synthesize(&e);
        let (_, d, r, diff) = pipelines(basis, &op, &signal)?;
        Some(Witness {
            signal,
            denoised: d,
            roundtrip: r,
            difference: diff,
        })
    } else {
        None
    };
    Ok(RoundTrip {
        coefficients,
        denoised,
        roundtrip,
        difference,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_two_and_eight() {
        let h = haar_basis(2).unwrap();
        let s = 0.5f64.sqrt();
        assert_eq!(h.matrix().data(), &[s, s, s, -s]);
        let det = haar_basis(8).unwrap().matrix().determinant().unwrap();
        assert!((det.abs() - 1.0).abs() < 1e-10);
        assert!(haar_basis(6).is_err());
        assert!(haar_basis(0).is_err());
    }

    #[test]
    fn hard_threshold_example() {
        let r = wavelet_threshold_roundtrip(&haar_basis(2).unwrap(), ThresholdKind::Hard, 2.0, &[3.0, 1.0]).unwrap();
        assert!((r.coefficients[0] - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!((r.coefficients[1] - 2f64.sqrt()).abs() < 1e-12);
        assert!((r.denoised[0] - 2.0).abs() < 1e-12 && (r.denoised[1] - 2.0).abs() < 1e-12);
        assert_eq!(r.difference, 0.0);
        assert!(r.witness.is_none());
    }

    #[test]
    fn soft_witness_differs_by_a() {
        let b = haar_basis(4).unwrap();
        let r = wavelet_threshold_roundtrip(&b, ThresholdKind::Soft, 1.0, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let w = r.witness.unwrap();
        assert!((w.difference - 1.0).abs() < 1e-12);
        let z = wavelet_threshold_roundtrip(&b, ThresholdKind::Soft, 0.0, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(z.difference < 1e-15 && z.witness.is_none());
    }
}
