use serde::{Deserialize, Serialize};

use crate::error::{GenInvError, Result};

/// Relative singular-value cutoff used by [`mp_inverse`] callers that have
/// no better choice.
pub const DEFAULT_MP_TOL: f64 = 1e-12;

const JACOBI_THRESHOLD: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 60;

/// Row-major real matrix with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<MatrixRepr> for DenseMatrix {
    type Error = GenInvError;

    fn try_from(r: MatrixRepr) -> Result<Self> {
        DenseMatrix::new(r.rows, r.cols, r.data)
    }
}

impl From<DenseMatrix> for MatrixRepr {
    fn from(m: DenseMatrix) -> Self {
        MatrixRepr {
            rows: m.rows,
            cols: m.cols,
            data: m.data,
        }
    }
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(GenInvError::dims(rows * cols, data.len()));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(GenInvError::invalid("matrix entries must be finite"));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(GenInvError::invalid("ragged rows"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m.data[i * d.len() + i] = x;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        self.data[i * self.cols + j] = x;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(GenInvError::dims(self.cols, other.rows));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    /// `A v`; panics if `v.len() != cols`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with(other, |a, b| a + b)
    }

    fn zip_with(&self, other: &DenseMatrix, f: impl Fn(f64, f64) -> f64) -> Result<DenseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(GenInvError::invalid(format!(
                "shape {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn scale(&self, c: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| c * x).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn determinant(&self) -> Result<f64> {
        if self.rows != self.cols {
            return Err(GenInvError::invalid("determinant of a non-square matrix"));
        }
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for c in 0..n {
            let piv = (c..n)
                .max_by(|&i, &j| a[i * n + c].abs().total_cmp(&a[j * n + c].abs()))
                .unwrap();
            if a[piv * n + c] == 0.0 {
                return Ok(0.0);
            }
            if piv != c {
                for j in 0..n {
                    a.swap(piv * n + j, c * n + j);
                }
                det = -det;
            }
            let p = a[c * n + c];
            det *= p;
            for i in c + 1..n {
                let f = a[i * n + c] / p;
                for j in c..n {
                    a[i * n + j] -= f * a[c * n + j];
                }
            }
        }
        Ok(det)
    }
}

/// `A = U diag(S) Vt` with `U`, `Vt` orthogonal and `S` descending.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub vt: DenseMatrix,
    pub sweeps: usize,
}

impl SvdFactors {
    pub fn reconstruct(&self) -> DenseMatrix {
        let (m, n) = (self.u.rows(), self.vt.rows());
        let mut sigma = DenseMatrix::zeros(m, n);
        for (i, &s) in self.s.iter().enumerate() {
            sigma.set(i, i, s);
        }
        self.u.matmul(&sigma).unwrap().matmul(&self.vt).unwrap()
    }
}

/// One-sided Jacobi SVD.
pub fn svd(a: &DenseMatrix) -> Result<SvdFactors> {
    if a.rows < a.cols {
        let t = svd(&a.transpose())?;
        return Ok(SvdFactors {
            u: t.vt.transpose(),
            s: t.s,
            vt: t.u.transpose(),
            sweeps: t.sweeps,
        });
    }
    let (m, n) = (a.rows, a.cols);
    // columns stored contiguously
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| a.col(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    // columns below this squared norm are rounding noise
    let negligible = (a.frobenius_norm() * f64::EPSILON).powi(2);
    let mut sweeps = 0;
    let mut converged = n < 2;
    while !converged {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(GenInvError::NonConvergence {
                what: "one-sided Jacobi SVD".into(),
                iterations: sweeps,
            });
        }
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha: f64 = w[p].iter().map(|x| x * x).sum();
                let beta: f64 = w[q].iter().map(|x| x * x).sum();
                let gamma: f64 = w[p].iter().zip(&w[q]).map(|(x, y)| x * y).sum();
                if gamma == 0.0
                    || alpha <= negligible
                    || beta <= negligible
                    || gamma.abs() <= JACOBI_THRESHOLD * (alpha * beta).sqrt()
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        converged = !rotated;
    }

    let norms: Vec<f64> = w.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    let s: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let s_max = s.first().copied().unwrap_or(0.0);
    let rank_floor = s_max * (m.max(n) as f64) * f64::EPSILON;

    let mut ucols: Vec<Vec<f64>> = Vec::with_capacity(m);
    for (k, &j) in order.iter().enumerate() {
        if s[k] > rank_floor && s[k] > 0.0 {
            ucols.push(w[j].iter().map(|x| x / s[k]).collect());
        } else {
            break;
        }
    }
    complete_orthonormal(&mut ucols, m);

    let mut u = DenseMatrix::zeros(m, m);
    for (j, col) in ucols.iter().enumerate() {
        for i in 0..m {
            u.set(i, j, col[i]);
        }
    }
    let mut vt = DenseMatrix::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        for i in 0..n {
            vt.set(k, i, v[j][i]);
        }
    }
    Ok(SvdFactors { u, s, vt, sweeps })
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let (cp, cq) = (&mut left[p], &mut right[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Extends an orthonormal family to a basis of `R^m` using standard basis
/// vectors and two passes of Gram–Schmidt.
fn complete_orthonormal(cols: &mut Vec<Vec<f64>>, m: usize) {
    let mut e = 0;
    while cols.len() < m && e < m {
        let mut x = vec![0.0; m];
        x[e] = 1.0;
        e += 1;
        for _ in 0..2 {
            for c in cols.iter() {
                let d: f64 = c.iter().zip(&x).map(|(a, b)| a * b).sum();
                for (xi, ci) in x.iter_mut().zip(c) {
                    *xi -= d * ci;
                }
            }
        }
        let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nrm > 1e-8 {
            cols.push(x.into_iter().map(|v| v / nrm).collect());
        }
    }
}

/// Moore–Penrose inverse; singular values at or below `tol · σ_max` are
/// treated as zero.
pub fn mp_inverse(a: &DenseMatrix, tol: f64) -> Result<DenseMatrix> {
    let f = svd(a)?;
    let s_max = f.s.first().copied().unwrap_or(0.0);
    let cutoff = tol * s_max;
    let (m, n) = (a.rows, a.cols);
    let mut out = DenseMatrix::zeros(n, m);
    for (k, &s) in f.s.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        for i in 0..n {
            let vik = f.vt.get(k, i) / s;
            if vik == 0.0 {
                continue;
            }
            for j in 0..m {
                out.data[i * m + j] += vik * f.u.get(j, k);
            }
        }
    }
    Ok(out)
}

/// Frobenius residuals of the four Moore–Penrose conditions for `(A, G)`:
/// `AGA - A`, `GAG - G`, `(AG)ᵀ - AG`, `(GA)ᵀ - GA`.
pub fn mp_residuals(a: &DenseMatrix, g: &DenseMatrix) -> Result<[f64; 4]> {
    let ag = a.matmul(g)?;
    let ga = g.matmul(a)?;
    Ok([
        ag.matmul(a)?.sub(a)?.frobenius_norm(),
        ga.matmul(g)?.sub(g)?.frobenius_norm(),
        ag.transpose().sub(&ag)?.frobenius_norm(),
        ga.transpose().sub(&ga)?.frobenius_norm(),
    ])
}
