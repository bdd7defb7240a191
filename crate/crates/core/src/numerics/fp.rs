use serde::{Deserialize, Serialize};

use crate::core_ops::FpPolynomial;
use crate::error::{GenInvError, Result};

/// The field `F_p` for a prime `p < 2^31`. Products of two reduced
/// elements fit in a `u64` before reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct PrimeField {
    p: u64,
}

impl TryFrom<u64> for PrimeField {
    type Error = GenInvError;

    fn try_from(p: u64) -> Result<Self> {
        PrimeField::new(p)
    }
}

impl From<PrimeField> for u64 {
    fn from(f: PrimeField) -> u64 {
        f.p
    }
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self> {
        if p >= 1 << 31 {
            return Err(GenInvError::invalid(format!("prime {p} is not below 2^31")));
        }
        if !is_prime(p) {
            return Err(GenInvError::invalid(format!("{p} is not prime")));
        }
        Ok(PrimeField { p })
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn reduce_i64(&self, x: i64) -> u64 {
        x.rem_euclid(self.p as i64) as u64
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        (a * b) % self.p
    }

    pub fn pow(&self, mut a: u64, mut e: u64) -> u64 {
        let mut r = 1 % self.p;
        a %= self.p;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        r
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: u64) -> Option<u64> {
        let a = a % self.p;
        (a != 0).then(|| self.pow(a, self.p - 2))
    }
}

/// Matrix over `F_p`, row-major, entries in `[0, p)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "FpMatrixRepr", into = "FpMatrixRepr")]
pub struct FpMatrix {
    field: PrimeField,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct FpMatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
    prime: u64,
}

impl TryFrom<FpMatrixRepr> for FpMatrix {
    type Error = GenInvError;

    fn try_from(r: FpMatrixRepr) -> Result<Self> {
        let f = PrimeField::new(r.prime)?;
        FpMatrix::from_signed(f, r.rows, r.cols, &r.data)
    }
}

impl From<FpMatrix> for FpMatrixRepr {
    fn from(m: FpMatrix) -> Self {
        FpMatrixRepr {
            rows: m.rows,
            cols: m.cols,
            data: m.data.iter().map(|&x| x as i64).collect(),
            prime: m.field.p,
        }
    }
}

/// Result of [`fp_invert`]; singularity is a value, not an error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FpInversion {
    Inverse(FpMatrix),
    Singular,
}

impl FpInversion {
    pub fn inverse(self) -> Option<FpMatrix> {
        match self {
            FpInversion::Inverse(m) => Some(m),
            FpInversion::Singular => None,
        }
    }
}

impl FpMatrix {
    pub fn new(field: PrimeField, rows: usize, cols: usize, data: Vec<u64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(GenInvError::dims(rows * cols, data.len()));
        }
        Ok(FpMatrix {
            field,
            rows,
            cols,
            data: data.into_iter().map(|x| x % field.p).collect(),
        })
    }

    pub fn from_signed(field: PrimeField, rows: usize, cols: usize, data: &[i64]) -> Result<Self> {
        Self::new(field, rows, cols, data.iter().map(|&x| field.reduce_i64(x)).collect())
    }

    pub fn from_rows(field: PrimeField, rows: &[Vec<i64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(GenInvError::invalid("ragged rows"));
        }
        Self::from_signed(field, rows.len(), cols, &rows.concat())
    }

    pub fn zeros(field: PrimeField, rows: usize, cols: usize) -> Self {
        FpMatrix {
            field,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(field: PrimeField, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1 % field.p;
        }
        m
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[u64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: u64) {
        self.data[i * self.cols + j] = x % self.field.p;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.field, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    pub fn matmul(&self, other: &FpMatrix) -> Result<FpMatrix> {
        if self.field != other.field {
            return Err(GenInvError::invalid("matrices over different fields"));
        }
        if self.cols != other.rows {
            return Err(GenInvError::dims(self.cols, other.rows));
        }
        let f = self.field;
        let mut out = Self::zeros(f, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let idx = i * other.cols + j;
                    out.data[idx] = f.add(out.data[idx], f.mul(a, other.get(k, j)));
                }
            }
        }
        Ok(out)
    }

    /// `A v`; panics if `v.len() != cols`.
    pub fn mul_vec(&self, v: &[u64]) -> Vec<u64> {
        assert_eq!(v.len(), self.cols, "matrix-vector dimension mismatch");
        let f = self.field;
        (0..self.rows)
            .map(|i| {
                (0..self.cols).fold(0, |acc, j| f.add(acc, f.mul(self.get(i, j), v[j] % f.p)))
            })
            .collect()
    }

    pub fn add(&self, other: &FpMatrix) -> Result<FpMatrix> {
        if self.field != other.field || self.rows != other.rows || self.cols != other.cols {
            return Err(GenInvError::invalid("matrix sum shape or field mismatch"));
        }
        let f = self.field;
        Ok(FpMatrix {
            field: f,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f.add(a, b)).collect(),
        })
    }

    pub fn scale(&self, c: u64) -> FpMatrix {
        let f = self.field;
        FpMatrix {
            field: f,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&a| f.mul(a, c % f.p)).collect(),
        }
    }

    /// Reduced row echelon form and the pivot columns.
    pub fn rref(&self) -> (FpMatrix, Vec<usize>) {
        let f = self.field;
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(piv) = (r..self.rows).find(|&i| m.get(i, c) != 0) else {
                continue;
            };
            if piv != r {
                for j in 0..self.cols {
                    m.data.swap(piv * self.cols + j, r * self.cols + j);
                }
            }
            let inv = f.inv(m.get(r, c)).expect("pivot is nonzero");
            for j in c..self.cols {
                let x = m.get(r, j);
                m.data[r * self.cols + j] = f.mul(x, inv);
            }
            for i in 0..self.rows {
                if i == r {
                    continue;
                }
                let factor = m.get(i, c);
                if factor == 0 {
                    continue;
                }
                for j in c..self.cols {
                    let x = f.sub(m.get(i, j), f.mul(factor, m.get(r, j)));
                    m.data[i * self.cols + j] = x;
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    pub fn pow(&self, k: usize) -> Result<FpMatrix> {
        if self.rows != self.cols {
            return Err(GenInvError::invalid("power of a non-square matrix"));
        }
        let mut r = Self::identity(self.field, self.rows);
        for _ in 0..k {
            r = self.matmul(&r)?;
        }
        Ok(r)
    }

    /// `p(A) = Σ a_i A^i`, evaluated by Horner's rule.
    pub fn eval_poly(&self, p: &FpPolynomial) -> Result<FpMatrix> {
        if self.rows != self.cols {
            return Err(GenInvError::invalid("polynomial of a non-square matrix"));
        }
        if p.field() != self.field {
            return Err(GenInvError::invalid("polynomial over a different field"));
        }
        let n = self.rows;
        let mut acc = Self::zeros(self.field, n, n);
        for &c in p.coeffs().iter().rev() {
            acc = acc.matmul(self)?.add(&Self::identity(self.field, n).scale(c))?;
        }
        Ok(acc)
    }

    pub fn determinant(&self) -> Result<u64> {
        if self.rows != self.cols {
            return Err(GenInvError::invalid("determinant of a non-square matrix"));
        }
        let f = self.field;
        let n = self.rows;
        let mut m = self.clone();
        let mut det = 1 % f.p;
        for c in 0..n {
            let Some(piv) = (c..n).find(|&i| m.get(i, c) != 0) else {
                return Ok(0);
            };
            if piv != c {
                for j in 0..n {
                    m.data.swap(piv * n + j, c * n + j);
                }
                det = f.neg(det);
            }
            let p = m.get(c, c);
            det = f.mul(det, p);
            let inv = f.inv(p).unwrap();
            for i in c + 1..n {
                let factor = f.mul(m.get(i, c), inv);
                if factor == 0 {
                    continue;
                }
                for j in c..n {
                    let x = f.sub(m.get(i, j), f.mul(factor, m.get(c, j)));
                    m.data[i * n + j] = x;
                }
            }
        }
        Ok(det)
    }

    /// Characteristic polynomial `det(xI - A)`, via reduction to upper
    /// Hessenberg form followed by the standard recurrence on its leading
    /// principal minors.
    pub fn charpoly(&self) -> Result<FpPolynomial> {
        if self.rows != self.cols {
            return Err(GenInvError::invalid("characteristic polynomial of a non-square matrix"));
        }
        let f = self.field;
        let n = self.rows;
        let mut h = self.clone();
        for c in 0..n.saturating_sub(2) {
            let Some(piv) = (c + 1..n).find(|&i| h.get(i, c) != 0) else {
                continue;
            };
            if piv != c + 1 {
                for j in 0..n {
                    h.data.swap(piv * n + j, (c + 1) * n + j);
                }
                for i in 0..n {
                    h.data.swap(i * n + piv, i * n + c + 1);
                }
            }
            let inv = f.inv(h.get(c + 1, c)).unwrap();
            for j in c + 2..n {
                let u = f.mul(h.get(j, c), inv);
                if u == 0 {
                    continue;
                }
                for k in 0..n {
                    let x = f.sub(h.get(j, k), f.mul(u, h.get(c + 1, k)));
                    h.data[j * n + k] = x;
                }
                for k in 0..n {
                    let x = f.add(h.get(k, c + 1), f.mul(u, h.get(k, j)));
                    h.data[k * n + c + 1] = x;
                }
            }
        }
        // p[m] = det(xI - H[..m, ..m])
        let x = FpPolynomial::monomial(f, 1);
        let mut p: Vec<FpPolynomial> = vec![FpPolynomial::one(f)];
        for m in 1..=n {
            let diag = FpPolynomial::new(f, vec![h.get(m - 1, m - 1)]);
            let mut pm = x.sub(&diag).mul(&p[m - 1]);
            let mut t = 1 % f.p;
            for i in (1..m).rev() {
                t = f.mul(t, h.get(i, i - 1));
                let coef = f.mul(h.get(i - 1, m - 1), t);
                pm = pm.sub(&p[i - 1].scale(coef));
            }
            p.push(pm);
        }
        Ok(p.pop().unwrap())
    }
}

/// Basis of the null space of `A`, one vector per free column of the RREF,
/// each scaled so its first nonzero entry is one.
pub fn fp_solve_kernel(a: &FpMatrix) -> Vec<Vec<u64>> {
    let f = a.field;
    let (r, pivots) = a.rref();
    let mut is_pivot = vec![false; a.cols];
    for &c in &pivots {
        is_pivot[c] = true;
    }
    let mut basis = Vec::new();
    for free in (0..a.cols).filter(|&c| !is_pivot[c]) {
        let mut v = vec![0u64; a.cols];
        v[free] = 1;
        for (row, &pc) in pivots.iter().enumerate() {
            v[pc] = f.neg(r.get(row, free));
        }
        let lead = v.iter().copied().find(|&x| x != 0).unwrap();
        let inv = f.inv(lead).unwrap();
        basis.push(v.into_iter().map(|x| f.mul(x, inv)).collect());
    }
    basis
}

/// Gauss–Jordan inversion.
pub fn fp_invert(a: &FpMatrix) -> Result<FpInversion> {
    if a.rows != a.cols {
        return Err(GenInvError::invalid("inverse of a non-square matrix"));
    }
    let n = a.rows;
    let mut aug = FpMatrix::zeros(a.field, n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            aug.data[i * 2 * n + j] = a.get(i, j);
        }
        aug.data[i * 2 * n + n + i] = 1 % a.field.p;
    }
    let (r, pivots) = aug.rref();
    if pivots.len() < n || pivots[n - 1] != n - 1 {
        return Ok(FpInversion::Singular);
    }
    let mut inv = FpMatrix::zeros(a.field, n, n);
    for i in 0..n {
        for j in 0..n {
            inv.data[i * n + j] = r.get(i, n + j);
        }
    }
    Ok(FpInversion::Inverse(inv))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    #[test]
    fn field_validation() {
        assert!(PrimeField::new(4).is_err());
        assert!(PrimeField::new(1).is_err());
        assert!(PrimeField::new(2_147_483_659).is_err());
        assert!(PrimeField::new(2_147_483_647).is_ok());
        let k = f(2_147_483_647);
        let a = k.p() - 1;
        assert_eq!(k.mul(a, a), 1);
        assert_eq!(k.mul(k.inv(12345).unwrap(), 12345), 1);
    }

    #[test]
    fn kernel_examples() {
        assert!(fp_solve_kernel(&FpMatrix::identity(f(5), 3)).is_empty());
        assert_eq!(fp_solve_kernel(&FpMatrix::zeros(f(3), 2, 2)).len(), 2);
        let a = FpMatrix::from_rows(f(5), &[vec![1, 1], vec![2, 2]]).unwrap();
        assert_eq!(fp_solve_kernel(&a), vec![vec![1, 4]]);
    }

    #[test]
    fn inversion_examples() {
        let k = f(5);
        let a = FpMatrix::from_rows(k, &[vec![1, 1], vec![0, 1]]).unwrap();
        let inv = fp_invert(&a).unwrap().inverse().unwrap();
        assert_eq!(inv, FpMatrix::from_rows(k, &[vec![1, 4], vec![0, 1]]).unwrap());
        let s = FpMatrix::from_rows(k, &[vec![1, 2], vec![2, 4]]).unwrap();
        assert_eq!(fp_invert(&s).unwrap(), FpInversion::Singular);
        assert_eq!(fp_invert(&FpMatrix::identity(k, 3)).unwrap().inverse().unwrap(), FpMatrix::identity(k, 3));
    }

    #[test]
    fn charpoly_of_companion_shape() {
        let k = f(7);
        // upper triangular: eigenvalues 2, 3
        let a = FpMatrix::from_rows(k, &[vec![2, 5], vec![0, 3]]).unwrap();
        assert_eq!(a.charpoly().unwrap(), FpPolynomial::from_signed(k, &[6, -5, 1]));
        // needs a row swap during the Hessenberg reduction
        let b = FpMatrix::from_rows(k, &[vec![1, 2, 3], vec![0, 4, 5], vec![6, 0, 1]]).unwrap();
        let p = b.charpoly().unwrap();
        assert_eq!(p.degree(), Some(3));
        assert!(b.eval_poly(&p).unwrap().is_zero());
        assert_eq!(p.coeff(0), k.neg(b.determinant().unwrap()));
    }

    #[test]
    fn json_carries_prime() {
        let a: FpMatrix = serde_json::from_str(r#"{"rows":1,"cols":2,"data":[-1,7],"prime":5}"#).unwrap();
        assert_eq!(a.data(), &[4, 2]);
        assert!(serde_json::from_str::<FpMatrix>(r#"{"rows":1,"cols":1,"data":[1],"prime":9}"#).is_err());
    }
}
