use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{GenInvError, Result};
use crate::numerics::PrimeField;

/// Real polynomial, coefficients low-degree-first, trailing zeros trimmed.
#[derive(Debug, Clone, PartialEq)]
pub struct RealPolynomial {
    coeffs: Vec<f64>,
}

impl RealPolynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        RealPolynomial { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let c = (0..n)
            .map(|i| self.coeffs.get(i).unwrap_or(&0.0) + other.coeffs.get(i).unwrap_or(&0.0))
            .collect();
        Self::new(c)
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Self::new(Vec::new());
        }
        let mut c = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Self::new(c)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

/// Polynomial over a prime field, coefficients low-degree-first and
/// reduced, trailing zeros trimmed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FpPolynomial {
    field: PrimeField,
    coeffs: Vec<u64>,
}

impl FpPolynomial {
    pub fn new(field: PrimeField, coeffs: Vec<u64>) -> Self {
        let mut coeffs: Vec<u64> = coeffs.into_iter().map(|c| c % field.p()).collect();
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        FpPolynomial { field, coeffs }
    }

    /// Coefficients given as signed integers, reduced into `[0, p)`.
    pub fn from_signed(field: PrimeField, coeffs: &[i64]) -> Self {
        Self::new(field, coeffs.iter().map(|&c| field.reduce_i64(c)).collect())
    }

    pub fn zero(field: PrimeField) -> Self {
        FpPolynomial {
            field,
            coeffs: Vec::new(),
        }
    }

    pub fn one(field: PrimeField) -> Self {
        Self::monomial(field, 0)
    }

    /// `x^k`.
    pub fn monomial(field: PrimeField, k: usize) -> Self {
        let mut c = vec![0; k + 1];
        c[k] = 1;
        FpPolynomial { field, coeffs: c }
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> u64 {
        self.coeffs.get(i).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> u64 {
        self.coeffs.last().copied().unwrap_or(0)
    }

    /// Smallest index with a nonzero coefficient.
    pub fn lowest_nonzero(&self) -> Option<usize> {
        self.coeffs.iter().position(|&c| c != 0)
    }

    fn check_field(&self, other: &Self) {
        assert_eq!(self.field, other.field, "polynomials over different fields");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_field(other);
        let f = self.field;
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new(f, (0..n).map(|i| f.add(self.coeff(i), other.coeff(i))).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.check_field(other);
        let f = self.field;
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new(f, (0..n).map(|i| f.sub(self.coeff(i), other.coeff(i))).collect())
    }

    pub fn scale(&self, c: u64) -> Self {
        let f = self.field;
        Self::new(f, self.coeffs.iter().map(|&a| f.mul(a, c)).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check_field(other);
        if self.is_zero() || other.is_zero() {
            return Self::zero(self.field);
        }
        let f = self.field;
        let mut c = vec![0u64; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                c[i + j] = f.add(c[i + j], f.mul(a, b));
            }
        }
        Self::new(f, c)
    }

    /// Quotient and remainder; panics on a zero divisor.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        self.check_field(divisor);
        let f = self.field;
        let d = divisor.degree().expect("division by the zero polynomial");
        let lead_inv = f.inv(divisor.leading()).expect("leading coefficient is nonzero");
        let mut rem = self.coeffs.clone();
        let mut quo = vec![0u64; self.coeffs.len().saturating_sub(d).max(1)];
        while rem.len() > d {
            let top = rem.len() - 1;
            let c = f.mul(rem[top], lead_inv);
            let shift = top - d;
            quo[shift] = c;
            for (j, &b) in divisor.coeffs.iter().enumerate() {
                rem[shift + j] = f.sub(rem[shift + j], f.mul(c, b));
            }
            rem.pop();
            while rem.last() == Some(&0) {
                rem.pop();
            }
        }
        (Self::new(f, quo), Self::new(f, rem))
    }

    pub fn rem(&self, divisor: &Self) -> Self {
        self.div_rem(divisor).1
    }

    pub fn divides(&self, other: &Self) -> bool {
        other.rem(self).is_zero()
    }

    /// Scaled so the leading coefficient is one; zero stays zero.
    pub fn monic(&self) -> Self {
        match self.field.inv(self.leading()) {
            Some(inv) => self.scale(inv),
            None => self.clone(),
        }
    }

    pub fn eval(&self, x: u64) -> u64 {
        let f = self.field;
        let x = x % f.p();
        self.coeffs.iter().rev().fold(0, |acc, &c| f.add(f.mul(acc, x), c))
    }

    /// `p(x^k)`.
    pub fn substitute_power(&self, k: usize) -> Self {
        if k == 0 {
            let s = self.coeffs.iter().fold(0, |acc, &c| self.field.add(acc, c));
            return Self::new(self.field, vec![s]);
        }
        let mut c = vec![0u64; self.coeffs.len().saturating_sub(1) * k + 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            c[i * k] = a;
        }
        Self::new(self.field, c)
    }

    /// Coefficients as signed representatives in `(-p/2, p/2]`.
    pub fn signed_coeffs(&self) -> Vec<i64> {
        let p = self.field.p() as i64;
        self.coeffs
            .iter()
            .map(|&c| {
                let c = c as i64;
                if c > p / 2 {
                    c - p
                } else {
                    c
                }
            })
            .collect()
    }
}

impl fmt::Display for FpPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match (i, c) {
                (0, _) => write!(f, "{c}")?,
                (1, 1) => write!(f, "x")?,
                (1, _) => write!(f, "{c}x")?,
                (_, 1) => write!(f, "x^{i}")?,
                _ => write!(f, "{c}x^{i}")?,
            }
        }
        Ok(())
    }
}

impl Serialize for FpPolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        OperatorPolynomial::Prime(self.clone()).serialize(s)
    }
}

/// A polynomial tagged with its coefficient field, as exchanged in JSON:
/// `{"field": "real" | {"prime": p}, "coeffs": [a0, a1, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyRepr", into = "PolyRepr")]
pub enum OperatorPolynomial {
    Real(RealPolynomial),
    Prime(FpPolynomial),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum FieldRepr {
    Name(String),
    Prime { prime: u64 },
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    field: FieldRepr,
    coeffs: Vec<Value>,
}

impl TryFrom<PolyRepr> for OperatorPolynomial {
    type Error = GenInvError;

    fn try_from(r: PolyRepr) -> Result<Self> {
        match r.field {
            FieldRepr::Name(name) if name == "real" => {
                let c = r
                    .coeffs
                    .iter()
                    .map(|v| {
                        v.as_f64()
                            .filter(|x| x.is_finite())
                            .ok_or_else(|| GenInvError::invalid("real coefficients must be finite numbers"))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(OperatorPolynomial::Real(RealPolynomial::new(c)))
            }
            FieldRepr::Name(name) => Err(GenInvError::invalid(format!("unknown field {name:?}"))),
            FieldRepr::Prime { prime } => {
                let field = PrimeField::new(prime)?;
                let c = r
                    .coeffs
                    .iter()
                    .map(|v| {
                        v.as_i64()
                            .ok_or_else(|| GenInvError::invalid("prime-field coefficients must be integers"))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(OperatorPolynomial::Prime(FpPolynomial::from_signed(field, &c)))
            }
        }
    }
}

impl From<OperatorPolynomial> for PolyRepr {
    fn from(p: OperatorPolynomial) -> Self {
        match p {
            OperatorPolynomial::Real(r) => PolyRepr {
                field: FieldRepr::Name("real".into()),
                coeffs: r.coeffs.iter().map(|&c| Value::from(c)).collect(),
            },
            OperatorPolynomial::Prime(q) => PolyRepr {
                field: FieldRepr::Prime { prime: q.field.p() },
                coeffs: q.coeffs.iter().map(|&c| Value::from(c)).collect(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    #[test]
    fn normalization_trims_and_reduces() {
        let p = FpPolynomial::new(f(5), vec![6, 0, 5, 0]);
        assert_eq!(p.coeffs(), &[1]);
        assert_eq!(p.degree(), Some(0));
        assert!(FpPolynomial::new(f(5), vec![0, 5]).is_zero());
        assert_eq!(FpPolynomial::zero(f(5)).degree(), None);
        assert_eq!(RealPolynomial::new(vec![1.0, 0.0]).degree(), Some(0));
    }

    #[test]
    fn division_identity() {
        let k = f(7);
        let a = FpPolynomial::from_signed(k, &[3, -1, 4, 1, 5]);
        let b = FpPolynomial::from_signed(k, &[2, 0, 3]);
        let (q, r) = a.div_rem(&b);
        assert_eq!(q.mul(&b).add(&r), a);
        assert!(r.degree().map_or(true, |d| d < 2));
        let x2m1 = FpPolynomial::from_signed(k, &[-1, 0, 1]);
        let xm1 = FpPolynomial::from_signed(k, &[-1, 1]);
        assert!(xm1.divides(&x2m1));
    }

    #[test]
    fn display_and_signed() {
        let p = FpPolynomial::from_signed(f(5), &[1, -2, 1]);
        assert_eq!(p.to_string(), "x^2 + 3x + 1");
        assert_eq!(p.signed_coeffs(), vec![1, -2, 1]);
    }

    #[test]
    fn json_formats() {
        let p: OperatorPolynomial = serde_json::from_str(r#"{"field":{"prime":5},"coeffs":[-1,0,1]}"#).unwrap();
        match &p {
            OperatorPolynomial::Prime(q) => assert_eq!(q.coeffs(), &[4, 0, 1]),
            _ => panic!("expected prime field"),
        }
        let r: OperatorPolynomial = serde_json::from_str(r#"{"field":"real","coeffs":[0.5,1]}"#).unwrap();
        assert_eq!(r, OperatorPolynomial::Real(RealPolynomial::new(vec![0.5, 1.0])));
        assert!(serde_json::from_str::<OperatorPolynomial>(r#"{"field":{"prime":6},"coeffs":[1]}"#).is_err());
        let back = serde_json::to_string(&p).unwrap();
        assert_eq!(back, r#"{"field":{"prime":5},"coeffs":[4,0,1]}"#);
    }

    #[test]
    fn power_substitution() {
        let p = FpPolynomial::from_signed(f(3), &[1, 2]);
        assert_eq!(p.substitute_power(3).coeffs(), &[1, 0, 0, 2]);
        assert!(p.substitute_power(0).is_zero());
    }
}
