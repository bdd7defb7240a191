//! Vanishing and minimal polynomials of endofunctions of `F_p^n`, and
//! inverses written as polynomials in the operator.
//!
//! Vectors are identified with integers in `0..p^n` by their base-`p`
//! digits, least significant coordinate first.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::core_ops::{power, FiniteOperator, FpPolynomial};
use crate::endofunction::image_chain;
use crate::error::{GenInvError, Result};
use crate::numerics::{FpInversion, FpMatrix, PrimeField};

/// Largest `p^n` enumerated exhaustively.
pub const FP_ENUMERATION_CAP: usize = 100_000;
/// Largest image size `m` accepted by [`find_vanishing_poly`]; its linear
/// system has `m² + 1` unknowns.
pub const VANISHING_IMAGE_CAP: usize = 128;

/// An arbitrary (possibly nonlinear) map `F_p^n → F_p^n`, stored as a table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FpVectorOperator {
    field: PrimeField,
    dim: usize,
    table: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct FpVectorOperatorRepr {
    prime: u64,
    dim: usize,
    table: Vec<usize>,
}

impl Serialize for FpVectorOperator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FpVectorOperatorRepr {
            prime: self.field.p(),
            dim: self.dim,
            table: self.table.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FpVectorOperator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = FpVectorOperatorRepr::deserialize(d)?;
        let f = PrimeField::new(r.prime).map_err(serde::de::Error::custom)?;
        FpVectorOperator::from_table(f, r.dim, r.table).map_err(serde::de::Error::custom)
    }
}

fn space_size(field: PrimeField, dim: usize) -> Result<usize> {
    let mut n: usize = 1;
    for _ in 0..dim {
        n = n.saturating_mul(field.p() as usize);
        if n > FP_ENUMERATION_CAP {
            return Err(GenInvError::CapExceeded {
                what: "vectors in F_p^n".into(),
                cap: FP_ENUMERATION_CAP as u64,
            });
        }
    }
    Ok(n)
}

impl FpVectorOperator {
    pub fn from_table(field: PrimeField, dim: usize, table: Vec<usize>) -> Result<Self> {
        let n = space_size(field, dim)?;
        if table.len() != n {
            return Err(GenInvError::dims(n, table.len()));
        }
        if let Some(i) = table.iter().position(|&x| x >= n) {
            return Err(GenInvError::invalid(format!("table entry {i} is not a vector id")));
        }
        Ok(FpVectorOperator { field, dim, table })
    }

    /// Reads a finite endofunction on `p^dim` ids as an operator on `F_p^dim`.
    pub fn from_finite(field: PrimeField, t: &FiniteOperator) -> Result<Self> {
        if !t.is_endofunction() {
            return Err(GenInvError::invalid("operator must be an endofunction"));
        }
        let n = t.domain_size();
        let mut dim = 0;
        let mut size = 1usize;
        while size < n {
            size = size.saturating_mul(field.p() as usize);
            dim += 1;
        }
        if size != n {
            return Err(GenInvError::invalid(format!("{n} ids is not a power of {}", field.p())));
        }
        Self::from_table(field, dim, t.table().to_vec())
    }

    pub fn from_fn(field: PrimeField, dim: usize, f: impl Fn(&[u64]) -> Vec<u64>) -> Result<Self> {
        let n = space_size(field, dim)?;
        let mut table = Vec::with_capacity(n);
        let mut v = vec![0u64; dim];
        for id in 0..n {
            decode_into(field, id, &mut v);
            let y = f(&v);
            if y.len() != dim {
                return Err(GenInvError::dims(dim, y.len()));
            }
            table.push(encode(field, &y));
        }
        Ok(FpVectorOperator { field, dim, table })
    }

    pub fn from_matrix(a: &FpMatrix) -> Result<Self> {
        Self::affine(a, &vec![0; a.rows()])
    }

    /// `v ↦ Av + b`.
    pub fn affine(a: &FpMatrix, b: &[u64]) -> Result<Self> {
        if a.rows() != a.cols() {
            return Err(GenInvError::invalid("affine map needs a square matrix"));
        }
        if b.len() != a.rows() {
            return Err(GenInvError::dims(a.rows(), b.len()));
        }
        let f = a.field();
        Self::from_fn(f, a.rows(), |v| {
            a.mul_vec(v).iter().zip(b).map(|(x, y)| f.add(*x, y % f.p())).collect()
        })
    }

    pub fn identity(field: PrimeField, dim: usize) -> Result<Self> {
        let n = space_size(field, dim)?;
        Ok(FpVectorOperator {
            field,
            dim,
            table: (0..n).collect(),
        })
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        self.table.len()
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    pub fn apply_id(&self, id: usize) -> usize {
        self.table[id]
    }

    pub fn apply(&self, v: &[u64]) -> Result<Vec<u64>> {
        if v.len() != self.dim {
            return Err(GenInvError::dims(self.dim, v.len()));
        }
        Ok(self.decode(self.table[encode(self.field, v)]))
    }

    pub fn encode(&self, v: &[u64]) -> usize {
        encode(self.field, v)
    }

    pub fn decode(&self, id: usize) -> Vec<u64> {
        let mut v = vec![0; self.dim];
        decode_into(self.field, id, &mut v);
        v
    }

    pub fn as_finite(&self) -> FiniteOperator {
        FiniteOperator::endo(self.table.clone()).expect("table is total")
    }

    /// `self ∘ inner`.
    pub fn after(&self, inner: &FpVectorOperator) -> Result<FpVectorOperator> {
        self.check_same(inner)?;
        Ok(FpVectorOperator {
            field: self.field,
            dim: self.dim,
            table: inner.table.iter().map(|&i| self.table[i]).collect(),
        })
    }

    pub fn power(&self, k: usize) -> Result<FpVectorOperator> {
        let p = power(&self.as_finite(), k)?;
        Ok(FpVectorOperator {
            field: self.field,
            dim: self.dim,
            table: p.table().to_vec(),
        })
    }

    pub fn is_surjective(&self) -> bool {
        self.as_finite().is_surjective()
    }

    pub fn inverse(&self) -> Option<FpVectorOperator> {
        self.as_finite().inverse().map(|g| FpVectorOperator {
            field: self.field,
            dim: self.dim,
            table: g.table().to_vec(),
        })
    }

    fn check_same(&self, other: &FpVectorOperator) -> Result<()> {
        if self.field != other.field || self.dim != other.dim {
            return Err(GenInvError::invalid("operators live on different spaces"));
        }
        Ok(())
    }

    /// Componentwise operator on the direct sum; coordinates of the first
    /// part come first.
    pub fn product(parts: &[FpVectorOperator]) -> Result<FpVectorOperator> {
        let Some(first) = parts.first() else {
            return Err(GenInvError::invalid("product of no operators"));
        };
        let field = first.field;
        if parts.iter().any(|t| t.field != field) {
            return Err(GenInvError::invalid("factors over different fields"));
        }
        let dim: usize = parts.iter().map(|t| t.dim).sum();
        Self::from_fn(field, dim, |v| {
            let mut out = Vec::with_capacity(dim);
            let mut off = 0;
            for t in parts {
                let piece = &v[off..off + t.dim];
                out.extend(t.decode(t.table[encode(field, piece)]));
                off += t.dim;
            }
            out
        })
    }

    /// `Σ cᵢ Tⁱ(v)` as a vector id.
    pub fn eval_poly_at(&self, p: &FpPolynomial, id: usize) -> usize {
        let f = self.field;
        let mut acc = vec![0u64; self.dim];
        let mut digits = vec![0u64; self.dim];
        let mut cur = id;
        for (i, &c) in p.coeffs().iter().enumerate() {
            if c != 0 {
                decode_into(f, cur, &mut digits);
                for (a, d) in acc.iter_mut().zip(&digits) {
                    *a = f.add(*a, f.mul(c, *d));
                }
            }
            if i + 1 < p.coeffs().len() {
                cur = self.table[cur];
            }
        }
        encode(f, &acc)
    }

    /// `p(T)` as an operator.
    pub fn poly_operator(&self, p: &FpPolynomial) -> Result<FpVectorOperator> {
        if p.field() != self.field {
            return Err(GenInvError::invalid("polynomial over a different field"));
        }
        Ok(FpVectorOperator {
            field: self.field,
            dim: self.dim,
            table: (0..self.size()).map(|v| self.eval_poly_at(p, v)).collect(),
        })
    }

    /// First `v` with `p(T)(v) ≠ 0`.
    pub fn first_nonvanishing(&self, p: &FpPolynomial) -> Option<usize> {
        (0..self.size()).find(|&v| self.eval_poly_at(p, v) != 0)
    }

    /// Exhaustive: `p ≠ 0` and `p(T)(v) = 0` for every `v`.
    pub fn vanishes(&self, p: &FpPolynomial) -> bool {
        p.field() == self.field && !p.is_zero() && self.first_nonvanishing(p).is_none()
    }
}

fn encode(field: PrimeField, v: &[u64]) -> usize {
    let p = field.p() as usize;
    v.iter().rev().fold(0usize, |acc, &d| acc * p + (d % field.p()) as usize)
}

fn decode_into(field: PrimeField, mut id: usize, out: &mut [u64]) {
    let p = field.p() as usize;
    for d in out.iter_mut() {
        *d = (id % p) as u64;
        id /= p;
    }
}

fn require_vanishing(t: &FpVectorOperator, p: &FpPolynomial) -> Result<()> {
    if p.field() != t.field {
        return Err(GenInvError::invalid("polynomial over a different field"));
    }
    if let Some(v) = t.first_nonvanishing(p) {
        return Err(GenInvError::invalid(format!(
            "{p} does not vanish in T (fails at vector {:?})",
            t.decode(v)
        )));
    }
    if p.is_zero() {
        return Err(GenInvError::invalid("the zero polynomial is not a vanishing polynomial"));
    }
    Ok(())
}

/// A vanishing polynomial built from the finite stable image, with the
/// quantities of its degree bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VanishingPoly {
    pub poly: FpPolynomial,
    /// Pre-iteration count used.
    pub l: usize,
    /// `|T^l(V)|`.
    pub m: usize,
    pub degree_bound: usize,
}

/// Least `l` with `|T^l(V)| = |T^{l+1}(V)|`, and that size.
pub fn stable_image(t: &FpVectorOperator) -> Result<(usize, usize)> {
    let chain = image_chain(&t.as_finite())?;
    let l = chain.stabilization;
    Ok((l, chain.sets[l].len()))
}

/// On the stable image `{v_1..v_m} = T^l(V)`, `T` permutes the points, so
/// the `(m²+1) × m²` 0/1 matrix `A[i, (j,k)] = [T^{i−1}(v_j) = T(v_k)]` has
/// a nonzero left kernel vector `a`; then `x^l Σ aᵢ x^{i−1}` vanishes.
/// Duplicate columns of `A` are dropped before elimination and the first
/// kernel vector of the reduced echelon form is used.
pub fn find_vanishing_poly(t: &FpVectorOperator, l: Option<usize>) -> Result<VanishingPoly> {
    let chain = image_chain(&t.as_finite())?;
    let l = l.unwrap_or(chain.stabilization);
    let set = if l < chain.sets.len() {
        chain.sets[l].clone()
    } else {
        chain.sets[chain.stabilization].clone()
    };
    let next: HashSet<usize> = set.iter().map(|&v| t.apply_id(v)).collect();
    if next.len() != set.len() || !set.iter().all(|v| next.contains(v)) {
        return Err(GenInvError::invalid(format!("|T^{l}(V)| ≠ |T^{}(V)|", l + 1)));
    }
    let m = set.len();
    if m > VANISHING_IMAGE_CAP {
        return Err(GenInvError::CapExceeded {
            what: "stable image size for the vanishing-polynomial system".into(),
            cap: VANISHING_IMAGE_CAP as u64,
        });
    }
    let rows = m * m + 1;
    let f = t.field;
    // a column (j,k) is the indicator of i ↦ [T^{i−1}(v_j) = T(v_k)]; it is
    // periodic in i with the cycle length of v_j, so (period, first hit)
    // identifies it
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    let mut cols: Vec<Vec<u64>> = Vec::new();
    for &vj in &set {
        let mut orbit = vec![vj];
        let mut cur = t.apply_id(vj);
        while cur != vj {
            orbit.push(cur);
            cur = t.apply_id(cur);
        }
        let period = orbit.len();
        for &vk in &set {
            let target = t.apply_id(vk);
            let Some(first) = orbit.iter().position(|&x| x == target) else {
                continue;
            };
            if !seen.insert((period, first)) {
                continue;
            }
            cols.push((0..rows).map(|i| u64::from(i % period == first)).collect());
        }
    }
    // aᵀA = 0 ⇔ (deduplicated Aᵀ) a = 0
    let mut data = Vec::with_capacity(cols.len() * rows);
    for c in &cols {
        data.extend_from_slice(c);
    }
    let at = FpMatrix::new(f, cols.len(), rows, data)?;
    let (r, pivots) = at.rref();
    let free = (0..rows)
        .find(|c| !pivots.contains(c))
        .expect("more unknowns than equations");
    let mut a = vec![0u64; rows];
    a[free] = 1;
    for (row, &pc) in pivots.iter().enumerate() {
        a[pc] = f.neg(r.get(row, free));
    }
    let mut coeffs = vec![0u64; l];
    coeffs.extend(a);
    let poly = FpPolynomial::new(f, coeffs);
    if let Some(v) = t.first_nonvanishing(&poly) {
        return Err(GenInvError::VerificationFailed(format!(
            "constructed polynomial fails at vector id {v}"
        )));
    }
    Ok(VanishingPoly {
        poly,
        l,
        m,
        degree_bound: m * m + l,
    })
}

/// Minimal polynomial together with the points whose iterates certify
/// that no polynomial of lower degree vanishes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimalPoly {
    pub poly: FpPolynomial,
    /// Vector ids `S`; `(Tⁱ(v))_{v∈S}` for `i < deg` are linearly independent.
    pub witnesses: Vec<usize>,
}

/// Monic `μ_S` of least degree vanishing on the points `S`, from the first
/// linear dependence among the stacked iterates.
fn krylov_min_poly(t: &FpVectorOperator, witnesses: &[usize]) -> FpPolynomial {
    let f = t.field;
    let width = witnesses.len() * t.dim;
    // echelon rows: (vector, combination of K_0..K_i, pivot)
    let mut basis: Vec<(Vec<u64>, Vec<u64>, usize)> = Vec::new();
    let mut points: Vec<usize> = witnesses.to_vec();
    let mut digits = vec![0u64; t.dim];
    for i in 0.. {
        let mut k = Vec::with_capacity(width);
        for &p in &points {
            decode_into(f, p, &mut digits);
            k.extend_from_slice(&digits);
        }
        let mut comb = vec![0u64; i + 1];
        comb[i] = 1;
        for (bv, bc, piv) in &basis {
            let c = k[*piv];
            if c != 0 {
                for (x, y) in k.iter_mut().zip(bv) {
                    *x = f.sub(*x, f.mul(c, *y));
                }
                for (x, y) in comb.iter_mut().zip(bc) {
                    *x = f.sub(*x, f.mul(c, *y));
                }
            }
        }
        match k.iter().position(|&x| x != 0) {
            None => return FpPolynomial::new(f, comb),
            Some(piv) => {
                let inv = f.inv(k[piv]).unwrap();
                let kv: Vec<u64> = k.iter().map(|&x| f.mul(x, inv)).collect();
                let kc: Vec<u64> = comb.iter().map(|&x| f.mul(x, inv)).collect();
                basis.push((kv, kc, piv));
            }
        }
        for p in points.iter_mut() {
            *p = t.apply_id(*p);
        }
    }
    unreachable!()
}

/// Grows a witness set `S` from the zero-free points on which the current
/// candidate fails; the candidate for `S` divides the minimal polynomial of
/// `T` and has the least degree among polynomials vanishing on `S`, so the
/// first candidate vanishing on all of `V` is the minimal polynomial.
pub fn minimal_poly_certified(t: &FpVectorOperator) -> Result<MinimalPoly> {
    let mut witnesses = vec![0usize];
    loop {
        let cand = krylov_min_poly(t, &witnesses);
        match t.first_nonvanishing(&cand) {
            None => return Ok(MinimalPoly { poly: cand, witnesses }),
            Some(v) => {
                if witnesses.contains(&v) {
                    return Err(GenInvError::VerificationFailed("Krylov candidate fails on its own witness".into()));
                }
                witnesses.push(v);
            }
        }
    }
}

pub fn minimal_poly(t: &FpVectorOperator) -> Result<FpPolynomial> {
    Ok(minimal_poly_certified(t)?.poly)
}

/// `S = −a₀⁻¹ Σ_{i≥1} aᵢ T^{i−1}`, checked to satisfy `S ∘ T = I`.
pub fn poly_left_inverse(p: &FpPolynomial, t: &FpVectorOperator) -> Result<FpVectorOperator> {
    require_vanishing(t, p)?;
    let f = t.field;
    let Some(inv) = f.inv(p.coeff(0)) else {
        return Err(GenInvError::NotApplicable("constant coefficient is zero".into()));
    };
    let scale = f.neg(inv);
    let q = FpPolynomial::new(f, p.coeffs()[1..].iter().map(|&a| f.mul(a, scale)).collect());
    let s = t.poly_operator(&q)?;
    if s.after(t)?.table.iter().enumerate().any(|(i, &x)| i != x) {
        return Err(GenInvError::VerificationFailed("S ∘ T ≠ I".into()));
    }
    Ok(s)
}

/// `A⁻¹ = −a₀⁻¹ Σ_{i≥1} aᵢ A^{i−1}` from the characteristic polynomial.
pub fn cayley_hamilton_inverse(a: &FpMatrix) -> Result<FpInversion> {
    let f = a.field();
    let p = a.charpoly()?;
    let Some(inv) = f.inv(p.coeff(0)) else {
        return Ok(FpInversion::Singular);
    };
    let scale = f.neg(inv);
    let q = FpPolynomial::new(f, p.coeffs()[1..].iter().map(|&c| f.mul(c, scale)).collect());
    Ok(FpInversion::Inverse(a.eval_poly(&q)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolyLeftDrazin {
    pub inverse: FpVectorOperator,
    /// Parameter `m` with `G T^{m+1} = T^m`.
    pub m: usize,
}

/// `G = −a_k⁻¹ Σ_{i>k} aᵢ T^{i−k−1}` with `k` the lowest nonzero
/// coefficient of a vanishing polynomial; parameter `max{k, 1}`.
pub fn left_drazin_from_poly(p: &FpPolynomial, t: &FpVectorOperator) -> Result<PolyLeftDrazin> {
    require_vanishing(t, p)?;
    let f = t.field;
    let k = p.lowest_nonzero().expect("nonzero polynomial");
    let scale = f.neg(f.inv(p.coeff(k)).unwrap());
    let q = FpPolynomial::new(f, p.coeffs()[k + 1..].iter().map(|&a| f.mul(a, scale)).collect());
    // an empty sum is the zero operator
    let g = t.poly_operator(&q)?;
    let m = k.max(1);
    let tm = t.power(m)?;
    if g.after(&t.after(&tm)?)? != tm {
        return Err(GenInvError::VerificationFailed("G T^{m+1} ≠ T^m".into()));
    }
    Ok(PolyLeftDrazin { inverse: g, m })
}

/// `p*(x) = Σ aᵢ x^{m−i}` for `m = deg p`.
pub fn reciprocal_poly(p: &FpPolynomial) -> FpPolynomial {
    let mut c = p.coeffs().to_vec();
    c.reverse();
    FpPolynomial::new(p.field(), c)
}

/// `p_m(0)⁻¹ p_m*`: the minimal polynomial of `T⁻¹` from that of `T`.
pub fn inverse_minimal_poly(pm: &FpPolynomial) -> Result<FpPolynomial> {
    let f = pm.field();
    match f.inv(pm.coeff(0)) {
        Some(inv) => Ok(reciprocal_poly(pm).scale(inv)),
        None => Err(GenInvError::NotApplicable("operator is not invertible: p(0) = 0".into())),
    }
}

/// A polynomial vanishing in every `T₁` with `T₁^l = T^k`, from `p`
/// vanishing in `T`: a dependence `Σ αⱼ rⱼ = 0` among `rⱼ = x^{jk} mod p`
/// gives `Σ αⱼ x^{jl}`.
pub fn power_vanishing_poly(p: &FpPolynomial, k: usize, l: usize) -> Result<FpPolynomial> {
    let f = p.field();
    if l == 0 {
        return Err(GenInvError::invalid("l must be positive"));
    }
    let Some(m) = p.degree() else {
        return Err(GenInvError::invalid("the zero polynomial vanishes nowhere"));
    };
    if m == 0 {
        return Ok(p.clone());
    }
    if k == 0 {
        // T₁^l = I
        return Ok(FpPolynomial::monomial(f, l).sub(&FpPolynomial::one(f)));
    }
    let mut mat = FpMatrix::zeros(f, m, m + 1);
    for j in 0..=m {
        let r = FpPolynomial::monomial(f, j * k).rem(p);
        for (i, &c) in r.coeffs().iter().enumerate() {
            mat.set(i, j, c);
        }
    }
    let (rr, pivots) = mat.rref();
    let free = (0..=m).find(|c| !pivots.contains(c)).expect("m + 1 vectors in dimension m");
    let mut alpha = vec![0u64; m + 1];
    alpha[free] = 1;
    for (row, &pc) in pivots.iter().enumerate() {
        alpha[pc] = f.neg(rr.get(row, free));
    }
    Ok(FpPolynomial::new(f, alpha).substitute_power(l))
}

/// `p² − p(1)p`, which vanishes in `v ↦ Av + b` whenever `p(A) = 0`. The
/// claim is checked exhaustively on the affine map.
pub fn affine_vanishing_poly(p: &FpPolynomial, a: &FpMatrix, b: &[u64]) -> Result<FpPolynomial> {
    if p.degree().unwrap_or(0) < 1 {
        return Err(GenInvError::invalid("need a polynomial of degree at least one"));
    }
    if !a.eval_poly(p)?.is_zero() {
        return Err(GenInvError::invalid(format!("{p} does not vanish in the linear part")));
    }
    let q = p.mul(p).sub(&p.scale(p.eval(1)));
    let t = FpVectorOperator::affine(a, b)?;
    if let Some(v) = t.first_nonvanishing(&q) {
        return Err(GenInvError::VerificationFailed(format!("p² − p(1)p fails at vector id {v}")));
    }
    Ok(q)
}

/// `Π pᵢ` for the componentwise operator; every pair is checked first.
pub fn product_vanishing_poly(parts: &[(FpVectorOperator, FpPolynomial)]) -> Result<(FpVectorOperator, FpPolynomial)> {
    let Some((first, _)) = parts.first() else {
        return Err(GenInvError::invalid("product of no operators"));
    };
    let mut prod = FpPolynomial::one(first.field);
    for (i, (t, p)) in parts.iter().enumerate() {
        require_vanishing(t, p).map_err(|e| GenInvError::invalid(format!("part {i}: {e}")))?;
        prod = prod.mul(p);
    }
    let ops: Vec<FpVectorOperator> = parts.iter().map(|(t, _)| t.clone()).collect();
    let t = FpVectorOperator::product(&ops)?;
    if let Some(v) = t.first_nonvanishing(&prod) {
        return Err(GenInvError::VerificationFailed(format!("product polynomial fails at vector id {v}")));
    }
    Ok((t, prod))
}

/// Companion matrix with ones below the diagonal and `−aᵢ` in the last
/// column.
pub fn companion_matrix(p: &FpPolynomial) -> Result<FpMatrix> {
    let f = p.field();
    let d = match p.degree() {
        Some(d) if d >= 1 && p.leading() == 1 => d,
        _ => return Err(GenInvError::invalid("companion matrix needs a monic polynomial of degree ≥ 1")),
    };
    let mut c = FpMatrix::zeros(f, d, d);
    for i in 0..d {
        if i >= 1 {
            c.set(i, i - 1, 1);
        }
        c.set(i, d - 1, f.neg(p.coeff(i)));
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompanionReport {
    pub companion: FpMatrix,
    pub holds: bool,
    /// Vector ids where `φ(T(v)) ≠ C_pᵀ φ(v)`.
    pub failures: usize,
}

/// Checks `φ(T(v)) = C_pᵀ φ(v)` for all `v`, with
/// `φ(v) = (v, T(v), …, T^{d−1}(v))`.
pub fn companion_embedding_check(t: &FpVectorOperator, p: &FpPolynomial) -> Result<CompanionReport> {
    if p.field() != t.field {
        return Err(GenInvError::invalid("polynomial over a different field"));
    }
    let c = companion_matrix(p)?;
    let d = c.rows();
    let f = t.field;
    let mut failures = 0;
    for v in 0..t.size() {
        let mut phi = Vec::with_capacity(d);
        let mut cur = v;
        for _ in 0..d {
            phi.push(t.decode(cur));
            cur = t.apply_id(cur);
        }
        let tv = t.apply_id(v);
        let mut ok = true;
        let mut lhs_cur = tv;
        for i in 0..d {
            let mut rhs = vec![0u64; t.dim];
            for (j, block) in phi.iter().enumerate() {
                let cji = c.get(j, i);
                if cji != 0 {
                    for (r, x) in rhs.iter_mut().zip(block) {
                        *r = f.add(*r, f.mul(cji, *x));
                    }
                }
            }
            if t.encode(&rhs) != lhs_cur {
                ok = false;
                break;
            }
            lhs_cur = t.apply_id(lhs_cur);
        }
        if !ok {
            failures += 1;
        }
    }
    Ok(CompanionReport {
        companion: c,
        holds: failures == 0,
        failures,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EigenRootReport {
    /// Nonzero `v` with `T(v) = v`.
    pub fixed_points: usize,
    pub p_at_one: u64,
    /// `T(0) = 0` and `T(av) = aT(v)` for all scalars and vectors.
    pub homogeneous: bool,
    /// Nonzero `v` with `T(v) = 0`.
    pub kernel_vectors: usize,
    pub p_at_zero: u64,
}

impl EigenRootReport {
    pub fn one_ok(&self) -> bool {
        self.fixed_points == 0 || self.p_at_one == 0
    }

    pub fn zero_ok(&self) -> bool {
        !self.homogeneous || self.kernel_vectors == 0 || self.p_at_zero == 0
    }

    pub fn ok(&self) -> bool {
        self.one_ok() && self.zero_ok()
    }
}

/// Eigenvalues 1 and 0 of `T` against the roots of `p`.
pub fn eigen_root_check(t: &FpVectorOperator, p: &FpPolynomial) -> Result<EigenRootReport> {
    if p.field() != t.field {
        return Err(GenInvError::invalid("polynomial over a different field"));
    }
    let f = t.field;
    let n = t.size();
    let fixed_points = (1..n).filter(|&v| t.apply_id(v) == v).count();
    let kernel_vectors = (1..n).filter(|&v| t.apply_id(v) == 0).count();
    let mut homogeneous = t.apply_id(0) == 0;
    'outer: for v in 1..n {
        if !homogeneous {
            break;
        }
        let x = t.decode(v);
        let tx = t.decode(t.apply_id(v));
        for a in 2..f.p() {
            let ax: Vec<u64> = x.iter().map(|&c| f.mul(a, c)).collect();
            let atx: Vec<u64> = tx.iter().map(|&c| f.mul(a, c)).collect();
            if t.apply_id(t.encode(&ax)) != t.encode(&atx) {
                homogeneous = false;
                break 'outer;
            }
        }
    }
    Ok(EigenRootReport {
        fixed_points,
        p_at_one: p.eval(1),
        homogeneous,
        kernel_vectors,
        p_at_zero: p.eval(0),
    })
}

/// Searches every polynomial `q` of degree ≤ `max_degree` for one with
/// `A q(A) A = A`.
pub fn polynomial_one_inverse_search(a: &FpMatrix, max_degree: usize) -> Result<Option<FpPolynomial>> {
    if a.rows() != a.cols() {
        return Err(GenInvError::invalid("square matrix required"));
    }
    let f = a.field();
    let p = f.p();
    let count = (p as u128).checked_pow(max_degree as u32 + 1).unwrap_or(u128::MAX);
    if count > 10_000_000 {
        return Err(GenInvError::CapExceeded {
            what: "polynomial candidates".into(),
            cap: 10_000_000,
        });
    }
    let powers: Vec<FpMatrix> = (0..=max_degree).map(|i| a.pow(i)).collect::<Result<_>>()?;
    let mut coeffs = vec![0u64; max_degree + 1];
    loop {
        let mut q = FpMatrix::zeros(f, a.rows(), a.cols());
        for (c, pw) in coeffs.iter().zip(&powers) {
            if *c != 0 {
                q = q.add(&pw.scale(*c))?;
            }
        }
        if a.matmul(&q)?.matmul(a)? == *a {
            return Ok(Some(FpPolynomial::new(f, coeffs)));
        }
        let mut i = 0;
        loop {
            if i > max_degree {
                return Ok(None);
            }
            coeffs[i] += 1;
            if coeffs[i] < p {
                break;
            }
            coeffs[i] = 0;
            i += 1;
        }
    }
}

/// `T^{m!+l} = T^l` for a plain finite endofunction, with `l` and `m`
/// read off the image chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SetLoopCertificate {
    pub l: usize,
    pub m: usize,
    pub holds: bool,
}

pub fn set_loop_check(t: &FiniteOperator) -> Result<SetLoopCertificate> {
    let chain = image_chain(t)?;
    let l = chain.stabilization;
    let m = chain.sets[l].len();
    if m > 20 {
        return Err(GenInvError::CapExceeded {
            what: "stable image size for m!".into(),
            cap: 20,
        });
    }
    let fact: usize = (1..=m).product();
    let holds = power(t, fact + l)? == power(t, l)?;
    Ok(SetLoopCertificate { l, m, holds })
}

/// `V` split into `m` equal blocks `A_0..A_{m−1}`; block `i` shifts onto
/// block `i+1` and the last block returns to block `k`, so `T^m = T^k`.
pub fn block_cycle_operator(field: PrimeField, dim: usize, m: usize, k: usize) -> Result<FpVectorOperator> {
    let n = space_size(field, dim)?;
    if m == 0 || k >= m || n % m != 0 {
        return Err(GenInvError::invalid("need 0 ≤ k < m with m dividing p^n"));
    }
    let s = n / m;
    let table = (0..n)
        .map(|id| {
            let (b, r) = (id / s, id % s);
            if b + 1 < m {
                (b + 1) * s + r
            } else {
                k * s + r
            }
        })
        .collect();
    FpVectorOperator::from_table(field, dim, table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    fn poly(p: u64, c: &[i64]) -> FpPolynomial {
        FpPolynomial::from_signed(f(p), c)
    }

    /// x ↦ x for x ∈ A = {first coordinate 0}, else 0
    fn indicator_op() -> FpVectorOperator {
        FpVectorOperator::from_fn(f(3), 2, |v| if v[0] == 0 { v.to_vec() } else { vec![0, 0] }).unwrap()
    }

    fn swap() -> FpVectorOperator {
        FpVectorOperator::from_table(f(2), 1, vec![1, 0]).unwrap()
    }

    #[test]
    fn encoding_is_little_endian() {
        let t = FpVectorOperator::identity(f(3), 2).unwrap();
        assert_eq!(t.encode(&[1, 2]), 7);
        assert_eq!(t.decode(7), vec![1, 2]);
    }

    #[test]
    fn vanishing_examples() {
        let idem = indicator_op();
        let v = find_vanishing_poly(&idem, None).unwrap();
        assert!(poly(3, &[0, -1, 1]).divides(&v.poly));
        assert!(v.poly.degree().unwrap() <= v.degree_bound);
        assert!(swap().vanishes(&poly(2, &[1, 0, 1])));
        let shift = FpVectorOperator::from_matrix(&FpMatrix::from_rows(f(2), &[vec![0, 1, 0], vec![0, 0, 1], vec![0, 0, 0]]).unwrap()).unwrap();
        assert_eq!(minimal_poly(&shift).unwrap(), FpPolynomial::monomial(f(2), 3));
        let v = find_vanishing_poly(&shift, None).unwrap();
        assert!(FpPolynomial::monomial(f(2), 3).divides(&v.poly));
    }

    #[test]
    fn minimal_poly_examples() {
        assert_eq!(minimal_poly(&FpVectorOperator::identity(f(5), 1).unwrap()).unwrap(), poly(5, &[-1, 1]));
        assert_eq!(minimal_poly(&swap()).unwrap(), poly(2, &[1, 0, 1]));
        assert_eq!(minimal_poly(&indicator_op()).unwrap(), poly(3, &[0, -1, 1]));
    }

    #[test]
    fn left_inverse_examples() {
        let a = FpMatrix::from_rows(f(5), &[vec![1, 1], vec![0, 1]]).unwrap();
        let t = FpVectorOperator::from_matrix(&a).unwrap();
        let s = poly_left_inverse(&poly(5, &[1, -2, 1]), &t).unwrap();
        let expected = FpVectorOperator::from_matrix(&FpMatrix::from_rows(f(5), &[vec![1, 4], vec![0, 1]]).unwrap()).unwrap();
        assert_eq!(s, expected);
        assert!(matches!(
            poly_left_inverse(&poly(3, &[0, -1, 1]), &indicator_op()),
            Err(GenInvError::NotApplicable(_))
        ));
    }

    #[test]
    fn left_drazin_examples() {
        let idem = indicator_op();
        let g = left_drazin_from_poly(&poly(3, &[0, -1, 1]), &idem).unwrap();
        assert_eq!(g.inverse, FpVectorOperator::identity(f(3), 2).unwrap());
        assert_eq!(g.m, 1);
        let shift = FpVectorOperator::from_matrix(&FpMatrix::from_rows(f(3), &[vec![0, 1], vec![0, 0]]).unwrap()).unwrap();
        let g = left_drazin_from_poly(&FpPolynomial::monomial(f(3), 2), &shift).unwrap();
        assert!(g.inverse.table().iter().all(|&x| x == 0));
        assert_eq!(g.m, 2);
    }

    #[test]
    fn reciprocal_examples() {
        assert_eq!(reciprocal_poly(&poly(5, &[1, -2, 1])), poly(5, &[1, -2, 1]));
        assert_eq!(reciprocal_poly(&poly(5, &[-1, 1])), poly(5, &[1, -1]));
        assert_eq!(inverse_minimal_poly(&poly(2, &[1, 0, 1])).unwrap(), poly(2, &[1, 0, 1]));
    }

    #[test]
    fn power_examples() {
        let p = poly(3, &[0, -1, 1]);
        let q = power_vanishing_poly(&p, 2, 1).unwrap();
        assert!(indicator_op().vanishes(&q));
        let q = power_vanishing_poly(&poly(2, &[1, 0, 1]), 2, 2).unwrap();
        assert!(swap().vanishes(&q));
        assert!(q.degree().unwrap() <= 4);
    }

    #[test]
    fn affine_examples() {
        let id = FpMatrix::identity(f(3), 2);
        let q = affine_vanishing_poly(&poly(3, &[-1, 1]), &id, &[1, 2]).unwrap();
        assert_eq!(q, poly(3, &[1, -2, 1]));
        let nil = FpMatrix::from_rows(f(3), &[vec![0, 1], vec![0, 0]]).unwrap();
        let q = affine_vanishing_poly(&FpPolynomial::monomial(f(3), 2), &nil, &[2, 1]).unwrap();
        assert_eq!(q, poly(3, &[0, 0, -1, 0, 1]));
        assert!(affine_vanishing_poly(&poly(3, &[-1, 1]), &nil, &[0, 0]).is_err());
    }

    #[test]
    fn product_examples() {
        let (t, p) = product_vanishing_poly(&[(indicator_op(), poly(3, &[0, -1, 1])), (indicator_op(), poly(3, &[0, -1, 1]))]).unwrap();
        assert_eq!(p, poly(3, &[0, -1, 1]).mul(&poly(3, &[0, -1, 1])));
        assert_eq!(t.dim(), 4);
        let idem2 = FpVectorOperator::from_table(f(2), 1, vec![0, 0]).unwrap();
        let (_, p) = product_vanishing_poly(&[(idem2, poly(2, &[0, 1, 1])), (swap(), poly(2, &[1, 0, 1]))]).unwrap();
        assert_eq!(p, poly(2, &[0, 1, 1]).mul(&poly(2, &[1, 0, 1])));
    }

    #[test]
    fn companion_examples() {
        let zero = FpVectorOperator::from_table(f(2), 1, vec![0, 0]).unwrap();
        let r = companion_embedding_check(&zero, &FpPolynomial::monomial(f(2), 1)).unwrap();
        assert!(r.holds);
        let r = companion_embedding_check(&indicator_op(), &poly(3, &[0, -1, 1])).unwrap();
        assert_eq!(r.companion, FpMatrix::from_rows(f(3), &[vec![0, 0], vec![1, 1]]).unwrap());
        assert!(r.holds);
        let r = companion_embedding_check(&swap(), &poly(2, &[1, 1])).unwrap();
        assert!(!r.holds);
    }

    #[test]
    fn eigen_root_examples() {
        let r = eigen_root_check(&indicator_op(), &poly(3, &[0, -1, 1])).unwrap();
        assert!(r.fixed_points > 0 && r.homogeneous && r.kernel_vectors > 0);
        assert!(r.ok());
        let shift = FpVectorOperator::from_table(f(3), 1, vec![1, 2, 0]).unwrap();
        let r = eigen_root_check(&shift, &minimal_poly(&shift).unwrap()).unwrap();
        assert_eq!(r.fixed_points, 0);
        assert!(r.one_ok());
    }

    #[test]
    fn block_cycle_has_loop_polynomial() {
        let t = block_cycle_operator(f(2), 3, 4, 1).unwrap();
        assert_eq!(t.power(4).unwrap(), t.power(1).unwrap());
        let mp = minimal_poly(&t).unwrap();
        assert!(mp.divides(&poly(2, &[0, -1, 0, 0, 1])));
    }
}
