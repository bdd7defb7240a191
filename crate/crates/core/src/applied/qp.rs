//! `min ‖v‖²` subject to linear equalities and inequalities, by a dual
//! active-set method with identity Hessian.

use serde::Serialize;

use crate::error::{GenInvError, Result};
use crate::numerics::{mp_inverse, DenseMatrix};

pub const DEFAULT_KKT_TOL: f64 = 1e-9;
pub const QP_MAX_ITER: usize = 500;

const RANK_TOL: f64 = 1e-12;

/// Rows `aᵢ·v = bᵢ` and `cⱼ·v ≤ dⱼ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeastNormQp {
    dim: usize,
    eq_rows: Vec<Vec<f64>>,
    eq_rhs: Vec<f64>,
    ineq_rows: Vec<Vec<f64>>,
    ineq_rhs: Vec<f64>,
}

impl LeastNormQp {
    pub fn new(dim: usize) -> Self {
        LeastNormQp {
            dim,
            eq_rows: Vec::new(),
            eq_rhs: Vec::new(),
            ineq_rows: Vec::new(),
            ineq_rhs: Vec::new(),
        }
    }

    fn check_row(&self, row: &[f64], rhs: f64) -> Result<()> {
        if row.len() != self.dim {
            return Err(GenInvError::dims(self.dim, row.len()));
        }
        if !rhs.is_finite() || row.iter().any(|x| !x.is_finite()) {
            return Err(GenInvError::invalid("constraint entries must be finite"));
        }
        Ok(())
    }

    pub fn add_equality(&mut self, row: Vec<f64>, rhs: f64) -> Result<()> {
        self.check_row(&row, rhs)?;
        self.eq_rows.push(row);
        self.eq_rhs.push(rhs);
        Ok(())
    }

    pub fn add_inequality(&mut self, row: Vec<f64>, rhs: f64) -> Result<()> {
        self.check_row(&row, rhs)?;
        self.ineq_rows.push(row);
        self.ineq_rhs.push(rhs);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn equalities(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.eq_rows.iter().map(|r| r.as_slice()).zip(self.eq_rhs.iter().copied())
    }

    pub fn inequalities(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.ineq_rows.iter().map(|r| r.as_slice()).zip(self.ineq_rhs.iter().copied())
    }

    pub fn num_equalities(&self) -> usize {
        self.eq_rows.len()
    }

    pub fn num_inequalities(&self) -> usize {
        self.ineq_rows.len()
    }

    fn scale(&self) -> f64 {
        1.0 + self.eq_rhs.iter().chain(&self.ineq_rhs).fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

/// Relative KKT residuals: stationarity and primal feasibility are divided
/// by `s = 1 + max |rhs| + ‖v‖`, complementarity by `s · (1 + max λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KktReport {
    pub stationarity: f64,
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
}

impl KktReport {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.primal).max(self.dual).max(self.complementarity)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QpSolution {
    pub v: Vec<f64>,
    /// Inequalities holding with equality at `v`.
    pub active: Vec<usize>,
    pub eq_multipliers: Vec<f64>,
    pub ineq_multipliers: Vec<f64>,
    pub kkt: KktReport,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum QpOutcome {
    Solved(QpSolution),
    Infeasible,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `r = N⁺a` and `z = a − N r` for the active normals `cols`.
fn split(cols: &[Vec<f64>], a: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if cols.is_empty() {
        return Ok((Vec::new(), a.to_vec()));
    }
    let nt = DenseMatrix::from_rows(cols)?;
    let p = mp_inverse(&nt, RANK_TOL)?;
    let q = cols.len();
    let r: Vec<f64> = (0..q).map(|j| (0..a.len()).map(|i| p.get(i, j) * a[i]).sum()).collect();
    let mut z = a.to_vec();
    for (c, rj) in cols.iter().zip(&r) {
        for (zi, ci) in z.iter_mut().zip(c) {
            *zi -= rj * ci;
        }
    }
    Ok((r, z))
}

#[derive(Clone, Copy, PartialEq)]
enum Slot {
    Eq(usize),
    Ineq(usize),
}

/// Solves the program and certifies the answer through its KKT residuals,
/// which must not exceed `tol` (see [`KktReport`] for the scaling).
pub fn solve_least_norm_qp(qp: &LeastNormQp, tol: f64) -> Result<QpOutcome> {
    let n = qp.dim;
    let scale = qp.scale();
    let feas_tol = 1e-11 * scale;

    // equalities: independent subset, least-norm point, consistency
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut slots: Vec<Slot> = Vec::new();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for (i, row) in qp.eq_rows.iter().enumerate() {
        let mut r = row.clone();
        for b in &basis {
            let c = dot(&r, b);
            for (x, y) in r.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
        let nr = norm(&r);
        if nr > 1e-10 * norm(row).max(f64::MIN_POSITIVE) {
            basis.push(r.iter().map(|x| x / nr).collect());
            cols.push(row.clone());
            slots.push(Slot::Eq(i));
        }
    }
    let mut x = vec![0.0; n];
    let mut u: Vec<f64> = Vec::new();
    if !cols.is_empty() {
        let rhs: Vec<f64> = slots
            .iter()
            .map(|s| match s {
                Slot::Eq(i) => qp.eq_rhs[*i],
                Slot::Ineq(_) => unreachable!(),
            })
            .collect();
        let nt = DenseMatrix::from_rows(&cols)?;
        x = mp_inverse(&nt, RANK_TOL)?.mul_vec(&rhs);
        u = split(&cols, &x)?.0;
    }
    for (row, b) in qp.equalities() {
        if (dot(row, &x) - b).abs() > 1e-9 * scale {
            return Ok(QpOutcome::Infeasible);
        }
    }

    let mut iterations = 0;
    'outer: loop {
        // lowest-index violated inequality not yet active
        let p = (0..qp.ineq_rows.len()).find(|&j| {
            !slots.contains(&Slot::Ineq(j)) && dot(&qp.ineq_rows[j], &x) - qp.ineq_rhs[j] > feas_tol
        });
        let Some(p) = p else { break };
        // work in the form a·x ≥ b
        let a: Vec<f64> = qp.ineq_rows[p].iter().map(|c| -c).collect();
        let b = -qp.ineq_rhs[p];
        let mut up = 0.0;
        loop {
            iterations += 1;
            if iterations > QP_MAX_ITER {
                return Err(GenInvError::NonConvergence {
                    what: "least-norm QP".into(),
                    iterations: QP_MAX_ITER,
                });
            }
            let (r, z) = split(&cols, &a)?;
            let mut t1 = f64::INFINITY;
            let mut drop = None;
            for (k, s) in slots.iter().enumerate() {
                if let Slot::Ineq(_) = s {
                    if r[k] > 1e-14 {
                        let t = u[k] / r[k];
                        if t < t1 {
                            t1 = t;
                            drop = Some(k);
                        }
                    }
                }
            }
            let zz = dot(&z, &a);
            // z is a difference of terms this large; anything near rounding is zero
            let cancelled = norm(&a) + cols.iter().zip(&r).map(|(c, rk)| rk.abs() * norm(c)).sum::<f64>();
            let t2 = if cols.len() < n && norm(&z) > 1e-10 * cancelled && zz > 0.0 {
                (b - dot(&a, &x)) / zz
            } else {
                f64::INFINITY
            };
            let t = t1.min(t2);
            if t == f64::INFINITY {
                return Ok(QpOutcome::Infeasible);
            }
            for (uk, rk) in u.iter_mut().zip(&r) {
                *uk -= t * rk;
            }
            up += t;
            if t2 < f64::INFINITY {
                for (xi, zi) in x.iter_mut().zip(&z) {
                    *xi += t * zi;
                }
            }
            if t2 <= t1 {
                cols.push(a);
                slots.push(Slot::Ineq(p));
                u.push(up);
                continue 'outer;
            }
            let k = drop.expect("finite partial step has a blocking constraint");
            cols.remove(k);
            slots.remove(k);
            u.remove(k);
        }
    }

    // refine: re-solve the final working set directly
    if !cols.is_empty() {
        let rhs: Vec<f64> = slots
            .iter()
            .map(|s| match s {
                Slot::Eq(i) => qp.eq_rhs[*i],
                Slot::Ineq(j) => -qp.ineq_rhs[*j],
            })
            .collect();
        x = mp_inverse(&DenseMatrix::from_rows(&cols)?, RANK_TOL)?.mul_vec(&rhs);
    }
    Ok(QpOutcome::Solved(certify(qp, x, &cols, &slots, iterations, tol)?))
}

fn certify(qp: &LeastNormQp, v: Vec<f64>, cols: &[Vec<f64>], slots: &[Slot], iterations: usize, tol: f64) -> Result<QpSolution> {
    // v = Σ u_k a_k with a_k the active normals in ≥ form
    let (u, resid) = split(cols, &v)?;
    let mut eq_mult = vec![0.0; qp.num_equalities()];
    let mut ineq_mult = vec![0.0; qp.num_inequalities()];
    for (s, uk) in slots.iter().zip(&u) {
        match s {
            Slot::Eq(i) => eq_mult[*i] = -uk,
            Slot::Ineq(j) => ineq_mult[*j] = *uk,
        }
    }
    let mut primal = 0.0f64;
    for (row, b) in qp.equalities() {
        primal = primal.max((dot(row, &v) - b).abs());
    }
    let mut complementarity = 0.0f64;
    let mut active = Vec::new();
    let size = qp.scale() + norm(&v);
    for (j, (row, d)) in qp.inequalities().enumerate() {
        let s = dot(row, &v) - d;
        primal = primal.max(s.max(0.0));
        complementarity = complementarity.max((ineq_mult[j] * s).abs());
        if s.abs() <= 1e-9 * size {
            active.push(j);
        }
    }
    let lam = 1.0 + ineq_mult.iter().chain(&eq_mult).fold(0.0f64, |m, x| m.max(x.abs()));
    let dual = ineq_mult.iter().fold(0.0f64, |m, &x| m.max(-x)) / lam;
    let kkt = KktReport {
        stationarity: norm(&resid) / size,
        primal: primal / size,
        dual,
        complementarity: complementarity / (lam * size),
    };
    if kkt.max() > tol {
        return Err(GenInvError::VerificationFailed(format!(
            "QP solution fails KKT: {kkt:?}"
        )));
    }
    Ok(QpSolution {
        v,
        active,
        eq_multipliers: eq_mult,
        ineq_multipliers: ineq_mult,
        kkt,
        iterations,
    })
}
