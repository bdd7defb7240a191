use serde::Serialize;

use crate::core_ops::VectorOperator;
use crate::error::{GenInvError, Result};

/// Grids larger than this are rejected.
const MAX_GRID_POINTS: usize = 20_000_000;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn tie_tol(x: f64) -> f64 {
    1e-9 * (1.0 + x)
}

/// Brute-force best-approximate-solution search over a finite candidate set.
///
/// Images of all candidates are computed once, so repeated queries cost one
/// pass over the stored images.
#[derive(Debug, Clone)]
pub struct BasOracle {
    dim_in: usize,
    dim_out: usize,
    points: Vec<Vec<f64>>,
    images: Vec<Vec<f64>>,
    norms: Vec<f64>,
    step: Option<f64>,
}

/// Result of one oracle query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleAnswer {
    /// Deterministic choice: smallest residual, then smallest norm, then
    /// lexicographically smallest.
    pub best: Vec<f64>,
    pub residual: f64,
    pub norm: f64,
    /// Every candidate tied with `best` in residual and norm.
    pub ties: Vec<Vec<f64>>,
}

/// Integer multiples of `step` inside `[lo, hi]`; contains zero whenever the
/// interval does.
fn axis_points(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let k0 = (lo / step - 1e-9).ceil() as i64;
    let k1 = (hi / step + 1e-9).floor() as i64;
    (k0..=k1).map(|k| k as f64 * step).collect()
}

impl BasOracle {
    /// Candidates on the grid `step·Z^n` restricted to a box. A single
    /// interval is applied to every axis.
    pub fn grid(op: &VectorOperator, bounds: &[(f64, f64)], step: f64) -> Result<Self> {
        let axes = Self::axes(op.dim_in(), bounds, step)?;
        let points = Self::product_grid(&axes)?;
        let mut o = Self::over_points(op, points)?;
        o.step = Some(step);
        Ok(o)
    }

    /// Grid candidates inside the closed ball of radius `r` about the origin.
    pub fn grid_in_ball(op: &VectorOperator, r: f64, step: f64) -> Result<Self> {
        let axes = Self::axes(op.dim_in(), &[(-r, r)], step)?;
        let points: Vec<Vec<f64>> = Self::product_grid(&axes)?
            .into_iter()
            .filter(|p| norm(p) <= r * (1.0 + 1e-12))
            .collect();
        let mut o = Self::over_points(op, points)?;
        o.step = Some(step);
        Ok(o)
    }

    /// Arbitrary finite candidate set.
    pub fn over_points(op: &VectorOperator, points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(GenInvError::invalid("oracle candidate set is empty"));
        }
        let mut images = Vec::with_capacity(points.len());
        let mut norms = Vec::with_capacity(points.len());
        for p in &points {
            images.push(op.apply(p)?);
            norms.push(norm(p));
        }
        Ok(BasOracle {
            dim_in: op.dim_in(),
            dim_out: op.dim_out(),
            points,
            images,
            norms,
            step: None,
        })
    }

    fn axes(dim: usize, bounds: &[(f64, f64)], step: f64) -> Result<Vec<Vec<f64>>> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(GenInvError::invalid("grid step must be positive"));
        }
        if bounds.len() != 1 && bounds.len() != dim {
            return Err(GenInvError::dims(dim, bounds.len()));
        }
        let mut axes = Vec::with_capacity(dim);
        for i in 0..dim {
            let (lo, hi) = if bounds.len() == 1 { bounds[0] } else { bounds[i] };
            if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                return Err(GenInvError::invalid(format!("bad box interval [{lo}, {hi}]")));
            }
            let a = axis_points(lo, hi, step);
            if a.is_empty() {
                return Err(GenInvError::invalid("grid is empty"));
            }
            axes.push(a);
        }
        Ok(axes)
    }

    fn product_grid(axes: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let total = axes.iter().try_fold(1usize, |acc, a| acc.checked_mul(a.len()));
        match total {
            Some(t) if t <= MAX_GRID_POINTS => {}
            _ => {
                return Err(GenInvError::CapExceeded {
                    what: "oracle grid size".into(),
                    cap: MAX_GRID_POINTS as u64,
                })
            }
        }
        let mut pts: Vec<Vec<f64>> = vec![Vec::new()];
        for axis in axes {
            let mut next = Vec::with_capacity(pts.len() * axis.len());
            for p in &pts {
                for &x in axis {
                    let mut q = p.clone();
                    q.push(x);
                    next.push(q);
                }
            }
            pts = next;
        }
        Ok(pts)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn step(&self) -> Option<f64> {
        self.step
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Two-pass selection: residuals within `slack` (plus a rounding
    /// tolerance) of the minimum are admitted, then the smallest norm wins,
    /// then lexicographic order. The result does not depend on scan order.
    pub fn query(&self, w: &[f64], slack: f64) -> Result<OracleAnswer> {
        if w.len() != self.dim_out {
            return Err(GenInvError::dims(self.dim_out, w.len()));
        }
        let res: Vec<f64> = self.images.iter().map(|y| dist(y, w)).collect();
        let rmin = res.iter().copied().fold(f64::INFINITY, f64::min);
        let rcut = rmin + slack.max(0.0) + tie_tol(rmin);
        let nmin = res
            .iter()
            .zip(&self.norms)
            .filter(|(r, _)| **r <= rcut)
            .map(|(_, n)| *n)
            .fold(f64::INFINITY, f64::min);
        let ncut = nmin + tie_tol(nmin);
        let tied: Vec<usize> = (0..self.points.len())
            .filter(|&i| res[i] <= rcut && self.norms[i] <= ncut)
            .collect();
        let best = *tied
            .iter()
            .min_by(|&&i, &&j| {
                self.points[i]
                    .iter()
                    .zip(&self.points[j])
                    .map(|(a, b)| a.total_cmp(b))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("at least one candidate");
        Ok(OracleAnswer {
            best: self.points[best].clone(),
            residual: res[best],
            norm: self.norms[best],
            ties: tied.iter().map(|&i| self.points[i].clone()).collect(),
        })
    }

    /// A candidate that strictly improves on `v` as a best approximate
    /// solution for `w`: a smaller residual, or an equal residual with a
    /// smaller norm. `None` means the oracle cannot refute `v`.
    pub fn improvement(&self, w: &[f64], v: &[f64], tv: &[f64]) -> Option<Vec<f64>> {
        let rv = dist(tv, w);
        let nv = norm(v);
        let (tr, tn) = (tie_tol(rv), tie_tol(nv));
        (0..self.points.len())
            .find(|&i| {
                let r = dist(&self.images[i], w);
                r < rv - tr || (r <= rv + tr && self.norms[i] < nv - tn)
            })
            .map(|i| self.points[i].clone())
    }
}

/// Deterministic grid oracle for a single target.
pub fn grid_bas_oracle(t: &VectorOperator, w: &[f64], bounds: &[(f64, f64)], step: f64) -> Result<Vec<f64>> {
    Ok(BasOracle::grid(t, bounds, step)?.query(w, 0.0)?.best)
}

/// Acceptance thresholds for [`check_pseudo_inverse`].
#[derive(Debug, Clone, Copy)]
pub struct ReportTolerances {
    pub mp1: f64,
    pub mp2: f64,
    /// Residual slack handed to the oracle when measuring the gap.
    pub oracle_slack: f64,
}

impl Default for ReportTolerances {
    fn default() -> Self {
        ReportTolerances {
            mp1: 1e-9,
            mp2: 1e-9,
            oracle_slack: 0.0,
        }
    }
}

/// Outcome of checking a candidate inverse at one target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PseudoInverseReport {
    pub w: Vec<f64>,
    /// `None` when the candidate is undefined at `w`.
    pub v: Option<Vec<f64>>,
    pub residual: f64,
    pub norm: f64,
    pub mp1_residual: f64,
    pub mp2_residual: f64,
    /// No oracle candidate improves on `v`.
    pub bas_ok: bool,
    pub mp1_ok: bool,
    pub mp2_ok: bool,
    /// Max-coordinate distance from `v` to the nearest oracle tie.
    pub oracle_gap: f64,
    pub oracle_residual: f64,
    pub oracle_norm: f64,
}

/// Checks `g` against `t` at each sample: BAS via the oracle, MP1 at `g(w)`
/// and at the oracle's answer, MP2 at `w`.
pub fn check_pseudo_inverse(
    t: &VectorOperator,
    g: &dyn Fn(&[f64]) -> Option<Vec<f64>>,
    samples: &[Vec<f64>],
    oracle: &BasOracle,
    tol: ReportTolerances,
) -> Result<Vec<PseudoInverseReport>> {
    let mut out = Vec::with_capacity(samples.len());
    for w in samples {
        let ans = oracle.query(w, tol.oracle_slack)?;
        let Some(v) = g(w) else {
            out.push(PseudoInverseReport {
                w: w.clone(),
                v: None,
                residual: f64::NAN,
                norm: f64::NAN,
                mp1_residual: f64::NAN,
                mp2_residual: f64::NAN,
                bas_ok: false,
                mp1_ok: false,
                mp2_ok: false,
                oracle_gap: f64::INFINITY,
                oracle_residual: ans.residual,
                oracle_norm: ans.norm,
            });
            continue;
        };
        let tv = t.apply(&v)?;
        let residual = dist(&tv, w);
        let mut mp1 = 0.0f64;
        for u in [&v, &ans.best] {
            let tu = t.apply(u)?;
            mp1 = match g(&tu) {
                Some(gtu) => mp1.max(dist(&t.apply(&gtu)?, &tu)),
                None => f64::INFINITY,
            };
        }
        let mp2 = match g(&tv) {
            Some(gtv) => dist(&gtv, &v),
            None => f64::INFINITY,
        };
        let gap = ans
            .ties
            .iter()
            .map(|p| max_abs_diff(p, &v))
            .fold(f64::INFINITY, f64::min);
        out.push(PseudoInverseReport {
            w: w.clone(),
            residual,
            norm: norm(&v),
            mp1_residual: mp1,
            mp2_residual: mp2,
            bas_ok: oracle.improvement(w, &v, &tv).is_none(),
            mp1_ok: mp1 <= tol.mp1,
            mp2_ok: mp2 <= tol.mp2,
            oracle_gap: gap,
            oracle_residual: ans.residual,
            oracle_norm: ans.norm,
            v: Some(v),
        });
    }
    Ok(out)
}

/// Oracle values on growing balls and the first radius from which they
/// stay put.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionOutcome {
    pub radii: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    /// `(index into radii, value)` once `window` consecutive values agree
    /// within two grid steps.
    pub stabilized: Option<(usize, Vec<f64>)>,
}

/// Oracle pseudo-inverse restricted to `B(0, r)` for each radius.
pub fn expanding_domain_pinv(
    t: &VectorOperator,
    w: &[f64],
    radii: &[f64],
    window: usize,
    step: f64,
) -> Result<ExpansionOutcome> {
    if radii.windows(2).any(|p| p[0] >= p[1]) {
        return Err(GenInvError::invalid("radii must be strictly increasing"));
    }
    if window == 0 {
        return Err(GenInvError::invalid("stabilization window must be positive"));
    }
    let mut values = Vec::with_capacity(radii.len());
    let mut stabilized = None;
    for (i, &r) in radii.iter().enumerate() {
        let v = BasOracle::grid_in_ball(t, r, step)?.query(w, 0.0)?.best;
        values.push(v);
        if stabilized.is_none() && i + 1 >= window {
            let last = &values[i];
            if values[i + 1 - window..=i]
                .iter()
                .all(|u| max_abs_diff(u, last) <= 2.0 * step + 1e-12)
            {
                stabilized = Some((i, last.clone()));
            }
        }
    }
    Ok(ExpansionOutcome {
        radii: radii.to_vec(),
        values,
        stabilized,
    })
}
