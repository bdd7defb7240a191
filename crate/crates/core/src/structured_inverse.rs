//! Projections onto closed convex sets and inverses assembled from known
//! pieces: cascades of nested projections, Cartesian products, bijection
//! sandwiches, affine reparametrizations, and a projection applied after an
//! operator.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::applied::{solve_least_norm_qp, LeastNormQp, QpOutcome, DEFAULT_KKT_TOL};
use crate::core_ops::{compose, FiniteOperator, VectorOperator};
use crate::error::{GenInvError, Result};
use crate::numerics::DenseMatrix;
use crate::pseudo_inverse::{PinvValue, Scalar1DOperator};
use crate::set_inverse::{check_mp_axioms, enumerate_one_two_inverses};

const DYKSTRA_TOL: f64 = 1e-10;
const DYKSTRA_MAX_ITER: usize = 10_000;
const MEMBERSHIP_TOL: f64 = 1e-9;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn lower_bounds<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    let v: Vec<Option<f64>> = Vec::deserialize(d)?;
    Ok(v.into_iter().map(|x| x.unwrap_or(f64::NEG_INFINITY)).collect())
}

fn upper_bounds<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    let v: Vec<Option<f64>> = Vec::deserialize(d)?;
    Ok(v.into_iter().map(|x| x.unwrap_or(f64::INFINITY)).collect())
}

fn bounds_out<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    let o: Vec<Option<f64>> = v.iter().map(|x| x.is_finite().then_some(*x)).collect();
    o.serialize(s)
}

/// A nonempty closed convex subset of `R^n`. Unbounded box sides are
/// written as `null` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexSet {
    Box {
        #[serde(deserialize_with = "lower_bounds", serialize_with = "bounds_out")]
        lo: Vec<f64>,
        #[serde(deserialize_with = "upper_bounds", serialize_with = "bounds_out")]
        hi: Vec<f64>,
    },
    L2Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// `{x : normal·x ≤ offset}`
    Halfspace {
        normal: Vec<f64>,
        offset: f64,
    },
    /// Nonemptiness is certified by `feasible_point`.
    Intersection {
        sets: Vec<ConvexSet>,
        feasible_point: Vec<f64>,
    },
}

impl ConvexSet {
    pub fn new_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let s = ConvexSet::Box { lo, hi };
        s.validate()?;
        Ok(s)
    }

    /// `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new_box(vec![lo; dim], vec![hi; dim])
    }

    /// `[0, ∞)^dim`.
    pub fn nonnegative_orthant(dim: usize) -> Self {
        ConvexSet::Box {
            lo: vec![0.0; dim],
            hi: vec![f64::INFINITY; dim],
        }
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let s = ConvexSet::L2Ball { center, radius };
        s.validate()?;
        Ok(s)
    }

    pub fn halfspace(normal: Vec<f64>, offset: f64) -> Result<Self> {
        let s = ConvexSet::Halfspace { normal, offset };
        s.validate()?;
        Ok(s)
    }

    pub fn intersection(sets: Vec<ConvexSet>, feasible_point: Vec<f64>) -> Result<Self> {
        let s = ConvexSet::Intersection { sets, feasible_point };
        s.validate()?;
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Box { lo, .. } => lo.len(),
            ConvexSet::L2Ball { center, .. } => center.len(),
            ConvexSet::Halfspace { normal, .. } => normal.len(),
            ConvexSet::Intersection { feasible_point, .. } => feasible_point.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ConvexSet::Box { lo, hi } => {
                if lo.len() != hi.len() {
                    return Err(GenInvError::dims(lo.len(), hi.len()));
                }
                if lo.iter().zip(hi).any(|(l, h)| l.is_nan() || h.is_nan() || l > h || *l == f64::INFINITY || *h == f64::NEG_INFINITY) {
                    return Err(GenInvError::invalid("box requires lo ≤ hi on every axis"));
                }
            }
            ConvexSet::L2Ball { center, radius } => {
                if center.iter().any(|x| !x.is_finite()) || !(radius.is_finite() && *radius >= 0.0) {
                    return Err(GenInvError::invalid("ball requires a finite center and radius ≥ 0"));
                }
            }
            ConvexSet::Halfspace { normal, offset } => {
                if normal.iter().any(|x| !x.is_finite()) || !offset.is_finite() || norm(normal) == 0.0 {
                    return Err(GenInvError::invalid("halfspace requires a finite nonzero normal"));
                }
            }
            ConvexSet::Intersection { sets, feasible_point } => {
                if sets.is_empty() {
                    return Err(GenInvError::invalid("intersection of no sets"));
                }
                for s in sets {
                    s.validate()?;
                    if s.dim() != feasible_point.len() {
                        return Err(GenInvError::dims(feasible_point.len(), s.dim()));
                    }
                    if !s.contains(feasible_point, MEMBERSHIP_TOL) {
                        return Err(GenInvError::invalid("feasible point lies outside a member set"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Membership up to `tol` in the natural distance of each kind.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            ConvexSet::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| *v >= l - tol && *v <= h + tol),
            ConvexSet::L2Ball { center, radius } => dist(x, center) <= radius + tol,
            ConvexSet::Halfspace { normal, offset } => dot(normal, x) - offset <= tol * norm(normal),
            ConvexSet::Intersection { sets, .. } => sets.iter().all(|s| s.contains(x, tol)),
        }
    }

    /// Euclidean projection; intersections use Dykstra's algorithm.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(GenInvError::dims(self.dim(), x.len()));
        }
        match self {
            ConvexSet::Intersection { sets, .. } => dykstra(sets, x),
            _ => Ok(self.project_simple(x)),
        }
    }

    /// Like [`ConvexSet::project`], but returns the last Dykstra iterate
    /// instead of failing when the iteration cap is hit.
    pub fn project_best_effort(&self, x: &[f64]) -> Vec<f64> {
        match self {
            ConvexSet::Intersection { sets, .. } => dykstra_run(sets, x).0,
            _ => self.project_simple(x),
        }
    }

    fn project_simple(&self, x: &[f64]) -> Vec<f64> {
        match self {
            ConvexSet::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (l, h))| v.max(*l).min(*h))
                .collect(),
            ConvexSet::L2Ball { center, radius } => {
                let d = dist(x, center);
                if d <= *radius {
                    x.to_vec()
                } else {
                    let s = radius / d;
                    x.iter().zip(center).map(|(v, c)| c + s * (v - c)).collect()
                }
            }
            ConvexSet::Halfspace { normal, offset } => {
                let excess = dot(normal, x) - offset;
                if excess <= 0.0 {
                    x.to_vec()
                } else {
                    let s = excess / dot(normal, normal);
                    x.iter().zip(normal).map(|(v, a)| v - s * a).collect()
                }
            }
            ConvexSet::Intersection { sets, .. } => dykstra_run(sets, x).0,
        }
    }
}

fn dykstra(sets: &[ConvexSet], x: &[f64]) -> Result<Vec<f64>> {
    let (y, converged) = dykstra_run(sets, x);
    if converged {
        Ok(y)
    } else {
        Err(GenInvError::NonConvergence {
            what: "Dykstra projection onto an intersection".into(),
            iterations: DYKSTRA_MAX_ITER,
        })
    }
}

fn dykstra_run(sets: &[ConvexSet], x0: &[f64]) -> (Vec<f64>, bool) {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut incr = vec![vec![0.0; n]; sets.len()];
    for _ in 0..DYKSTRA_MAX_ITER {
        let before = x.clone();
        for (s, p) in sets.iter().zip(incr.iter_mut()) {
            let shifted: Vec<f64> = x.iter().zip(p.iter()).map(|(a, b)| a + b).collect();
            let y = s.project_best_effort(&shifted);
            for i in 0..n {
                p[i] = shifted[i] - y[i];
            }
            x = y;
        }
        if dist(&x, &before) <= DYKSTRA_TOL && sets.iter().all(|s| s.contains(&x, DYKSTRA_TOL)) {
            return (x, true);
        }
    }
    (x, false)
}

/// `P_C` for a fixed set.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionOperator {
    pub target: ConvexSet,
}

impl ProjectionOperator {
    pub fn new(target: ConvexSet) -> Result<Self> {
        target.validate()?;
        Ok(ProjectionOperator { target })
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.target.project(x)
    }

    pub fn as_operator(&self) -> VectorOperator {
        VectorOperator::projection(self.target.clone())
    }
}

fn check_chain(sets: &[ConvexSet]) -> Result<usize> {
    let Some(first) = sets.first() else {
        return Err(GenInvError::invalid("cascade needs at least one set"));
    };
    let d = first.dim();
    for s in sets {
        s.validate()?;
        if s.dim() != d {
            return Err(GenInvError::dims(d, s.dim()));
        }
    }
    Ok(d)
}

/// `P_{C_n} ∘ … ∘ P_{C_1}`.
pub fn cascade_operator(sets: &[ConvexSet]) -> Result<VectorOperator> {
    let d = check_chain(sets)?;
    let sets = sets.to_vec();
    Ok(VectorOperator::new(d, d, "projection cascade", move |v| {
        sets.iter().fold(v.to_vec(), |u, s| s.project_best_effort(&u))
    }))
}

/// `u_0 = v`, `u_j = P_{C_j}(u_{j-1})`.
pub fn cascade_trajectory(sets: &[ConvexSet], v: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_chain(sets)?;
    let mut out = vec![v.to_vec()];
    for s in sets {
        let next = s.project(out.last().unwrap())?;
        out.push(next);
    }
    Ok(out)
}

/// Pseudo-inverse of a cascade of projections onto nested sets
/// `C_1 ⊇ … ⊇ C_n ∋ 0`: the projection onto the innermost set. Nesting is
/// spot-checked by projecting `probes` onto each inner set and testing
/// membership in the enclosing one.
pub fn cascade_pinv(sets: &[ConvexSet], probes: &[Vec<f64>]) -> Result<ProjectionOperator> {
    let d = check_chain(sets)?;
    let inner = sets.last().unwrap();
    if !inner.contains(&vec![0.0; d], MEMBERSHIP_TOL) {
        return Err(GenInvError::invalid("innermost set must contain the origin"));
    }
    for (i, pair) in sets.windows(2).enumerate() {
        for x in probes {
            let y = pair[1].project(x)?;
            if !pair[0].contains(&y, MEMBERSHIP_TOL) {
                return Err(GenInvError::invalid(format!(
                    "set {} is not contained in set {i}: {y:?} escapes",
                    i + 1
                )));
            }
        }
    }
    ProjectionOperator::new(inner.clone())
}

/// Sample points on which inverse pairs are checked.
#[derive(Debug, Clone, Default)]
pub struct AxiomProbes {
    /// Points of the domain, used for `TGT = T`.
    pub domain: Vec<Vec<f64>>,
    /// Points of the codomain, used for `GTG = G`.
    pub codomain: Vec<Vec<f64>>,
}

/// Largest observed MP1/MP2 residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxiomReport {
    pub mp1: f64,
    pub mp2: f64,
}

impl AxiomReport {
    pub fn ok(&self, tol: f64) -> bool {
        self.mp1 <= tol && self.mp2 <= tol
    }
}

/// Sampled MP1 (at domain probes and at `G(w)`) and MP2 residuals.
pub fn sampled_axioms(t: &VectorOperator, g: &VectorOperator, probes: &AxiomProbes) -> Result<AxiomReport> {
    if g.dim_in() != t.dim_out() || g.dim_out() != t.dim_in() {
        return Err(GenInvError::invalid("inverse has the wrong shape"));
    }
    let mut mp1 = 0.0f64;
    let mut mp2 = 0.0f64;
    let mut domain_pts = probes.domain.clone();
    for w in &probes.codomain {
        domain_pts.push(g.apply(w)?);
    }
    for v in &domain_pts {
        let tv = t.apply(v)?;
        let back = t.apply(&g.apply(&tv)?)?;
        mp1 = mp1.max(dist(&back, &tv) / (1.0 + norm(&tv)));
    }
    for w in &probes.codomain {
        let gw = g.apply(w)?;
        let again = g.apply(&t.apply(&gw)?)?;
        mp2 = mp2.max(dist(&again, &gw) / (1.0 + norm(&gw)));
    }
    Ok(AxiomReport { mp1, mp2 })
}

/// Inverse of a Cartesian product, applied componentwise. Each pair is
/// checked on its own probes before assembly.
pub fn product_inverse(
    parts: &[(VectorOperator, VectorOperator)],
    probes: &[AxiomProbes],
    tol: f64,
) -> Result<(VectorOperator, VectorOperator)> {
    if parts.is_empty() || probes.len() != parts.len() {
        return Err(GenInvError::invalid("one probe set per component is required"));
    }
    for (i, ((t, g), p)) in parts.iter().zip(probes).enumerate() {
        let rep = sampled_axioms(t, g, p)?;
        if !rep.ok(tol) {
            return Err(GenInvError::VerificationFailed(format!(
                "component {i} fails its axioms (MP1 {:.3e}, MP2 {:.3e})",
                rep.mp1, rep.mp2
            )));
        }
    }
    let ops: Vec<VectorOperator> = parts.iter().map(|(t, _)| t.clone()).collect();
    let invs: Vec<VectorOperator> = parts.iter().map(|(_, g)| g.clone()).collect();
    Ok((VectorOperator::product(&ops), VectorOperator::product(&invs)))
}

/// Exact version of [`product_inverse`] for finite operators.
pub fn product_inverse_finite(parts: &[(FiniteOperator, FiniteOperator)]) -> Result<(FiniteOperator, FiniteOperator)> {
    for (i, (t, g)) in parts.iter().enumerate() {
        if !check_mp_axioms(t, g)?.both() {
            return Err(GenInvError::VerificationFailed(format!("component {i} is not a {{1,2}}-inverse pair")));
        }
    }
    let ops: Vec<FiniteOperator> = parts.iter().map(|(t, _)| t.clone()).collect();
    let invs: Vec<FiniteOperator> = parts.iter().map(|(_, g)| g.clone()).collect();
    Ok((FiniteOperator::product(&ops)?, FiniteOperator::product(&invs)?))
}

/// A bijection together with its claimed inverse.
#[derive(Debug, Clone)]
pub struct BijectionPair {
    pub forward: VectorOperator,
    pub inverse: VectorOperator,
}

/// `S₁ ∘ T ∘ S₂` and its inverse `S₂⁻¹ ∘ G ∘ S₁⁻¹`.
#[derive(Debug, Clone)]
pub struct SandwichOutcome {
    pub operator: VectorOperator,
    pub inverse: VectorOperator,
    pub report: AxiomReport,
}

fn roundtrip_error(s: &BijectionPair, pts: &[Vec<f64>], forward_first: bool) -> Result<f64> {
    let mut worst = 0.0f64;
    for x in pts {
        let y = if forward_first {
            s.inverse.apply(&s.forward.apply(x)?)?
        } else {
            s.forward.apply(&s.inverse.apply(x)?)?
        };
        worst = worst.max(dist(&y, x) / (1.0 + norm(x)));
    }
    Ok(worst)
}

/// Inverse of `S₁ ∘ T ∘ S₂` for bijections `S₁`, `S₂`. `probes` refer to
/// the domain and codomain of the sandwiched operator.
pub fn sandwich_inverse(
    s1: &BijectionPair,
    t: &VectorOperator,
    g: &VectorOperator,
    s2: &BijectionPair,
    probes: &AxiomProbes,
    tol: f64,
) -> Result<SandwichOutcome> {
    let operator = s1.forward.after(&t.after(&s2.forward)?)?;
    let inverse = s2.inverse.after(&g.after(&s1.inverse)?)?;
    let inner_dom: Vec<Vec<f64>> = probes.domain.iter().map(|v| s2.forward.apply(v)).collect::<Result<_>>()?;
    let mid: Vec<Vec<f64>> = inner_dom.iter().map(|v| t.apply(v)).collect::<Result<_>>()?;
    let back: Vec<Vec<f64>> = probes.codomain.iter().map(|w| s1.inverse.apply(w)).collect::<Result<_>>()?;
    let errs = [
        roundtrip_error(s2, &probes.domain, true)?,
        roundtrip_error(s1, &mid, true)?,
        roundtrip_error(s1, &probes.codomain, false)?,
        roundtrip_error(s2, &back.iter().map(|w| g.apply(w)).collect::<Result<Vec<_>>>()?, false)?,
    ];
    if let Some(e) = errs.iter().find(|&&e| e > tol) {
        return Err(GenInvError::VerificationFailed(format!("bijection round trip off by {e:.3e}")));
    }
    let report = sampled_axioms(&operator, &inverse, probes)?;
    Ok(SandwichOutcome {
        operator,
        inverse,
        report,
    })
}

/// Exact sandwich for finite operators: `S₂⁻¹ ∘ G ∘ S₁⁻¹` for `S₁ ∘ T ∘ S₂`.
pub fn sandwich_inverse_finite(
    s1: &FiniteOperator,
    t: &FiniteOperator,
    g: &FiniteOperator,
    s2: &FiniteOperator,
) -> Result<(FiniteOperator, FiniteOperator)> {
    let (Some(s1i), Some(s2i)) = (s1.inverse(), s2.inverse()) else {
        return Err(GenInvError::invalid("outer maps must be bijections"));
    };
    let op = compose(s1, &compose(t, s2)?)?;
    let inv = compose(&s2i, &compose(g, &s1i)?)?;
    Ok((op, inv))
}

/// `v ↦ a·T(b·v) + w0` and its inverse `w ↦ b⁻¹ G(a⁻¹(w − w0))`.
pub fn affine_pinv(
    t: &VectorOperator,
    g: &VectorOperator,
    a: f64,
    b: f64,
    w0: &[f64],
) -> Result<(VectorOperator, VectorOperator)> {
    if a == 0.0 || b == 0.0 || !a.is_finite() || !b.is_finite() {
        return Err(GenInvError::invalid("affine scalars must be finite and nonzero"));
    }
    if w0.len() != t.dim_out() {
        return Err(GenInvError::dims(t.dim_out(), w0.len()));
    }
    let n = t.dim_in();
    let m = t.dim_out();
    let offset = w0.to_vec();
    let off2 = w0.to_vec();
    let s1 = BijectionPair {
        forward: VectorOperator::new(m, m, "w ↦ a w + w0", move |w| {
            w.iter().zip(&offset).map(|(x, o)| a * x + o).collect()
        }),
        inverse: VectorOperator::new(m, m, "w ↦ (w − w0)/a", move |w| {
            w.iter().zip(&off2).map(|(x, o)| (x - o) / a).collect()
        }),
    };
    let s2 = BijectionPair {
        forward: VectorOperator::new(n, n, "v ↦ b v", move |v| v.iter().map(|x| b * x).collect()),
        inverse: VectorOperator::new(n, n, "v ↦ v/b", move |v| v.iter().map(|x| x / b).collect()),
    };
    let op = s1.forward.after(&t.after(&s2.forward)?)?;
    let inv = s2.inverse.after(&g.after(&s1.inverse)?)?;
    Ok((op, inv))
}

/// How [`ProjectedPinv`] finds a least-norm source of a point of `C`.
#[derive(Debug, Clone)]
pub enum SourceSearch {
    /// Scan a finite candidate set; a candidate qualifies when
    /// `‖P_C T(v) − c‖ ≤ tolerance`.
    Candidates { points: Vec<Vec<f64>>, tolerance: f64 },
    /// `T = σ ∘ A` with `σ` strictly increasing applied entrywise and `C` a
    /// box; the source set is a polyhedron in `v` and the least-norm source
    /// is a quadratic program.
    MonotoneLayer { weights: DenseMatrix, activation: Scalar1DOperator },
}

/// Pseudo-inverse of `P_C ∘ T` for `C ⊆ T(V)`: every `w` is first moved to
/// `c = P_C(w)`, then a least-norm `v` with `P_C(T(v)) = c` is returned.
#[derive(Debug, Clone)]
pub struct ProjectedPinv {
    op: VectorOperator,
    set: ConvexSet,
    search: SourceSearch,
    images: Vec<Vec<f64>>,
}

/// Outcome of one evaluation of [`ProjectedPinv`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SourceResult {
    Found(Vec<f64>),
    /// The search budget held no source of `P_C(w)`.
    NoFeasibleSource,
}

impl SourceResult {
    pub fn found(self) -> Option<Vec<f64>> {
        match self {
            SourceResult::Found(v) => Some(v),
            SourceResult::NoFeasibleSource => None,
        }
    }
}

/// Builds the inverse of `P_C ∘ T`. `certificates` pairs points of `C` with
/// sources under `T`; each pair is verified.
pub fn projection_after_operator_pinv(
    t: &VectorOperator,
    set: &ConvexSet,
    certificates: &[(Vec<f64>, Vec<f64>)],
    search: SourceSearch,
) -> Result<ProjectedPinv> {
    set.validate()?;
    if set.dim() != t.dim_out() {
        return Err(GenInvError::dims(t.dim_out(), set.dim()));
    }
    for (c, v) in certificates {
        if !set.contains(c, MEMBERSHIP_TOL) {
            return Err(GenInvError::invalid(format!("certificate point {c:?} is outside C")));
        }
        let tv = t.apply(v)?;
        if dist(&tv, c) > 1e-8 * (1.0 + norm(c)) {
            return Err(GenInvError::VerificationFailed(format!("{v:?} is not a source of {c:?}")));
        }
    }
    let images = match &search {
        SourceSearch::Candidates { points, .. } => points
            .iter()
            .map(|p| set.project(&t.apply(p)?))
            .collect::<Result<Vec<_>>>()?,
        SourceSearch::MonotoneLayer { weights, activation } => {
            if !matches!(set, ConvexSet::Box { .. }) {
                return Err(GenInvError::NotApplicable("layer search needs a box".into()));
            }
            if weights.rows() != t.dim_out() || weights.cols() != t.dim_in() {
                return Err(GenInvError::invalid("weights do not match the operator shape"));
            }
            activation.validate()?;
            Vec::new()
        }
    };
    Ok(ProjectedPinv {
        op: t.clone(),
        set: set.clone(),
        search,
        images,
    })
}

impl ProjectedPinv {
    pub fn operator(&self) -> VectorOperator {
        VectorOperator::projection(self.set.clone())
            .after(&self.op)
            .expect("dimensions checked at construction")
    }

    pub fn apply(&self, w: &[f64]) -> Result<SourceResult> {
        let c = self.set.project(w)?;
        match &self.search {
            SourceSearch::Candidates { points, tolerance } => {
                let mut best: Option<usize> = None;
                for (i, img) in self.images.iter().enumerate() {
                    if dist(img, &c) > *tolerance {
                        continue;
                    }
                    best = match best {
                        None => Some(i),
                        Some(j) => {
                            let (ni, nj) = (norm(&points[i]), norm(&points[j]));
                            let better = ni < nj - 1e-12
                                || ((ni - nj).abs() <= 1e-12
                                    && points[i].iter().zip(&points[j]).map(|(a, b)| a.total_cmp(b)).find(|o| o.is_ne())
                                        == Some(std::cmp::Ordering::Less));
                            Some(if better { i } else { j })
                        }
                    };
                }
                Ok(match best {
                    Some(i) => SourceResult::Found(points[i].clone()),
                    None => SourceResult::NoFeasibleSource,
                })
            }
            SourceSearch::MonotoneLayer { weights, activation } => {
                let ConvexSet::Box { lo, hi } = &self.set else {
                    unreachable!("checked at construction")
                };
                let qp = layer_qp(weights, activation, lo, hi, &c)?;
                Ok(match solve_least_norm_qp(&qp, DEFAULT_KKT_TOL)? {
                    QpOutcome::Solved(sol) => SourceResult::Found(sol.v),
                    QpOutcome::Infeasible => SourceResult::NoFeasibleSource,
                })
            }
        }
    }
}

fn inverse_activation(act: &Scalar1DOperator, y: f64) -> Result<f64> {
    match act.pinv(y) {
        PinvValue::Value(x) if act.eval(x) == y || (act.eval(x) - y).abs() <= 1e-12 * (1.0 + y.abs()) => Ok(x),
        _ => Err(GenInvError::NotApplicable(format!(
            "{} cannot reach {y}",
            act.name()
        ))),
    }
}

/// Least-norm `v` with `P_box(σ(Av)) = c`, written as linear constraints on
/// `Av` through `σ⁻¹`.
fn layer_qp(a: &DenseMatrix, act: &Scalar1DOperator, lo: &[f64], hi: &[f64], c: &[f64]) -> Result<LeastNormQp> {
    let mut qp = LeastNormQp::new(a.cols());
    for i in 0..a.rows() {
        let row = a.row(i).to_vec();
        let at_lo = c[i] <= lo[i];
        let at_hi = c[i] >= hi[i];
        match (at_lo, at_hi) {
            (true, true) => {}
            (false, false) => qp.add_equality(row, inverse_activation(act, c[i])?)?,
            (false, true) => {
                let neg: Vec<f64> = row.iter().map(|x| -x).collect();
                qp.add_inequality(neg, -inverse_activation(act, hi[i])?)?;
            }
            (true, false) => qp.add_inequality(row, inverse_activation(act, lo[i])?)?,
        }
    }
    Ok(qp)
}

/// Evidence that restricting the domain changes the inverse on every point
/// of `T(V) \ T(V₁)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestrictionReport {
    pub lost_image: Vec<usize>,
    pub full_inverses: usize,
    pub restricted_inverses: usize,
    /// Pairs `(G, G₁)` that agree somewhere on `lost_image`.
    pub agreeing_pairs: usize,
}

/// Compares every `{1,2}`-inverse of `T` with every `{1,2}`-inverse of
/// `T` restricted to `subset`, on the image points the restriction loses.
pub fn restriction_divergence(t: &FiniteOperator, subset: &[usize]) -> Result<RestrictionReport> {
    let mut ids = subset.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if ids.is_empty() || ids.iter().any(|&v| v >= t.domain_size()) {
        return Err(GenInvError::invalid("subset must be a nonempty set of domain ids"));
    }
    let t1 = FiniteOperator::new(ids.len(), t.codomain_size(), ids.iter().map(|&v| t.apply(v)).collect())?;
    let img1 = t1.image_mask();
    let lost: Vec<usize> = t.image().into_iter().filter(|&w| !img1[w]).collect();
    let full = enumerate_one_two_inverses(t)?;
    let restricted = enumerate_one_two_inverses(&t1)?;
    let mut agreeing = 0;
    for g in &full {
        for g1 in &restricted {
            if lost.iter().any(|&w| g.apply(w) == ids[g1.apply(w)]) {
                agreeing += 1;
            }
        }
    }
    Ok(RestrictionReport {
        lost_image: lost,
        full_inverses: full.len(),
        restricted_inverses: restricted.len(),
        agreeing_pairs: agreeing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_examples() {
        let relu = ConvexSet::nonnegative_orthant(3);
        assert_eq!(relu.project(&[-1.0, 2.0, 0.0]).unwrap(), vec![0.0, 2.0, 0.0]);
        let ball = ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        let p = ball.project(&[3.0 * 0.6, 3.0 * 0.8]).unwrap();
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
        assert_eq!(ball.project(&[0.1, 0.2]).unwrap(), vec![0.1, 0.2]);
        let h = ConvexSet::halfspace(vec![1.0, 1.0], 1.0).unwrap();
        assert_eq!(h.project(&[1.0, 1.0]).unwrap(), vec![0.5, 0.5]);
        assert!(ball.project(&[1.0]).is_err());
    }

    #[test]
    fn invalid_sets_rejected() {
        assert!(ConvexSet::new_box(vec![1.0], vec![0.0]).is_err());
        assert!(ConvexSet::ball(vec![0.0], -1.0).is_err());
        assert!(ConvexSet::halfspace(vec![0.0, 0.0], 1.0).is_err());
        let b = ConvexSet::cube(2, 0.0, 1.0).unwrap();
        assert!(ConvexSet::intersection(vec![b], vec![2.0, 2.0]).is_err());
    }

    #[test]
    fn dykstra_projects_onto_intersection() {
        let ball = ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        let half = ConvexSet::halfspace(vec![0.0, 1.0], 0.0).unwrap();
        let both = ConvexSet::intersection(vec![ball, half], vec![0.0, 0.0]).unwrap();
        let p = both.project(&[0.0, 2.0]).unwrap();
        assert!(p[0].abs() < 1e-9 && p[1].abs() < 1e-9);
        let p = both.project(&[2.0, -2.0]).unwrap();
        let s = 0.5f64.sqrt();
        assert!((p[0] - s).abs() < 1e-8 && (p[1] + s).abs() < 1e-8);
    }

    #[test]
    fn json_box_with_open_sides() {
        let s: ConvexSet = serde_json::from_str(r#"{"kind":"box","lo":[0,null],"hi":[null,1]}"#).unwrap();
        assert_eq!(s.project(&[-3.0, 5.0]).unwrap(), vec![0.0, 1.0]);
        assert_eq!(serde_json::to_string(&s).unwrap(), r#"{"kind":"box","lo":[0.0,null],"hi":[null,1.0]}"#);
    }

    #[test]
    fn cascade_requires_nesting_and_origin() {
        let outer = ConvexSet::cube(2, -2.0, 2.0).unwrap();
        let inner = ConvexSet::cube(2, -1.0, 1.0).unwrap();
        let probes: Vec<Vec<f64>> = vec![vec![5.0, -5.0], vec![0.5, 3.0], vec![-4.0, 0.0]];
        let p = cascade_pinv(&[outer.clone(), inner.clone()], &probes).unwrap();
        assert_eq!(p.target, inner);
        assert!(cascade_pinv(&[inner.clone(), outer.clone()], &probes).is_err());
        let shifted = ConvexSet::cube(2, 0.5, 1.0).unwrap();
        assert!(cascade_pinv(&[outer, shifted], &probes).is_err());
    }

    #[test]
    fn restriction_always_diverges() {
        let t = FiniteOperator::new(4, 3, vec![0, 1, 1, 2]).unwrap();
        let r = restriction_divergence(&t, &[0, 1]).unwrap();
        assert_eq!(r.lost_image, vec![2]);
        assert_eq!(r.agreeing_pairs, 0);
        assert!(r.full_inverses > 0 && r.restricted_inverses > 0);
    }

    #[test]
    fn identity_after_projection_is_projection() {
        let c = ConvexSet::cube(1, -1.0, 2.0).unwrap();
        let pts: Vec<Vec<f64>> = (-300..=300).map(|k| vec![k as f64 * 0.01]).collect();
        let inv = projection_after_operator_pinv(
            &VectorOperator::identity(1),
            &c,
            &[(vec![0.0], vec![0.0])],
            SourceSearch::Candidates { points: pts, tolerance: 1e-9 },
        )
        .unwrap();
        assert_eq!(inv.apply(&[5.0]).unwrap(), SourceResult::Found(vec![2.0]));
        assert_eq!(inv.apply(&[0.5]).unwrap(), SourceResult::Found(vec![0.5]));
    }
}
