//! Drazin and left-Drazin inverses of finite endofunctions, read off the
//! chain `V ⊇ T(V) ⊇ T²(V) ⊇ …`.

use serde::Serialize;

use crate::core_ops::{compose, power, FiniteOperator, FunctionSpace, VectorOperator};
use crate::error::{GenInvError, Result};
use crate::pseudo_inverse::BasOracle;

/// Largest `|V|^|V|` accepted by [`exhaustive_drazin_search`].
pub const DRAZIN_SEARCH_CAP: u64 = 3125;

fn require_endo(t: &FiniteOperator) -> Result<()> {
    if t.is_endofunction() {
        Ok(())
    } else {
        Err(GenInvError::invalid(format!(
            "expected an endofunction, got {} -> {}",
            t.domain_size(),
            t.codomain_size()
        )))
    }
}

/// `sets[j] = T^j(V)` for `j = 0..=stabilization`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ImageChain {
    pub sets: Vec<Vec<usize>>,
    /// First `k` with `T^k(V) = T^{k+1}(V)`.
    pub stabilization: usize,
    /// `T` restricted to `T^j(V)` is injective.
    pub injective: Vec<bool>,
    /// `T` restricted to `T^j(V)` is a bijection of `T^j(V)`.
    pub bijective: Vec<bool>,
}

impl ImageChain {
    /// Least `k` with `T` injective on `T^k(V)`.
    pub fn first_injective(&self) -> Option<usize> {
        self.injective.iter().position(|&b| b)
    }

    pub fn first_bijective(&self) -> Option<usize> {
        self.bijective.iter().position(|&b| b)
    }
}

pub fn image_chain(t: &FiniteOperator) -> Result<ImageChain> {
    require_endo(t)?;
    let n = t.domain_size();
    let mut sets = vec![(0..n).collect::<Vec<usize>>()];
    let mut injective = Vec::new();
    let mut bijective = Vec::new();
    loop {
        let cur = sets.last().unwrap();
        let mut mask = vec![false; n];
        let mut distinct = 0;
        for &x in cur {
            let y = t.apply(x);
            if !mask[y] {
                mask[y] = true;
                distinct += 1;
            }
        }
        let inj = distinct == cur.len();
        injective.push(inj);
        let next: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
        let stable = next == *cur;
        bijective.push(stable);
        if stable {
            break;
        }
        sets.push(next);
    }
    let stabilization = sets.len() - 1;
    Ok(ImageChain {
        sets,
        stabilization,
        injective,
        bijective,
    })
}

/// Exact residual flags of the three Drazin axioms for a candidate `G`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DrazinAxioms {
    /// `T^k G T = T^k`
    pub mp1k: bool,
    /// `G T G = G`
    pub mp2: bool,
    /// `T G = G T`
    pub d5: bool,
}

impl DrazinAxioms {
    pub fn all(&self) -> bool {
        self.mp1k && self.mp2 && self.d5
    }
}

pub fn check_drazin_axioms(t: &FiniteOperator, g: &FiniteOperator, k: usize) -> Result<DrazinAxioms> {
    require_endo(t)?;
    require_endo(g)?;
    if g.domain_size() != t.domain_size() {
        return Err(GenInvError::dims(t.domain_size(), g.domain_size()));
    }
    let tk = power(t, k)?;
    let gt = compose(g, t)?;
    let tg = compose(t, g)?;
    Ok(DrazinAxioms {
        mp1k: compose(&tk, &gt)? == tk,
        mp2: compose(g, &tg)? == *g,
        d5: gt == tg,
    })
}

/// Least `m ≥ 1` with `T^{m+1} G = T^m`, scanning up to `|V| + 1`.
pub fn drazin_index(t: &FiniteOperator, g: &FiniteOperator) -> Result<Option<usize>> {
    require_endo(t)?;
    let mut tm = t.clone();
    for m in 1..=t.domain_size() + 1 {
        let lhs = compose(&compose(t, &tm)?, g)?;
        if lhs == tm {
            return Ok(Some(m));
        }
        tm = compose(t, &tm)?;
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DrazinResult {
    pub exists: bool,
    pub inverse: Option<FiniteOperator>,
    pub index: Option<usize>,
    /// Step of the chain on which `T` is bijective.
    pub k: Option<usize>,
    pub chain: ImageChain,
}

/// `S^{-(k+1)} T^k` with `S` the restriction of `T` to the stabilized
/// image; the axioms and the index are checked before returning.
pub fn drazin_inverse(t: &FiniteOperator) -> Result<DrazinResult> {
    let chain = image_chain(t)?;
    let Some(k) = chain.first_bijective() else {
        return Ok(DrazinResult {
            exists: false,
            inverse: None,
            index: None,
            k: None,
            chain,
        });
    };
    let n = t.domain_size();
    let mut s_inv = vec![usize::MAX; n];
    for &x in &chain.sets[k] {
        s_inv[t.apply(x)] = x;
    }
    let tk = power(t, k)?;
    let table: Vec<usize> = (0..n)
        .map(|x| (0..=k).fold(tk.apply(x), |y, _| s_inv[y]))
        .collect();
    let g = FiniteOperator::endo(table)?;
    let axioms = check_drazin_axioms(t, &g, k.max(1))?;
    if !axioms.all() {
        return Err(GenInvError::VerificationFailed(format!("Drazin axioms fail: {axioms:?}")));
    }
    let index = drazin_index(t, &g)?;
    Ok(DrazinResult {
        exists: true,
        inverse: Some(g),
        index,
        k: Some(k),
        chain,
    })
}

/// `T^{(n−k)(k+1)−1}` (or `T^{n−1}` when `k = 0`) for `T` with
/// `T^n = T^k`.
pub fn drazin_loop_formula(t: &FiniteOperator, n: usize, k: usize) -> Result<FiniteOperator> {
    require_endo(t)?;
    if n <= k {
        return Err(GenInvError::invalid("loop formula needs n > k"));
    }
    if power(t, n)? != power(t, k)? {
        return Err(GenInvError::invalid(format!("T^{n} ≠ T^{k}")));
    }
    let e = if k == 0 { n - 1 } else { (n - k) * (k + 1) - 1 };
    power(t, e)
}

/// Values of a left-Drazin inverse off `T^{k+1}(V)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum LeftDrazinFill {
    #[default]
    Identity,
    Constant(usize),
    /// Consulted only on unconstrained ids.
    Table(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LeftDrazin {
    pub inverse: FiniteOperator,
    /// Parameter `m` with `G T^{m+1} = T^m`.
    pub m: usize,
    /// Chain step on which `T` is injective.
    pub k: usize,
}

/// `S⁻¹` on `T^{k+1}(V)` for the least `k` with `S = T|_{T^k(V)}`
/// injective, `fill` elsewhere; `None` if no such `k` exists.
pub fn left_drazin_inverse(t: &FiniteOperator, fill: &LeftDrazinFill) -> Result<Option<LeftDrazin>> {
    let chain = image_chain(t)?;
    let Some(k) = chain.first_injective() else {
        return Ok(None);
    };
    let n = t.domain_size();
    let mut table: Vec<usize> = match fill {
        LeftDrazinFill::Identity => (0..n).collect(),
        LeftDrazinFill::Constant(c) => {
            if *c >= n {
                return Err(GenInvError::invalid("fill constant outside V"));
            }
            vec![*c; n]
        }
        LeftDrazinFill::Table(tab) => {
            if tab.len() != n || tab.iter().any(|&x| x >= n) {
                return Err(GenInvError::invalid("fill table must be an endofunction table"));
            }
            tab.clone()
        }
    };
    for &x in &chain.sets[k] {
        table[t.apply(x)] = x;
    }
    let g = FiniteOperator::endo(table)?;
    let m = k.max(1);
    let tm = power(t, m)?;
    if compose(&g, &compose(t, &tm)?)? != tm {
        return Err(GenInvError::VerificationFailed("G T^{m+1} ≠ T^m".into()));
    }
    Ok(Some(LeftDrazin { inverse: g, m, k }))
}

/// Every `G` meeting MP2, D5 and MP1^k for some `1 ≤ k ≤ |V|`.
pub fn exhaustive_drazin_search(t: &FiniteOperator) -> Result<Vec<FiniteOperator>> {
    require_endo(t)?;
    let n = t.domain_size();
    let total = FunctionSpace::count(n, n);
    if total > DRAZIN_SEARCH_CAP {
        return Err(GenInvError::CapExceeded {
            what: "Drazin candidates".into(),
            cap: DRAZIN_SEARCH_CAP,
        });
    }
    let powers: Vec<FiniteOperator> = (1..=n.max(1)).map(|k| power(t, k)).collect::<Result<_>>()?;
    let mut out = Vec::new();
    for g in FunctionSpace::new(n, n) {
        let gt = compose(&g, t)?;
        let tg = compose(t, &g)?;
        if gt != tg || compose(&g, &tg)? != g {
            continue;
        }
        let mut ok = false;
        for tk in &powers {
            if compose(tk, &gt)? == *tk {
                ok = true;
                break;
            }
        }
        if ok {
            out.push(g);
        }
    }
    Ok(out)
}

/// `v ↦ v/2` on the grid `{i·2^{−j}}` of `[0, 1]`, rounding down.
pub fn halving_grid(exponent: u32) -> Result<FiniteOperator> {
    if exponent == 0 || exponent > 24 {
        return Err(GenInvError::invalid("grid exponent must lie in 1..=24"));
    }
    let n = (1usize << exponent) + 1;
    FiniteOperator::from_fn(n, n, |i| i / 2)
}

/// How the image chain of [`halving_grid`] behaves at one resolution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalvingCertificate {
    pub exponent: u32,
    pub grid_points: usize,
    /// `T^k(V) ⊋ T^{k+1}(V)` for every `k` below this, witnessed by the
    /// grid point `2^{−k}`.
    pub strictly_shrinking_steps: usize,
    pub stabilization: usize,
    /// Largest `|G(w) − min{2w, 1}|` over the probe points, where `G` is
    /// the oracle pseudo-inverse of the grid map.
    pub pinv_max_error: f64,
}

/// Image chain and pseudo-inverse of the halving map at one resolution;
/// `probes` are points of `[0, 1]`.
pub fn halving_certificate(exponent: u32, probes: &[f64]) -> Result<HalvingCertificate> {
    let t = halving_grid(exponent)?;
    let n = t.domain_size();
    let h = 1.0 / (n - 1) as f64;
    let chain = image_chain(&t)?;
    let mut shrinking = 0;
    for k in 0..chain.stabilization {
        let witness = (n - 1) >> k;
        let here = chain.sets[k].binary_search(&witness).is_ok();
        let next = chain.sets[k + 1].binary_search(&witness).is_ok();
        if here && !next {
            shrinking += 1;
        } else {
            break;
        }
    }
    let table = t.table().to_vec();
    let op = VectorOperator::new(1, 1, "halving grid", move |v| {
        let i = (v[0] / h).round() as usize;
        vec![table[i.min(n - 1)] as f64 * h]
    });
    let points: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 * h]).collect();
    let oracle = BasOracle::over_points(&op, points)?;
    let mut err = 0.0f64;
    for &w in probes {
        let ans = oracle.query(&[w], 0.0)?;
        err = err.max((ans.best[0] - (2.0 * w).min(1.0)).abs());
    }
    Ok(HalvingCertificate {
        exponent,
        grid_points: n,
        strictly_shrinking_steps: shrinking,
        stabilization: chain.stabilization,
        pinv_max_error: err,
    })
}
