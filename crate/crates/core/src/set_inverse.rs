//! `{1,2}`-inverses of maps between finite sets.
//!
//! A `{1,2}`-inverse `G: W -> V` of `T: V -> W` satisfies `TGT = T` and
//! `GTG = G`. Such a `G` is pinned down by two choices: one source for every
//! image element (`v0`) and a retraction of `W` onto the image (`p0`). Then
//! `G = (T restricted to v0)^{-1} ∘ p0`.

use serde::{Deserialize, Serialize};

use crate::core_ops::{compose, FiniteOperator};
use crate::error::{GenInvError, Result};

/// Largest number of candidates [`enumerate_one_two_inverses`] will produce.
pub const ENUMERATION_CAP: u64 = 1_000_000;

/// Degrees of freedom of a `{1,2}`-inverse.
///
/// `v0` lists domain ids containing exactly one source of each image element.
/// `p0[w]` is an image element, with `p0[w] = w` whenever `w` is in the image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OneTwoInverseSpec {
    pub v0: Vec<usize>,
    pub p0: Vec<usize>,
}

/// Exact evaluation of the first two Moore–Penrose axioms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MpFlags {
    pub mp1: bool,
    pub mp2: bool,
}

impl MpFlags {
    pub fn both(&self) -> bool {
        self.mp1 && self.mp2
    }
}

pub fn image(t: &FiniteOperator) -> Vec<usize> {
    t.image()
}

impl OneTwoInverseSpec {
    /// Smallest-id source for each image element; every `w` off the image
    /// retracts to the nearest image id, ties to the smaller id.
    pub fn default_for(t: &FiniteOperator) -> Self {
        let pre = t.preimages();
        let img = t.image();
        let v0 = img.iter().map(|&w| pre[w][0]).collect();
        let p0 = (0..t.codomain_size())
            .map(|w| {
                if pre[w].is_empty() {
                    *img.iter().min_by_key(|&&u| (u.abs_diff(w), u)).unwrap_or(&w)
                } else {
                    w
                }
            })
            .collect();
        OneTwoInverseSpec { v0, p0 }
    }

    /// Checks the spec against `t` and returns `source[w]` for image ids.
    fn sources(&self, t: &FiniteOperator) -> Result<Vec<Option<usize>>> {
        let mask = t.image_mask();
        if self.p0.len() != t.codomain_size() {
            return Err(GenInvError::dims(t.codomain_size(), self.p0.len()));
        }
        let mut source = vec![None; t.codomain_size()];
        for &v in &self.v0 {
            if v >= t.domain_size() {
                return Err(GenInvError::invalid(format!("v0 id {v} outside the domain")));
            }
            let w = t.apply(v);
            if let Some(prev) = source[w] {
                return Err(GenInvError::invalid(format!(
                    "v0 holds two sources {prev} and {v} of image element {w}"
                )));
            }
            source[w] = Some(v);
        }
        for (w, &in_image) in mask.iter().enumerate() {
            if in_image && source[w].is_none() {
                return Err(GenInvError::invalid(format!("v0 has no source for image element {w}")));
            }
            let r = self.p0[w];
            if r >= t.codomain_size() || !mask[r] {
                return Err(GenInvError::invalid(format!("p0 maps {w} to {r}, outside the image")));
            }
            if in_image && r != w {
                return Err(GenInvError::invalid(format!("p0 moves image element {w}")));
            }
        }
        Ok(source)
    }
}

/// `G = (T|_{v0})^{-1} ∘ p0`.
pub fn build_one_two_inverse(t: &FiniteOperator, spec: &OneTwoInverseSpec) -> Result<FiniteOperator> {
    let source = spec.sources(t)?;
    let table = spec
        .p0
        .iter()
        .map(|&r| source[r].expect("validated retraction lands on the image"))
        .collect();
    FiniteOperator::new(t.codomain_size(), t.domain_size(), table)
}

pub fn check_mp_axioms(t: &FiniteOperator, g: &FiniteOperator) -> Result<MpFlags> {
    if g.domain_size() != t.codomain_size() || g.codomain_size() != t.domain_size() {
        return Err(GenInvError::invalid("G must map the codomain of T back to its domain"));
    }
    let tg = compose(t, g)?;
    let gt = compose(g, t)?;
    Ok(MpFlags {
        mp1: compose(&tg, t)? == *t,
        mp2: compose(&gt, g)? == *g,
    })
}

/// Rebuilds `T` from one of its `{1,2}`-inverses by applying the same
/// construction to `G`, with sources `T(V)` and retraction `GT`.
pub fn double_inverse(t: &FiniteOperator, g: &FiniteOperator) -> Result<FiniteOperator> {
    let flags = check_mp_axioms(t, g)?;
    if !flags.both() {
        return Err(GenInvError::VerificationFailed(format!(
            "G is not a {{1,2}}-inverse of T (MP1: {}, MP2: {})",
            flags.mp1, flags.mp2
        )));
    }
    let spec = OneTwoInverseSpec {
        v0: t.image(),
        p0: compose(g, t)?.table().to_vec(),
    };
    build_one_two_inverse(g, &spec)
}

/// Number of `{1,2}`-inverses: the product of preimage sizes over the image,
/// times `|T(V)|` choices for each element off the image. Saturates.
pub fn count_one_two_inverses(t: &FiniteOperator) -> u64 {
    let pre = t.preimages();
    let img = pre.iter().filter(|p| !p.is_empty()).count() as u64;
    pre.iter().fold(1u64, |acc, p| {
        let factor = if p.is_empty() { img } else { p.len() as u64 };
        acc.saturating_mul(factor)
    })
}

/// All `{1,2}`-inverses, generated directly from their characterization:
/// a source for every image element, and for every other element the value
/// already assigned to some image element.
pub fn enumerate_one_two_inverses(t: &FiniteOperator) -> Result<Vec<FiniteOperator>> {
    let count = count_one_two_inverses(t);
    if count > ENUMERATION_CAP {
        return Err(GenInvError::CapExceeded {
            what: format!("{count} candidate {{1,2}}-inverses"),
            cap: ENUMERATION_CAP,
        });
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    let pre = t.preimages();
    let img = t.image();
    let off: Vec<usize> = (0..t.codomain_size()).filter(|&w| pre[w].is_empty()).collect();
    let mut out = Vec::with_capacity(count as usize);
    let mut src_idx = vec![0usize; img.len()];
    loop {
        let mut table = vec![0usize; t.codomain_size()];
        for (k, &w) in img.iter().enumerate() {
            table[w] = pre[w][src_idx[k]];
        }
        let mut off_idx = vec![0usize; off.len()];
        loop {
            for (k, &w) in off.iter().enumerate() {
                table[w] = table[img[off_idx[k]]];
            }
            out.push(FiniteOperator::new(t.codomain_size(), t.domain_size(), table.clone())?);
            if !advance(&mut off_idx, |_| img.len()) {
                break;
            }
        }
        if !advance(&mut src_idx, |k| pre[img[k]].len()) {
            break;
        }
    }
    Ok(out)
}

fn advance(idx: &mut [usize], radix: impl Fn(usize) -> usize) -> bool {
    for k in 0..idx.len() {
        idx[k] += 1;
        if idx[k] < radix(k) {
            return true;
        }
        idx[k] = 0;
    }
    false
}
