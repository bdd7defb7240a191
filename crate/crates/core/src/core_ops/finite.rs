use serde::{Deserialize, Serialize};

use crate::error::{GenInvError, Result};

/// A total map `{0..domain} -> {0..codomain}` stored as a lookup table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "FiniteOperatorRepr", into = "FiniteOperatorRepr")]
pub struct FiniteOperator {
    domain: usize,
    codomain: usize,
    table: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct FiniteOperatorRepr {
    domain: usize,
    codomain: usize,
    table: Vec<usize>,
}

impl TryFrom<FiniteOperatorRepr> for FiniteOperator {
    type Error = GenInvError;

    fn try_from(r: FiniteOperatorRepr) -> Result<Self> {
        FiniteOperator::new(r.domain, r.codomain, r.table)
    }
}

impl From<FiniteOperator> for FiniteOperatorRepr {
    fn from(t: FiniteOperator) -> Self {
        FiniteOperatorRepr {
            domain: t.domain,
            codomain: t.codomain,
            table: t.table,
        }
    }
}

impl FiniteOperator {
    pub fn new(domain: usize, codomain: usize, table: Vec<usize>) -> Result<Self> {
        if table.len() != domain {
            return Err(GenInvError::dims(domain, table.len()));
        }
        if let Some((i, &t)) = table.iter().enumerate().find(|(_, &t)| t >= codomain) {
            return Err(GenInvError::invalid(format!(
                "table entry {i} maps to {t}, outside codomain of size {codomain}"
            )));
        }
        Ok(FiniteOperator {
            domain,
            codomain,
            table,
        })
    }

    /// Endofunction on `{0..n}` from its table.
    pub fn endo(table: Vec<usize>) -> Result<Self> {
        let n = table.len();
        Self::new(n, n, table)
    }

    pub fn identity(n: usize) -> Self {
        FiniteOperator {
            domain: n,
            codomain: n,
            table: (0..n).collect(),
        }
    }

    pub fn constant(domain: usize, codomain: usize, value: usize) -> Result<Self> {
        Self::new(domain, codomain, vec![value; domain])
    }

    pub fn from_fn(domain: usize, codomain: usize, f: impl Fn(usize) -> usize) -> Result<Self> {
        Self::new(domain, codomain, (0..domain).map(f).collect())
    }

    pub fn domain_size(&self) -> usize {
        self.domain
    }

    pub fn codomain_size(&self) -> usize {
        self.codomain
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.table[i]
    }

    pub fn is_endofunction(&self) -> bool {
        self.domain == self.codomain
    }

    /// Membership mask of the image.
    pub fn image_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.codomain];
        for &t in &self.table {
            mask[t] = true;
        }
        mask
    }

    /// Sorted image ids.
    pub fn image(&self) -> Vec<usize> {
        self.image_mask()
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    /// `preimages()[w]` lists the sources of `w` in increasing order.
    pub fn preimages(&self) -> Vec<Vec<usize>> {
        let mut pre = vec![Vec::new(); self.codomain];
        for (i, &t) in self.table.iter().enumerate() {
            pre[t].push(i);
        }
        pre
    }

    pub fn is_injective(&self) -> bool {
        self.image().len() == self.domain
    }

    pub fn is_surjective(&self) -> bool {
        self.image_mask().iter().all(|&b| b)
    }

    pub fn is_bijective(&self) -> bool {
        self.domain == self.codomain && self.is_injective()
    }

    /// Two-sided inverse of a bijection.
    pub fn inverse(&self) -> Option<FiniteOperator> {
        if !self.is_bijective() {
            return None;
        }
        let mut inv = vec![0; self.domain];
        for (i, &t) in self.table.iter().enumerate() {
            inv[t] = i;
        }
        Some(FiniteOperator {
            domain: self.codomain,
            codomain: self.domain,
            table: inv,
        })
    }

    /// `self ∘ inner`.
    pub fn after(&self, inner: &FiniteOperator) -> Result<FiniteOperator> {
        compose(self, inner)
    }

    /// Componentwise map on the Cartesian product, ids encoded mixed-radix
    /// with the first factor varying fastest.
    pub fn product(parts: &[FiniteOperator]) -> Result<FiniteOperator> {
        let dom: usize = parts.iter().map(|p| p.domain).product();
        let cod: usize = parts.iter().map(|p| p.codomain).product();
        let mut table = Vec::with_capacity(dom);
        for id in 0..dom {
            let mut rest = id;
            let mut out = 0;
            let mut radix = 1;
            for p in parts {
                let digit = rest % p.domain;
                rest /= p.domain;
                out += p.apply(digit) * radix;
                radix *= p.codomain;
            }
            table.push(out);
        }
        FiniteOperator::new(dom, cod, table)
    }
}

/// `outer ∘ inner`; rejects mismatched sizes.
pub fn compose(outer: &FiniteOperator, inner: &FiniteOperator) -> Result<FiniteOperator> {
    if inner.codomain != outer.domain {
        return Err(GenInvError::dims(outer.domain, inner.codomain));
    }
    Ok(FiniteOperator {
        domain: inner.domain,
        codomain: outer.codomain,
        table: inner.table.iter().map(|&i| outer.table[i]).collect(),
    })
}

/// `T^k` by repeated squaring; `T^0` is the identity.
pub fn power(t: &FiniteOperator, k: usize) -> Result<FiniteOperator> {
    if !t.is_endofunction() {
        return Err(GenInvError::invalid("power requires an endofunction"));
    }
    let mut result = FiniteOperator::identity(t.domain);
    let mut base = t.clone();
    let mut k = k;
    while k > 0 {
        if k & 1 == 1 {
            result = compose(&base, &result)?;
        }
        k >>= 1;
        if k > 0 {
            base = compose(&base, &base)?;
        }
    }
    Ok(result)
}

/// Every map `{0..domain} -> {0..codomain}`, in odometer order with table
/// position 0 varying fastest.
#[derive(Debug, Clone)]
pub struct FunctionSpace {
    domain: usize,
    codomain: usize,
    current: Option<Vec<usize>>,
}

impl FunctionSpace {
    pub fn new(domain: usize, codomain: usize) -> Self {
        let current = if codomain == 0 && domain > 0 {
            None
        } else {
            Some(vec![0; domain])
        };
        FunctionSpace {
            domain,
            codomain,
            current,
        }
    }

    /// `codomain^domain`, saturating.
    pub fn count(domain: usize, codomain: usize) -> u64 {
        (0..domain).fold(1u64, |acc, _| acc.saturating_mul(codomain as u64))
    }
}

impl Iterator for FunctionSpace {
    type Item = FiniteOperator;

    fn next(&mut self) -> Option<FiniteOperator> {
        let cur = self.current.as_mut()?;
        let out = FiniteOperator {
            domain: self.domain,
            codomain: self.codomain,
            table: cur.clone(),
        };
        let mut carry = true;
        for d in cur.iter_mut() {
            *d += 1;
            if *d < self.codomain {
                carry = false;
                break;
            }
            *d = 0;
        }
        if carry {
            self.current = None;
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(t: &[usize]) -> FiniteOperator {
        FiniteOperator::endo(t.to_vec()).unwrap()
    }

    #[test]
    fn rejects_out_of_range_entries() {
        assert!(FiniteOperator::new(2, 2, vec![0, 2]).is_err());
        assert!(FiniteOperator::new(3, 2, vec![0, 1]).is_err());
    }

    #[test]
    fn compose_with_identity() {
        let t = FiniteOperator::new(3, 2, vec![1, 1, 0]).unwrap();
        assert_eq!(compose(&FiniteOperator::identity(2), &t).unwrap(), t);
        assert_eq!(compose(&t, &FiniteOperator::identity(3)).unwrap(), t);
        assert!(compose(&t, &t).is_err());
    }

    #[test]
    fn swap_squared_is_identity() {
        let s = op(&[1, 0]);
        assert_eq!(compose(&s, &s).unwrap(), FiniteOperator::identity(2));
        assert_eq!(power(&s, 2).unwrap(), FiniteOperator::identity(2));
    }

    #[test]
    fn powers() {
        let e = op(&[0, 0, 2]);
        assert_eq!(power(&e, 0).unwrap(), FiniteOperator::identity(3));
        assert_eq!(power(&e, 5).unwrap(), e);
        let shift = op(&[0, 0, 1, 2]);
        assert_eq!(power(&shift, 3).unwrap().table(), &[0, 0, 0, 0]);
        assert!(power(&FiniteOperator::new(2, 3, vec![0, 1]).unwrap(), 2).is_err());
    }

    #[test]
    fn function_space_counts() {
        assert_eq!(FunctionSpace::new(4, 4).count(), 256);
        assert_eq!(FunctionSpace::new(0, 3).count(), 1);
        assert_eq!(FunctionSpace::new(2, 0).count(), 0);
        assert_eq!(FunctionSpace::count(8, 8), 16_777_216);
    }

    #[test]
    fn product_acts_componentwise() {
        let a = op(&[1, 0]);
        let b = FiniteOperator::new(3, 2, vec![0, 0, 1]).unwrap();
        let p = FiniteOperator::product(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(p.domain_size(), 6);
        assert_eq!(p.codomain_size(), 4);
        for x in 0..2 {
            for y in 0..3 {
                assert_eq!(p.apply(x + 2 * y), a.apply(x) + 2 * b.apply(y));
            }
        }
    }

    #[test]
    fn json_round_trip_validates() {
        let t = op(&[1, 1, 0]);
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, r#"{"domain":3,"codomain":3,"table":[1,1,0]}"#);
        assert_eq!(serde_json::from_str::<FiniteOperator>(&s).unwrap(), t);
        assert!(serde_json::from_str::<FiniteOperator>(r#"{"domain":2,"codomain":1,"table":[0,1]}"#).is_err());
    }
}
