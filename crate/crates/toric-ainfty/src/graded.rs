//! Koszul sign engine and the exterior algebra `Λ(e_1,…,e_n)` with
//! Novikov coefficients.
//!
//! Basis monomials `e_I` are bitmasks: bit `i` set means `e_{i+1}` occurs.
//! Degrees are always the unshifted wedge degree; suspension is applied by
//! the A∞ engine.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::novikov::{Monoid, MonoidIndex, NovikovElement, Scalar};

pub type WedgeIndex = u32;

pub fn wedge_degree(i: WedgeIndex) -> usize {
    i.count_ones() as usize
}

/// Ascending list of generator positions in `i`.
pub fn wedge_members(i: WedgeIndex) -> Vec<usize> {
    (0..32).filter(|b| i >> b & 1 == 1).collect()
}

pub fn wedge_from_members(members: &[usize]) -> WedgeIndex {
    members.iter().fold(0, |m, b| m | 1 << b)
}

fn parity(x: i64) -> i32 {
    if x.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// Sign of reordering graded symbols. Output slot `j` receives the symbol that
/// sat at position `perm[j]`; each crossing of symbols with degrees `p`, `q`
/// contributes `(−1)^{pq}`.
pub fn koszul_sign(perm: &[usize], degrees: &[i64]) -> Result<i32> {
    if perm.len() != degrees.len() {
        return Err(Error::LengthMismatch(perm.len(), degrees.len()));
    }
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || seen[p] {
            return Err(Error::Input("not a permutation".into()));
        }
        seen[p] = true;
    }
    let mut e = 0i64;
    for j in 0..perm.len() {
        for k in j + 1..perm.len() {
            if perm[j] > perm[k] {
                e += degrees[perm[j]] * degrees[perm[k]];
            }
        }
    }
    Ok(parity(e))
}

/// `(−1)^{ε_k}` with `ε_k = Σ_i (k−i)|a_i|`.
pub fn epsilon_sign(degrees: &[i64]) -> i32 {
    let k = degrees.len() as i64;
    parity(degrees.iter().enumerate().map(|(i, d)| (k - 1 - i as i64) * d).sum())
}

/// `(−1)^{η_k}` with `η_k = Σ_i |a_i|(|b_{i+1}|+⋯+|b_k|)`.
///
/// This is the sign of un-shuffling `(b_1⊗a_1)⊗⋯⊗(b_k⊗a_k)` into
/// `(b_1⋯b_k)⊗(a_1⋯a_k)`, the ordering used for `B ⊗ A`.
pub fn eta_sign(a_degrees: &[i64], b_degrees: &[i64]) -> Result<i32> {
    if a_degrees.len() != b_degrees.len() {
        return Err(Error::LengthMismatch(a_degrees.len(), b_degrees.len()));
    }
    let mut e = 0i64;
    let mut tail: i64 = b_degrees.iter().sum();
    for (a, b) in a_degrees.iter().zip(b_degrees) {
        tail -= b;
        e += a * tail;
    }
    Ok(parity(e))
}

/// `e_a ∧ e_b = sign·e_{a∪b}`, or `None` when they overlap.
pub fn wedge_masks(a: WedgeIndex, b: WedgeIndex) -> Option<(WedgeIndex, i32)> {
    if a & b != 0 {
        return None;
    }
    let mut inv = 0u32;
    for j in wedge_members(b) {
        inv += (a >> (j + 1)).count_ones();
    }
    Some((a | b, if inv % 2 == 0 { 1 } else { -1 }))
}

/// `ι_v(e_I)` as a list of (mask, integer coefficient).
pub fn contract_mask(v: &[i64], a: WedgeIndex) -> Vec<(WedgeIndex, i64)> {
    let mut out = Vec::new();
    for (p, i) in wedge_members(a).into_iter().enumerate() {
        let c = v.get(i).copied().unwrap_or(0);
        if c != 0 {
            out.push((a & !(1 << i), if p % 2 == 0 { c } else { -c }));
        }
    }
    out
}

/// Element of `Λ(e_1..e_n) ⊗ Λ^π`.
#[derive(Clone, Debug)]
pub struct ExtElement<C> {
    dim: usize,
    monoid: Arc<Monoid>,
    cutoff: BigRational,
    comps: BTreeMap<WedgeIndex, NovikovElement<C>>,
}

impl<C: Scalar> PartialEq for ExtElement<C> {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.comps == other.comps
    }
}

impl<C: Scalar> ExtElement<C> {
    pub fn zero(monoid: Arc<Monoid>, cutoff: BigRational) -> Self {
        ExtElement { dim: monoid.dim(), monoid, cutoff, comps: BTreeMap::new() }
    }

    pub fn basis(monoid: Arc<Monoid>, cutoff: BigRational, mask: WedgeIndex) -> Self {
        let one = NovikovElement::constant(monoid.clone(), cutoff.clone(), C::one());
        let mut out = Self::zero(monoid, cutoff);
        out.add_comp(mask, &one);
        out
    }

    /// The unit `𝟏`.
    pub fn unit(monoid: Arc<Monoid>, cutoff: BigRational) -> Self {
        Self::basis(monoid, cutoff, 0)
    }

    /// `e_i` with `i` zero-based.
    pub fn generator(monoid: Arc<Monoid>, cutoff: BigRational, i: usize) -> Self {
        Self::basis(monoid, cutoff, 1 << i)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn monoid(&self) -> &Arc<Monoid> {
        &self.monoid
    }

    pub fn cutoff(&self) -> &BigRational {
        &self.cutoff
    }

    pub fn comps(&self) -> &BTreeMap<WedgeIndex, NovikovElement<C>> {
        &self.comps
    }

    pub fn comp(&self, mask: WedgeIndex) -> NovikovElement<C> {
        self.comps
            .get(&mask)
            .cloned()
            .unwrap_or_else(|| NovikovElement::zero(self.monoid.clone(), self.cutoff.clone()))
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn zero_like(&self) -> Self {
        Self::zero(self.monoid.clone(), self.cutoff.clone())
    }

    pub fn add_comp(&mut self, mask: WedgeIndex, x: &NovikovElement<C>) {
        if x.is_zero() {
            return;
        }
        let cur = self.comp(mask);
        let s = cur.add(x).expect("components share monoid and cutoff");
        if s.is_zero() {
            self.comps.remove(&mask);
        } else {
            self.comps.insert(mask, s);
        }
    }

    /// Accumulate `c·T^idx·e_mask`.
    pub fn add_term(&mut self, mask: WedgeIndex, idx: MonoidIndex, c: C) {
        let x = NovikovElement::monomial(self.monoid.clone(), self.cutoff.clone(), idx, c);
        self.add_comp(mask, &x);
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        if self.cutoff != other.cutoff {
            return Err(Error::CutoffMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = self.clone();
        for (m, x) in &other.comps {
            out.add_comp(*m, x);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&-C::one())
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut out = self.zero_like();
        for (m, x) in &self.comps {
            out.add_comp(*m, &x.scale(c));
        }
        out
    }

    pub fn scale_nov(&self, a: &NovikovElement<C>) -> Result<Self> {
        let mut out = self.zero_like();
        for (m, x) in &self.comps {
            out.add_comp(*m, &x.mul(a)?);
        }
        Ok(out)
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = self.zero_like();
        for (ma, xa) in &self.comps {
            for (mb, xb) in &other.comps {
                if let Some((m, s)) = wedge_masks(*ma, *mb) {
                    out.add_comp(m, &xa.mul(xb)?.scale(&C::from_i64(s as i64)));
                }
            }
        }
        Ok(out)
    }

    /// Interior product `ι_v`, the odd derivation with `ι_v(e_i) = v_i·𝟏`.
    pub fn contract(&self, v: &[i64]) -> Result<Self> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: v.len() });
        }
        let mut out = self.zero_like();
        for (m, x) in &self.comps {
            for (mm, c) in contract_mask(v, *m) {
                out.add_comp(mm, &x.scale(&C::from_i64(c)));
            }
        }
        Ok(out)
    }

    /// Split into wedge-parity pieces `(even, odd)`.
    pub fn parity_parts(&self) -> (Self, Self) {
        let mut even = self.zero_like();
        let mut odd = self.zero_like();
        for (m, x) in &self.comps {
            if wedge_degree(*m) % 2 == 0 {
                even.add_comp(*m, x);
            } else {
                odd.add_comp(*m, x);
            }
        }
        (even, odd)
    }

    /// ℤ/2 degree if homogeneous (Novikov symbols are even).
    pub fn parity(&self) -> Option<usize> {
        let mut it = self.comps.keys().map(|m| wedge_degree(*m) % 2);
        let first = it.next()?;
        it.all(|p| p == first).then_some(first)
    }

    pub fn map_coeffs<D: Scalar>(&self, f: impl Fn(&C) -> D + Copy) -> ExtElement<D> {
        let mut out = ExtElement::zero(self.monoid.clone(), self.cutoff.clone());
        for (m, x) in &self.comps {
            out.add_comp(*m, &x.map_coeffs(f));
        }
        out
    }

    pub fn transport(&self, monoid: Arc<Monoid>) -> Result<Self> {
        let mut out = ExtElement::zero(monoid.clone(), self.cutoff.clone());
        for (m, x) in &self.comps {
            out.add_comp(*m, &x.transport(monoid.clone())?);
        }
        Ok(out)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let comps: Vec<serde_json::Value> = self
            .comps
            .iter()
            .map(|(m, x)| {
                let idx: Vec<usize> = wedge_members(*m).into_iter().map(|i| i + 1).collect();
                serde_json::json!({ "wedge": idx, "coeff": x.to_json() })
            })
            .collect();
        serde_json::Value::Array(comps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::novikov::{rat, Exact};
    use num_traits::One;

    fn mon(n: usize) -> Arc<Monoid> {
        Arc::new(Monoid::new(vec![], n).unwrap())
    }

    fn e(m: &Arc<Monoid>, mask: u32) -> ExtElement<Exact> {
        ExtElement::basis(m.clone(), rat(3, 1), mask)
    }

    #[test]
    fn koszul_examples() {
        assert_eq!(koszul_sign(&[0, 1, 2], &[1, 1, 1]).unwrap(), 1);
        assert_eq!(koszul_sign(&[1, 0], &[1, 1]).unwrap(), -1);
        // (a,b,c) -> (b,c,a): a crosses b and c.
        assert_eq!(koszul_sign(&[1, 2, 0], &[1, 1, 0]).unwrap(), -1);
        assert!(koszul_sign(&[0], &[1, 1]).is_err());
    }

    #[test]
    fn epsilon_examples() {
        assert_eq!(epsilon_sign(&[1]), 1);
        assert_eq!(epsilon_sign(&[1, 1]), -1);
        assert_eq!(epsilon_sign(&[0, 0, 0]), 1);
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta_sign(&[1], &[1]).unwrap(), 1);
        assert_eq!(eta_sign(&[1, 1], &[1, 1]).unwrap(), -1);
        assert_eq!(eta_sign(&[1, 1, 1], &[0, 2, 0]).unwrap(), 1);
        assert!(eta_sign(&[1], &[]).is_err());
    }

    #[test]
    fn wedge_examples() {
        let m = mon(2);
        assert_eq!(e(&m, 1).wedge(&e(&m, 2)).unwrap(), e(&m, 3));
        assert_eq!(e(&m, 2).wedge(&e(&m, 1)).unwrap(), e(&m, 3).neg());
        assert_eq!(e(&m, 0).wedge(&e(&m, 2)).unwrap(), e(&m, 2));
        let s = e(&m, 1).add(&e(&m, 2)).unwrap();
        assert!(s.wedge(&s).unwrap().is_zero());
    }

    #[test]
    fn contraction_examples() {
        let m = mon(2);
        assert_eq!(e(&m, 3).contract(&[1, 0]).unwrap(), e(&m, 2));
        assert!(e(&m, 0).contract(&[1, 1]).unwrap().is_zero());
        assert_eq!(e(&m, 3).contract(&[1, 1]).unwrap(), e(&m, 2).sub(&e(&m, 1)).unwrap());
        assert!(e(&m, 3).contract(&[1]).is_err());
    }

    #[test]
    fn parity_of_mixed() {
        let m = mon(2);
        let x = e(&m, 1).add(&e(&m, 3)).unwrap();
        assert_eq!(x.parity(), None);
        let (ev, od) = x.parity_parts();
        assert_eq!(ev, e(&m, 3));
        assert_eq!(od, e(&m, 1));
        assert_eq!(e(&m, 0).scale(&Exact::one()).parity(), Some(0));
    }
}
