//! Curved A∞ structures on `Λ(e_1..e_n) ⊗ Λ^π`.
//!
//! Operators are stored natively in the shifted convention `m_k` and are
//! converted on output when the structure is flagged as epsilon convention,
//! via `m_k = (−1)^{ε_k} m^ε_k`. The zero-energy layer is `m_2(a,b) =
//! (−1)^{|a|} a∧b`, i.e. `m^ε_2 = ∧`.
//!
//! Energy-positive operators are combinations of contraction patterns: for a
//! class `γ`, arity `k` and input degrees `d`, a pattern assigns to slot `i`
//! a set `S_i` of class positions and contributes
//! `w · ι_{S_1}a_1 ∧ ⋯ ∧ ι_{S_k}a_k · T^γ`, where `ι_S` contracts by the
//! boundary vectors of `S` in ascending order.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::graded::{contract_mask, epsilon_sign, eta_sign, wedge_degree, wedge_masks, wedge_members, ExtElement, WedgeIndex};
use crate::novikov::{Monoid, MonoidIndex, NovikovElement, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convention {
    /// Degree-one maps on the suspension; element signs by the Koszul rule on shifted degrees.
    Shifted,
    /// `m^ε_k` on unshifted elements.
    Epsilon,
}

/// One term of an ansatz operator: a contraction set per slot and a weight.
#[derive(Clone, Debug, PartialEq)]
pub struct Pattern {
    pub subsets: Vec<u32>,
    pub weight: BigRational,
}

/// Basis evaluation result: `(class, output wedge) → coefficient`.
pub type BasisValue = BTreeMap<(MonoidIndex, WedgeIndex), BigRational>;

type AnsatzKey = (usize, Vec<u8>);

#[derive(Clone, Debug)]
pub struct AInftyStructure {
    monoid: Arc<Monoid>,
    cutoff: BigRational,
    arity_cutoff: usize,
    convention: Convention,
    /// Negative control: epsilon output without the `(−1)^{ε_k}` factor.
    sign_fault: bool,
    strict_unit: bool,
    wedge_layer: bool,
    ansatz: BTreeMap<AnsatzKey, Vec<(MonoidIndex, Vec<Pattern>)>>,
    explicit: BTreeMap<Vec<WedgeIndex>, BasisValue>,
}

/// Contraction-pattern value on basis inputs, with integer coefficients.
pub fn pattern_value(boundaries: &[Vec<i64>], masks: &[WedgeIndex], subsets: &[u32]) -> Vec<(WedgeIndex, i64)> {
    let mut acc: Vec<(WedgeIndex, i64)> = vec![(0, 1)];
    for (mask, sub) in masks.iter().zip(subsets) {
        let mut x: Vec<(WedgeIndex, i64)> = vec![(*mask, 1)];
        for l in wedge_members(*sub) {
            let mut next = Vec::new();
            for (m, c) in &x {
                for (mm, cc) in contract_mask(&boundaries[l], *m) {
                    next.push((mm, c * cc));
                }
            }
            x = merge(next);
            if x.is_empty() {
                return Vec::new();
            }
        }
        let mut next = Vec::new();
        for (ma, ca) in &acc {
            for (mb, cb) in &x {
                if let Some((m, s)) = wedge_masks(*ma, *mb) {
                    next.push((m, ca * cb * s as i64));
                }
            }
        }
        acc = merge(next);
        if acc.is_empty() {
            return acc;
        }
    }
    acc
}

fn merge(v: Vec<(WedgeIndex, i64)>) -> Vec<(WedgeIndex, i64)> {
    let mut m: BTreeMap<WedgeIndex, i64> = BTreeMap::new();
    for (k, c) in v {
        *m.entry(k).or_insert(0) += c;
    }
    m.into_iter().filter(|(_, c)| *c != 0).collect()
}

fn add_value(out: &mut BasisValue, key: (MonoidIndex, WedgeIndex), c: BigRational) {
    if c.is_zero() {
        return;
    }
    let e = out.entry(key.clone()).or_insert_with(BigRational::zero);
    *e += c;
    if e.is_zero() {
        out.remove(&key);
    }
}

pub(crate) fn factorial(k: usize) -> BigInt {
    (1..=k).fold(BigInt::one(), |a, b| a * BigInt::from(b))
}

impl AInftyStructure {
    /// Structure with only the zero-energy wedge layer.
    pub fn exterior(monoid: Arc<Monoid>, cutoff: BigRational, arity_cutoff: usize) -> Self {
        AInftyStructure {
            monoid,
            cutoff,
            arity_cutoff,
            convention: Convention::Shifted,
            sign_fault: false,
            strict_unit: true,
            wedge_layer: true,
            ansatz: BTreeMap::new(),
            explicit: BTreeMap::new(),
        }
    }

    /// All operators zero, including the wedge layer.
    pub fn zero(monoid: Arc<Monoid>, cutoff: BigRational, arity_cutoff: usize) -> Self {
        let mut a = Self::exterior(monoid, cutoff, arity_cutoff);
        a.wedge_layer = false;
        a.strict_unit = false;
        a
    }

    pub fn monoid(&self) -> &Arc<Monoid> {
        &self.monoid
    }

    pub fn dim(&self) -> usize {
        self.monoid.dim()
    }

    pub fn cutoff(&self) -> &BigRational {
        &self.cutoff
    }

    pub fn arity_cutoff(&self) -> usize {
        self.arity_cutoff
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn has_strict_unit(&self) -> bool {
        self.strict_unit
    }

    pub fn sign_fault(&self) -> bool {
        self.sign_fault
    }

    pub fn with_arity_cutoff(&self, k: usize) -> Self {
        let mut a = self.clone();
        a.arity_cutoff = k;
        a
    }

    /// Same operators over a monoid with the same classes but other areas
    /// (re-basing). Entries whose class reaches the cutoff become inert.
    pub fn with_monoid(&self, monoid: Arc<Monoid>) -> Result<Self> {
        if monoid.len() != self.monoid.len() || monoid.dim() != self.monoid.dim() {
            return Err(Error::MonoidMismatch);
        }
        let mut a = self.clone();
        a.monoid = monoid;
        Ok(a)
    }

    pub fn convert_convention(&self) -> Self {
        let mut a = self.clone();
        a.convention = match self.convention {
            Convention::Shifted => Convention::Epsilon,
            Convention::Epsilon => Convention::Shifted,
        };
        a
    }

    pub fn in_convention(&self, c: Convention) -> Self {
        if self.convention == c {
            self.clone()
        } else {
            self.convert_convention()
        }
    }

    /// Negative control: an epsilon-convention structure that forgets `(−1)^{ε_k}`.
    pub fn with_sign_fault(&self) -> Self {
        let mut a = self.in_convention(Convention::Epsilon);
        a.sign_fault = true;
        a
    }

    /// Register pattern terms for class `gamma`, arity `k`, input degrees `degs`.
    pub fn set_patterns(&mut self, gamma: MonoidIndex, degs: Vec<u8>, patterns: Vec<Pattern>) {
        let k = degs.len();
        let list = self.ansatz.entry((k, degs)).or_default();
        list.retain(|(g, _)| *g != gamma);
        let patterns: Vec<Pattern> = patterns.into_iter().filter(|p| !p.weight.is_zero()).collect();
        if !patterns.is_empty() {
            list.push((gamma, patterns));
        }
    }

    pub fn patterns(&self, gamma: &MonoidIndex, degs: &[u8]) -> Option<&[Pattern]> {
        self.ansatz
            .get(&(degs.len(), degs.to_vec()))?
            .iter()
            .find(|(g, _)| g == gamma)
            .map(|(_, p)| p.as_slice())
    }

    pub fn is_defined(&self, gamma: &MonoidIndex, degs: &[u8]) -> bool {
        self.patterns(gamma, degs).is_some()
    }

    /// Iterate over every `(k, degs, γ, patterns)` entry.
    pub fn pattern_entries(&self) -> impl Iterator<Item = (&[u8], &MonoidIndex, &[Pattern])> {
        self.ansatz
            .iter()
            .flat_map(|((_, d), v)| v.iter().map(move |(g, p)| (d.as_slice(), g, p.as_slice())))
    }

    /// Add an explicit term `c·T^γ·e_out` to `m(e_{masks})` in the native
    /// shifted convention. Used for controlled perturbations.
    pub fn inject(&mut self, masks: Vec<WedgeIndex>, gamma: MonoidIndex, out: WedgeIndex, c: BigRational) {
        if masks.iter().any(|m| *m == 0) {
            self.strict_unit = self.strict_unit && c.is_zero();
        }
        let v = self.explicit.entry(masks).or_default();
        add_value(v, (gamma, out), c);
    }

    pub fn has_explicit_terms(&self) -> bool {
        !self.explicit.is_empty()
    }

    pub fn explicit_value(&self, masks: &[WedgeIndex]) -> Option<&BasisValue> {
        self.explicit.get(masks)
    }

    /// Shifted-convention value on basis inputs.
    pub fn eval_native(&self, masks: &[WedgeIndex]) -> BasisValue {
        let mut out = BasisValue::new();
        let k = masks.len();
        if self.wedge_layer && k == 2 {
            if let Some((m, s)) = wedge_masks(masks[0], masks[1]) {
                let sign = if wedge_degree(masks[0]) % 2 == 0 { s } else { -s };
                add_value(&mut out, (self.monoid.zero(), m), BigRational::from_integer(BigInt::from(sign)));
            }
        }
        let degs: Vec<u8> = masks.iter().map(|m| wedge_degree(*m) as u8).collect();
        if let Some(list) = self.ansatz.get(&(k, degs)) {
            let mut bcache: HashMap<MonoidIndex, Vec<Vec<i64>>> = HashMap::new();
            for (gamma, pats) in list {
                if self.monoid.energy(gamma) >= self.cutoff {
                    continue;
                }
                let bds = bcache
                    .entry(gamma.clone())
                    .or_insert_with(|| self.monoid.classes().iter().map(|c| c.boundary.clone()).collect());
                for p in pats {
                    for (m, c) in pattern_value(bds, masks, &p.subsets) {
                        add_value(&mut out, (gamma.clone(), m), &p.weight * BigRational::from_integer(BigInt::from(c)));
                    }
                }
            }
        }
        if let Some(v) = self.explicit.get(masks) {
            for (key, c) in v {
                if self.monoid.energy(&key.0) < self.cutoff {
                    add_value(&mut out, key.clone(), c.clone());
                }
            }
        }
        out
    }

    /// Value on basis inputs in this structure's convention.
    pub fn eval_basis(&self, masks: &[WedgeIndex]) -> BasisValue {
        let mut v = self.eval_native(masks);
        if self.convention == Convention::Epsilon && !self.sign_fault {
            let degs: Vec<i64> = masks.iter().map(|m| wedge_degree(*m) as i64).collect();
            if epsilon_sign(&degs) < 0 {
                for c in v.values_mut() {
                    *c = -c.clone();
                }
            }
        }
        v
    }

    pub fn unit<C: Scalar>(&self) -> ExtElement<C> {
        ExtElement::unit(self.monoid.clone(), self.cutoff.clone())
    }

    pub fn basis<C: Scalar>(&self, mask: WedgeIndex) -> ExtElement<C> {
        ExtElement::basis(self.monoid.clone(), self.cutoff.clone(), mask)
    }

    pub fn zero_elem<C: Scalar>(&self) -> ExtElement<C> {
        ExtElement::zero(self.monoid.clone(), self.cutoff.clone())
    }

    /// `m_k(inputs)` summed over all classes below the energy cutoff.
    pub fn apply<C: Scalar>(&self, inputs: &[ExtElement<C>]) -> Result<ExtElement<C>> {
        if inputs.len() > self.arity_cutoff {
            return Err(Error::ArityExceeded { arity: inputs.len(), cutoff: self.arity_cutoff });
        }
        for x in inputs {
            if x.dim() != self.dim() {
                return Err(Error::DimensionMismatch { expected: self.dim(), found: x.dim() });
            }
            if x.cutoff() != &self.cutoff {
                return Err(Error::CutoffMismatch);
            }
        }
        let mut out = self.zero_elem::<C>();
        let comps: Vec<Vec<(&WedgeIndex, &NovikovElement<C>)>> =
            inputs.iter().map(|x| x.comps().iter().collect()).collect();
        if comps.iter().any(|c| c.is_empty()) {
            return Ok(out);
        }
        let one = NovikovElement::constant(self.monoid.clone(), self.cutoff.clone(), C::one());
        let mut idx = vec![0usize; inputs.len()];
        loop {
            let masks: Vec<WedgeIndex> = idx.iter().enumerate().map(|(i, j)| *comps[i][*j].0).collect();
            let val = self.eval_basis(&masks);
            if !val.is_empty() {
                let mut coef = one.clone();
                for (i, j) in idx.iter().enumerate() {
                    coef = coef.mul(comps[i][*j].1)?;
                }
                if !coef.is_zero() {
                    for ((g, m), c) in &val {
                        out.add_comp(*m, &coef.mul_monomial(g, &C::from_rational(c)));
                    }
                }
            }
            let mut p = inputs.len();
            loop {
                if p == 0 {
                    return Ok(out);
                }
                p -= 1;
                idx[p] += 1;
                if idx[p] < comps[p].len() {
                    break;
                }
                idx[p] = 0;
            }
        }
    }

    /// Signed double sum of the A∞ relation at `inputs`, in this structure's
    /// convention. Inputs of mixed parity are split into homogeneous parts.
    pub fn relation_residual<C: Scalar>(&self, inputs: &[ExtElement<C>]) -> Result<ExtElement<C>> {
        let n = inputs.len();
        if n + 1 > self.arity_cutoff {
            return Err(Error::CutoffInsufficient(format!(
                "relation of arity {n} needs operators of arity {} but the cutoff is {}",
                n + 1,
                self.arity_cutoff
            )));
        }
        let parts: Vec<Vec<(usize, ExtElement<C>)>> = inputs
            .iter()
            .map(|x| {
                let (ev, od) = x.parity_parts();
                let mut v = Vec::new();
                if !ev.is_zero() {
                    v.push((0, ev));
                }
                if !od.is_zero() {
                    v.push((1, od));
                }
                v
            })
            .collect();
        let mut total = self.zero_elem::<C>();
        if parts.iter().any(|p| p.is_empty()) {
            return Ok(total);
        }
        let mut idx = vec![0usize; n];
        loop {
            let degs: Vec<usize> = idx.iter().enumerate().map(|(i, j)| parts[i][*j].0).collect();
            let xs: Vec<ExtElement<C>> = idx.iter().enumerate().map(|(i, j)| parts[i][*j].1.clone()).collect();
            total = total.add(&self.relation_homogeneous(&xs, &degs)?)?;
            let mut p = n;
            loop {
                if p == 0 {
                    return Ok(total);
                }
                p -= 1;
                idx[p] += 1;
                if idx[p] < parts[p].len() {
                    break;
                }
                idx[p] = 0;
            }
        }
    }

    fn relation_homogeneous<C: Scalar>(&self, xs: &[ExtElement<C>], degs: &[usize]) -> Result<ExtElement<C>> {
        let n = xs.len();
        let mut total = self.zero_elem::<C>();
        for r in 0..=n {
            for s in 0..=(n - r) {
                let t = n - r - s;
                let inner = self.apply(&xs[r..r + s])?;
                if inner.is_zero() {
                    continue;
                }
                let mut args: Vec<ExtElement<C>> = xs[..r].to_vec();
                args.push(inner);
                args.extend_from_slice(&xs[r + s..]);
                let outer = self.apply(&args)?;
                if outer.is_zero() {
                    continue;
                }
                let prefix: usize = degs[..r].iter().sum();
                let exponent = match self.convention {
                    Convention::Shifted => prefix + r, // Σ(|a_i| − 1) ≡ Σ|a_i| + r
                    Convention::Epsilon => r + s * t + s * prefix,
                };
                let signed = if exponent % 2 == 0 { outer } else { outer.neg() };
                total = total.add(&signed)?;
            }
        }
        Ok(total)
    }

    /// Relation residual on every basis tuple of arity `≤ max_arity`; returns
    /// the offending tuples.
    pub fn relation_failures(&self, max_arity: usize) -> Result<Vec<Vec<WedgeIndex>>> {
        let dim = 1u32 << self.dim();
        let mut bad = Vec::new();
        for n in 0..=max_arity {
            for tuple in basis_tuples(dim, n) {
                let xs: Vec<ExtElement<crate::novikov::Exact>> = tuple.iter().map(|m| self.basis(*m)).collect();
                if !self.relation_residual(&xs)?.is_zero() {
                    bad.push(tuple);
                }
            }
        }
        Ok(bad)
    }

    /// Verify the strict-unit clauses on every basis tuple containing `𝟏`, up
    /// to arity `max_arity` (at most the arity cutoff).
    pub fn check_strict_unit(&self, max_arity: usize) -> UnitReport {
        let dim = 1u32 << self.dim();
        let mut report = UnitReport::default();
        for k in 0..=max_arity.min(self.arity_cutoff) {
            for tuple in basis_tuples(dim, k) {
                if !tuple.contains(&0) {
                    continue;
                }
                report.checked += 1;
                let got = self.eval_basis(&tuple);
                let mut expected = BasisValue::new();
                if k == 2 {
                    let x = if tuple[0] == 0 { tuple[1] } else { tuple[0] };
                    let sign = match self.convention {
                        Convention::Shifted if tuple[1] == 0 && wedge_degree(x) % 2 == 1 => -1,
                        _ => 1,
                    };
                    add_value(&mut expected, (self.monoid.zero(), x), BigRational::from_integer(sign.into()));
                }
                if got != expected {
                    report.violations.push(format!("m_{k} on {:?}: unit rule violated", tuple));
                }
            }
        }
        report
    }
}

#[derive(Clone, Debug, Default)]
pub struct UnitReport {
    pub checked: usize,
    pub violations: Vec<String>,
}

impl UnitReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// All tuples of basis masks `< dim` of length `n`.
pub fn basis_tuples(dim: u32, n: usize) -> Vec<Vec<WedgeIndex>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::with_capacity(out.len() * dim as usize);
        for t in &out {
            for m in 0..dim {
                let mut u = t.clone();
                u.push(m);
                next.push(u);
            }
        }
        out = next;
    }
    out
}

/// Anything with epsilon-convention operators, for the generic relation checker.
pub trait CurvedAlgebra {
    type Elem: Clone;
    fn zero(&self) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem>;
    fn negate(&self, a: &Self::Elem) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    /// Homogeneous pieces with their ℤ/2 degree.
    fn homogeneous_parts(&self, a: &Self::Elem) -> Vec<(usize, Self::Elem)>;
    fn m_eps(&self, inputs: &[Self::Elem]) -> Result<Self::Elem>;
    fn arity_cutoff(&self) -> usize;
}

/// `Σ_{r+s+t=n} (−1)^{r+st} m^ε_{r+1+t}(id^r ⊗ m^ε_s ⊗ id^t)` with the
/// Koszul factor `(−1)^{s·(|a_1|+⋯+|a_r|)}` from passing `m^ε_s`.
pub fn epsilon_relation<A: CurvedAlgebra>(alg: &A, inputs: &[A::Elem]) -> Result<A::Elem> {
    let n = inputs.len();
    if n + 1 > alg.arity_cutoff() {
        return Err(Error::CutoffInsufficient(format!("relation of arity {n}")));
    }
    let parts: Vec<Vec<(usize, A::Elem)>> = inputs.iter().map(|x| alg.homogeneous_parts(x)).collect();
    let mut total = alg.zero();
    if parts.iter().any(|p| p.is_empty()) {
        return Ok(total);
    }
    let mut idx = vec![0usize; n];
    loop {
        let degs: Vec<usize> = idx.iter().enumerate().map(|(i, j)| parts[i][*j].0).collect();
        let xs: Vec<A::Elem> = idx.iter().enumerate().map(|(i, j)| parts[i][*j].1.clone()).collect();
        for r in 0..=n {
            for s in 0..=(n - r) {
                let t = n - r - s;
                let inner = alg.m_eps(&xs[r..r + s])?;
                if alg.is_zero(&inner) {
                    continue;
                }
                let mut args: Vec<A::Elem> = xs[..r].to_vec();
                args.push(inner);
                args.extend_from_slice(&xs[r + s..]);
                let outer = alg.m_eps(&args)?;
                let prefix: usize = degs[..r].iter().sum();
                let e = r + s * t + s * prefix;
                let signed = if e % 2 == 0 { outer } else { alg.negate(&outer) };
                total = alg.add(&total, &signed)?;
            }
        }
        let mut p = n;
        loop {
            if p == 0 {
                return Ok(total);
            }
            p -= 1;
            idx[p] += 1;
            if idx[p] < parts[p].len() {
                break;
            }
            idx[p] = 0;
        }
    }
}

/// Epsilon view of an `AInftyStructure` with coefficients `C`.
pub struct EpsilonView<'a, C> {
    a: AInftyStructure,
    _c: std::marker::PhantomData<&'a C>,
}

impl<'a, C: Scalar> EpsilonView<'a, C> {
    pub fn new(a: &AInftyStructure) -> Self {
        EpsilonView { a: a.in_convention(Convention::Epsilon), _c: std::marker::PhantomData }
    }
}

impl<'a, C: Scalar> CurvedAlgebra for EpsilonView<'a, C> {
    type Elem = ExtElement<C>;
    fn zero(&self) -> Self::Elem {
        self.a.zero_elem()
    }
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem> {
        a.add(b)
    }
    fn negate(&self, a: &Self::Elem) -> Self::Elem {
        a.neg()
    }
    fn is_zero(&self, a: &Self::Elem) -> bool {
        a.is_zero()
    }
    fn homogeneous_parts(&self, a: &Self::Elem) -> Vec<(usize, Self::Elem)> {
        let (ev, od) = a.parity_parts();
        [(0, ev), (1, od)].into_iter().filter(|(_, x)| !x.is_zero()).collect()
    }
    fn m_eps(&self, inputs: &[Self::Elem]) -> Result<Self::Elem> {
        self.a.apply(inputs)
    }
    fn arity_cutoff(&self) -> usize {
        self.a.arity_cutoff
    }
}

/// Monomial of a graded-commutative coefficient algebra: polynomial
/// exponents (even) times an ordered product of odd generators (bitmask).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BMono {
    pub exps: Vec<u32>,
    pub odd: u32,
}

impl BMono {
    pub fn one(nvars: usize) -> Self {
        BMono { exps: vec![0; nvars], odd: 0 }
    }

    pub fn parity(&self) -> usize {
        self.odd.count_ones() as usize % 2
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    /// Product with sign; `None` if it vanishes or exceeds `max_degree`.
    pub fn mul(&self, other: &BMono, max_degree: u32) -> Option<(BMono, i32)> {
        let (odd, s) = wedge_masks(self.odd, other.odd)?;
        let exps: Vec<u32> = self.exps.iter().zip(&other.exps).map(|(a, b)| a + b).collect();
        if exps.iter().sum::<u32>() >= max_degree {
            return None;
        }
        Some((BMono { exps, odd }, s))
    }
}

/// A curved dga `B` whose elements are Novikov-coefficient combinations of
/// `BMono`s. Products are those of `BMono`; `d` may act on coefficients.
pub trait CurvedDga {
    fn nvars(&self) -> usize;
    /// Exclusive bound on the polynomial degree.
    fn max_degree(&self) -> u32;
    fn differential<C: Scalar>(&self, m: &BMono, c: &NovikovElement<C>) -> Result<Vec<(BMono, NovikovElement<C>)>>;
    fn curvature<C: Scalar>(&self, monoid: &Arc<Monoid>, cutoff: &BigRational) -> Vec<(BMono, NovikovElement<C>)>;
}

/// Element of `B ⊗ A` with `B` on the left.
#[derive(Clone, Debug)]
pub struct TensorElement<C> {
    monoid: Arc<Monoid>,
    cutoff: BigRational,
    terms: BTreeMap<(BMono, WedgeIndex), NovikovElement<C>>,
}

impl<C: Scalar> PartialEq for TensorElement<C> {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

impl<C: Scalar> TensorElement<C> {
    pub fn zero(monoid: Arc<Monoid>, cutoff: BigRational) -> Self {
        TensorElement { monoid, cutoff, terms: BTreeMap::new() }
    }

    pub fn pure(monoid: Arc<Monoid>, cutoff: BigRational, b: BMono, a: WedgeIndex, c: NovikovElement<C>) -> Self {
        let mut t = Self::zero(monoid, cutoff);
        t.add_term(b, a, &c);
        t
    }

    pub fn terms(&self) -> &BTreeMap<(BMono, WedgeIndex), NovikovElement<C>> {
        &self.terms
    }

    pub fn monoid(&self) -> &Arc<Monoid> {
        &self.monoid
    }

    pub fn cutoff(&self) -> &BigRational {
        &self.cutoff
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, b: BMono, a: WedgeIndex, c: &NovikovElement<C>) {
        if c.is_zero() {
            return;
        }
        let key = (b, a);
        let s = match self.terms.get(&key) {
            Some(x) => x.add(c).expect("shared monoid"),
            None => c.clone(),
        };
        if s.is_zero() {
            self.terms.remove(&key);
        } else {
            self.terms.insert(key, s);
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.cutoff != other.cutoff {
            return Err(Error::CutoffMismatch);
        }
        let mut out = self.clone();
        for ((b, a), c) in &other.terms {
            out.add_term(b.clone(), *a, c);
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        self.scale(&-C::one())
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut out = Self::zero(self.monoid.clone(), self.cutoff.clone());
        for ((b, a), x) in &self.terms {
            out.add_term(b.clone(), *a, &x.scale(c));
        }
        out
    }

    /// Total ℤ/2 degree of a term.
    pub fn term_parity(b: &BMono, a: WedgeIndex) -> usize {
        (b.parity() + wedge_degree(a)) % 2
    }

    pub fn parity_parts(&self) -> (Self, Self) {
        let mut ev = Self::zero(self.monoid.clone(), self.cutoff.clone());
        let mut od = ev.clone();
        for ((b, a), c) in &self.terms {
            if Self::term_parity(b, *a) == 0 {
                ev.add_term(b.clone(), *a, c);
            } else {
                od.add_term(b.clone(), *a, c);
            }
        }
        (ev, od)
    }

    /// Component with `B`-part equal to `1` and `A`-part `𝟏`.
    pub fn unit_coefficient(&self, nvars: usize) -> NovikovElement<C> {
        self.terms
            .get(&(BMono::one(nvars), 0))
            .cloned()
            .unwrap_or_else(|| NovikovElement::zero(self.monoid.clone(), self.cutoff.clone()))
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms
            .values()
            .flat_map(|x| x.terms().values().map(|c| c.to_c64().norm()))
            .fold(0.0, f64::max)
    }
}

/// `B ⊗ A` with the structure maps
/// `m_0 = 𝟏⊗m_0 + W_B⊗𝟏 (+ extra)`, `m_1(b⊗a) = db⊗a + (−1)^{|b|} b⊗m_1 a`,
/// `m_k = (−1)^{η_k + k(|b_1|+⋯+|b_k|)}(b_1⋯b_k)⊗m^ε_k(a_1,…,a_k)`.
pub struct TensorStructure<'a, B, C> {
    b: &'a B,
    a: AInftyStructure,
    extra_m0: Option<TensorElement<C>>,
}

pub fn tensor_with_cdga<'a, B: CurvedDga, C: Scalar>(b: &'a B, a: &AInftyStructure) -> Result<TensorStructure<'a, B, C>> {
    if a.convention() != Convention::Epsilon {
        return Err(Error::ConventionMismatch("tensor product needs the epsilon convention".into()));
    }
    Ok(TensorStructure { b, a: a.clone(), extra_m0: None })
}

impl<'a, B: CurvedDga, C: Scalar> TensorStructure<'a, B, C> {
    /// Add a further even curvature term to `m_0`.
    pub fn with_extra_curvature(mut self, x: TensorElement<C>) -> Self {
        self.extra_m0 = Some(x);
        self
    }

    pub fn algebra(&self) -> &AInftyStructure {
        &self.a
    }

    pub fn zero_elem(&self) -> TensorElement<C> {
        TensorElement::zero(self.a.monoid().clone(), self.a.cutoff().clone())
    }

    pub fn pure(&self, b: BMono, a: WedgeIndex) -> TensorElement<C> {
        let one = NovikovElement::constant(self.a.monoid().clone(), self.a.cutoff().clone(), C::one());
        TensorElement::pure(self.a.monoid().clone(), self.a.cutoff().clone(), b, a, one)
    }

    fn nov_one(&self) -> NovikovElement<C> {
        NovikovElement::constant(self.a.monoid().clone(), self.a.cutoff().clone(), C::one())
    }

    pub fn m(&self, inputs: &[TensorElement<C>]) -> Result<TensorElement<C>> {
        let k = inputs.len();
        if k > self.a.arity_cutoff() {
            return Err(Error::ArityExceeded { arity: k, cutoff: self.a.arity_cutoff() });
        }
        let nv = self.b.nvars();
        let maxd = self.b.max_degree();
        let mut out = self.zero_elem();
        match k {
            0 => {
                let m0 = self.a.apply::<C>(&[])?;
                for (mask, c) in m0.comps() {
                    out.add_term(BMono::one(nv), *mask, c);
                }
                for (bm, c) in self.b.curvature::<C>(self.a.monoid(), self.a.cutoff()) {
                    out.add_term(bm, 0, &c);
                }
                if let Some(x) = &self.extra_m0 {
                    out = out.add(x)?;
                }
            }
            1 => {
                for ((bm, mask), c) in inputs[0].terms() {
                    for (db, dc) in self.b.differential(bm, c)? {
                        out.add_term(db, *mask, &dc);
                    }
                    let sign = if bm.parity() == 0 { C::one() } else { -C::one() };
                    let val = self.a.eval_basis(&[*mask]);
                    for ((g, m), w) in val {
                        out.add_term(bm.clone(), m, &c.mul_monomial(&g, &(C::from_rational(&w) * sign.clone())));
                    }
                }
            }
            _ => {
                let lists: Vec<Vec<(&(BMono, WedgeIndex), &NovikovElement<C>)>> =
                    inputs.iter().map(|x| x.terms().iter().collect()).collect();
                if lists.iter().any(|l| l.is_empty()) {
                    return Ok(out);
                }
                let mut idx = vec![0usize; k];
                let mut cache: HashMap<Vec<WedgeIndex>, BasisValue> = HashMap::new();
                loop {
                    let mut prod = Some((BMono::one(nv), 1i32));
                    let mut masks = Vec::with_capacity(k);
                    let mut adeg = Vec::with_capacity(k);
                    let mut bdeg = Vec::with_capacity(k);
                    let mut coef = self.nov_one();
                    for (i, j) in idx.iter().enumerate() {
                        let ((bm, mask), c) = lists[i][*j];
                        masks.push(*mask);
                        adeg.push(wedge_degree(*mask) as i64);
                        bdeg.push(bm.parity() as i64);
                        prod = prod.and_then(|(p, s)| p.mul(bm, maxd).map(|(q, t)| (q, s * t)));
                        if prod.is_none() {
                            break;
                        }
                        coef = coef.mul(c)?;
                    }
                    if let Some((bm, s)) = prod {
                        let val = cache.entry(masks.clone()).or_insert_with(|| self.a.eval_basis(&masks));
                        if !val.is_empty() && !coef.is_zero() {
                            // `m^ε_k` has degree `k` mod 2 and passes the product of the `b`s.
                            let pass = if k as i64 * bdeg.iter().sum::<i64>() % 2 == 0 { 1 } else { -1 };
                            let sign = s * pass * eta_sign(&adeg, &bdeg)?;
                            let sc = C::from_i64(sign as i64);
                            for ((g, m), w) in val.iter() {
                                out.add_term(bm.clone(), *m, &coef.mul_monomial(g, &(C::from_rational(w) * sc.clone())));
                            }
                        }
                    }
                    let mut p = k;
                    loop {
                        if p == 0 {
                            return Ok(out);
                        }
                        p -= 1;
                        idx[p] += 1;
                        if idx[p] < lists[p].len() {
                            break;
                        }
                        idx[p] = 0;
                    }
                }
            }
        }
        Ok(out)
    }
}

impl<'a, B: CurvedDga, C: Scalar> CurvedAlgebra for TensorStructure<'a, B, C> {
    type Elem = TensorElement<C>;
    fn zero(&self) -> Self::Elem {
        self.zero_elem()
    }
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem> {
        a.add(b)
    }
    fn negate(&self, a: &Self::Elem) -> Self::Elem {
        a.neg()
    }
    fn is_zero(&self, a: &Self::Elem) -> bool {
        a.is_zero()
    }
    fn homogeneous_parts(&self, a: &Self::Elem) -> Vec<(usize, Self::Elem)> {
        let (ev, od) = a.parity_parts();
        [(0, ev), (1, od)].into_iter().filter(|(_, x)| !x.is_zero()).collect()
    }
    fn m_eps(&self, inputs: &[Self::Elem]) -> Result<Self::Elem> {
        self.m(inputs)
    }
    fn arity_cutoff(&self) -> usize {
        self.a.arity_cutoff()
    }
}

/// Scalars viewed as a curved dga with `d = 0` and optional constant curvature.
pub struct ScalarDga {
    pub curvature: BigRational,
}

impl CurvedDga for ScalarDga {
    fn nvars(&self) -> usize {
        0
    }
    fn max_degree(&self) -> u32 {
        1
    }
    fn differential<C: Scalar>(&self, _m: &BMono, _c: &NovikovElement<C>) -> Result<Vec<(BMono, NovikovElement<C>)>> {
        Ok(Vec::new())
    }
    fn curvature<C: Scalar>(&self, monoid: &Arc<Monoid>, cutoff: &BigRational) -> Vec<(BMono, NovikovElement<C>)> {
        if self.curvature.is_zero() {
            return Vec::new();
        }
        vec![(BMono::one(0), NovikovElement::constant(monoid.clone(), cutoff.clone(), C::from_rational(&self.curvature)))]
    }
}

/// Sign `(−1)^{k(k−1)/2}` of the epsilon Maurer–Cartan sum.
pub fn mc_sign(k: usize) -> i32 {
    if (k * k.saturating_sub(1) / 2) % 2 == 0 {
        1
    } else {
        -1
    }
}
