//! The B side: truncated power series in the chart offsets `w = z − z₀`,
//! the Maurer–Cartan element `τ` of `B ⊗ A`, the matrix factorizations it
//! pushes Lagrangian branes to, the functor on morphisms, and Koszul
//! cohomology of the linear part.
//!
//! The chart coordinate is normalised so that `T = e^{-1}`, as in the toric
//! potential `Σ e^{−ℓ_i(z)}`; Novikov coefficients stay symbolic in `T`.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::ainfty::{mc_sign, tensor_with_cdga, AInftyStructure, BMono, BasisValue, Convention, CurvedDga, TensorElement};
use crate::error::{Error, Result};
use crate::graded::{wedge_degree, wedge_masks, ExtElement, WedgeIndex};
use crate::mc::{weak_mc_check, TwistedComplex};
use crate::novikov::{Monoid, MonoidIndex, NovikovElement, Scalar};
use crate::toric::ToricData;

/// All exponent vectors in `n` variables of total degree `< degree`.
pub fn exponents(n: usize, degree: u32) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::new();
        for e in &out {
            let used: u32 = e.iter().sum();
            for a in 0..degree.saturating_sub(used) {
                let mut f = e.clone();
                f.push(a);
                next.push(f);
            }
        }
        out = next;
    }
    out.retain(|e| e.iter().sum::<u32>() < degree);
    out
}

/// Truncated power series in `w_1,…,w_n` of total degree `< degree`, with
/// Novikov coefficients.
#[derive(Clone, Debug)]
pub struct SeriesElement<C> {
    monoid: Arc<Monoid>,
    cutoff: BigRational,
    nvars: usize,
    degree: u32,
    terms: BTreeMap<Vec<u32>, NovikovElement<C>>,
}

impl<C: Scalar> PartialEq for SeriesElement<C> {
    fn eq(&self, other: &Self) -> bool {
        self.nvars == other.nvars && self.degree == other.degree && self.terms == other.terms
    }
}

impl<C: Scalar> SeriesElement<C> {
    pub fn zero(monoid: Arc<Monoid>, cutoff: BigRational, nvars: usize, degree: u32) -> Self {
        SeriesElement { monoid, cutoff, nvars, degree, terms: BTreeMap::new() }
    }

    pub fn zero_like(&self) -> Self {
        Self::zero(self.monoid.clone(), self.cutoff.clone(), self.nvars, self.degree)
    }

    pub fn constant(c: NovikovElement<C>, nvars: usize, degree: u32) -> Self {
        let mut s = Self::zero(c.monoid().clone(), c.cutoff().clone(), nvars, degree);
        s.add_term(vec![0; nvars], &c);
        s
    }

    pub fn scalar_like(&self, c: C) -> Self {
        let nov = NovikovElement::constant(self.monoid.clone(), self.cutoff.clone(), c);
        Self::constant(nov, self.nvars, self.degree)
    }

    /// The coordinate `w_j`.
    pub fn var_like(&self, j: usize) -> Self {
        let mut e = vec![0; self.nvars];
        e[j] = 1;
        let mut s = self.zero_like();
        s.add_term(e, &NovikovElement::constant(self.monoid.clone(), self.cutoff.clone(), C::one()));
        s
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn monoid(&self) -> &Arc<Monoid> {
        &self.monoid
    }

    pub fn cutoff(&self) -> &BigRational {
        &self.cutoff
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, NovikovElement<C>> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, e: &[u32]) -> NovikovElement<C> {
        self.terms
            .get(e)
            .cloned()
            .unwrap_or_else(|| NovikovElement::zero(self.monoid.clone(), self.cutoff.clone()))
    }

    /// Lowest total degree present.
    pub fn order(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).min()
    }

    pub fn add_term(&mut self, e: Vec<u32>, c: &NovikovElement<C>) {
        if e.iter().sum::<u32>() >= self.degree || c.is_zero() {
            return;
        }
        let s = match self.terms.get(&e) {
            Some(x) => x.add(c).expect("shared monoid"),
            None => c.clone(),
        };
        if s.is_zero() {
            self.terms.remove(&e);
        } else {
            self.terms.insert(e, s);
        }
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::DimensionMismatch { expected: self.nvars, found: other.nvars });
        }
        if self.degree != other.degree || self.cutoff != other.cutoff {
            return Err(Error::CutoffMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c);
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
        for (e, x) in &self.terms {
            out.add_term(e.clone(), &x.scale(c));
        }
        out
    }

    pub fn scale_nov(&self, c: &NovikovElement<C>) -> Result<Self> {
        let mut out = self.zero_like();
        for (e, x) in &self.terms {
            out.add_term(e.clone(), &x.mul(c)?);
        }
        Ok(out)
    }

    /// Multiply by `c·T^γ`.
    pub fn mul_monomial(&self, g: &MonoidIndex, c: &C) -> Self {
        let mut out = self.zero_like();
        for (e, x) in &self.terms {
            out.add_term(e.clone(), &x.mul_monomial(g, c));
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = self.zero_like();
        for (ea, a) in &self.terms {
            let da: u32 = ea.iter().sum();
            for (eb, b) in &other.terms {
                if da + eb.iter().sum::<u32>() >= self.degree {
                    continue;
                }
                let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                out.add_term(e, &a.mul(b)?);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: usize) -> Result<Self> {
        let mut out = self.scalar_like(C::one());
        for _ in 0..k {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    /// Keep only total degrees `< d`.
    pub fn truncated(&self, d: u32) -> Self {
        let mut out = self.zero_like();
        for (e, c) in &self.terms {
            if e.iter().sum::<u32>() < d {
                out.add_term(e.clone(), c);
            }
        }
        out
    }

    /// `c·e^{−⟨v, w⟩}`.
    pub fn exp_linear(c: &NovikovElement<C>, v: &[i64], nvars: usize, degree: u32) -> Self {
        let mut out = Self::zero(c.monoid().clone(), c.cutoff().clone(), nvars, degree);
        for e in exponents(nvars, degree) {
            let mut r = BigRational::one();
            for (a, vj) in e.iter().zip(v) {
                let base = BigRational::from_integer(BigInt::from(-vj));
                for i in 1..=*a {
                    r = r * base.clone() / BigRational::from_integer(BigInt::from(i));
                }
            }
            out.add_term(e, &c.scale(&C::from_rational(&r)));
        }
        out
    }

    pub fn evaluate(&self, t: f64) -> BTreeMap<Vec<u32>, Complex64> {
        self.terms.iter().map(|(e, c)| (e.clone(), c.evaluate(t))).collect()
    }

    /// Largest evaluated coefficient among total degrees `< below`.
    pub fn max_abs_below(&self, t: f64, below: u32) -> f64 {
        self.terms
            .iter()
            .filter(|(e, _)| e.iter().sum::<u32>() < below)
            .map(|(_, c)| c.evaluate(t).norm())
            .fold(0.0, f64::max)
    }

    pub fn map_coeffs<D: Scalar>(&self, f: impl Fn(&C) -> D + Copy) -> SeriesElement<D> {
        SeriesElement {
            monoid: self.monoid.clone(),
            cutoff: self.cutoff.clone(),
            nvars: self.nvars,
            degree: self.degree,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), c.map_coeffs(f)))
                .filter(|(_, c)| !c.is_zero())
                .collect(),
        }
    }

    pub fn to_json(&self, t: f64) -> serde_json::Value {
        let coeffs: Vec<serde_json::Value> = self
            .evaluate(t)
            .into_iter()
            .map(|(e, c)| serde_json::json!({"exponent": e, "re": c.re, "im": c.im}))
            .collect();
        serde_json::Value::Array(coeffs)
    }
}

/// `g` with `g·l = f` exactly, where `l = Σ l_j w_j` is a nonzero linear form
/// and `f` vanishes on `l = 0`. The quotient is exact in total degrees
/// `< degree − 1`.
pub fn series_div_vanishing<C: Scalar>(f: &SeriesElement<C>, l: &[C]) -> Result<SeriesElement<C>> {
    if l.len() != f.nvars {
        return Err(Error::LengthMismatch(l.len(), f.nvars));
    }
    let j = l
        .iter()
        .position(|c| !c.negligible())
        .ok_or_else(|| Error::Input("division by the zero linear form".into()))?;
    let inv = C::one() / l[j].clone();
    let mut work = f.terms.clone();
    let mut g = f.zero_like();
    loop {
        let key = work.iter().filter(|(_, c)| !c.is_zero()).max_by_key(|(e, _)| e[j]).map(|(e, _)| e.clone());
        let Some(e) = key else { break };
        if e[j] == 0 {
            return Err(Error::Remainder(format!("term of exponent {e:?} is not divisible by the linear form")));
        }
        let c = work.remove(&e).expect("present").scale(&inv);
        let mut q = e.clone();
        q[j] -= 1;
        for (i, li) in l.iter().enumerate() {
            if i == j || li.negligible() {
                continue;
            }
            let mut ei = q.clone();
            ei[i] += 1;
            let sub = c.scale(&-li.clone());
            let nv = match work.get(&ei) {
                Some(x) => x.add(&sub)?,
                None => sub,
            };
            if nv.is_zero() {
                work.remove(&ei);
            } else {
                work.insert(ei, nv);
            }
        }
        g.add_term(q, &c);
    }
    Ok(g)
}

/// Element of `B ⊗ A` with series coefficients, keyed by wedge index.
pub type ExtSeries<C> = BTreeMap<WedgeIndex, SeriesElement<C>>;

fn ext_add<C: Scalar>(acc: &mut ExtSeries<C>, mask: WedgeIndex, s: &SeriesElement<C>) -> Result<()> {
    if s.is_zero() {
        return Ok(());
    }
    let v = match acc.get(&mask) {
        Some(x) => x.add(s)?,
        None => s.clone(),
    };
    if v.is_zero() {
        acc.remove(&mask);
    } else {
        acc.insert(mask, v);
    }
    Ok(())
}

/// The chart at `z₀ = p + iα`: the left insertion `τ̂ = −Σ(w_j + iα_j)e_j`,
/// the brane element `θ(p) = −Σ iα_j e_j` inserted on the right, and their
/// difference `ζ = θ − τ̂ = Σ w_j e_j`.
#[derive(Clone, Debug)]
pub struct TauTheta<C> {
    pub p: Vec<BigRational>,
    pub alpha: Vec<BigRational>,
    pub tau: ExtSeries<C>,
    pub theta: ExtSeries<C>,
    pub zeta: ExtSeries<C>,
    /// `θ(p)` as an algebra element, the weak Maurer–Cartan element of the brane.
    pub brane: ExtElement<C>,
}

fn alpha_scalar<C: Scalar>(a: &BigRational) -> C {
    C::imag_unit() * C::from_rational(a)
}

pub fn build_tau_theta<C: Scalar>(
    t: &ToricData,
    a: &AInftyStructure,
    p: &[BigRational],
    alpha: &[BigRational],
    degree: u32,
) -> Result<(AInftyStructure, TauTheta<C>)> {
    let n = t.dim;
    if p.len() != n || alpha.len() != n {
        return Err(Error::LengthMismatch(p.len().max(alpha.len()), n));
    }
    let monoid = Arc::new(t.monoid_at(p)?);
    let a = a.with_monoid(monoid.clone())?.in_convention(Convention::Shifted);
    let proto: SeriesElement<C> = SeriesElement::zero(monoid.clone(), a.cutoff().clone(), n, degree);
    let mut tau = ExtSeries::new();
    let mut theta = ExtSeries::new();
    let mut zeta = ExtSeries::new();
    let mut brane = a.zero_elem::<C>();
    for j in 0..n {
        let mask = 1u32 << j;
        let ia: C = alpha_scalar(&alpha[j]);
        let w = proto.var_like(j);
        ext_add(&mut tau, mask, &w.add(&proto.scalar_like(ia.clone()))?.neg())?;
        ext_add(&mut theta, mask, &proto.scalar_like(-ia.clone()))?;
        ext_add(&mut zeta, mask, &w)?;
        brane = brane.add(&a.basis::<C>(mask).scale(&-ia))?;
    }
    Ok((a, TauTheta { p: p.to_vec(), alpha: alpha.to_vec(), tau, theta, zeta, brane }))
}

/// One argument position: a finite choice of basis vectors with series weights.
struct Slot<C> {
    id: usize,
    options: Vec<(WedgeIndex, SeriesElement<C>)>,
}

impl<C: Scalar> Slot<C> {
    fn from_ext(id: usize, x: &ExtSeries<C>) -> Self {
        Slot { id, options: x.iter().map(|(m, s)| (*m, s.clone())).collect() }
    }

    fn from_elem(id: usize, x: &ExtElement<C>, proto: &SeriesElement<C>) -> Self {
        Slot {
            id,
            options: x.comps().iter().map(|(m, c)| (*m, SeriesElement::constant(c.clone(), proto.nvars, proto.degree))).collect(),
        }
    }
}

/// `m_k` (shifted convention) on slots whose weights are even series, so that
/// they factor out without signs. Tuples with the same multiset of weights are
/// summed on the rational side before any series product.
struct SlotEvaluator<'a, C> {
    a: &'a AInftyStructure,
    proto: SeriesElement<C>,
    pow_cache: HashMap<(usize, usize, usize), SeriesElement<C>>,
    value_cache: HashMap<Vec<WedgeIndex>, BasisValue>,
}

impl<'a, C: Scalar> SlotEvaluator<'a, C> {
    fn new(a: &'a AInftyStructure, proto: SeriesElement<C>) -> Self {
        SlotEvaluator { a, proto, pow_cache: HashMap::new(), value_cache: HashMap::new() }
    }

    fn eval(&mut self, slots: &[&Slot<C>]) -> Result<ExtSeries<C>> {
        let mut out = ExtSeries::new();
        if slots.len() > self.a.arity_cutoff() || slots.iter().any(|s| s.options.is_empty()) {
            return Ok(out);
        }
        let mut groups: BTreeMap<Vec<(usize, usize, usize)>, BasisValue> = BTreeMap::new();
        let mut idx = vec![0usize; slots.len()];
        loop {
            let masks: Vec<WedgeIndex> = idx.iter().enumerate().map(|(i, j)| slots[i].options[*j].0).collect();
            let a = self.a;
            let val = self.value_cache.entry(masks).or_insert_with_key(|m| a.eval_native(m));
            if !val.is_empty() {
                let mut counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
                for (i, j) in idx.iter().enumerate() {
                    *counts.entry((slots[i].id, *j)).or_default() += 1;
                }
                let key: Vec<(usize, usize, usize)> = counts.into_iter().map(|((s, o), c)| (s, o, c)).collect();
                let g = groups.entry(key).or_default();
                for (k, v) in val.iter() {
                    let e = g.entry(k.clone()).or_insert_with(BigRational::zero);
                    *e += v;
                }
            }
            let mut p = slots.len();
            loop {
                if p == 0 {
                    break;
                }
                p -= 1;
                idx[p] += 1;
                if idx[p] < slots[p].options.len() {
                    break;
                }
                idx[p] = 0;
            }
            if p == 0 && idx.iter().all(|i| *i == 0) {
                break;
            }
        }
        let by_id: HashMap<usize, &Slot<C>> = slots.iter().map(|s| (s.id, *s)).collect();
        for (key, val) in groups {
            let mut coef = self.proto.scalar_like(C::one());
            for (s, o, c) in &key {
                let pk = (*s, *o, *c);
                if !self.pow_cache.contains_key(&pk) {
                    let base = &by_id[s].options[*o].1;
                    self.pow_cache.insert(pk, base.pow(*c)?);
                }
                coef = coef.mul(&self.pow_cache[&pk])?;
                if coef.is_zero() {
                    break;
                }
            }
            if coef.is_zero() {
                continue;
            }
            for ((g, m), r) in val {
                if r.is_zero() {
                    continue;
                }
                ext_add(&mut out, m, &coef.mul_monomial(&g, &C::from_rational(&r)))?;
            }
        }
        Ok(out)
    }
}

/// All ways to write numbers `n_0,…,n_r ≥ 0` with `Σ n_i ≤ budget`; slot
/// `i` is forced to zero when `fixed_zero[i]`.
fn compositions(parts: usize, budget: usize, fixed_zero: &[bool]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for i in 0..parts {
        let mut next = Vec::new();
        for c in &out {
            let used: usize = c.iter().sum();
            let top = if fixed_zero[i] { 0 } else { budget - used };
            for k in 0..=top {
                let mut d = c.clone();
                d.push(k);
                next.push(d);
            }
        }
        out = next;
    }
    out
}

/// `Σ m(τ̂^{l}, x, b_0^{i_0}, a_1, b_1^{i_1}, …, a_k, b_k^{i_k})` on every
/// basis vector `x`, as a matrix `[output][input]` of series.
fn twisted_matrix<C: Scalar>(
    a: &AInftyStructure,
    tt: &TauTheta<C>,
    proto: &SeriesElement<C>,
    branes: &[&ExtElement<C>],
    morphisms: &[&ExtElement<C>],
) -> Result<Vec<Vec<SeriesElement<C>>>> {
    let dim = 1usize << a.dim();
    let kmax = a.arity_cutoff();
    let mut ev = SlotEvaluator::new(a, proto.clone());
    let tau = Slot::from_ext(0, &tt.tau);
    let brane_slots: Vec<Slot<C>> = branes.iter().enumerate().map(|(i, b)| Slot::from_elem(10 + i, b, proto)).collect();
    let mor_slots: Vec<Slot<C>> = morphisms.iter().enumerate().map(|(i, m)| Slot::from_elem(100 + i, m, proto)).collect();
    // With no constant part, τ̂^l has order at least l.
    let tau_order = tt.tau.values().filter_map(|s| s.order()).min().unwrap_or(0) as usize;
    let fixed: Vec<bool> = std::iter::once(false).chain(branes.iter().map(|b| b.is_zero())).collect();
    let fixed_count = 1 + morphisms.len();
    let mut q = vec![vec![proto.zero_like(); dim]; dim];
    if kmax < fixed_count {
        return Ok(q);
    }
    let shapes = compositions(branes.len() + 1, kmax - fixed_count, &fixed);
    for x in 0..dim {
        let xs = Slot { id: 1, options: vec![(x as WedgeIndex, proto.scalar_like(C::one()))] };
        for shape in &shapes {
            let l = shape[0];
            if tau_order > 0 && l * tau_order >= proto.degree as usize {
                continue;
            }
            let mut slots: Vec<&Slot<C>> = vec![&tau; l];
            slots.push(&xs);
            for (i, bs) in brane_slots.iter().enumerate() {
                if i > 0 {
                    slots.push(&mor_slots[i - 1]);
                }
                slots.extend(std::iter::repeat(bs).take(shape[i + 1]));
            }
            for (m, s) in ev.eval(&slots)? {
                q[m as usize][x] = q[m as usize][x].add(&s)?;
            }
        }
    }
    Ok(q)
}

/// An odd operator on `Λ(e) ⊗ B`, stored as `[output][input]`.
#[derive(Clone, Debug)]
pub struct MFOperator<C> {
    pub nvars: usize,
    pub degree: u32,
    pub entries: Vec<Vec<SeriesElement<C>>>,
    pub lambda: NovikovElement<C>,
    /// The chart potential `Σ_k m_k(τ̂^{⊗k})|_𝟏` at the same arity cutoff.
    pub potential: SeriesElement<C>,
    pub p: Vec<BigRational>,
    pub alpha: Vec<BigRational>,
}

/// `Q(x) = Σ_{l,i} m_{l+1+i}(τ̂^l, x, θ(p)^i)` for the brane at `(p, α)`.
pub fn mf_from_brane<C: Scalar>(
    t: &ToricData,
    a: &AInftyStructure,
    p: &[BigRational],
    alpha: &[BigRational],
    degree: u32,
) -> Result<MFOperator<C>> {
    if degree < 2 {
        return Err(Error::Input("series degree must be at least 2".into()));
    }
    if a.arity_cutoff() < degree as usize {
        return Err(Error::CutoffInsufficient(format!(
            "series degree {degree} needs operators up to arity {degree}, cutoff is {}",
            a.arity_cutoff()
        )));
    }
    let (a, tt) = build_tau_theta::<C>(t, a, p, alpha, degree)?;
    let w = weak_mc_check(&a, &tt.brane)?;
    if !w.is_weak {
        return Err(Error::Inconsistent("brane element is not weakly Maurer–Cartan".into()));
    }
    let proto = SeriesElement::zero(a.monoid().clone(), a.cutoff().clone(), t.dim, degree);
    let entries = twisted_matrix(&a, &tt, &proto, &[&tt.brane], &[])?;
    let potential = chart_potential(&a, &tt, &proto)?;
    Ok(MFOperator { nvars: t.dim, degree, entries, lambda: w.lambda, potential, p: p.to_vec(), alpha: alpha.to_vec() })
}

/// `𝟏`-component of `Σ_{k ≤ K} m_k(τ̂^{⊗k})`; an error if any other
/// component survives.
fn chart_potential<C: Scalar>(a: &AInftyStructure, tt: &TauTheta<C>, proto: &SeriesElement<C>) -> Result<SeriesElement<C>> {
    let mut ev = SlotEvaluator::new(a, proto.clone());
    let tau = Slot::from_ext(0, &tt.tau);
    let mut total = ExtSeries::new();
    for k in 0..=a.arity_cutoff() {
        for (m, s) in ev.eval(&vec![&tau; k])? {
            ext_add(&mut total, m, &s)?;
        }
    }
    if total.keys().any(|m| *m != 0) {
        return Err(Error::Inconsistent("τ̂ is not weakly Maurer–Cartan in the chart".into()));
    }
    Ok(total.remove(&0).unwrap_or_else(|| proto.zero_like()))
}

/// `Σ_β T^β(p)·e^{−i⟨α, ∂β⟩}·e^{−⟨w, ∂β⟩}` at `T = t`: the Taylor series of
/// the potential at `z₀ = p + iα`, in floating point.
pub fn potential_series_at(t: &ToricData, p: &[BigRational], alpha: &[f64], tt: f64, degree: u32) -> Result<BTreeMap<Vec<u32>, Complex64>> {
    let monoid = Arc::new(t.monoid_at(p)?);
    let mut out: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
    for c in monoid.classes() {
        let phase: f64 = c.boundary.iter().zip(alpha).map(|(v, a)| *v as f64 * a).sum();
        let lead = tt.powf(num_traits::ToPrimitive::to_f64(&c.energy0).unwrap_or(f64::NAN)) * Complex64::new(0.0, -phase).exp();
        for e in exponents(t.dim, degree) {
            let mut r = lead;
            for (a, v) in e.iter().zip(&c.boundary) {
                for i in 1..=*a {
                    r *= -(*v as f64) / i as f64;
                }
            }
            *out.entry(e).or_default() += r;
        }
    }
    Ok(out)
}

/// Residual of a matrix factorization.
#[derive(Clone, Debug)]
pub struct MfResidual {
    pub exact_zero: bool,
    pub max_abs: f64,
}

impl<C: Scalar> MFOperator<C> {
    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn compose(&self, other: &[Vec<SeriesElement<C>>]) -> Result<Vec<Vec<SeriesElement<C>>>> {
        let n = self.size();
        let mut out = vec![vec![self.entries[0][0].zero_like(); n]; n];
        for (o, row) in out.iter_mut().enumerate() {
            for (i, cell) in row.iter_mut().enumerate() {
                for m in 0..n {
                    if self.entries[o][m].is_zero() || other[m][i].is_zero() {
                        continue;
                    }
                    *cell = cell.add(&self.entries[o][m].mul(&other[m][i])?)?;
                }
            }
        }
        Ok(out)
    }

    /// `Q(x)` for a basis vector.
    pub fn column(&self, x: WedgeIndex) -> ExtSeries<C> {
        let mut out = ExtSeries::new();
        for (o, row) in self.entries.iter().enumerate() {
            if !row[x as usize].is_zero() {
                out.insert(o as WedgeIndex, row[x as usize].clone());
            }
        }
        out
    }

    /// Entries sorted by the change in wedge degree they produce.
    pub fn wedge_shifts(&self) -> BTreeMap<i64, usize> {
        let mut out = BTreeMap::new();
        for (o, row) in self.entries.iter().enumerate() {
            for (i, s) in row.iter().enumerate() {
                if !s.is_zero() {
                    *out.entry(wedge_degree(o as u32) as i64 - wedge_degree(i as u32) as i64).or_insert(0) += 1;
                }
            }
        }
        out
    }

    /// Whether the wedge-degree-raising part of `Q` is exactly `ζ∧·`.
    pub fn raising_part_is_koszul(&self) -> bool {
        let n = self.size();
        for (o, row) in self.entries.iter().enumerate() {
            for (i, s) in row.iter().enumerate() {
                if wedge_degree(o as u32) <= wedge_degree(i as u32) {
                    continue;
                }
                let mut want = s.zero_like();
                for j in 0..self.nvars {
                    if let Some((m, sign)) = wedge_masks(1 << j, i as u32) {
                        if m as usize == o {
                            want = want.add(&s.var_like(j).scale(&C::from_i64(sign as i64))).expect("same shape");
                        }
                    }
                }
                if *s != want {
                    return false;
                }
            }
        }
        n > 0
    }

    /// `Q² − (λ − W)·id` in total degrees `< degree − 1`.
    pub fn verify(&self, t: f64) -> Result<MfResidual> {
        mf_verify(self, &self.potential, &self.lambda, t)
    }

    pub fn to_json(&self, t: f64) -> serde_json::Value {
        let mut entries = Vec::new();
        for (o, row) in self.entries.iter().enumerate() {
            for (i, s) in row.iter().enumerate() {
                if !s.is_zero() {
                    entries.push(serde_json::json!({"entry": [o, i], "coeffs": s.to_json(t)}));
                }
            }
        }
        let lam = self.lambda.evaluate(t);
        serde_json::json!({
            "dimension": self.nvars,
            "degree": self.degree,
            "basis": (0..self.size()).map(|m| crate::graded::wedge_members(m as u32).iter().map(|j| j + 1).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "center": {
                "p": self.p.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
                "alpha": self.alpha.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
            },
            "lambda": {"re": lam.re, "im": lam.im},
            "entries": entries,
        })
    }
}

/// Largest coefficient of `Q² − (λ − W)·id` over all entries and total
/// degrees `< degree − 1`, with an exact-zero flag.
pub fn mf_verify<C: Scalar>(q: &MFOperator<C>, w: &SeriesElement<C>, lambda: &NovikovElement<C>, t: f64) -> Result<MfResidual> {
    let sq = q.compose(&q.entries)?;
    let shift = SeriesElement::constant(lambda.clone(), w.nvars, w.degree).sub(w)?;
    let bound = q.degree - 1;
    let mut exact_zero = true;
    let mut max_abs: f64 = 0.0;
    for (o, row) in sq.iter().enumerate() {
        for (i, s) in row.iter().enumerate() {
            let r = if o == i { s.sub(&shift)? } else { s.clone() };
            let r = r.truncated(bound);
            if !r.is_zero() {
                exact_zero = false;
            }
            max_abs = max_abs.max(r.max_abs_below(t, bound));
        }
    }
    Ok(MfResidual { exact_zero, max_abs })
}

/// Series ring as a curved dga with `d = 0` and curvature `−W`.
pub struct SeriesDga {
    nvars: usize,
    degree: u32,
    curvature: Vec<(Vec<u32>, MonoidIndex, BigRational)>,
}

impl SeriesDga {
    /// Curvature `−Σ_β T^β e^{−⟨w, ∂β⟩}` over the classes of `monoid`.
    pub fn toric(monoid: &Monoid, degree: u32) -> Self {
        let n = monoid.dim();
        let mut curvature = Vec::new();
        for (pos, c) in monoid.classes().iter().enumerate() {
            for e in exponents(n, degree) {
                let mut r = -BigRational::one();
                for (a, v) in e.iter().zip(&c.boundary) {
                    for i in 1..=*a {
                        r = r * BigRational::from_integer(BigInt::from(-v)) / BigRational::from_integer(BigInt::from(i));
                    }
                }
                if !r.is_zero() {
                    curvature.push((e, monoid.generator(pos), r));
                }
            }
        }
        SeriesDga { nvars: n, degree, curvature }
    }
}

impl CurvedDga for SeriesDga {
    fn nvars(&self) -> usize {
        self.nvars
    }
    fn max_degree(&self) -> u32 {
        self.degree
    }
    fn differential<C: Scalar>(&self, _m: &BMono, _c: &NovikovElement<C>) -> Result<Vec<(BMono, NovikovElement<C>)>> {
        Ok(Vec::new())
    }
    fn curvature<C: Scalar>(&self, monoid: &Arc<Monoid>, cutoff: &BigRational) -> Vec<(BMono, NovikovElement<C>)> {
        self.curvature
            .iter()
            .map(|(e, g, r)| {
                (
                    BMono { exps: e.clone(), odd: 0 },
                    NovikovElement::monomial(monoid.clone(), cutoff.clone(), g.clone(), C::from_rational(r)),
                )
            })
            .collect()
    }
}

/// Outcome of the Maurer–Cartan check of `τ̂ = −Σ w_j ⊗ e_j` in `B ⊗ A`.
#[derive(Clone, Debug)]
pub struct McCertificate<C> {
    pub residual: TensorElement<C>,
    pub max_abs: f64,
}

/// `Σ_k (−1)^{k(k−1)/2} M^ε_k(τ̂^{⊗k})` in `B ⊗ A` with `B` the series ring at
/// `p` carrying curvature `−W`.
pub fn mc_certificate<C: Scalar>(t: &ToricData, a: &AInftyStructure, p: &[BigRational], degree: u32, tt: f64) -> Result<McCertificate<C>> {
    let monoid = Arc::new(t.monoid_at(p)?);
    let a = a.with_monoid(monoid.clone())?.in_convention(Convention::Epsilon);
    if a.arity_cutoff() + 1 < degree as usize {
        return Err(Error::CutoffInsufficient(format!("degree {degree} needs arity at least {}", degree - 1)));
    }
    let dga = SeriesDga::toric(&monoid, degree);
    let ts = tensor_with_cdga::<_, C>(&dga, &a)?;
    let mut tau = ts.zero_elem();
    for j in 0..t.dim {
        let mut e = vec![0; t.dim];
        e[j] = 1;
        tau = tau.add(&ts.pure(BMono { exps: e, odd: 0 }, 1 << j).neg())?;
    }
    let mut residual = ts.zero_elem();
    for k in 0..=a.arity_cutoff().min(degree as usize) {
        let term = ts.m(&vec![tau.clone(); k])?;
        residual = residual.add(&if mc_sign(k) > 0 { term } else { term.neg() })?;
    }
    let max_abs = residual
        .terms()
        .values()
        .map(|c| c.evaluate(tt).norm())
        .fold(0.0, f64::max);
    Ok(McCertificate { residual, max_abs })
}

/// `Φ^τ(a_1,…,a_k)` between branes `b_0,…,b_k` over the algebra based at
/// `p`, as a matrix of series. With `k = 0` this is the operator `Q` of `b_0`.
pub fn phi_tau_on_morphisms<C: Scalar>(
    t: &ToricData,
    a: &AInftyStructure,
    p: &[BigRational],
    degree: u32,
    branes: &[ExtElement<C>],
    morphisms: &[ExtElement<C>],
) -> Result<Vec<Vec<SeriesElement<C>>>> {
    if branes.len() != morphisms.len() + 1 {
        return Err(Error::LengthMismatch(branes.len(), morphisms.len() + 1));
    }
    let zero = vec![BigRational::zero(); t.dim];
    let (a, tt) = build_tau_theta::<C>(t, a, p, &zero, degree)?;
    let branes: Vec<ExtElement<C>> = branes.iter().map(|b| b.transport(a.monoid().clone())).collect::<Result<_>>()?;
    let morphisms: Vec<ExtElement<C>> = morphisms.iter().map(|b| b.transport(a.monoid().clone())).collect::<Result<_>>()?;
    let proto = SeriesElement::zero(a.monoid().clone(), a.cutoff().clone(), t.dim, degree);
    let br: Vec<&ExtElement<C>> = branes.iter().collect();
    let mo: Vec<&ExtElement<C>> = morphisms.iter().collect();
    twisted_matrix(&a, &tt, &proto, &br, &mo)
}

/// Largest coefficient of `Φ(da)(x) − (−1)^{|x|}[Q_δ Φ(a) x + Φ(a) Q_b x]`
/// over basis vectors `x`, with `d` the Hom differential from `b` to `δ`.
pub fn chain_map_residual<C: Scalar>(
    t: &ToricData,
    a: &AInftyStructure,
    p: &[BigRational],
    degree: u32,
    b: &ExtElement<C>,
    delta: &ExtElement<C>,
    x: &ExtElement<C>,
    tt: f64,
) -> Result<MfResidual> {
    let monoid = Arc::new(t.monoid_at(p)?);
    let ap = a.with_monoid(monoid.clone())?;
    let (b, delta, x) = (b.transport(monoid.clone())?, delta.transport(monoid.clone())?, x.transport(monoid)?);
    let src = TwistedComplex::rank_one(&ap, b.clone())?;
    let tgt = TwistedComplex::rank_one(&ap, delta.clone())?;
    let dx = crate::mc::hom_differential(&ap, &src, &tgt).apply(&vec![vec![x.clone()]])?.remove(0).remove(0);
    let phi_dx = phi_tau_on_morphisms(t, &ap, p, degree, &[b.clone(), delta.clone()], &[dx])?;
    let phi_x = phi_tau_on_morphisms(t, &ap, p, degree, &[b.clone(), delta.clone()], &[x])?;
    let qb = phi_tau_on_morphisms(t, &ap, p, degree, &[b], &[])?;
    let qd = phi_tau_on_morphisms(t, &ap, p, degree, &[delta], &[])?;
    let n = qb.len();
    let mul = |l: &Vec<Vec<SeriesElement<C>>>, r: &Vec<Vec<SeriesElement<C>>>| -> Result<Vec<Vec<SeriesElement<C>>>> {
        let mut out = vec![vec![l[0][0].zero_like(); n]; n];
        for o in 0..n {
            for i in 0..n {
                for m in 0..n {
                    out[o][i] = out[o][i].add(&l[o][m].mul(&r[m][i])?)?;
                }
            }
        }
        Ok(out)
    };
    let left = mul(&qd, &phi_x)?;
    let right = mul(&phi_x, &qb)?;
    let bound = degree - 1;
    let mut exact_zero = true;
    let mut max_abs: f64 = 0.0;
    for o in 0..n {
        for i in 0..n {
            let s = left[o][i].add(&right[o][i])?;
            let s = if wedge_degree(i as u32) % 2 == 1 { s.neg() } else { s };
            let r = phi_dx[o][i].sub(&s)?.truncated(bound);
            if !r.is_zero() {
                exact_zero = false;
            }
            max_abs = max_abs.max(r.max_abs_below(tt, bound));
        }
    }
    Ok(MfResidual { exact_zero, max_abs })
}

/// Rank of a matrix by Gaussian elimination; exact for `Exact`.
pub fn matrix_rank<C: Scalar>(mut m: Vec<Vec<C>>) -> usize {
    let rows = m.len();
    if rows == 0 {
        return 0;
    }
    let cols = m[0].len();
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows).find(|r| !m[*r][c].negligible()) else { continue };
        m.swap(rank, p);
        let inv = C::one() / m[rank][c].clone();
        for r in 0..rows {
            if r == rank || m[r][c].negligible() {
                continue;
            }
            let f = m[r][c].clone() * inv.clone();
            for k in c..cols {
                let v = m[rank][k].clone() * f.clone();
                m[r][k] = m[r][k].clone() - v;
            }
        }
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

#[derive(Clone, Debug)]
pub struct StrandRanks {
    /// Polynomial degree of the top-wedge component of the strand.
    pub strand: u32,
    pub dims: Vec<usize>,
    pub cohomology: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct KoszulReport {
    /// Cohomology per wedge degree, summed over fully resolved strands.
    pub ranks: Vec<usize>,
    pub strands: Vec<StrandRanks>,
    /// Strands cut by the degree truncation; not counted.
    pub excluded: Vec<u32>,
    /// The linear form is identically zero.
    pub degenerate: bool,
}

/// Cohomology of `ζ∧·` on `(polynomials of degree < D) ⊗ Λ(e)` with
/// `ζ_j = Σ_k L_{jk} w_k` in coordinates centered at the zero of `ζ`.
/// Strand `s` collects `w`-degree `s − (n − q)` in wedge degree `q`.
pub fn koszul_cohomology<C: Scalar>(n: usize, linear: &[Vec<C>], degree: u32) -> Result<KoszulReport> {
    if degree < 2 {
        return Err(Error::Input("series degree must be at least 2".into()));
    }
    if linear.len() != n || linear.iter().any(|r| r.len() != n) {
        return Err(Error::LengthMismatch(linear.len(), n));
    }
    let degenerate = linear.iter().flatten().all(|c| c.negligible());
    let mono = |d: i64| -> Vec<Vec<u32>> {
        if d < 0 {
            Vec::new()
        } else {
            exponents(n, d as u32 + 1).into_iter().filter(|e| e.iter().sum::<u32>() as i64 == d).collect()
        }
    };
    let wedges = |q: usize| -> Vec<WedgeIndex> { (0..(1u32 << n)).filter(|m| wedge_degree(*m) == q).collect() };
    let mut report = KoszulReport { ranks: vec![0; n + 1], strands: Vec::new(), excluded: Vec::new(), degenerate };
    for s in 0..(degree + n as u32) {
        let resolved = s < degree;
        if !resolved {
            report.excluded.push(s);
            continue;
        }
        let spaces: Vec<Vec<(Vec<u32>, WedgeIndex)>> = (0..=n)
            .map(|q| {
                let d = s as i64 - (n - q) as i64;
                let mut v = Vec::new();
                for e in mono(d) {
                    for w in wedges(q) {
                        v.push((e.clone(), w));
                    }
                }
                v
            })
            .collect();
        let dims: Vec<usize> = spaces.iter().map(|v| v.len()).collect();
        let mut ranks = vec![0usize; n + 1];
        for q in 0..n {
            let (src, dst) = (&spaces[q], &spaces[q + 1]);
            if src.is_empty() || dst.is_empty() {
                continue;
            }
            let index: HashMap<(Vec<u32>, WedgeIndex), usize> = dst.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
            let mut m = vec![vec![C::zero(); src.len()]; dst.len()];
            for (col, (e, w)) in src.iter().enumerate() {
                for (j, row) in linear.iter().enumerate() {
                    let Some((wm, sign)) = wedge_masks(1 << j, *w) else { continue };
                    for (k, c) in row.iter().enumerate() {
                        if c.negligible() {
                            continue;
                        }
                        let mut f = e.clone();
                        f[k] += 1;
                        let r = index[&(f, wm)];
                        m[r][col] = m[r][col].clone() + c.clone() * C::from_i64(sign as i64);
                    }
                }
            }
            ranks[q] = matrix_rank(m);
        }
        let cohomology: Vec<usize> = (0..=n)
            .map(|q| dims[q] - ranks[q] - if q > 0 { ranks[q - 1] } else { 0 })
            .collect();
        for (q, h) in cohomology.iter().enumerate() {
            report.ranks[q] += h;
        }
        report.strands.push(StrandRanks { strand: s, dims, cohomology });
    }
    Ok(report)
}

/// The standard chart: `ζ_j = w_j` around any center.
pub fn identity_form<C: Scalar>(n: usize) -> Vec<Vec<C>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { C::one() } else { C::zero() }).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::novikov::{rat, Exact, Float};
    use crate::toric::{divisor_core, fixtures};

    fn proto(n: usize, d: u32) -> SeriesElement<Exact> {
        let m = Arc::new(Monoid::new(vec![], n).unwrap());
        SeriesElement::zero(m, rat(3, 1), n, d)
    }

    #[test]
    fn division_examples() {
        let p = proto(1, 6);
        let w = p.var_like(0);
        let g = series_div_vanishing(&w.mul(&w).unwrap(), &[Exact::one()]).unwrap();
        assert_eq!(g, w);
        let bad = p.scalar_like(Exact::one()).add(&w).unwrap();
        assert!(matches!(series_div_vanishing(&bad, &[Exact::one()]), Err(Error::Remainder(_))));
        // (e^{−w} − 1)/(−w) has constant term 1.
        let one = NovikovElement::constant(p.monoid().clone(), p.cutoff().clone(), Exact::one());
        let f = SeriesElement::exp_linear(&one, &[1], 1, 6).sub(&p.scalar_like(Exact::one())).unwrap();
        let g = series_div_vanishing(&f, &[-Exact::one()]).unwrap();
        assert_eq!(g.coeff(&[0]).coeff(&MonoidIndex(vec![])), Exact::one());
    }

    #[test]
    fn two_variable_division() {
        let p = proto(2, 7);
        let (x, y) = (p.var_like(0), p.var_like(1));
        let l = x.add(&y.scale(&Exact::from_i64(2))).unwrap();
        let g = x.mul(&x).unwrap().sub(&y).unwrap().add(&x.mul(&y).unwrap().mul(&y).unwrap()).unwrap();
        let f = g.mul(&l).unwrap();
        let q = series_div_vanishing(&f, &[Exact::one(), Exact::from_i64(2)]).unwrap();
        assert_eq!(q.truncated(6), g.truncated(6));
    }

    #[test]
    fn cp1_unit_column_is_koszul() {
        let t = fixtures::cp1();
        let a = divisor_core(&t, 12, rat(3, 1)).unwrap();
        let q = mf_from_brane::<Exact>(&t, &a, &[rat(1, 2)], &[rat(0, 1)], 10).unwrap();
        let col = q.column(0);
        assert_eq!(col.len(), 1);
        assert_eq!(col[&1], col[&1].var_like(0));
        assert!(q.raising_part_is_koszul());
        assert!(q.verify((-1f64).exp()).unwrap().exact_zero);
    }

    #[test]
    fn cp1_twisted_brane_is_exact() {
        let t = fixtures::cp1();
        let a = divisor_core(&t, 14, rat(3, 1)).unwrap();
        let q = mf_from_brane::<Exact>(&t, &a, &[rat(1, 3)], &[rat(1, 4)], 10).unwrap();
        assert!(q.verify((-1f64).exp()).unwrap().exact_zero);
        assert!(q.raising_part_is_koszul());
    }

    #[test]
    fn koszul_examples() {
        let r = koszul_cohomology::<Exact>(1, &identity_form(1), 6).unwrap();
        assert_eq!(r.ranks, vec![0, 1]);
        let r = koszul_cohomology::<Exact>(2, &identity_form(2), 6).unwrap();
        assert_eq!(r.ranks, vec![0, 0, 1]);
        let z = vec![vec![Exact::zero()]];
        let r = koszul_cohomology::<Exact>(1, &z, 6).unwrap();
        assert!(r.degenerate);
        for s in &r.strands {
            assert_eq!(s.dims, s.cohomology);
        }
    }

    #[test]
    fn certificate_cp1() {
        let t = fixtures::cp1();
        let a = divisor_core(&t, 12, rat(3, 1)).unwrap();
        let c = mc_certificate::<Exact>(&t, &a, &[rat(1, 2)], 10, (-1f64).exp()).unwrap();
        assert!(c.residual.is_zero(), "{:?}", c.residual);
        let c = mc_certificate::<Float>(&t, &a, &[rat(1, 2)], 10, (-1f64).exp()).unwrap();
        assert!(c.max_abs < 1e-12);
    }
}
