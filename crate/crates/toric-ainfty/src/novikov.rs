//! Relative Novikov ring over a monoid of disk classes.
//!
//! Elements are finite sums `Σ c·T^β` truncated at an energy cutoff `E`: any
//! term whose energy reaches `E` is dropped on construction. Energies are
//! exact rationals so truncation never depends on rounding.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Coefficient field. Implemented for exact complex rationals and `Complex64`.
pub trait Scalar:
    Clone + PartialEq + fmt::Debug + Num + std::ops::Neg<Output = Self> + Send + Sync + 'static
{
    fn from_rational(r: &BigRational) -> Self;
    fn imag_unit() -> Self;
    /// Canonical-form test: exact zero in exact mode, `|c| < 1e-14` in float mode.
    fn negligible(&self) -> bool;
    fn to_c64(&self) -> Complex64;
    /// Best representation of a float pair. Exact mode converts the binary value exactly.
    fn from_parts(re: f64, im: f64) -> Self;

    fn from_i64(v: i64) -> Self {
        Self::from_rational(&BigRational::from_integer(BigInt::from(v)))
    }
}

pub type Exact = Complex<BigRational>;
pub type Float = Complex64;

fn rat_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap_or_else(BigRational::zero)
}

impl Scalar for Exact {
    fn from_rational(r: &BigRational) -> Self {
        Complex::new(r.clone(), BigRational::zero())
    }
    fn imag_unit() -> Self {
        Complex::new(BigRational::zero(), BigRational::one())
    }
    fn negligible(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
    fn from_parts(re: f64, im: f64) -> Self {
        Complex::new(rat_from_f64(re), rat_from_f64(im))
    }
}

impl Scalar for Float {
    fn from_rational(r: &BigRational) -> Self {
        Complex64::new(r.to_f64().unwrap_or(f64::NAN), 0.0)
    }
    fn imag_unit() -> Self {
        Complex64::new(0.0, 1.0)
    }
    fn negligible(&self) -> bool {
        self.norm() < 1e-14
    }
    fn to_c64(&self) -> Complex64 {
        *self
    }
    fn from_parts(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Parse an energy or coordinate: a JSON number (read through its decimal
/// text, so `0.1` becomes `1/10`) or a string `"p/q"`.
pub fn parse_rational(v: &serde_json::Value) -> Result<BigRational> {
    match v {
        serde_json::Value::Number(n) => parse_rational_str(&n.to_string()),
        serde_json::Value::String(s) => parse_rational_str(s),
        other => Err(Error::Input(format!("expected a number, got {other}"))),
    }
}

pub fn parse_rational_str(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Input(format!("cannot read {s:?} as a rational number"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    let all: String = format!("{int_part}{frac_part}");
    let num: BigInt = all.parse().map_err(|_| bad())?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut r = BigRational::from_integer(num);
    if scale >= 0 {
        r *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -r } else { r })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiskClass {
    pub id: u32,
    /// Symplectic area at the monoid's basepoint.
    pub energy0: BigRational,
    pub maslov: i32,
    pub boundary: Vec<i64>,
}

/// Registry of disk classes against which indices are validated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Monoid {
    dim: usize,
    classes: Vec<DiskClass>,
}

impl Monoid {
    pub fn new(classes: Vec<DiskClass>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Input("dimension must be positive".into()));
        }
        for (i, c) in classes.iter().enumerate() {
            if classes[..i].iter().any(|d| d.id == c.id) {
                return Err(Error::DuplicateClass(c.id));
            }
            if c.boundary.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: c.boundary.len() });
            }
            if c.energy0.is_negative() {
                return Err(Error::Input(format!("class {} has negative energy", c.id)));
            }
            if c.maslov % 2 != 0 {
                return Err(Error::Input(format!("class {} has odd Maslov index", c.id)));
            }
        }
        Ok(Monoid { dim, classes })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> &[DiskClass] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn zero(&self) -> MonoidIndex {
        MonoidIndex(vec![0; self.classes.len()])
    }

    /// Index of the generator at position `pos`.
    pub fn generator(&self, pos: usize) -> MonoidIndex {
        let mut m = self.zero();
        m.0[pos] = 1;
        m
    }

    pub fn position(&self, id: u32) -> Option<usize> {
        self.classes.iter().position(|c| c.id == id)
    }

    pub fn energy(&self, idx: &MonoidIndex) -> BigRational {
        let mut e = BigRational::zero();
        for (m, c) in idx.0.iter().zip(&self.classes) {
            if *m != 0 {
                e += &c.energy0 * BigRational::from_integer(BigInt::from(*m));
            }
        }
        e
    }

    pub fn maslov(&self, idx: &MonoidIndex) -> i64 {
        idx.0.iter().zip(&self.classes).map(|(m, c)| *m as i64 * c.maslov as i64).sum()
    }

    pub fn boundary(&self, idx: &MonoidIndex) -> Vec<i64> {
        let mut b = vec![0i64; self.dim];
        for (m, c) in idx.0.iter().zip(&self.classes) {
            for (bi, ci) in b.iter_mut().zip(&c.boundary) {
                *bi += *m as i64 * ci;
            }
        }
        b
    }

    /// Same classes with areas moved by the area-variation rule
    /// `E_β(u0 + s) = E_β(u0) + ⟨s, ∂β⟩`.
    pub fn rebased(&self, shift: &[BigRational]) -> Result<Monoid> {
        if shift.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: shift.len() });
        }
        let mut classes = self.classes.clone();
        for c in &mut classes {
            for (s, b) in shift.iter().zip(&c.boundary) {
                c.energy0 += s * BigRational::from_integer(BigInt::from(*b));
            }
            if c.energy0.is_negative() {
                return Err(Error::Input(format!(
                    "class {} acquires negative area after re-basing",
                    c.id
                )));
            }
        }
        Monoid::new(classes, self.dim)
    }
}

/// Multiplicity vector, positionally aligned with `Monoid::classes`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonoidIndex(pub Vec<u32>);

impl MonoidIndex {
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|m| *m == 0)
    }

    pub fn add(&self, other: &MonoidIndex) -> MonoidIndex {
        MonoidIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self - other` when `other ≤ self` componentwise.
    pub fn checked_sub(&self, other: &MonoidIndex) -> Option<MonoidIndex> {
        let mut v = Vec::with_capacity(self.0.len());
        for (a, b) in self.0.iter().zip(&other.0) {
            v.push(a.checked_sub(*b)?);
        }
        Some(MonoidIndex(v))
    }

    pub fn le(&self, other: &MonoidIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Positions with nonzero multiplicity.
    pub fn support(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, m)| **m > 0).map(|(i, _)| i).collect()
    }
}

/// Truncated element of the relative Novikov ring.
#[derive(Clone, Debug)]
pub struct NovikovElement<C> {
    monoid: Arc<Monoid>,
    cutoff: BigRational,
    terms: BTreeMap<MonoidIndex, C>,
}

impl<C: Scalar> PartialEq for NovikovElement<C> {
    fn eq(&self, other: &Self) -> bool {
        self.cutoff == other.cutoff && self.terms == other.terms && same_monoid(&self.monoid, &other.monoid)
    }
}

fn same_monoid(a: &Arc<Monoid>, b: &Arc<Monoid>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

impl<C: Scalar> NovikovElement<C> {
    pub fn zero(monoid: Arc<Monoid>, cutoff: BigRational) -> Self {
        NovikovElement { monoid, cutoff, terms: BTreeMap::new() }
    }

    pub fn constant(monoid: Arc<Monoid>, cutoff: BigRational, c: C) -> Self {
        let z = monoid.zero();
        Self::monomial(monoid, cutoff, z, c)
    }

    pub fn monomial(monoid: Arc<Monoid>, cutoff: BigRational, idx: MonoidIndex, c: C) -> Self {
        let mut out = Self::zero(monoid, cutoff);
        out.add_term(idx, c);
        out
    }

    /// `T^{β}` for the class at position `pos`.
    pub fn t_class(monoid: Arc<Monoid>, cutoff: BigRational, pos: usize) -> Self {
        let idx = monoid.generator(pos);
        Self::monomial(monoid, cutoff, idx, C::one())
    }

    pub fn monoid(&self) -> &Arc<Monoid> {
        &self.monoid
    }

    pub fn cutoff(&self) -> &BigRational {
        &self.cutoff
    }

    pub fn terms(&self) -> &BTreeMap<MonoidIndex, C> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, idx: &MonoidIndex) -> C {
        self.terms.get(idx).cloned().unwrap_or_else(C::zero)
    }

    /// Accumulate `c·T^idx`, honouring the cutoff and canonical form.
    pub fn add_term(&mut self, idx: MonoidIndex, c: C) {
        if c.negligible() || self.monoid.energy(&idx) >= self.cutoff {
            return;
        }
        match self.terms.entry(idx) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get().clone() + c;
                if s.negligible() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        if !same_monoid(&self.monoid, &other.monoid) {
            return Err(Error::MonoidMismatch);
        }
        if self.cutoff != other.cutoff {
            return Err(Error::CutoffMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.add_term(k.clone(), v.clone());
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
        let mut out = Self::zero(self.monoid.clone(), self.cutoff.clone());
        for (k, v) in &self.terms {
            out.add_term(k.clone(), v.clone() * c.clone());
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        let mut out = Self::zero(self.monoid.clone(), self.cutoff.clone());
        for (ka, va) in &self.terms {
            for (kb, vb) in &other.terms {
                out.add_term(ka.add(kb), va.clone() * vb.clone());
            }
        }
        Ok(out)
    }

    /// Multiply by `c·T^idx`.
    pub fn mul_monomial(&self, idx: &MonoidIndex, c: &C) -> Self {
        let mut out = Self::zero(self.monoid.clone(), self.cutoff.clone());
        for (k, v) in &self.terms {
            out.add_term(k.add(idx), v.clone() * c.clone());
        }
        out
    }

    /// Minimal energy over stored terms; `None` stands for `+∞`.
    pub fn valuation(&self) -> Option<BigRational> {
        self.terms.keys().map(|k| self.monoid.energy(k)).min()
    }

    /// `Σ c·t^{energy}` with `T` specialised to the real number `t`.
    pub fn evaluate(&self, t: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|(k, v)| v.to_c64() * t.powf(self.monoid.energy(k).to_f64().unwrap_or(f64::NAN)))
            .sum()
    }

    /// Gauss–Manin action in direction `i` (0-based): `c·T^β ↦ −⟨∂β, e_i⟩·c·T^β`.
    pub fn gm_derivative(&self, i: usize) -> Result<Self> {
        if i >= self.monoid.dim() {
            return Err(Error::DirectionOutOfRange { direction: i, dim: self.monoid.dim() });
        }
        let mut out = Self::zero(self.monoid.clone(), self.cutoff.clone());
        for (k, v) in &self.terms {
            let b = self.monoid.boundary(k)[i];
            if b != 0 {
                out.add_term(k.clone(), v.clone() * C::from_i64(-b));
            }
        }
        Ok(out)
    }

    pub fn truncate(&self, cutoff: &BigRational) -> Self {
        let cut = cutoff.min(&self.cutoff).clone();
        let mut out = Self::zero(self.monoid.clone(), cut);
        for (k, v) in &self.terms {
            out.add_term(k.clone(), v.clone());
        }
        out
    }

    /// Reinterpret the same monoid symbols over another registry with the
    /// same classes (for example after re-basing); terms reaching the
    /// cutoff under the new energies are dropped.
    pub fn transport(&self, monoid: Arc<Monoid>) -> Result<Self> {
        if monoid.len() != self.monoid.len() || monoid.dim() != self.monoid.dim() {
            return Err(Error::MonoidMismatch);
        }
        let mut out = Self::zero(monoid, self.cutoff.clone());
        for (k, v) in &self.terms {
            out.add_term(k.clone(), v.clone());
        }
        Ok(out)
    }

    pub fn map_coeffs<D: Scalar>(&self, f: impl Fn(&C) -> D) -> NovikovElement<D> {
        let mut out = NovikovElement::zero(self.monoid.clone(), self.cutoff.clone());
        for (k, v) in &self.terms {
            out.add_term(k.clone(), f(v));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let terms: Vec<serde_json::Value> = self
            .terms
            .iter()
            .map(|(k, v)| {
                let c = v.to_c64();
                serde_json::json!({ "index": k.0, "re": c.re, "im": c.im })
            })
            .collect();
        serde_json::json!({ "terms": terms, "cutoff": self.cutoff.to_f64() })
    }
}

impl<C: Scalar> fmt::Display for NovikovElement<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, v) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let c = v.to_c64();
            write!(f, "({}{:+}i)", c.re, c.im)?;
            if !k.is_zero() {
                write!(f, "·T^{:?}", k.0)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cp1() -> Arc<Monoid> {
        Arc::new(
            Monoid::new(
                vec![
                    DiskClass { id: 1, energy0: rat(1, 2), maslov: 2, boundary: vec![1] },
                    DiskClass { id: 2, energy0: rat(1, 2), maslov: 2, boundary: vec![-1] },
                ],
                1,
            )
            .unwrap(),
        )
    }

    fn t(m: &Arc<Monoid>, e: &BigRational, pos: usize) -> NovikovElement<Exact> {
        NovikovElement::t_class(m.clone(), e.clone(), pos)
    }

    fn one(m: &Arc<Monoid>, e: &BigRational) -> NovikovElement<Exact> {
        NovikovElement::constant(m.clone(), e.clone(), Exact::one())
    }

    #[test]
    fn monoid_validation() {
        assert!(Monoid::new(vec![], 1).is_ok());
        let c = DiskClass { id: 3, energy0: rat(1, 1), maslov: 2, boundary: vec![1] };
        assert!(matches!(
            Monoid::new(vec![c.clone(), c.clone()], 1),
            Err(Error::DuplicateClass(3))
        ));
        assert!(Monoid::new(vec![c], 2).is_err());
    }

    #[test]
    fn product_of_generators() {
        let m = cp1();
        let e = rat(3, 1);
        let p = t(&m, &e, 0).mul(&t(&m, &e, 1)).unwrap();
        let (idx, _) = p.terms().iter().next().unwrap();
        assert_eq!(m.energy(idx), rat(1, 1));
        assert_eq!(m.maslov(idx), 4);
        let lo = rat(9, 10);
        assert!(t(&m, &lo, 0).mul(&t(&m, &lo, 1)).unwrap().is_zero());
    }

    #[test]
    fn difference_of_squares() {
        let m = cp1();
        let e = rat(3, 1);
        let a = one(&m, &e).add(&t(&m, &e, 0)).unwrap();
        let b = one(&m, &e).sub(&t(&m, &e, 0)).unwrap();
        let t2 = t(&m, &e, 0).mul(&t(&m, &e, 0)).unwrap();
        assert_eq!(a.mul(&b).unwrap(), one(&m, &e).sub(&t2).unwrap());
    }

    #[test]
    fn valuation_cases() {
        let m = cp1();
        let e = rat(3, 1);
        let x = t(&m, &e, 0)
            .scale(&Exact::from_i64(3))
            .add(&t(&m, &e, 0).mul(&t(&m, &e, 1)).unwrap().scale(&Exact::from_i64(5)))
            .unwrap();
        assert_eq!(x.valuation(), Some(rat(1, 2)));
        assert_eq!(NovikovElement::<Exact>::zero(m.clone(), e.clone()).valuation(), None);
        assert_eq!(one(&m, &e).scale(&Exact::from_i64(7)).valuation(), Some(rat(0, 1)));
    }

    #[test]
    fn evaluation() {
        let m = cp1();
        let e = rat(3, 1);
        let t0 = (-1f64).exp();
        assert!((t(&m, &e, 0).evaluate(t0) - Complex64::new((-0.5f64).exp(), 0.0)).norm() < 1e-15);
        let s = t(&m, &e, 0).add(&t(&m, &e, 1)).unwrap().scale(&Exact::from_i64(2));
        assert!((s.evaluate(t0).re - 4.0 * (-0.5f64).exp()).abs() < 1e-14);
        assert_eq!(NovikovElement::<Exact>::zero(m, e).evaluate(t0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn gauss_manin() {
        let m = cp1();
        let e = rat(3, 1);
        assert_eq!(t(&m, &e, 0).gm_derivative(0).unwrap(), t(&m, &e, 0).neg());
        assert!(one(&m, &e).gm_derivative(0).unwrap().is_zero());
        let p = t(&m, &e, 0).mul(&t(&m, &e, 1)).unwrap();
        assert!(p.gm_derivative(0).unwrap().is_zero());
        assert!(p.gm_derivative(1).is_err());
    }

    #[test]
    fn float_mode_drops_tiny() {
        let m = cp1();
        let e = rat(3, 1);
        let mut x = NovikovElement::<Float>::zero(m, e);
        x.add_term(MonoidIndex(vec![1, 0]), Complex64::new(1e-16, 0.0));
        assert!(x.is_zero());
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational_str("0.1").unwrap(), rat(1, 10));
        assert_eq!(parse_rational_str("-3/6").unwrap(), rat(-1, 2));
        assert_eq!(parse_rational_str("2.5e-1").unwrap(), rat(1, 4));
        assert_eq!(parse_rational(&serde_json::json!(0.5)).unwrap(), rat(1, 2));
        assert!(parse_rational_str("x").is_err());
    }

    #[test]
    fn rebasing_moves_areas() {
        let m = cp1();
        let r = m.rebased(&[rat(-1, 4)]).unwrap();
        assert_eq!(r.classes()[0].energy0, rat(1, 4));
        assert_eq!(r.classes()[1].energy0, rat(3, 4));
        assert!(m.rebased(&[rat(-1, 1)]).is_err());
    }
}
