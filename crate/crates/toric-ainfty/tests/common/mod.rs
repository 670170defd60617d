#![allow(dead_code)]

use std::sync::{Arc, OnceLock};

use num_rational::BigRational;
use proptest::prelude::*;

use toric_ainfty::ainfty::AInftyStructure;
use toric_ainfty::graded::{ExtElement, WedgeIndex};
use toric_ainfty::novikov::{rat, Exact, Monoid, MonoidIndex, NovikovElement};
use toric_ainfty::toric::{complete, divisor_core, fixtures, CompletionOptions};

pub fn t0() -> f64 {
    (-1f64).exp()
}

pub fn cp1_at(u: BigRational, arity: usize, cutoff: BigRational) -> AInftyStructure {
    let t = fixtures::cp1();
    let core = divisor_core(&t, arity, cutoff).unwrap();
    core.with_monoid(Arc::new(t.monoid_at(&[u]).unwrap())).unwrap()
}

/// Completed CP² at arity 5, energy cutoff 3.
pub fn cp2_completed() -> &'static AInftyStructure {
    static A: OnceLock<AInftyStructure> = OnceLock::new();
    A.get_or_init(|| {
        let core = divisor_core(&fixtures::cp2(), 5, rat(3, 1)).unwrap();
        complete(&core, &CompletionOptions::new(5)).unwrap().0
    })
}

/// Completed CP² at arity 5, energy cutoff 1: odd elements of positive
/// valuation then have vanishing third powers, so every Maurer–Cartan sum
/// closes below the arity cutoff.
pub fn cp2_completed_low() -> &'static AInftyStructure {
    static A: OnceLock<AInftyStructure> = OnceLock::new();
    A.get_or_init(|| {
        let core = divisor_core(&fixtures::cp2(), 5, rat(1, 1)).unwrap();
        complete(&core, &CompletionOptions::new(5)).unwrap().0
    })
}

/// Small nonzero-denominator rationals.
pub fn small_rat() -> impl Strategy<Value = BigRational> {
    (-5i64..=5, 1i64..=4).prop_map(|(p, q)| rat(p, q))
}

pub fn exact(re: &BigRational, im: &BigRational) -> Exact {
    Exact::new(re.clone(), im.clone())
}

/// Terms `(mask, exponent vector, re, im)`.
pub type RawTerms = Vec<(WedgeIndex, Vec<u32>, BigRational, BigRational)>;

pub fn raw_terms(masks: u32, gens: usize, max_exp: u32, len: usize) -> impl Strategy<Value = RawTerms> {
    prop::collection::vec((0..masks, prop::collection::vec(0..=max_exp, gens), small_rat(), small_rat()), 0..=len)
}

pub fn nov(m: &Arc<Monoid>, cutoff: &BigRational, terms: &RawTerms) -> NovikovElement<Exact> {
    let mut x = NovikovElement::zero(m.clone(), cutoff.clone());
    for (_, e, re, im) in terms {
        x.add_term(MonoidIndex(e.clone()), exact(re, im));
    }
    x
}

pub fn ext(a: &AInftyStructure, terms: &RawTerms) -> ExtElement<Exact> {
    let mut x = a.zero_elem::<Exact>();
    for (mask, e, re, im) in terms {
        x.add_term(*mask, MonoidIndex(e.clone()), exact(re, im));
    }
    x
}

/// The odd part of `x` with every term pushed to positive valuation.
pub fn odd_positive(a: &AInftyStructure, terms: &RawTerms) -> ExtElement<Exact> {
    let mut x = a.zero_elem::<Exact>();
    for (mask, e, re, im) in terms {
        if toric_ainfty::graded::wedge_degree(*mask) % 2 == 1 && e.iter().any(|v| *v > 0) {
            x.add_term(*mask, MonoidIndex(e.clone()), exact(re, im));
        }
    }
    x
}
