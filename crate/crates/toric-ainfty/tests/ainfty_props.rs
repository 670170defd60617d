mod common;

use proptest::prelude::*;

use common::{cp1_at, cp2_completed, ext, raw_terms, small_rat, RawTerms};
use toric_ainfty::ainfty::{basis_tuples, epsilon_relation, tensor_with_cdga, BMono, Convention, ScalarDga, TensorElement};
use toric_ainfty::family::Family;
use toric_ainfty::graded::{wedge_degree, ExtElement};
use toric_ainfty::koszul::SeriesDga;
use toric_ainfty::novikov::{rat, Exact, MonoidIndex, NovikovElement};
use toric_ainfty::toric::{divisor_core, fixtures};

fn cp1_inputs(n: usize) -> impl Strategy<Value = Vec<RawTerms>> {
    prop::collection::vec(raw_terms(2, 2, 2, 3), n)
}

fn cp2_inputs(n: usize) -> impl Strategy<Value = Vec<RawTerms>> {
    prop::collection::vec(raw_terms(4, 3, 1, 2), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cp1_relations_hold_in_both_conventions(n in 0usize..=4, raw in cp1_inputs(4)) {
        let a = cp1_at(rat(1, 2), 6, rat(3, 1));
        let xs: Vec<ExtElement<Exact>> = raw[..n].iter().map(|t| ext(&a, t)).collect();
        prop_assert!(a.relation_residual(&xs).unwrap().is_zero());
        let e = a.in_convention(Convention::Epsilon);
        prop_assert!(e.relation_residual(&xs).unwrap().is_zero());
    }

    #[test]
    fn cp2_relations_hold_in_both_conventions(n in 0usize..=3, raw in cp2_inputs(3)) {
        let a = cp2_completed();
        let xs: Vec<ExtElement<Exact>> = raw[..n].iter().map(|t| ext(a, t)).collect();
        prop_assert!(a.relation_residual(&xs).unwrap().is_zero());
        prop_assert!(a.in_convention(Convention::Epsilon).relation_residual(&xs).unwrap().is_zero());
    }

    #[test]
    fn convention_round_trip_is_identity(n in 0usize..=4, raw in cp2_inputs(4)) {
        let a = cp2_completed();
        let back = a.convert_convention().convert_convention();
        let xs: Vec<ExtElement<Exact>> = raw[..n].iter().map(|t| ext(a, t)).collect();
        prop_assert_eq!(a.apply(&xs).unwrap(), back.apply(&xs).unwrap());
    }

    #[test]
    fn operators_have_degree_two_minus_k_minus_maslov(masks in (0usize..=4).prop_flat_map(|k| prop::collection::vec(0u32..4, k))) {
        let a = cp2_completed();
        let m = a.monoid();
        let k = masks.len() as i64;
        let input: i64 = masks.iter().map(|x| wedge_degree(*x) as i64).sum();
        for (g, out) in a.eval_basis(&masks).keys() {
            prop_assert_eq!(wedge_degree(*out) as i64, input + 2 - k - m.maslov(g));
        }
    }

    #[test]
    fn central_scalar_curvature_keeps_the_relations(c in small_rat(), n in 0usize..=3, raw in cp1_inputs(3)) {
        let a = cp1_at(rat(1, 3), 6, rat(3, 1)).in_convention(Convention::Epsilon);
        let b = ScalarDga { curvature: c };
        let s = tensor_with_cdga::<_, Exact>(&b, &a).unwrap();
        let xs: Vec<TensorElement<Exact>> = raw[..n]
            .iter()
            .map(|t| {
                let x = ext(&a, t);
                let mut f = s.zero_elem();
                for (mask, c) in x.comps() {
                    f.add_term(BMono::one(0), *mask, c);
                }
                f
            })
            .collect();
        prop_assert!(epsilon_relation(&s, &xs).unwrap().is_zero());
    }

    #[test]
    fn relations_over_odd_forms(n in 0usize..=3, raw in prop::collection::vec((0u32..2, 0u32..4, 0u32..2, small_rat()), 1..4), pick in prop::collection::vec(0usize..8, 3)) {
        // `B` = polynomial forms on the base with `d = 0`; odd `dx` enter the signs.
        let t = fixtures::cp1();
        let core = divisor_core(&t, 5, rat(3, 1)).unwrap();
        let fam = Family::new(&t, &core, &[rat(1, 2)], 4).unwrap();
        let s = fam.fiberwise::<Exact>().unwrap();
        let m = fam.algebra().monoid().clone();
        let one = |g: u32| NovikovElement::monomial(m.clone(), fam.algebra().cutoff().clone(), MonoidIndex(vec![g, 0]), Exact::new(rat(1, 1), rat(0, 1)));
        let mut pool = Vec::new();
        for (forms, deg, mask, c) in &raw {
            let e = fam.element(vec![*deg], *forms, *mask, one(deg % 2).scale(&Exact::new(c.clone(), rat(0, 1))));
            pool.push(e);
        }
        let xs: Vec<TensorElement<Exact>> = pick[..n].iter().map(|i| pool[i % pool.len()].clone()).collect();
        prop_assert!(epsilon_relation(&s, &xs).unwrap().is_zero());
    }

    #[test]
    fn relations_over_the_series_ring(n in 0usize..=3, raw in prop::collection::vec((0u32..5, 0u32..2, small_rat()), 1..4), pick in prop::collection::vec(0usize..8, 3)) {
        let t = fixtures::cp1();
        let a = divisor_core(&t, 6, rat(3, 1)).unwrap().in_convention(Convention::Epsilon);
        let b = SeriesDga::toric(a.monoid(), 5);
        let s = tensor_with_cdga::<_, Exact>(&b, &a).unwrap();
        let pool: Vec<TensorElement<Exact>> = raw
            .iter()
            .map(|(d, mask, c)| {
                let nc = NovikovElement::constant(a.monoid().clone(), a.cutoff().clone(), Exact::new(c.clone(), rat(0, 1)));
                TensorElement::pure(a.monoid().clone(), a.cutoff().clone(), BMono { exps: vec![*d], odd: 0 }, *mask, nc)
            })
            .collect();
        let xs: Vec<TensorElement<Exact>> = pick[..n].iter().map(|i| pool[i % pool.len()].clone()).collect();
        prop_assert!(epsilon_relation(&s, &xs).unwrap().is_zero());
    }
}

#[test]
fn dropped_signs_are_detected() {
    let a = cp1_at(rat(1, 2), 6, rat(3, 1)).with_sign_fault();
    assert!(!a.relation_failures(4).unwrap().is_empty());
}

#[test]
fn basis_tuple_count() {
    for n in 0..4 {
        assert_eq!(basis_tuples(4, n).len(), 4usize.pow(n as u32));
    }
}
