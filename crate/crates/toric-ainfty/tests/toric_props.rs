mod common;

use num_complex::Complex64;
use num_traits::ToPrimitive;
use proptest::prelude::*;

use common::{cp2_completed, t0};
use toric_ainfty::novikov::{rat, MonoidIndex};
use toric_ainfty::toric::{divisor_core, divisor_identity_residual, fixtures, parse_polytope, potential, Facet, ToricData};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn divisor_identity_on_cp1(
        gamma in prop::collection::vec(0u32..3, 2),
        k in 0usize..=2,
        b in -3i64..=3,
        l in 1usize..=3,
    ) {
        let a = divisor_core(&fixtures::cp1(), 6, rat(3, 1)).unwrap();
        let inputs = vec![0usize; k];
        let r = divisor_identity_residual(&a, &MonoidIndex(gamma), &inputs, &[b], l).unwrap();
        prop_assert!(r.is_zero());
    }

    #[test]
    fn divisor_identity_on_completed_cp2(
        gamma in prop::collection::vec(0u32..2, 3),
        inputs in prop::collection::vec(0usize..2, 0..=2),
        b in prop::collection::vec(-2i64..=2, 2),
    ) {
        let a = cp2_completed();
        if inputs.len() + 1 < a.arity_cutoff() {
            let r = divisor_identity_residual(a, &MonoidIndex(gamma), &inputs, &b, 1).unwrap();
            prop_assert!(r.is_zero());
        }
    }

    #[test]
    fn cp1_potential_is_the_closed_form(p in 1i64..40, y in -6.0f64..6.0) {
        let t = fixtures::cp1();
        let a = divisor_core(&t, 8, rat(3, 1)).unwrap();
        let x = rat(p, 40);
        let z = Complex64::new(x.to_f64().unwrap(), y);
        let w = potential(&t, &a, &[x], &[y], t0()).unwrap();
        prop_assert!((w - ((-z).exp() + (z - 1.0).exp())).norm() < 1e-12);
    }

    #[test]
    fn simplex_round_trips_through_json(c in 1i64..9, d in 2i64..7) {
        let doc = format!(
            r#"{{"dimension": 2, "facets": [{{"normal": [1, 0], "offset": 0}}, {{"normal": [0, 1], "offset": 0}}, {{"normal": [-1, -1], "offset": "{}"}}], "basepoint": ["{c}/{}", "{c}/{}"]}}"#,
            -c, 3 * d, 3 * d
        );
        let t = parse_polytope(&doc).unwrap();
        let want = ToricData::new(
            2,
            vec![
                Facet { normal: vec![1, 0], offset: rat(0, 1) },
                Facet { normal: vec![0, 1], offset: rat(0, 1) },
                Facet { normal: vec![-1, -1], offset: rat(-c, 1) },
            ],
            vec![rat(c, 3 * d), rat(c, 3 * d)],
        )
        .unwrap();
        prop_assert_eq!(t, want);
    }
}

#[test]
fn exterior_basepoint_is_rejected() {
    let doc = r#"{"dimension": 1, "facets": [{"normal": [1], "offset": 0}, {"normal": [-1], "offset": -1}], "basepoint": [2]}"#;
    assert!(parse_polytope(doc).is_err());
}
