mod common;

use std::sync::Arc;

use proptest::prelude::*;

use common::{small_rat, t0};
use toric_ainfty::koszul::{koszul_cohomology, matrix_rank, mf_from_brane, series_div_vanishing, SeriesElement};
use toric_ainfty::novikov::{rat, Exact, Monoid, NovikovElement};
use toric_ainfty::toric::{divisor_core, fixtures};

fn ex(p: i64) -> Exact {
    Exact::new(rat(p, 1), rat(0, 1))
}

#[test]
fn cp1_factorizations_are_exact_on_a_grid() {
    let t = fixtures::cp1();
    let a = divisor_core(&t, 12, rat(3, 1)).unwrap();
    for u in [rat(1, 6), rat(1, 3), rat(1, 2), rat(2, 3), rat(5, 6)] {
        for al in [rat(-1, 2), rat(-1, 4), rat(0, 1), rat(1, 4), rat(1, 2)] {
            let q = mf_from_brane::<Exact>(&t, &a, &[u.clone()], &[al.clone()], 8).unwrap();
            let v = q.verify(t0()).unwrap();
            assert!(v.exact_zero, "u = {u}, α = {al}: {v:?}");
            assert!(q.raising_part_is_koszul(), "u = {u}, α = {al}");
            let col = q.column(0);
            assert_eq!(col[&1], col[&1].var_like(0));
        }
    }
}

fn proto(n: usize, d: u32) -> SeriesElement<Exact> {
    SeriesElement::zero(Arc::new(Monoid::new(vec![], n).unwrap()), rat(1, 1), n, d)
}

fn series(n: usize, d: u32, terms: &[(Vec<u32>, num_rational::BigRational)]) -> SeriesElement<Exact> {
    let p = proto(n, d);
    let mut s = p.zero_like();
    for (e, c) in terms {
        let nc = NovikovElement::constant(p.monoid().clone(), p.cutoff().clone(), Exact::new(c.clone(), rat(0, 1)));
        s.add_term(e.clone(), &nc);
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn koszul_rank_is_invariant_under_substitution(m in prop::collection::vec(-3i64..=3, 4)) {
        prop_assume!(m[0] * m[3] - m[1] * m[2] != 0);
        let l = vec![vec![ex(m[0]), ex(m[1])], vec![ex(m[2]), ex(m[3])]];
        let r = koszul_cohomology::<Exact>(2, &l, 6).unwrap();
        prop_assert_eq!(r.ranks, vec![0, 0, 1]);
        for s in &r.strands {
            prop_assert!(s.cohomology[..2].iter().all(|h| *h == 0));
        }
    }

    #[test]
    fn koszul_rank_in_one_variable(c in small_rat()) {
        prop_assume!(c != rat(0, 1));
        let r = koszul_cohomology::<Exact>(1, &[vec![Exact::new(c, rat(0, 1))]], 6).unwrap();
        prop_assert_eq!(r.ranks, vec![0, 1]);
    }

    #[test]
    fn division_inverts_multiplication(
        terms in prop::collection::vec((prop::collection::vec(0u32..4, 2), small_rat()), 0..6),
        l in prop::collection::vec(-3i64..=3, 2),
    ) {
        prop_assume!(l.iter().any(|v| *v != 0));
        let d = 7;
        let f = series(2, d, &terms);
        let p = proto(2, d);
        let lin = p.var_like(0).scale(&ex(l[0])).add(&p.var_like(1).scale(&ex(l[1]))).unwrap();
        let q = series_div_vanishing(&f.mul(&lin).unwrap(), &[ex(l[0]), ex(l[1])]).unwrap();
        prop_assert_eq!(q.truncated(d - 1), f.truncated(d - 1));
    }

    #[test]
    fn rank_is_transpose_invariant(rows in 1usize..5, cols in 1usize..5, v in prop::collection::vec(-2i64..=2, 16)) {
        let m: Vec<Vec<Exact>> = (0..rows).map(|i| (0..cols).map(|j| ex(v[i * 4 + j])).collect()).collect();
        let t: Vec<Vec<Exact>> = (0..cols).map(|j| (0..rows).map(|i| m[i][j].clone()).collect()).collect();
        let r = matrix_rank(m);
        prop_assert_eq!(r, matrix_rank(t));
        prop_assert!(r <= rows.min(cols));
    }
}
