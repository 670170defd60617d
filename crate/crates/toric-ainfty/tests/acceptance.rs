//! The ten acceptance criteria, one line each. Runs without the libtest
//! harness so the lines are always visible.

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use toric_ainfty::ainfty::{basis_tuples, AInftyStructure, Convention};
use toric_ainfty::family::{descent_check, holomorphic_check, potential_terms, two_route, Family};
use toric_ainfty::graded::{epsilon_sign, eta_sign, koszul_sign, ExtElement};
use toric_ainfty::koszul::{identity_form, koszul_cohomology, mc_certificate, mf_from_brane, potential_series_at};
use toric_ainfty::mc::{hf_rank, hom_differential, TwistedComplex};
use toric_ainfty::novikov::{rat, Exact, Float, NovikovElement};
use toric_ainfty::toric::{complete, critical_points, divisor_core, fixtures, potential, CompletionOptions};

type Outcome = (bool, String);

fn e_inv() -> f64 {
    (-1f64).exp()
}

fn cp1_at(u: BigRational, k: usize, e: BigRational) -> AInftyStructure {
    let t = fixtures::cp1();
    let core = divisor_core(&t, k, e).unwrap();
    core.with_monoid(Arc::new(t.monoid_at(&[u]).unwrap())).unwrap()
}

fn completed_cp2(k: usize, e: BigRational) -> AInftyStructure {
    let core = divisor_core(&fixtures::cp2(), k, e).unwrap();
    complete(&core, &CompletionOptions::new(k)).unwrap().0
}

fn structure_table() -> Outcome {
    let start = Instant::now();
    let a = cp1_at(rat(1, 2), 8, rat(3, 1));
    let m = a.monoid().clone();
    let (b1, b2) = (m.generator(0), m.generator(1));
    let mut exact = true;
    let mut numeric: f64 = 0.0;
    let mut fact = BigRational::one();
    for k in 0..=8usize {
        if k > 0 {
            fact *= BigRational::from_integer(k.into());
        }
        let out = a.apply(&vec![a.basis::<Exact>(1); k]).unwrap();
        let w = Exact::new(BigRational::one() / &fact, BigRational::zero());
        let sign = if k % 2 == 0 { w.clone() } else { -w.clone() };
        let mut want = NovikovElement::zero(m.clone(), a.cutoff().clone());
        want.add_term(b1.clone(), w);
        want.add_term(b2.clone(), sign);
        let mut expect = a.zero_elem::<Exact>();
        expect.add_comp(0, &want);
        exact &= out == expect;
        let kf: f64 = (1..=k).map(|i| i as f64).product();
        let closed = ((-0.5f64).exp() + if k % 2 == 0 { 1.0 } else { -1.0 } * (0.5f64 - 1.0).exp()) / kf;
        numeric = numeric.max((out.comp(0).evaluate(e_inv()) - Complex64::new(closed, 0.0)).norm());
    }
    let secs = start.elapsed().as_secs_f64();
    (exact && numeric < 1e-14 && secs < 1.0, format!("k=0..8 exact={exact}, max |value − closed form| = {numeric:.1e}, {secs:.2}s"))
}

fn relation_suite() -> Outcome {
    let start = Instant::now();
    let cp1 = divisor_core(&fixtures::cp1(), 6, rat(3, 1)).unwrap();
    let bad1 = cp1.relation_failures(5).unwrap().len();
    let cp2 = completed_cp2(5, rat(3, 1));
    let bad2 = cp2.relation_failures(4).unwrap().len();
    let secs = start.elapsed().as_secs_f64();
    (bad1 == 0 && bad2 == 0 && secs < 30.0, format!("CP1 arity ≤ 5: {bad1} failing tuples; completed CP2 arity ≤ 4: {bad2} failing tuples; {secs:.2}s"))
}

fn potential_suite() -> Outcome {
    let t = fixtures::cp1();
    let a = divisor_core(&t, 12, rat(3, 1)).unwrap();
    let mut err: f64 = 0.0;
    for i in 0..10 {
        let x = rat(i + 1, 11);
        let y = 0.63 * i as f64 - 1.7;
        let z = Complex64::new(num_traits::ToPrimitive::to_f64(&x).unwrap(), y);
        let want = (-z).exp() + (z - 1.0).exp();
        err = err.max((potential(&t, &a, &[x], &[y], e_inv()).unwrap() - want).norm());
    }
    let (base, terms) = potential_terms(&t).unwrap();
    let samples: Vec<(Vec<f64>, Vec<f64>)> = (0..5).map(|i| (vec![0.2 + 0.1 * i as f64], vec![0.9 * i as f64])).collect();
    let h = holomorphic_check(&terms, &base, &samples, 1e-5);
    let d = descent_check(&terms, &base, (&[0.3], &[0.7]));
    (
        err < 1e-12 && h.symbolic_zero && d.periodic,
        format!("max |W − (e^(−z)+e^(z−1))| = {err:.1e} at 10 points; ∂̄W symbolic zero = {}, finite differences {:.1e}; periodic = {}", h.symbolic_zero, h.numeric, d.periodic),
    )
}

fn mf_suite() -> Outcome {
    let start = Instant::now();
    let t1 = fixtures::cp1();
    let deg = 10u32;
    // Q(𝟏) = (z − u − iα)e with exact rational data.
    let a1 = divisor_core(&t1, 14, rat(3, 1)).unwrap();
    let (u, al) = (rat(1, 3), rat(1, 4));
    let q = mf_from_brane::<Exact>(&t1, &a1, &[u.clone()], &[al.clone()], deg).unwrap();
    let col = q.column(0);
    let unit_ok = col.len() == 1 && col.get(&1).is_some_and(|s| *s == s.var_like(0));
    let n1 = q.verify(e_inv()).unwrap();
    // Q(e) against the Taylor expansion of (W − W(u,a))/((u + iα) − z).
    let a_long = divisor_core(&t1, deg as usize + 20, rat(3, 1)).unwrap();
    let qf = mf_from_brane::<Float>(&t1, &a_long, &[u.clone()], &[al.clone()], deg).unwrap();
    let w = potential_series_at(&t1, &[u], &[0.25], e_inv(), deg + 1).unwrap();
    let qe = qf.column(1);
    let mut taylor: f64 = 0.0;
    for a in 0..(deg - 1) {
        let got = qe.get(&0).map(|s| s.coeff(&[a]).evaluate(e_inv())).unwrap_or_default();
        taylor = taylor.max((got + w[&vec![a + 1]]).norm());
    }
    let t2 = fixtures::cp2();
    let core = divisor_core(&t2, 10, rat(3, 1)).unwrap();
    let mut opts = CompletionOptions::new(10);
    opts.max_level_maslov = Some(2);
    let (a2, _) = complete(&core, &opts).unwrap();
    let q2 = mf_from_brane::<Float>(&t2, &a2, &[rat(1, 3), rat(1, 3)], &[rat(0, 1), rat(0, 1)], 8).unwrap();
    let n2 = q2.verify(e_inv()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    (
        unit_ok && taylor < 1e-12 && n1.exact_zero && n2.max_abs < 1e-10 && secs < 10.0,
        format!(
            "Q(𝟏) exact = {unit_ok}; Q(e) vs Taylor {taylor:.1e}; n=1 residual exact zero = {}; n=2 D=8 residual {:.1e}; {secs:.2}s",
            n1.exact_zero, n2.max_abs
        ),
    )
}

fn mc_certificate_suite() -> Outcome {
    let a1 = divisor_core(&fixtures::cp1(), 12, rat(3, 1)).unwrap();
    let c1 = mc_certificate::<Exact>(&fixtures::cp1(), &a1, &[rat(1, 2)], 10, e_inv()).unwrap();
    let core = divisor_core(&fixtures::cp2(), 10, rat(3, 1)).unwrap();
    let mut opts = CompletionOptions::new(10);
    opts.max_level_maslov = Some(2);
    let (a2, _) = complete(&core, &opts).unwrap();
    let c2 = mc_certificate::<Float>(&fixtures::cp2(), &a2, &[rat(1, 3), rat(1, 3)], 8, e_inv()).unwrap();
    let ok = c1.residual.is_zero() && c2.max_abs < 1e-12;
    (ok, format!("CP1 residual exactly zero = {}; CP2 residual {:.1e}", c1.residual.is_zero(), c2.max_abs))
}

fn random_brane(a: &AInftyStructure, rng: &mut ChaCha8Rng) -> ExtElement<Exact> {
    let m = a.monoid().clone();
    let mut b = a.zero_elem::<Exact>();
    for pos in 0..m.len() {
        for j in 0..a.dim() {
            if rng.gen_bool(0.6) {
                let c = Exact::new(rat(rng.gen_range(-4..=4), rng.gen_range(1..=3)), rat(rng.gen_range(-4..=4), rng.gen_range(1..=3)));
                b.add_term(1 << j, m.generator(pos), c);
            }
        }
    }
    b
}

fn diagonal(b: &ExtElement<Exact>, rank: usize) -> Vec<Vec<ExtElement<Exact>>> {
    (0..rank).map(|i| (0..rank).map(|j| if i == j { b.clone() } else { b.zero_like() }).collect()).collect()
}

fn curvature_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let cp1 = cp1_at(rat(1, 2), 8, rat(2, 1));
    let cp2 = completed_cp2(5, rat(1, 1));
    let mut law = 0;
    let mut matched = 0;
    let mut controls = 0;
    for case in 0..10 {
        let a = if case % 2 == 0 { &cp1 } else { &cp2 };
        let rank = 1 + case % 3 / 2;
        let (b, d) = (random_brane(a, &mut rng), random_brane(a, &mut rng));
        let src = TwistedComplex::new(a, diagonal(&b, rank)).unwrap();
        let tgt = TwistedComplex::new(a, diagonal(&d, rank)).unwrap();
        let hom = hom_differential(a, &src, &tgt);
        let same = hom_differential(a, &src, &src);
        let mut ok = true;
        let mut flat = true;
        let mut detected = false;
        for (i, j, mask) in hom.basis() {
            let x = hom.unit_matrix(i, j, mask);
            ok &= hom.square_defect(&x).unwrap().iter().flatten().all(|c| c.is_zero());
            flat &= same.apply(&same.apply(&x).unwrap()).unwrap().iter().flatten().all(|c| c.is_zero());
            detected |= hom.apply(&hom.apply(&x).unwrap()).unwrap().iter().flatten().any(|c| !c.is_zero());
        }
        law += ok as usize;
        matched += flat as usize;
        controls += (detected || src.lambda == tgt.lambda) as usize;
    }
    (
        law == 10 && matched == 10 && controls == 10,
        format!("d² = (F(b) − F(δ))·id on {law}/10 cases; d² = 0 for equal curvature on {matched}/10; nonzero d² seen when curvatures differ on {controls}/10"),
    )
}

fn floer_ranks() -> Outcome {
    let mut ranks = Vec::new();
    for i in 1..=9 {
        let a = cp1_at(rat(i, 10), 6, rat(3, 1));
        let c = TwistedComplex::rank_one(&a, a.zero_elem::<Float>()).unwrap();
        ranks.push(hf_rank(&a, &c, &c, e_inv()).unwrap());
    }
    let scan_ok = ranks.iter().enumerate().all(|(i, r)| *r == if i == 4 { 2 } else { 0 });
    let rep = critical_points(&fixtures::cp2(), e_inv());
    let mut matched = 0;
    for k in 0..3 {
        let want = 3.0 * Complex64::new(-1.0 / 3.0, -2.0 * std::f64::consts::PI * k as f64 / 3.0).exp();
        if rep.points.iter().any(|p| (p.value - want).norm() < 1e-9) {
            matched += 1;
        }
    }
    let ok = scan_ok && rep.points.len() == 3 && matched == 3;
    (ok, format!("CP1 ranks for u = 0.1..0.9: {ranks:?}; CP2 critical points {} with {matched}/3 values matched", rep.points.len()))
}

fn gauss_manin_suite() -> Outcome {
    let tt = e_inv();
    let mut nabla_sq = true;
    let mut diffeo = true;
    let mut flat = 0;
    let mut routes = 0;
    for (t, p, k) in [(fixtures::cp1(), vec![rat(1, 2)], 5usize), (fixtures::cp2(), vec![rat(1, 3), rat(1, 3)], 5)] {
        let core = divisor_core(&t, k, rat(3, 1)).unwrap();
        let fam = Family::new(&t, &core, &p, 4).unwrap();
        diffeo &= fam.diffeo_check::<Exact>(4, tt).unwrap().pass();
        let n = t.dim;
        let m = fam.algebra().monoid().clone();
        for mask in 0..(1u32 << n) {
            for forms in 0..(1u32 << n) {
                for pos in 0..m.len() {
                    let c = NovikovElement::monomial(m.clone(), fam.algebra().cutoff().clone(), m.generator(pos), Exact::one());
                    let mut exps = vec![0; n];
                    exps[pos % n] = 2;
                    let f = fam.element(exps, forms, mask, c);
                    nabla_sq &= fam.gm(&fam.gm(&f).unwrap()).unwrap().is_zero();
                }
            }
        }
    }
    let t = fixtures::cp1();
    let core = divisor_core(&t, 8, rat(3, 1)).unwrap();
    for p in [rat(3, 10), rat(2, 5), rat(1, 2), rat(3, 5), rat(7, 10)] {
        let fam = Family::new(&t, &core, &[p.clone()], 6).unwrap();
        let Ok(prop) = fam.propagate::<Exact>(&[rat(0, 1)], tt) else { continue };
        flat += (prop.exact && prop.nabla_theta_is_omega) as usize;
        let second = &p + rat(1, 10);
        routes += two_route(&t, &fam, &prop, &[second]).is_ok_and(|r| r.equal) as usize;
    }
    (
        nabla_sq && diffeo && flat == 5 && routes == 5,
        format!("∇² = 0: {nabla_sq}; diffeo identity arity ≤ 4 on CP1 and CP2: {diffeo}; flat at {flat}/5 basepoints; two routes agree at {routes}/5"),
    )
}

fn koszul_suite() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut lines = Vec::new();
    for n in [1usize, 2] {
        let r = koszul_cohomology::<Exact>(n, &identity_form(n), 6).unwrap();
        let top_only = r.strands.iter().all(|s| s.cohomology[..n].iter().all(|h| *h == 0));
        let want: Vec<usize> = (0..=n).map(|q| (q == n) as usize).collect();
        ok &= r.ranks == want && top_only;
        lines.push(format!("n={n}: ranks {:?} over {} resolved strands", r.ranks, r.strands.len()));
    }
    let secs = start.elapsed().as_secs_f64();
    (ok && secs < 10.0, format!("{}; {secs:.2}s", lines.join("; ")))
}

fn sign_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut agree = 0;
    for _ in 0..1000 {
        let k = rng.gen_range(0..8);
        let a: Vec<i64> = (0..k).map(|_| rng.gen_range(0..4)).collect();
        let b: Vec<i64> = (0..k).map(|_| rng.gen_range(0..3)).collect();
        // Shifts s_1…s_k followed by a_1…a_k, interleaved as s_1 a_1 s_2 a_2 ….
        let mut degs = vec![1i64; k];
        degs.extend(&a);
        let perm: Vec<usize> = (0..k).flat_map(|i| [i, k + i]).collect();
        let eps = koszul_sign(&perm, &degs).unwrap();
        // b_1 a_1 … b_k a_k unshuffled to b_1 … b_k a_1 … a_k.
        let inter: Vec<i64> = (0..k).flat_map(|i| [b[i], a[i]]).collect();
        let perm2: Vec<usize> = (0..k).map(|i| 2 * i).chain((0..k).map(|i| 2 * i + 1)).collect();
        let eta = koszul_sign(&perm2, &inter).unwrap();
        if eps == epsilon_sign(&a) && eta == eta_sign(&a, &b).unwrap() {
            agree += 1;
        }
    }
    let a = divisor_core(&fixtures::cp2(), 4, rat(2, 1)).unwrap();
    let back = a.in_convention(Convention::Epsilon).in_convention(Convention::Shifted);
    let mut round = true;
    for n in 0..=3 {
        for tuple in basis_tuples(4, n) {
            let xs: Vec<ExtElement<Exact>> = tuple.iter().map(|m| a.basis(*m)).collect();
            round &= a.apply(&xs).unwrap() == back.apply(&xs).unwrap();
        }
    }
    (agree == 1000 && round, format!("{agree}/1000 random cases agree; convention round trip exact = {round}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("CP1 structure table", structure_table),
        ("A-infinity relation suite", relation_suite),
        ("potential, holomorphicity, descent", potential_suite),
        ("matrix factorization", mf_suite),
        ("Maurer-Cartan certificate", mc_certificate_suite),
        ("internal-curvature law", curvature_law),
        ("Floer ranks and critical points", floer_ranks),
        ("Gauss-Manin suite", gauss_manin_suite),
        ("Koszul cohomology", koszul_suite),
        ("sign-engine oracle", sign_oracle),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (ok, detail) = f();
        println!("criterion {:>2} {}: {name}: {detail}", i + 1, if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 10 criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
