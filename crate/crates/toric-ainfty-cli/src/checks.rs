//! The subcommands, each producing a [`Report`].

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde_json::{json, Value};

use toric_ainfty::ainfty::AInftyStructure;
use toric_ainfty::family::{descent_check, holomorphic_check, potential_terms, two_route, Family};
use toric_ainfty::graded::ExtElement;
use toric_ainfty::koszul::{identity_form, koszul_cohomology, mc_certificate, mf_from_brane};
use toric_ainfty::mc::{hf_rank, hom_differential, weak_mc_check, TwistedComplex};
use toric_ainfty::novikov::{Exact, Float, MonoidIndex, Scalar};
use toric_ainfty::toric::{complete, critical_points, divisor_core, divisor_identity_residual, potential, CompletionOptions, CompletionReport};
use toric_ainfty::Error;

use crate::report::{Report, Status};
use crate::{Mode, RunConfig};

fn f64_of(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn zero_point(n: usize) -> Vec<BigRational> {
    vec![BigRational::zero(); n]
}

/// Cutoff problems make a check inconclusive; anything else is a failure.
fn error_status(e: &Error) -> Status {
    match e {
        Error::CutoffInsufficient(_) | Error::ArityExceeded { .. } => Status::Inconclusive,
        _ => Status::Fail,
    }
}

/// The structure used by the relation-level checks: the divisor core, completed
/// when the dimension calls for it.
fn structure(cfg: &RunConfig, arity: usize) -> Result<(AInftyStructure, Option<CompletionReport>), String> {
    let core = divisor_core(&cfg.toric, arity, cfg.cutoff.clone()).map_err(|e| e.to_string())?;
    if cfg.toric.dim < 2 {
        return Ok((core, None));
    }
    let (a, rep) = complete(&core, &CompletionOptions::new(arity)).map_err(|e| e.to_string())?;
    Ok((a, Some(rep)))
}

/// Arity used by the series checks; the chart expansion to degree `D` needs
/// operators of arity at least `D`.
fn series_arity(cfg: &RunConfig) -> usize {
    cfg.arity.max(cfg.degree as usize + 2)
}

/// Structure for the series checks. Above dimension one only the Maslov-two
/// sectors enter the chart expansion, so the completion is restricted to them.
fn series_structure(cfg: &RunConfig) -> Result<AInftyStructure, String> {
    let k = series_arity(cfg);
    let core = divisor_core(&cfg.toric, k, cfg.cutoff.clone()).map_err(|e| e.to_string())?;
    if cfg.toric.dim < 2 {
        return Ok(core);
    }
    let mut opts = CompletionOptions::new(k);
    opts.max_level_maslov = Some(2);
    complete(&core, &opts).map(|(a, _)| a).map_err(|e| e.to_string())
}

/// `Σ_j T^{β_1+⋯+β_N} e_j`: odd, of positive valuation, and nilpotent under
/// the energy cutoff after few steps.
fn test_brane<C: Scalar>(a: &AInftyStructure, scale: i64) -> ExtElement<C> {
    let m = a.monoid();
    let total = (0..m.len()).fold(m.zero(), |acc: MonoidIndex, p| acc.add(&m.generator(p)));
    let mut b = a.zero_elem::<C>();
    for j in 0..a.dim() {
        b.add_term(1 << j, total.clone(), C::from_i64(scale));
    }
    b
}

pub fn potential_report(cfg: &RunConfig) -> Result<Report, String> {
    let t = &cfg.toric;
    let mut r = Report::new("potential");
    r.section("potential", json!(format!("W = {}", t.potential_text())));
    let (a, _) = structure(cfg, cfg.arity)?;
    let mut rows = Vec::new();
    let mut err: f64 = 0.0;
    for k in 0..10i64 {
        // Small steps around the basepoint; the polytope is open there.
        let x: Vec<BigRational> = t.basepoint.iter().map(|b| b + BigRational::new((k - 5).into(), 100.into())).collect();
        if t.check_interior(&x).is_err() {
            continue;
        }
        let xf: Vec<f64> = x.iter().map(f64_of).collect();
        let y: Vec<f64> = (0..t.dim).map(|j| 0.63 * k as f64 - 1.7 + 0.21 * j as f64).collect();
        let w = potential(t, &a, &x, &y, cfg.t).map_err(|e| e.to_string())?;
        let closed: Complex64 = t
            .facets
            .iter()
            .map(|f| {
                let ell: f64 = f.normal.iter().zip(&xf).map(|(v, xj)| *v as f64 * xj).sum::<f64>() - f64_of(&f.offset);
                let phase: f64 = f.normal.iter().zip(&y).map(|(v, yj)| *v as f64 * yj).sum();
                cfg.t.powf(ell) * Complex64::new(0.0, -phase).exp()
            })
            .sum();
        err = err.max((w - closed).norm());
        rows.push(json!({"x": xf, "y": y, "re": w.re, "im": w.im}));
    }
    let count = rows.len();
    r.section("samples", Value::Array(rows));
    r.check("closed form", Status::from_bool(err < 1e-12 && count > 0), format!("max deviation {err:.1e} over {count} samples"), json!({"max_abs": err}));
    let xf: Vec<f64> = t.basepoint.iter().map(f64_of).collect();
    let (base, terms) = potential_terms(t).map_err(|e| e.to_string())?;
    let samples: Vec<(Vec<f64>, Vec<f64>)> = (0..5).map(|i| (xf.clone(), vec![0.9 * i as f64; t.dim])).collect();
    let h = holomorphic_check(&terms, &base, &samples, 1e-5);
    let symbolic: Vec<Vec<String>> = h.symbolic.iter().map(|v| v.iter().map(|q| q.to_string()).collect()).collect();
    r.check(
        "holomorphicity",
        Status::from_bool(h.symbolic_zero),
        format!("∂̄W symbolic zero = {}, finite differences {:.1e}", h.symbolic_zero, h.numeric),
        json!({"symbolic": symbolic, "numeric": h.numeric}),
    );
    let y0 = vec![0.7; t.dim];
    let d = descent_check(&terms, &base, (&xf, &y0));
    r.check("descent", Status::from_bool(d.periodic), format!("2π-periodic = {}", d.periodic), json!({"periodic": d.periodic, "numeric": d.numeric}));
    Ok(r)
}

pub fn check_report(cfg: &RunConfig, sign_fault: bool) -> Result<Report, String> {
    match cfg.mode {
        Mode::Exact => run_checks::<Exact>(cfg, sign_fault),
        Mode::Float => run_checks::<Float>(cfg, sign_fault),
    }
}

type CheckOutcome = (Status, String, Value);

fn outcome(res: Result<CheckOutcome, Error>) -> CheckOutcome {
    res.unwrap_or_else(|e| (error_status(&e), e.to_string(), Value::Null))
}

/// Exact mode demands exact zeros; float mode a small residual.
fn zero_status(exact_zero: bool, max_abs: f64, mode: Mode) -> Status {
    Status::from_bool(exact_zero || (mode == Mode::Float && max_abs < 1e-10))
}

fn run_checks<C: Scalar + Send + Sync>(cfg: &RunConfig, sign_fault: bool) -> Result<Report, String> {
    let t = &cfg.toric;
    let n = t.dim;
    let k = cfg.arity;
    let mut r = Report::new("check");
    let start = Instant::now();
    let (mut a, comp) = structure(cfg, k)?;
    if let Some(c) = &comp {
        r.section("completion", c.to_json());
    }
    if sign_fault {
        a = a.with_sign_fault();
    }
    let sa = series_structure(cfg)?;
    let bp = t.basepoint.clone();
    let mode = cfg.mode;

    let relations = || -> Result<CheckOutcome, Error> {
        let bad = a.relation_failures(k - 1)?;
        let shown: Vec<Vec<u32>> = bad.iter().take(10).cloned().collect();
        Ok((Status::from_bool(bad.is_empty()), format!("{} failing basis tuples up to arity {}", bad.len(), k - 1), json!({"failures": bad.len(), "first": shown})))
    };
    let unit = || -> Result<CheckOutcome, Error> {
        let u = a.check_strict_unit(k);
        Ok((Status::from_bool(u.pass()), format!("{} tuples, {} violations", u.checked, u.violations.len()), json!({"violations": u.violations})))
    };
    let divisor = || -> Result<CheckOutcome, Error> {
        let m = a.monoid();
        let mut tuples = 0;
        let mut bad = 0;
        for pos in 0..m.len() {
            let g = m.generator(pos);
            for len in 0..=2.min(k - 1) {
                for inputs in toric_ainfty::ainfty::basis_tuples(n as u32, len) {
                    let inputs: Vec<usize> = inputs.iter().map(|i| *i as usize).collect();
                    for j in 0..n {
                        let mut b = vec![0i64; n];
                        b[j] = 1;
                        tuples += 1;
                        if !divisor_identity_residual(&a, &g, &inputs, &b, 1)?.is_zero() {
                            bad += 1;
                        }
                    }
                }
            }
        }
        Ok((Status::from_bool(bad == 0), format!("{bad}/{tuples} insertions fail"), json!({"checked": tuples, "failures": bad})))
    };
    let family = || -> Result<Family, Error> { Family::new(t, &a, &bp, cfg.base_degree) };
    let diffeo = || -> Result<CheckOutcome, Error> {
        let rep = family()?.diffeo_check::<C>(4.min(k - 1), cfg.t)?;
        Ok((
            zero_status(rep.pass(), rep.max_abs, mode),
            format!("{}/{} tuples fail, max residual {:.1e}", rep.failures, rep.tuples, rep.max_abs),
            json!({"tuples": rep.tuples, "failures": rep.failures, "max_abs": rep.max_abs}),
        ))
    };
    let propagation = || -> Result<CheckOutcome, Error> {
        let fam = family()?;
        let prop = fam.propagate::<C>(&zero_point(n), cfg.t)?;
        let mut second = bp.clone();
        second[0] += BigRational::new(1.into(), 20.into());
        let routes = two_route(t, &fam, &prop, &second)?;
        let ok = prop.exact && prop.nabla_theta_is_omega && routes.equal;
        Ok((
            zero_status(ok, prop.max_abs, mode),
            format!("∇𝒲 = 0: {}, ∇θ = ω: {}, two routes agree: {}", prop.exact, prop.nabla_theta_is_omega, routes.equal),
            json!({"flat": prop.exact, "max_abs": prop.max_abs, "nabla_theta_is_omega": prop.nabla_theta_is_omega, "two_route": routes.equal}),
        ))
    };
    let weak_mc = || -> Result<CheckOutcome, Error> {
        let w = weak_mc_check(&a, &test_brane::<C>(&a, 1))?;
        let status = if !w.terminated {
            Status::Inconclusive
        } else {
            Status::from_bool(w.is_weak)
        };
        Ok((status, format!("weak = {}, terminated = {}", w.is_weak, w.terminated), json!({"lambda": w.lambda.to_json()})))
    };
    let curvature = || -> Result<CheckOutcome, Error> {
        let src = TwistedComplex::rank_one(&a, test_brane::<C>(&a, 1))?;
        let tgt = TwistedComplex::rank_one(&a, test_brane::<C>(&a, 2))?;
        let hom = hom_differential(&a, &src, &tgt);
        let same = hom_differential(&a, &src, &src);
        let (mut law, mut flat) = (true, true);
        for (i, j, mask) in hom.basis() {
            let x = hom.unit_matrix(i, j, mask);
            law &= hom.square_defect(&x)?.iter().flatten().all(|c| c.is_zero());
            flat &= same.apply(&same.apply(&x)?)?.iter().flatten().all(|c| c.is_zero());
        }
        Ok((Status::from_bool(law && flat), format!("d² = (F(b) − F(δ))·id: {law}; d² = 0 for equal curvature: {flat}"), json!({"law": law, "matched": flat})))
    };
    let certificate = || -> Result<CheckOutcome, Error> {
        let c = mc_certificate::<C>(t, &sa, &bp, cfg.degree, cfg.t)?;
        let z = c.residual.is_zero();
        Ok((zero_status(z, c.max_abs, mode), format!("residual exact zero = {z}, max {:.1e}", c.max_abs), json!({"exact_zero": z, "max_abs": c.max_abs})))
    };
    let mf = || -> Result<CheckOutcome, Error> {
        let q = mf_from_brane::<C>(t, &sa, &bp, &zero_point(n), cfg.degree)?;
        let v = q.verify(cfg.t)?;
        Ok((
            zero_status(v.exact_zero, v.max_abs, mode),
            format!("Q² − (λ − W)·id exact zero = {}, max {:.1e}", v.exact_zero, v.max_abs),
            json!({"exact_zero": v.exact_zero, "max_abs": v.max_abs, "size": q.size()}),
        ))
    };
    let koszul = || -> Result<CheckOutcome, Error> {
        let rep = koszul_cohomology::<C>(n, &identity_form::<C>(n), cfg.degree)?;
        let want: Vec<usize> = (0..=n).map(|q| (q == n) as usize).collect();
        let status = if rep.strands.is_empty() { Status::Inconclusive } else { Status::from_bool(rep.ranks == want) };
        Ok((status, format!("ranks {:?} over {} resolved strands", rep.ranks, rep.strands.len()), json!({"ranks": rep.ranks, "excluded": rep.excluded})))
    };

    let jobs: Vec<(&str, &(dyn Fn() -> Result<CheckOutcome, Error> + Sync))> = vec![
        ("A∞ relations", &relations),
        ("strict unit", &unit),
        ("divisor identity", &divisor),
        ("diffeo identity", &diffeo),
        ("propagation", &propagation),
        ("weak Maurer–Cartan", &weak_mc),
        ("d² law", &curvature),
        ("Maurer–Cartan certificate", &certificate),
        ("matrix factorization", &mf),
        ("Koszul cohomology", &koszul),
    ];
    let results: Vec<CheckOutcome> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs.iter().map(|(_, f)| s.spawn(move || outcome(f()))).collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| (Status::Fail, "check panicked".into(), Value::Null))).collect()
    });
    for ((name, _), (status, summary, detail)) in jobs.iter().zip(results) {
        r.check(name, status, summary, detail);
    }
    r.section("elapsed_seconds", json!(start.elapsed().as_secs_f64()));
    Ok(r)
}

pub fn mf_report(cfg: &RunConfig, p: &[BigRational], alpha: &[BigRational]) -> Result<Report, String> {
    match cfg.mode {
        Mode::Exact => mf_generic::<Exact>(cfg, p, alpha),
        Mode::Float => mf_generic::<Float>(cfg, p, alpha),
    }
}

fn mf_generic<C: Scalar>(cfg: &RunConfig, p: &[BigRational], alpha: &[BigRational]) -> Result<Report, String> {
    let t = &cfg.toric;
    t.check_interior(p).map_err(|e| e.to_string())?;
    let a = series_structure(cfg)?;
    let q = mf_from_brane::<C>(t, &a, p, alpha, cfg.degree).map_err(|e| e.to_string())?;
    let mut r = Report::new("mf");
    let col = q.column(0);
    let mut unit_entries = Vec::new();
    let mut unit_ok = col.len() == t.dim;
    for j in 0..t.dim {
        let var = if t.dim == 1 { "z".to_string() } else { format!("z{}", j + 1) };
        unit_entries.push(format!("e{}: ({var} − {} − i·{})", j + 1, p[j], alpha[j]));
        unit_ok &= col.get(&(1 << j)).is_some_and(|s| *s == s.var_like(j));
    }
    r.section("Q(1)", json!(unit_entries));
    r.check("Q(𝟏) = (z − p − iα)·e", Status::from_bool(unit_ok), unit_entries.join(", "), Value::Null);
    let (status, summary, detail) = outcome(q.verify(cfg.t).map(|v| {
        (
            zero_status(v.exact_zero, v.max_abs, cfg.mode),
            format!("Q² − (λ − W)·id exact zero = {}, max {:.1e}", v.exact_zero, v.max_abs),
            json!({"exact_zero": v.exact_zero, "max_abs": v.max_abs}),
        )
    }));
    r.check("residual", status, summary, detail);
    r.section("matrix_factorization", q.to_json(cfg.t));
    Ok(r)
}

pub fn hf_report(cfg: &RunConfig, points: &[Vec<BigRational>]) -> Result<Report, String> {
    let t = &cfg.toric;
    let (a, _) = structure(cfg, cfg.arity)?;
    let mut r = Report::new("hf");
    let mut rows = Vec::new();
    for p in points {
        let monoid = t.monoid_at(p).map_err(|e| e.to_string())?;
        let ap = a.with_monoid(Arc::new(monoid)).map_err(|e| e.to_string())?;
        let rank = match cfg.mode {
            Mode::Exact => {
                let c = TwistedComplex::rank_one(&ap, ap.zero_elem::<Exact>()).map_err(|e| e.to_string())?;
                hf_rank(&ap, &c, &c, cfg.t)
            }
            Mode::Float => {
                let c = TwistedComplex::rank_one(&ap, ap.zero_elem::<Float>()).map_err(|e| e.to_string())?;
                hf_rank(&ap, &c, &c, cfg.t)
            }
        }
        .map_err(|e| e.to_string())?;
        let shown: Vec<String> = p.iter().map(|x| x.to_string()).collect();
        rows.push(json!({"point": shown, "rank": rank}));
    }
    r.section("floer_ranks", Value::Array(rows));
    let crit = critical_points(t, cfg.t);
    let pts: Vec<Value> = crit
        .points
        .iter()
        .map(|c| {
            json!({
                "z": c.z.iter().map(|z| json!({"re": z.re, "im": z.im})).collect::<Vec<_>>(),
                "value": {"re": c.value.re, "im": c.value.im},
                "residual": c.residual,
            })
        })
        .collect();
    r.section("critical_points", Value::Array(pts));
    let worst = crit.points.iter().map(|c| c.residual).fold(0.0, f64::max);
    r.check(
        "critical points",
        Status::from_bool(worst < 1e-9),
        format!("{} found from {} starts, max |dW| {worst:.1e}", crit.points.len(), crit.starts),
        json!({"count": crit.points.len(), "failed_starts": crit.failed_starts}),
    );
    Ok(r)
}

pub fn complete_report(cfg: &RunConfig) -> Result<Report, String> {
    let core = divisor_core(&cfg.toric, cfg.arity, cfg.cutoff.clone()).map_err(|e| e.to_string())?;
    let mut r = Report::new("complete");
    match complete(&core, &CompletionOptions::new(cfg.arity)) {
        Ok((a, rep)) => {
            r.section("completion", rep.to_json());
            let (status, summary, detail) = outcome(a.relation_failures(cfg.arity - 1).map(|bad| {
                (Status::from_bool(bad.is_empty()), format!("{} failing basis tuples up to arity {}", bad.len(), cfg.arity - 1), json!({"failures": bad.len()}))
            }));
            r.check("A∞ relations", status, summary, detail);
        }
        Err(e) => r.check("completion", error_status(&e), e.to_string(), Value::Null),
    }
    Ok(r)
}
