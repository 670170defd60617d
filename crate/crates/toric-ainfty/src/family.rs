//! Dependence on the base point: the Gauss–Manin connection on polynomial
//! families of fiber elements, the compatibility of `∇` with the operators,
//! the de Rham curved structure, propagation of Maurer–Cartan data, and
//! holomorphicity and torus descent of the potential.
//!
//! A family element is an element of `B ⊗ A` where `B` holds polynomials in
//! the offsets `X = x − p` (degree `< D_x`) times forms in `dx_1,…,dx_n`. A
//! Novikov symbol `T^β` in a family stands for `T^{E_β(x)}`, so evaluating at
//! `x′` lands in the ring re-based at `x′`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::ainfty::{epsilon_relation, mc_sign, tensor_with_cdga, AInftyStructure, BMono, Convention, CurvedDga, TensorElement, TensorStructure};
use crate::error::{Error, Result};
use crate::graded::{wedge_masks, ExtElement, WedgeIndex};
use crate::mc::weak_mc_check;
use crate::novikov::{Monoid, NovikovElement, Scalar};
use crate::toric::ToricData;

pub type FamilyElement<C> = TensorElement<C>;

/// Polynomial de Rham forms on the base, with `d = ∇` (or `d = 0` for the
/// fiberwise operators).
pub struct DeRhamDga {
    nvars: usize,
    degree: u32,
    connection: bool,
}

impl CurvedDga for DeRhamDga {
    fn nvars(&self) -> usize {
        self.nvars
    }
    fn max_degree(&self) -> u32 {
        self.degree
    }
    fn differential<C: Scalar>(&self, m: &BMono, c: &NovikovElement<C>) -> Result<Vec<(BMono, NovikovElement<C>)>> {
        let mut out = Vec::new();
        if !self.connection {
            return Ok(out);
        }
        for i in 0..self.nvars {
            let Some((odd, s)) = wedge_masks(1 << i, m.odd) else { continue };
            let sc = C::from_i64(s as i64);
            if m.exps[i] > 0 {
                let mut exps = m.exps.clone();
                exps[i] -= 1;
                out.push((BMono { exps, odd }, c.scale(&(sc.clone() * C::from_i64(m.exps[i] as i64)))));
            }
            let g = c.gm_derivative(i)?;
            if !g.is_zero() {
                out.push((BMono { exps: m.exps.clone(), odd }, g.scale(&sc)));
            }
        }
        Ok(out)
    }
    fn curvature<C: Scalar>(&self, _monoid: &Arc<Monoid>, _cutoff: &BigRational) -> Vec<(BMono, NovikovElement<C>)> {
        Vec::new()
    }
}

/// Exact outcome of an identity check restricted to base degree `< D_x − 1`,
/// where truncated products still satisfy the Leibniz rule.
#[derive(Clone, Debug)]
pub struct IdentityReport {
    pub tuples: usize,
    pub failures: usize,
    pub max_abs: f64,
}

impl IdentityReport {
    pub fn pass(&self) -> bool {
        self.failures == 0
    }
}

/// Families over a neighbourhood of `p`.
pub struct Family {
    a: AInftyStructure,
    p: Vec<BigRational>,
    nabla: DeRhamDga,
    flat: DeRhamDga,
}

impl Family {
    /// Re-base `a` at `p` and allow base polynomials of degree `< base_degree`.
    pub fn new(t: &ToricData, a: &AInftyStructure, p: &[BigRational], base_degree: u32) -> Result<Self> {
        if base_degree < 2 {
            return Err(Error::Input("base degree must be at least 2".into()));
        }
        if p.len() != t.dim {
            return Err(Error::LengthMismatch(p.len(), t.dim));
        }
        let monoid = Arc::new(t.monoid_at(p)?);
        let a = a.with_monoid(monoid)?.in_convention(Convention::Epsilon);
        let n = t.dim;
        Ok(Family {
            a,
            p: p.to_vec(),
            nabla: DeRhamDga { nvars: n, degree: base_degree, connection: true },
            flat: DeRhamDga { nvars: n, degree: base_degree, connection: false },
        })
    }

    pub fn nvars(&self) -> usize {
        self.nabla.nvars
    }

    pub fn base_degree(&self) -> u32 {
        self.nabla.degree
    }

    pub fn algebra(&self) -> &AInftyStructure {
        &self.a
    }

    pub fn point(&self) -> &[BigRational] {
        &self.p
    }

    pub fn zero<C: Scalar>(&self) -> FamilyElement<C> {
        TensorElement::zero(self.a.monoid().clone(), self.a.cutoff().clone())
    }

    fn one<C: Scalar>(&self) -> NovikovElement<C> {
        NovikovElement::constant(self.a.monoid().clone(), self.a.cutoff().clone(), C::one())
    }

    /// `c · X^{exps} dx^{forms} ⊗ e_{mask}`.
    pub fn element<C: Scalar>(&self, exps: Vec<u32>, forms: WedgeIndex, mask: WedgeIndex, c: NovikovElement<C>) -> FamilyElement<C> {
        let mut f = self.zero();
        if exps.iter().sum::<u32>() < self.base_degree() {
            f.add_term(BMono { exps, odd: forms }, mask, &c);
        }
        f
    }

    /// A fiber element constant in `x`.
    pub fn constant<C: Scalar>(&self, x: &ExtElement<C>) -> Result<FamilyElement<C>> {
        let x = x.transport(self.a.monoid().clone())?;
        let mut f = self.zero();
        for (m, c) in x.comps() {
            f.add_term(BMono::one(self.nvars()), *m, c);
        }
        Ok(f)
    }

    /// `X_i ⊗ 𝟏`.
    pub fn offset<C: Scalar>(&self, i: usize) -> FamilyElement<C> {
        let mut e = vec![0; self.nvars()];
        e[i] = 1;
        self.element(e, 0, 0, self.one())
    }

    /// `ω = Σ −e_i ⊗ dx_i`, stored with the form factor on the left as
    /// `Σ dx_i ⊗ e_i`.
    pub fn omega<C: Scalar>(&self) -> FamilyElement<C> {
        let mut f = self.zero();
        for i in 0..self.nvars() {
            f = f.add(&self.element(vec![0; self.nvars()], 1 << i, 1 << i, self.one())).expect("shared monoid");
        }
        f
    }

    /// The Gauss–Manin connection.
    pub fn gm<C: Scalar>(&self, f: &FamilyElement<C>) -> Result<FamilyElement<C>> {
        let mut out = self.zero();
        for ((bm, mask), c) in f.terms() {
            for (db, dc) in self.nabla.differential(bm, c)? {
                out.add_term(db, *mask, &dc);
            }
        }
        Ok(out)
    }

    /// The fiberwise operators `m^ε_k`, extended `B`-linearly.
    pub fn fiberwise<C: Scalar>(&self) -> Result<TensorStructure<'_, DeRhamDga, C>> {
        tensor_with_cdga(&self.flat, &self.a)
    }

    /// `m̂_0 = m_0 − ω`, `m̂_1 = m_1 + ∇`, higher operators unchanged. With
    /// `with_omega = false` the `ω` term is dropped.
    pub fn derham<C: Scalar>(&self, with_omega: bool) -> Result<TensorStructure<'_, DeRhamDga, C>> {
        let s = tensor_with_cdga(&self.nabla, &self.a)?;
        Ok(if with_omega { s.with_extra_curvature(self.omega().neg()) } else { s })
    }

    /// Terms of base degree `< D_x − 1`.
    pub fn reliable<C: Scalar>(&self, f: &FamilyElement<C>) -> FamilyElement<C> {
        let mut out = self.zero();
        for ((bm, mask), c) in f.terms() {
            if bm.degree() + 1 < self.base_degree() {
                out.add_term(bm.clone(), *mask, c);
            }
        }
        out
    }

    /// `[∇, m^ε_k](x) − Σ_{i=1}^{k+1} (−1)^{i−1} m^ε_{k+1}(x_1,…,ω,…,x_k)`.
    pub fn diffeo_residual<C: Scalar>(&self, inputs: &[FamilyElement<C>]) -> Result<FamilyElement<C>> {
        let k = inputs.len();
        if k + 1 > self.a.arity_cutoff() {
            return Err(Error::CutoffInsufficient(format!("the identity at arity {k} needs m_{}", k + 1)));
        }
        let m = self.fiberwise::<C>()?;
        let omega = self.omega();
        let parts: Vec<Vec<(usize, FamilyElement<C>)>> = inputs
            .iter()
            .map(|x| {
                let (ev, od) = x.parity_parts();
                [(0, ev), (1, od)].into_iter().filter(|(_, y)| !y.is_zero()).collect()
            })
            .collect();
        let mut total = self.zero();
        if parts.iter().any(|p| p.is_empty()) {
            return Ok(total);
        }
        let mut idx = vec![0usize; k];
        loop {
            let xs: Vec<FamilyElement<C>> = idx.iter().enumerate().map(|(i, j)| parts[i][*j].1.clone()).collect();
            let degs: Vec<usize> = idx.iter().enumerate().map(|(i, j)| parts[i][*j].0).collect();
            total = total.add(&self.gm(&m.m(&xs)?)?)?;
            let mut prefix = 0;
            for i in 0..k {
                let mut ys = xs.clone();
                ys[i] = self.gm(&xs[i])?;
                let v = m.m(&ys)?;
                // −(−1)^{|m_k|}·(−1)^{prefix}
                total = total.add(&if (k + prefix) % 2 == 0 { v.neg() } else { v })?;
                prefix += degs[i];
            }
            for i in 0..=k {
                let mut ys = xs.clone();
                ys.insert(i, omega.clone());
                let v = m.m(&ys)?;
                total = total.add(&if i % 2 == 0 { v.neg() } else { v })?;
            }
            let mut p = k;
            loop {
                if p == 0 {
                    return Ok(self.reliable(&total));
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

    /// The identity on all tuples of fiber basis vectors for `k ≤ max_arity`.
    pub fn diffeo_check<C: Scalar>(&self, max_arity: usize, t: f64) -> Result<IdentityReport> {
        let dim = 1u32 << self.nvars();
        let mut rep = IdentityReport { tuples: 0, failures: 0, max_abs: 0.0 };
        for k in 0..=max_arity {
            for tuple in crate::ainfty::basis_tuples(dim, k) {
                let inputs: Vec<FamilyElement<C>> = tuple.iter().map(|m| self.element(vec![0; self.nvars()], 0, *m, self.one())).collect();
                let r = self.diffeo_residual(&inputs)?;
                rep.tuples += 1;
                if !r.is_zero() {
                    rep.failures += 1;
                }
                rep.max_abs = rep.max_abs.max(max_abs_at(&r, t));
            }
        }
        Ok(rep)
    }

    /// The de Rham structure after confirming the compatibility identity
    /// up to `max_arity`.
    pub fn derham_structure<C: Scalar>(&self, max_arity: usize) -> Result<TensorStructure<'_, DeRhamDga, C>> {
        let rep = self.diffeo_check::<C>(max_arity, (-1f64).exp())?;
        if !rep.pass() {
            return Err(Error::Inconsistent(format!("∇ is not compatible with the operators on {} tuples", rep.failures)));
        }
        self.derham(true)
    }

    /// A∞ relation of the de Rham structure on `inputs`, in reliable degrees.
    pub fn derham_relation_residual<C: Scalar>(&self, inputs: &[FamilyElement<C>], with_omega: bool) -> Result<FamilyElement<C>> {
        let s = self.derham::<C>(with_omega)?;
        Ok(self.reliable(&epsilon_relation(&s, inputs)?))
    }

    /// `θ = Σ (X_i − iα_i) e_i`, so that `∇θ = ω` and `θ(p) = −iα·e`, and the
    /// propagated potential `𝒲 = Σ_{k ≤ K′} (−1)^{k(k−1)/2} m^ε_k(θ^{⊗k})`
    /// with `K′ = min(K, D_x − 1)`.
    pub fn propagate<C: Scalar>(&self, alpha: &[BigRational], t: f64) -> Result<Propagation<C>> {
        let n = self.nvars();
        if alpha.len() != n {
            return Err(Error::LengthMismatch(alpha.len(), n));
        }
        let mut theta = self.zero();
        for (i, al) in alpha.iter().enumerate() {
            let mut e = vec![0; n];
            e[i] = 1;
            theta = theta.add(&self.element(e, 0, 1 << i, self.one()))?;
            let c = NovikovElement::constant(self.a.monoid().clone(), self.a.cutoff().clone(), -(C::imag_unit() * C::from_rational(al)));
            theta = theta.add(&self.element(vec![0; n], 0, 1 << i, c))?;
        }
        let nabla_theta_is_omega = self.gm(&theta)? == self.omega();
        let arity = self.a.arity_cutoff().min(self.base_degree() as usize - 1);
        let m = self.fiberwise::<C>()?;
        let mut potential = self.zero();
        for k in 0..=arity {
            let v = m.m(&vec![theta.clone(); k])?;
            potential = potential.add(&if mc_sign(k) > 0 { v } else { v.neg() })?;
        }
        let defect = self.reliable(&self.gm(&potential)?);
        let max_abs = max_abs_at(&defect, t);
        let exact = defect.is_zero();
        if !exact && max_abs > 1e-9 {
            return Err(Error::Inconsistent(format!("propagated potential is not flat: |∇𝒲| = {max_abs:e}")));
        }
        Ok(Propagation { theta, potential, defect, exact, max_abs, nabla_theta_is_omega, arity, alpha: alpha.to_vec() })
    }

    /// Value of the 0-form part of `f` at `x′`, in the ring based at `x′`.
    pub fn evaluate_at<C: Scalar>(&self, t: &ToricData, f: &FamilyElement<C>, x: &[BigRational]) -> Result<ExtElement<C>> {
        let monoid = Arc::new(t.monoid_at(x)?);
        let c: Vec<BigRational> = x.iter().zip(&self.p).map(|(a, b)| a - b).collect();
        let mut out = ExtElement::zero(monoid.clone(), self.a.cutoff().clone());
        for ((bm, mask), coef) in f.terms() {
            if bm.odd != 0 {
                continue;
            }
            let mut r = BigRational::one();
            for (ci, e) in c.iter().zip(&bm.exps) {
                for _ in 0..*e {
                    r *= ci;
                }
            }
            out.add_comp(*mask, &coef.scale(&C::from_rational(&r)).transport(monoid.clone())?);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug)]
pub struct Propagation<C> {
    pub theta: FamilyElement<C>,
    pub potential: FamilyElement<C>,
    /// `∇𝒲` in reliable degrees.
    pub defect: FamilyElement<C>,
    pub exact: bool,
    pub max_abs: f64,
    pub nabla_theta_is_omega: bool,
    pub arity: usize,
    pub alpha: Vec<BigRational>,
}

/// The two ways of computing the potential at a second point `x′`.
#[derive(Clone, Debug)]
pub struct TwoRoute<C> {
    /// `𝒲` evaluated at `x′`.
    pub propagated: NovikovElement<C>,
    /// Weak Maurer–Cartan value of `θ(x′)` over the ring re-based at `x′`.
    pub rebased: NovikovElement<C>,
    pub equal: bool,
}

/// Compare the propagated potential at `x′` with the weak Maurer–Cartan
/// value recomputed at `x′`, on the classes whose energy is below the cutoff
/// at both points.
pub fn two_route<C: Scalar>(t: &ToricData, fam: &Family, prop: &Propagation<C>, x: &[BigRational]) -> Result<TwoRoute<C>> {
    let at = fam.evaluate_at(t, &prop.potential, x)?;
    let monoid = at.monoid().clone();
    let a = fam.algebra().with_monoid(monoid.clone())?.with_arity_cutoff(prop.arity);
    let mut b = a.zero_elem::<C>();
    for (i, (xi, pi)) in x.iter().zip(fam.point()).enumerate() {
        let c = C::from_rational(&(xi - pi)) - C::imag_unit() * C::from_rational(&prop.alpha[i]);
        b = b.add(&a.basis::<C>(1 << i).scale(&c))?;
    }
    let w = weak_mc_check(&a, &b)?;
    let at_p = fam.algebra().monoid().clone();
    let window = |v: &NovikovElement<C>| -> NovikovElement<C> {
        let mut out = NovikovElement::zero(monoid.clone(), v.cutoff().clone());
        for (g, c) in v.terms() {
            if at_p.energy(g) < *v.cutoff() {
                out.add_term(g.clone(), c.clone());
            }
        }
        out
    };
    let propagated = window(&at.comp(0));
    let rebased = window(&w.lambda);
    let equal = propagated == rebased && w.is_weak;
    Ok(TwoRoute { propagated, rebased, equal })
}

fn max_abs_at<C: Scalar>(f: &FamilyElement<C>, t: f64) -> f64 {
    f.terms().values().map(|c| c.evaluate(t).norm()).fold(0.0, f64::max)
}

/// One exponential term `T^{E + ⟨a, x − u₀⟩} e^{−i⟨φ, y⟩}` of a potential in
/// the chart `T = e^{-1}`. For toric data `a = φ = ∂β`.
#[derive(Clone, Debug)]
pub struct PotentialTerm {
    pub energy: BigRational,
    pub area_weight: Vec<BigRational>,
    pub phase_weight: Vec<BigRational>,
}

/// The potential of `t` as exponential terms around its basepoint.
pub fn potential_terms(t: &ToricData) -> Result<(Vec<BigRational>, Vec<PotentialTerm>)> {
    let m = t.monoid()?;
    let terms = m
        .classes()
        .iter()
        .map(|c| {
            let w: Vec<BigRational> = c.boundary.iter().map(|v| BigRational::from_integer((*v).into())).collect();
            PotentialTerm { energy: c.energy0.clone(), area_weight: w.clone(), phase_weight: w }
        })
        .collect();
    Ok((t.basepoint.clone(), terms))
}

fn eval_terms(terms: &[PotentialTerm], base: &[f64], x: &[f64], y: &[f64]) -> Complex64 {
    terms
        .iter()
        .map(|p| {
            let e = p.energy.to_f64().unwrap_or(f64::NAN)
                + p.area_weight.iter().zip(x.iter().zip(base)).map(|(a, (xi, bi))| a.to_f64().unwrap_or(f64::NAN) * (xi - bi)).sum::<f64>();
            let ph: f64 = p.phase_weight.iter().zip(y).map(|(a, yi)| a.to_f64().unwrap_or(f64::NAN) * yi).sum();
            Complex64::new(-e, -ph).exp()
        })
        .sum()
}

#[derive(Clone, Debug)]
pub struct HolomorphicReport {
    /// Exact coefficients of `(∂_{x_j} + i∂_{y_j})W` per term and direction.
    pub symbolic: Vec<Vec<BigRational>>,
    pub symbolic_zero: bool,
    /// Largest central-difference residual over the samples.
    pub numeric: f64,
}

/// `∂̄W` on the closed form. `∂_{x_j}` acts on `T^{E(x)}` by the area rule,
/// `i∂_{y_j}` on the phase; each term contributes `φ_j − a_j`.
pub fn holomorphic_check(terms: &[PotentialTerm], base: &[BigRational], samples: &[(Vec<f64>, Vec<f64>)], step: f64) -> HolomorphicReport {
    let symbolic: Vec<Vec<BigRational>> = terms
        .iter()
        .map(|p| p.phase_weight.iter().zip(&p.area_weight).map(|(f, a)| f - a).collect())
        .collect();
    let symbolic_zero = symbolic.iter().flatten().all(|r| r.is_zero());
    let b: Vec<f64> = base.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect();
    let mut numeric: f64 = 0.0;
    for (x, y) in samples {
        for j in 0..x.len() {
            let shift = |v: &[f64], h: f64| -> Vec<f64> {
                let mut w = v.to_vec();
                w[j] += h;
                w
            };
            let dx = (eval_terms(terms, &b, &shift(x, step), y) - eval_terms(terms, &b, &shift(x, -step), y)) / (2.0 * step);
            let dy = (eval_terms(terms, &b, x, &shift(y, step)) - eval_terms(terms, &b, x, &shift(y, -step))) / (2.0 * step);
            numeric = numeric.max((dx + Complex64::i() * dy).norm());
        }
    }
    HolomorphicReport { symbolic, symbolic_zero, numeric }
}

#[derive(Clone, Debug)]
pub struct DescentReport {
    /// Every phase weight is an integer vector.
    pub periodic: bool,
    /// Largest `|W(x, y + 2πe_j) − W(x, y)|` at the sample.
    pub numeric: f64,
}

/// `W(x, y + 2πγ) = W(x, y)` for the lattice generators `γ`.
pub fn descent_check(terms: &[PotentialTerm], base: &[BigRational], sample: (&[f64], &[f64])) -> DescentReport {
    let periodic = terms.iter().all(|p| p.phase_weight.iter().all(|w| w.is_integer()));
    let b: Vec<f64> = base.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect();
    let (x, y) = sample;
    let w0 = eval_terms(terms, &b, x, y);
    let mut numeric: f64 = 0.0;
    for j in 0..y.len() {
        let mut y2 = y.to_vec();
        y2[j] += 2.0 * PI;
        numeric = numeric.max((eval_terms(terms, &b, x, &y2) - w0).norm());
    }
    DescentReport { periodic, numeric }
}

/// Coefficients of `f` grouped by base monomial, evaluated at `t`.
pub fn evaluate_family<C: Scalar>(f: &FamilyElement<C>, t: f64) -> BTreeMap<(Vec<u32>, WedgeIndex, WedgeIndex), Complex64> {
    f.terms().iter().map(|((bm, m), c)| ((bm.exps.clone(), bm.odd, *m), c.evaluate(t))).collect()
}

/// Largest absolute value among the entries of a rational table.
pub fn max_abs_rational(v: &[Vec<BigRational>]) -> BigRational {
    v.iter().flatten().map(|r| r.abs()).fold(BigRational::zero(), |a, b| if b > a { b } else { a })
}
