//! Weak Maurer–Cartan elements, the modules and twisted complexes they
//! define, Hom complexes between them and numerical Floer ranks.
//!
//! Everything here runs in the shifted convention, where the weak
//! Maurer–Cartan sum is `Σ m_k(b,…,b)` without signs.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::ainfty::{AInftyStructure, Convention};
use crate::error::{Error, Result};
use crate::graded::{ExtElement, WedgeIndex};
use crate::novikov::{NovikovElement, Scalar};

/// Singular values below this count as zero when ranking a differential.
pub const RANK_THRESHOLD: f64 = 1e-9;

/// Outcome of summing the weak Maurer–Cartan series.
#[derive(Clone, Debug)]
pub struct WeakMc<C> {
    pub is_weak: bool,
    /// Coefficient of `𝟏`.
    pub lambda: NovikovElement<C>,
    /// Everything except the `𝟏` component.
    pub remainder: ExtElement<C>,
    /// False when the top-arity term is still nonzero, so the sum is a
    /// truncation of a series that continues past the arity cutoff.
    pub terminated: bool,
}

fn shifted(a: &AInftyStructure) -> AInftyStructure {
    a.in_convention(Convention::Shifted)
}

fn check_odd<C: Scalar>(b: &ExtElement<C>) -> Result<()> {
    if b.is_zero() || b.parity() == Some(1) {
        Ok(())
    } else {
        Err(Error::Input("Maurer–Cartan element must be odd".into()))
    }
}

/// Sum `Σ_{k ≤ K} m_k(b^{⊗k})` and split off the `𝟏` coefficient.
pub fn weak_mc_check<C: Scalar>(a: &AInftyStructure, b: &ExtElement<C>) -> Result<WeakMc<C>> {
    check_odd(b)?;
    let a = shifted(a);
    let mut total = a.zero_elem::<C>();
    let mut last = a.zero_elem::<C>();
    for k in 0..=a.arity_cutoff() {
        last = a.apply(&vec![b.clone(); k])?;
        total = total.add(&last)?;
    }
    let lambda = total.comp(0);
    let mut remainder = total.clone();
    remainder.add_comp(0, &lambda.neg());
    Ok(WeakMc { is_weak: remainder.is_zero(), lambda, remainder, terminated: last.is_zero() || a.arity_cutoff() == 0 })
}

/// The module `A^b` with `ρ_k(a_1,…,a_k; x) = Σ_i m_{i+k+1}(a_1,…,a_k, x, b^{⊗i})`.
pub struct McModule<C> {
    a: AInftyStructure,
    b: ExtElement<C>,
    lambda: NovikovElement<C>,
}

/// Build `ρ^b` from a weak Maurer–Cartan pair.
pub fn module_from_mc<C: Scalar>(a: &AInftyStructure, b: &ExtElement<C>, lambda: &NovikovElement<C>) -> Result<McModule<C>> {
    let w = weak_mc_check(a, b)?;
    if !w.is_weak {
        return Err(Error::Inconsistent("element is not weakly Maurer–Cartan".into()));
    }
    Ok(McModule { a: shifted(a), b: b.clone(), lambda: lambda.clone() })
}

impl<C: Scalar> McModule<C> {
    pub fn lambda(&self) -> &NovikovElement<C> {
        &self.lambda
    }

    /// Replace the internal curvature; used to build negative controls.
    pub fn with_lambda(mut self, lambda: NovikovElement<C>) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn rho(&self, inputs: &[ExtElement<C>], x: &ExtElement<C>) -> Result<ExtElement<C>> {
        let mut out = self.a.zero_elem::<C>();
        let mut args: Vec<ExtElement<C>> = inputs.to_vec();
        args.push(x.clone());
        while args.len() <= self.a.arity_cutoff() {
            out = out.add(&self.a.apply(&args)?)?;
            if self.b.is_zero() {
                break;
            }
            args.push(self.b.clone());
        }
        Ok(out)
    }

    /// Left side minus right side of the module identity at
    /// `(a_1,…,a_N; x)`: the internal and composition terms, signed by the
    /// shifted degrees in front, minus `λx` when `N = 0`.
    pub fn axiom_residual(&self, inputs: &[ExtElement<C>], x: &ExtElement<C>) -> Result<ExtElement<C>> {
        let mut total = self.a.zero_elem::<C>();
        let mut slots: Vec<Vec<(usize, ExtElement<C>)>> = inputs.iter().map(homogeneous).collect();
        slots.push(homogeneous(x));
        if slots.iter().any(|s| s.is_empty()) {
            return Ok(total);
        }
        let n = inputs.len();
        for_each_choice(&slots, &mut |degs, xs| {
            let (args, xh) = xs.split_at(n);
            let xh = &xh[0];
            let sign = |r: usize| -> bool { degs[..r].iter().map(|d| d + 1).sum::<usize>() % 2 == 1 };
            for r in 0..=n {
                for s in 0..=(n - r) {
                    let inner = self.a.apply(&args[r..r + s])?;
                    if inner.is_zero() {
                        continue;
                    }
                    let mut outer: Vec<ExtElement<C>> = args[..r].to_vec();
                    outer.push(inner);
                    outer.extend_from_slice(&args[r + s..]);
                    let v = self.rho(&outer, xh)?;
                    total = total.add(&if sign(r) { v.neg() } else { v })?;
                }
            }
            for j in 0..=n {
                let inner = self.rho(&args[j..], xh)?;
                let v = self.rho(&args[..j], &inner)?;
                total = total.add(&if sign(j) { v.neg() } else { v })?;
            }
            if n == 0 {
                total = total.sub(&xh.scale_nov(&self.lambda)?)?;
            }
            Ok(())
        })?;
        Ok(total)
    }
}

fn homogeneous<C: Scalar>(x: &ExtElement<C>) -> Vec<(usize, ExtElement<C>)> {
    let (ev, od) = x.parity_parts();
    [(0, ev), (1, od)].into_iter().filter(|(_, v)| !v.is_zero()).collect()
}

fn for_each_choice<C: Scalar>(
    slots: &[Vec<(usize, ExtElement<C>)>],
    f: &mut dyn FnMut(&[usize], &[ExtElement<C>]) -> Result<()>,
) -> Result<()> {
    let mut idx = vec![0usize; slots.len()];
    loop {
        let degs: Vec<usize> = idx.iter().enumerate().map(|(i, j)| slots[i][*j].0).collect();
        let xs: Vec<ExtElement<C>> = idx.iter().enumerate().map(|(i, j)| slots[i][*j].1.clone()).collect();
        f(&degs, &xs)?;
        let mut p = slots.len();
        loop {
            if p == 0 {
                return Ok(());
            }
            p -= 1;
            idx[p] += 1;
            if idx[p] < slots[p].len() {
                break;
            }
            idx[p] = 0;
        }
    }
}

/// A matrix of algebra elements, row-major.
pub type Matrix<C> = Vec<Vec<ExtElement<C>>>;

fn zero_matrix<C: Scalar>(a: &AInftyStructure, rows: usize, cols: usize) -> Matrix<C> {
    vec![vec![a.zero_elem::<C>(); cols]; rows]
}

/// `Σ_{index paths}` of `m_k` applied entrywise along a chain of matrices.
/// The free module is taken to be even, so matrix units carry no signs.
fn matrix_m<C: Scalar>(a: &AInftyStructure, mats: &[&Matrix<C>]) -> Result<Matrix<C>> {
    let rows = mats[0].len();
    let cols = mats.last().map(|m| m[0].len()).unwrap_or(0);
    let mut out = zero_matrix(a, rows, cols);
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let mut path: Vec<ExtElement<C>> = Vec::with_capacity(mats.len());
            walk(a, mats, 0, i, j, &mut path, cell)?;
        }
    }
    Ok(out)
}

fn walk<C: Scalar>(
    a: &AInftyStructure,
    mats: &[&Matrix<C>],
    pos: usize,
    from: usize,
    end: usize,
    path: &mut Vec<ExtElement<C>>,
    acc: &mut ExtElement<C>,
) -> Result<()> {
    let m = mats[pos];
    let last = pos + 1 == mats.len();
    for to in 0..m[from].len() {
        if last && to != end {
            continue;
        }
        let x = &m[from][to];
        if x.is_zero() {
            continue;
        }
        path.push(x.clone());
        if last {
            *acc = acc.add(&a.apply(path)?)?;
        } else {
            walk(a, mats, pos + 1, to, end, path, acc)?;
        }
        path.pop();
    }
    Ok(())
}

/// A rank `r` twisted complex: an odd `r×r` matrix `b` over the algebra with
/// `Σ m_k(b^{⊗k}) = λ·𝟏·id`.
#[derive(Clone, Debug)]
pub struct TwistedComplex<C> {
    pub rank: usize,
    pub b: Matrix<C>,
    pub lambda: NovikovElement<C>,
}

impl<C: Scalar> TwistedComplex<C> {
    /// Validate `b` and read off its internal curvature.
    pub fn new(a: &AInftyStructure, b: Matrix<C>) -> Result<Self> {
        let a = shifted(a);
        let rank = b.len();
        if rank == 0 || b.iter().any(|r| r.len() != rank) {
            return Err(Error::Input("twisted complex needs a square nonempty matrix".into()));
        }
        for x in b.iter().flatten() {
            check_odd(x)?;
        }
        let mut sum = zero_matrix::<C>(&a, rank, rank);
        let m0 = a.apply::<C>(&[])?;
        for (i, row) in sum.iter_mut().enumerate() {
            row[i] = m0.clone();
        }
        for k in 1..=a.arity_cutoff() {
            let refs: Vec<&Matrix<C>> = vec![&b; k];
            let term = matrix_m(&a, &refs)?;
            for (row, trow) in sum.iter_mut().zip(term) {
                for (cell, t) in row.iter_mut().zip(trow) {
                    *cell = cell.add(&t)?;
                }
            }
        }
        let lambda = sum[0][0].comp(0);
        for (i, row) in sum.iter().enumerate() {
            for (j, cell) in row.iter().enumerate() {
                let mut r = cell.clone();
                if i == j {
                    r.add_comp(0, &lambda.neg());
                }
                if !r.is_zero() {
                    return Err(Error::Inconsistent(format!("Maurer–Cartan sum is not λ·id at entry ({}, {})", i + 1, j + 1)));
                }
            }
        }
        Ok(TwistedComplex { rank, b, lambda })
    }

    /// Rank one complex on `b`.
    pub fn rank_one(a: &AInftyStructure, b: ExtElement<C>) -> Result<Self> {
        Self::new(a, vec![vec![b]])
    }
}

/// `d(a) = Σ_{k,l} m_{k+l+1}(b^k, a, δ^l)` on `r×s` matrices.
pub struct HomComplex<'a, C> {
    a: AInftyStructure,
    source: &'a TwistedComplex<C>,
    target: &'a TwistedComplex<C>,
}

pub fn hom_differential<'a, C: Scalar>(
    a: &AInftyStructure,
    source: &'a TwistedComplex<C>,
    target: &'a TwistedComplex<C>,
) -> HomComplex<'a, C> {
    HomComplex { a: shifted(a), source, target }
}

impl<'a, C: Scalar> HomComplex<'a, C> {
    pub fn rows(&self) -> usize {
        self.source.rank
    }

    pub fn cols(&self) -> usize {
        self.target.rank
    }

    pub fn apply(&self, x: &Matrix<C>) -> Result<Matrix<C>> {
        if x.len() != self.rows() || x.iter().any(|r| r.len() != self.cols()) {
            return Err(Error::DimensionMismatch { expected: self.rows() * self.cols(), found: x.iter().map(|r| r.len()).sum() });
        }
        let kmax = self.a.arity_cutoff();
        let mut out = zero_matrix::<C>(&self.a, self.rows(), self.cols());
        for k in 0..kmax {
            for l in 0..(kmax - k) {
                let mut refs: Vec<&Matrix<C>> = vec![&self.source.b; k];
                refs.push(x);
                refs.extend(std::iter::repeat(&self.target.b).take(l));
                let term = matrix_m(&self.a, &refs)?;
                for (row, trow) in out.iter_mut().zip(term) {
                    for (cell, t) in row.iter_mut().zip(trow) {
                        *cell = cell.add(&t)?;
                    }
                }
                if self.target.b.iter().flatten().all(|y| y.is_zero()) {
                    break;
                }
            }
            if self.source.b.iter().flatten().all(|y| y.is_zero()) {
                break;
            }
        }
        Ok(out)
    }

    /// `d(d(x)) − (F(δ) − F(b))·x`. In the shifted convention the composite
    /// `d∘d` equals `(F(δ) − F(b))·id`; read through the sign
    /// `(−1)^{|d|}` of composing odd maps this is `[F(b) − F(δ)]·id`.
    pub fn square_defect(&self, x: &Matrix<C>) -> Result<Matrix<C>> {
        let dd = self.apply(&self.apply(x)?)?;
        let shift = self.target.lambda.sub(&self.source.lambda)?;
        let mut out = dd;
        for (row, xrow) in out.iter_mut().zip(x) {
            for (cell, xv) in row.iter_mut().zip(xrow) {
                *cell = cell.sub(&xv.scale_nov(&shift)?)?;
            }
        }
        Ok(out)
    }

    /// Basis of the Hom space: `(row, col, wedge mask)`.
    pub fn basis(&self) -> Vec<(usize, usize, WedgeIndex)> {
        let dim = 1u32 << self.a.dim();
        let mut v = Vec::new();
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                for m in 0..dim {
                    v.push((i, j, m));
                }
            }
        }
        v
    }

    pub fn unit_matrix(&self, i: usize, j: usize, mask: WedgeIndex) -> Matrix<C> {
        let mut x = zero_matrix::<C>(&self.a, self.rows(), self.cols());
        x[i][j] = self.a.basis(mask);
        x
    }

    /// Complex matrix of `d` on the basis, at `T = t`.
    pub fn evaluated_matrix(&self, t: f64) -> Result<DMatrix<Complex64>> {
        let basis = self.basis();
        let n = basis.len();
        let mut m = DMatrix::zeros(n, n);
        for (col, (i, j, mask)) in basis.iter().enumerate() {
            let img = self.apply(&self.unit_matrix(*i, *j, *mask))?;
            for (row, (p, q, mm)) in basis.iter().enumerate() {
                m[(row, col)] = img[*p][*q].comp(*mm).evaluate(t);
            }
        }
        Ok(m)
    }
}

/// Total dimension of the cohomology of `d` at `T = t`, or zero when the
/// evaluated internal curvatures differ.
pub fn hf_rank<C: Scalar>(a: &AInftyStructure, source: &TwistedComplex<C>, target: &TwistedComplex<C>, t: f64) -> Result<usize> {
    let gap = (source.lambda.evaluate(t) - target.lambda.evaluate(t)).norm();
    if gap > RANK_THRESHOLD {
        return Ok(0);
    }
    let h = hom_differential(a, source, target);
    let m = h.evaluated_matrix(t)?;
    let n = m.nrows();
    let rank = m.singular_values().iter().filter(|s| **s > RANK_THRESHOLD).count();
    Ok(n.saturating_sub(2 * rank))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::novikov::{rat, Exact, Float};
    use crate::toric::{divisor_core, fixtures};
    use num_rational::BigRational;
    use std::sync::Arc;

    fn cp1_at(u: BigRational, k: usize) -> AInftyStructure {
        let t = fixtures::cp1();
        let core = divisor_core(&t, k, rat(3, 1)).unwrap();
        core.with_monoid(Arc::new(t.monoid_at(&[u]).unwrap())).unwrap()
    }

    fn iy(a: &AInftyStructure, y: i64) -> ExtElement<Exact> {
        a.basis::<Exact>(1).scale(&Exact::new(rat(0, 1), rat(-y, 1)))
    }

    #[test]
    fn zero_element_gives_m0() {
        let a = cp1_at(rat(1, 2), 6);
        let w = weak_mc_check(&a, &a.zero_elem::<Exact>()).unwrap();
        assert!(w.is_weak && w.terminated);
        assert_eq!(w.lambda, a.apply::<Exact>(&[]).unwrap().comp(0));
    }

    #[test]
    fn imaginary_direction_is_weak() {
        let a = cp1_at(rat(1, 2), 8);
        let w = weak_mc_check(&a, &iy(&a, 1)).unwrap();
        assert!(w.is_weak);
        assert!(!w.terminated);
        let want = 2.0 * (-0.5f64).exp() * 1f64.cos();
        assert!((w.lambda.evaluate((-1f64).exp()) - Complex64::new(want, 0.0)).norm() < 1e-5);
    }

    #[test]
    fn module_axiom_at_zero_inputs() {
        let a = cp1_at(rat(1, 2), 8);
        let b = iy(&a, 1);
        let w = weak_mc_check(&a, &b).unwrap();
        let m = module_from_mc(&a, &b, &w.lambda).unwrap();
        for mask in 0..2 {
            assert!(m.axiom_residual(&[], &a.basis(mask)).unwrap().is_zero());
        }
        let one = NovikovElement::constant(a.monoid().clone(), a.cutoff().clone(), Exact::from_i64(1));
        let bad = m.with_lambda(w.lambda.add(&one).unwrap());
        let r = bad.axiom_residual(&[], &a.basis(1)).unwrap();
        assert_eq!(r, a.basis::<Exact>(1).neg());
    }

    #[test]
    fn floer_rank_at_and_off_the_critical_point() {
        let t = (-1f64).exp();
        for (u, want) in [(rat(1, 2), 2), (rat(1, 4), 0)] {
            let a = cp1_at(u, 6);
            let c = TwistedComplex::rank_one(&a, a.zero_elem::<Float>()).unwrap();
            assert_eq!(hf_rank(&a, &c, &c, t).unwrap(), want);
        }
    }
}
