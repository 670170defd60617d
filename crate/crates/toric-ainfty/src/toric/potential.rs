//! The potential `W`, read off as the `𝟏`-coefficient of the Maurer–Cartan
//! sum, and its critical points.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use std::sync::Arc;

use super::ToricData;
use crate::ainfty::{factorial, AInftyStructure, Convention};
use crate::error::Result;
use crate::graded::ExtElement;
use crate::novikov::{Float, Scalar};

/// True when every energy-positive operator on degree-one inputs is the
/// divisor closed form, so that the Maurer–Cartan sum is an exponential.
fn divisor_type(a: &AInftyStructure) -> bool {
    if a.has_explicit_terms() {
        return false;
    }
    let m = a.monoid();
    for (degs, g, pats) in a.pattern_entries() {
        if degs.iter().any(|d| *d != 1) {
            continue;
        }
        let supp = g.support();
        if supp.len() != 1 || g.total() != 1 || pats.len() != 1 {
            return false;
        }
        let k = degs.len();
        let p = &pats[0];
        if p.subsets.iter().any(|s| *s != 1 << supp[0]) || p.weight != BigRational::new(1.into(), factorial(k)) {
            return false;
        }
    }
    (0..m.len()).all(|pos| (0..=a.arity_cutoff()).all(|k| a.is_defined(&m.generator(pos), &vec![1; k])))
}

/// `W(x, y)` at `T = t`. Uses the closed exponential form when the structure
/// is divisor-generated on degree-one inputs, and direct summation otherwise.
pub fn potential(t: &ToricData, a: &AInftyStructure, x: &[BigRational], y: &[f64], tt: f64) -> Result<Complex64> {
    let monoid = t.monoid_at(x)?;
    if divisor_type(a) {
        let mut w = Complex64::zero();
        for c in monoid.classes() {
            if c.energy0 >= *a.cutoff() {
                continue;
            }
            let phase: f64 = c.boundary.iter().zip(y).map(|(v, yj)| *v as f64 * yj).sum();
            w += tt.powf(c.energy0.to_f64().unwrap_or(f64::NAN)) * Complex64::new(0.0, -phase).exp();
        }
        return Ok(w);
    }
    potential_direct(t, a, x, y, tt, a.arity_cutoff())
}

/// `Σ_{k ≤ kmax}` of the `𝟏`-coefficient of `m_k(b,…,b)` with `b = Σ −i y_j e_j`,
/// over the monoid re-based at `x`.
pub fn potential_direct(t: &ToricData, a: &AInftyStructure, x: &[BigRational], y: &[f64], tt: f64, kmax: usize) -> Result<Complex64> {
    let monoid = Arc::new(t.monoid_at(x)?);
    let a = a.in_convention(Convention::Shifted).with_monoid(monoid.clone())?.with_arity_cutoff(kmax.max(a.arity_cutoff()));
    let mut b: ExtElement<Float> = a.zero_elem();
    for (j, yj) in y.iter().enumerate() {
        b = b.add(&ExtElement::generator(monoid.clone(), a.cutoff().clone(), j).scale(&Float::from_parts(0.0, -yj)))?;
    }
    let mut w = Complex64::zero();
    for k in 0..=kmax {
        let v = a.apply(&vec![b.clone(); k])?;
        w += v.comp(0).evaluate(tt);
    }
    Ok(w)
}

#[derive(Clone, Debug)]
pub struct CriticalPoint {
    /// `z_j = x_j + i y_j` with `y_j ∈ [0, 2π)`.
    pub z: Vec<Complex64>,
    pub value: Complex64,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct CriticalReport {
    pub points: Vec<CriticalPoint>,
    pub starts: usize,
    pub failed_starts: usize,
}

/// Closed-form potential of the generated model in `ζ = s·x + i·y`, `s = −ln t`.
struct Closed {
    normals: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    s: f64,
}

impl Closed {
    fn terms(&self, zeta: &[Complex64]) -> Vec<Complex64> {
        self.normals
            .iter()
            .zip(&self.offsets)
            .map(|(v, c)| {
                let lin: Complex64 = v.iter().zip(zeta).map(|(a, z)| *a * z).sum();
                (Complex64::new(self.s * c, 0.0) - lin).exp()
            })
            .collect()
    }

    fn grad_hess(&self, zeta: &[Complex64]) -> (Complex64, DVector<Complex64>, DMatrix<Complex64>) {
        let n = zeta.len();
        let e = self.terms(zeta);
        let mut g = DVector::zeros(n);
        let mut h = DMatrix::zeros(n, n);
        let mut w = Complex64::zero();
        for (v, ei) in self.normals.iter().zip(&e) {
            w += ei;
            for j in 0..n {
                g[j] -= v[j] * ei;
                for k in 0..n {
                    h[(j, k)] += v[j] * v[k] * ei;
                }
            }
        }
        (w, g, h)
    }
}

/// Critical points of `W` by damped Newton iteration from a grid of starts
/// covering the fundamental domain `y ∈ [0, 2π)^n`.
pub fn critical_points(t: &ToricData, tt: f64) -> CriticalReport {
    let n = t.dim;
    let s = -tt.ln();
    let closed = Closed {
        normals: t.facets.iter().map(|f| f.normal.iter().map(|v| *v as f64).collect()).collect(),
        offsets: t.facets.iter().map(|f| f.offset.to_f64().unwrap_or(f64::NAN)).collect(),
        s,
    };
    let u0: Vec<f64> = t.basepoint.iter().map(|r| r.to_f64().unwrap_or(0.0)).collect();
    let xs = [-0.25, 0.0, 0.25];
    let ys: Vec<f64> = (0..6).map(|i| i as f64 * PI / 3.0 + 0.1).collect();
    let mut starts = vec![Vec::new()];
    for j in 0..n {
        let mut next = Vec::new();
        for st in &starts {
            for dx in xs {
                for y in &ys {
                    let mut u: Vec<Complex64> = st.clone();
                    u.push(Complex64::new(s * (u0[j] + dx), *y));
                    next.push(u);
                }
            }
        }
        starts = next;
    }
    let mut report = CriticalReport { points: Vec::new(), starts: starts.len(), failed_starts: 0 };
    for st in starts {
        match newton(&closed, st) {
            Some(zeta) => {
                let (w, g, _) = closed.grad_hess(&zeta);
                let z: Vec<Complex64> = zeta.iter().map(|q| Complex64::new(q.re / s, phase(q.im))).collect();
                let dup = report.points.iter().any(|p| {
                    p.z.iter().zip(&z).all(|(a, b)| {
                        let dy = (a.im - b.im + PI).rem_euclid(2.0 * PI) - PI;
                        (a.re - b.re).abs() < 1e-8 && dy.abs() < 1e-8
                    })
                });
                if !dup {
                    report.points.push(CriticalPoint { z, value: w, residual: g.norm() });
                }
            }
            None => report.failed_starts += 1,
        }
    }
    report.points.sort_by(|a, b| {
        // Round real parts so that roots differing only in phase sort by `y`.
        let key = |p: &CriticalPoint| -> Vec<f64> { p.z.iter().flat_map(|c| [(c.re * 1e8).round(), c.im]).collect() };
        let (ka, kb) = (key(a), key(b));
        ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
    });
    report
}

/// `y` reduced to `[0, 2π)`, snapping values within rounding of `2π` to zero.
fn phase(y: f64) -> f64 {
    let r = y.rem_euclid(2.0 * PI);
    if 2.0 * PI - r < 1e-12 {
        0.0
    } else {
        r
    }
}

fn newton(c: &Closed, start: Vec<Complex64>) -> Option<Vec<Complex64>> {
    let mut zeta = DVector::from_vec(start);
    for _ in 0..200 {
        let (_, g, h) = c.grad_hess(zeta.as_slice());
        let gn = g.norm();
        // A vanishing gradient with every monomial vanishing is escape to infinity.
        let scale = c.terms(zeta.as_slice()).iter().map(|e| e.norm()).fold(0.0, f64::max);
        if scale < 1e-6 {
            return None;
        }
        if gn < 1e-13 {
            return Some(zeta.as_slice().to_vec());
        }
        let step = h.lu().solve(&(-&g))?;
        let mut lambda = 1.0;
        loop {
            let trial = &zeta + &step * Complex64::new(lambda, 0.0);
            let (_, g2, _) = c.grad_hess(trial.as_slice());
            if g2.norm() < gn || lambda < 1.0 / 64.0 {
                zeta = trial;
                break;
            }
            lambda /= 2.0;
        }
        if zeta.iter().any(|q| !q.re.is_finite() || q.re.abs() > 60.0) {
            return None;
        }
    }
    let (_, g, _) = c.grad_hess(zeta.as_slice());
    (g.norm() < 1e-10).then(|| zeta.as_slice().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::novikov::rat;
    use crate::toric::{divisor_core, fixtures, Facet};

    #[test]
    fn cp1_potential_matches_closed_form() {
        let t = fixtures::cp1();
        let a = divisor_core(&t, 12, rat(3, 1)).unwrap();
        let tt = (-1f64).exp();
        let w = potential(&t, &a, &[rat(1, 2)], &[0.0], tt).unwrap();
        assert!((w - Complex64::new(2.0 * (-0.5f64).exp(), 0.0)).norm() < 1e-14);
        let (x, y) = (rat(3, 10), 0.4);
        let z = Complex64::new(0.3, y);
        let want = (-z).exp() + (z - 1.0).exp();
        assert!((potential(&t, &a, &[x.clone()], &[y], tt).unwrap() - want).norm() < 1e-13);
        assert!((potential_direct(&t, &a, &[x], &[y], tt, 12).unwrap() - want).norm() < 1e-12);
    }

    #[test]
    fn cp2_critical_points() {
        let rep = critical_points(&fixtures::cp2(), (-1f64).exp());
        assert_eq!(rep.points.len(), 3);
        for p in &rep.points {
            assert!((p.z[0].re - 1.0 / 3.0).abs() < 1e-9);
            let want = 3.0 * (-(p.z[0])).exp();
            assert!((p.value - want).norm() < 1e-9);
        }
    }

    #[test]
    fn cp1_roots() {
        // e^{2z} = e has the two solutions z = 1/2 and z = 1/2 + iπ modulo 2πi.
        let rep = critical_points(&fixtures::cp1(), (-1f64).exp());
        assert_eq!(rep.points.len(), 2);
        assert!((rep.points[0].z[0] - Complex64::new(0.5, 0.0)).norm() < 1e-9);
        assert!((rep.points[0].value.re - 2.0 * (-0.5f64).exp()).abs() < 1e-12);
        assert!((rep.points[1].z[0] - Complex64::new(0.5, PI)).norm() < 1e-9);
    }

    #[test]
    fn one_facet_has_no_critical_points() {
        let t = ToricData::new(1, vec![Facet { normal: vec![1], offset: rat(0, 1) }], vec![rat(1, 2)]).unwrap();
        let rep = critical_points(&t, (-1f64).exp());
        assert!(rep.points.is_empty());
        assert_eq!(rep.failed_starts, rep.starts);
    }
}
