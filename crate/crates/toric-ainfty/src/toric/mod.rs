//! Toric input: moment-polytope data, the divisor-generated A∞ core, its
//! completion on higher wedge degrees, and the Landau–Ginzburg potential.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Deserialize;

use crate::ainfty::{factorial, AInftyStructure, Pattern};
use crate::error::{Error, Result};
use crate::graded::ExtElement;
use crate::novikov::{parse_rational, DiskClass, Exact, Monoid, MonoidIndex, Scalar};

mod completion;
mod potential;

pub use completion::{complete, CompletionOptions, CompletionReport, LevelReport};
pub use potential::{critical_points, potential, potential_direct, CriticalPoint, CriticalReport};

#[derive(Clone, Debug, PartialEq)]
pub struct Facet {
    pub normal: Vec<i64>,
    pub offset: BigRational,
}

/// Polytope `{x : ⟨v_i, x⟩ − c_i ≥ 0}` with an interior basepoint.
#[derive(Clone, Debug, PartialEq)]
pub struct ToricData {
    pub dim: usize,
    pub facets: Vec<Facet>,
    pub basepoint: Vec<BigRational>,
}

#[derive(Deserialize)]
struct RawFacet {
    normal: Vec<serde_json::Value>,
    offset: serde_json::Value,
}

#[derive(Deserialize)]
struct RawPolytope {
    dimension: usize,
    facets: Vec<RawFacet>,
    basepoint: Vec<serde_json::Value>,
}

/// Parse `{"dimension": n, "facets": [{"normal": [..], "offset": c}], "basepoint": [..]}`.
/// Numbers may also be given as `"p/q"` strings.
pub fn parse_polytope(doc: &str) -> Result<ToricData> {
    let raw: RawPolytope = serde_json::from_str(doc).map_err(|e| Error::Input(format!("polytope JSON: {e}")))?;
    let mut facets = Vec::new();
    for (i, f) in raw.facets.iter().enumerate() {
        let mut normal = Vec::new();
        for v in &f.normal {
            let r = parse_rational(v)?;
            if !r.is_integer() {
                return Err(Error::Input(format!("facet {i}: normal entry {v} is not an integer")));
            }
            normal.push(r.to_integer().to_i64().ok_or_else(|| Error::Input("normal entry too large".into()))?);
        }
        facets.push(Facet { normal, offset: parse_rational(&f.offset)? });
    }
    let basepoint = raw.basepoint.iter().map(parse_rational).collect::<Result<Vec<_>>>()?;
    ToricData::new(raw.dimension, facets, basepoint)
}

impl ToricData {
    pub fn new(dim: usize, facets: Vec<Facet>, basepoint: Vec<BigRational>) -> Result<Self> {
        if basepoint.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: basepoint.len() });
        }
        for f in &facets {
            if f.normal.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: f.normal.len() });
            }
        }
        let t = ToricData { dim, facets, basepoint };
        t.check_interior(&t.basepoint)?;
        Ok(t)
    }

    /// `ℓ_i(x) = ⟨v_i, x⟩ − c_i`.
    pub fn ell(&self, i: usize, x: &[BigRational]) -> BigRational {
        let f = &self.facets[i];
        let mut s = -f.offset.clone();
        for (v, xi) in f.normal.iter().zip(x) {
            s += xi * BigRational::from_integer(BigInt::from(*v));
        }
        s
    }

    pub fn ell_f64(&self, i: usize, x: &[f64]) -> f64 {
        let f = &self.facets[i];
        f.normal.iter().zip(x).map(|(v, xi)| *v as f64 * xi).sum::<f64>() - f.offset.to_f64().unwrap_or(f64::NAN)
    }

    pub fn check_interior(&self, x: &[BigRational]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        for i in 0..self.facets.len() {
            if !self.ell(i, x).is_positive() {
                return Err(Error::OutsidePolytope(format!("facet {} has ℓ = {} at {:?}", i + 1, self.ell(i, x), show(x))));
            }
        }
        Ok(())
    }

    /// One Maslov-2 class per facet with area `ℓ_i(u₀)` and boundary `v_i`.
    pub fn monoid(&self) -> Result<Monoid> {
        let classes = self
            .facets
            .iter()
            .enumerate()
            .map(|(i, f)| DiskClass {
                id: i as u32 + 1,
                energy0: self.ell(i, &self.basepoint),
                maslov: 2,
                boundary: f.normal.clone(),
            })
            .collect();
        Monoid::new(classes, self.dim)
    }

    /// Offset `x − u₀`.
    pub fn shift_to(&self, x: &[BigRational]) -> Vec<BigRational> {
        x.iter().zip(&self.basepoint).map(|(a, b)| a - b).collect()
    }

    /// The monoid re-based at `x` (interior).
    pub fn monoid_at(&self, x: &[BigRational]) -> Result<Monoid> {
        self.check_interior(x)?;
        self.monoid()?.rebased(&self.shift_to(x))
    }

    /// Text form of the potential in `z = x + iy` at `T = e^{-1}`.
    pub fn potential_text(&self) -> String {
        let mut parts = Vec::new();
        for f in &self.facets {
            let mut lin = String::new();
            for (j, v) in f.normal.iter().enumerate() {
                let var = if self.dim == 1 { "z".to_string() } else { format!("z{}", j + 1) };
                match *v {
                    0 => {}
                    1 => lin.push_str(&format!("-{var}")),
                    -1 => lin.push_str(&format!("+{var}")),
                    v if v > 0 => lin.push_str(&format!("-{v}{var}")),
                    v => lin.push_str(&format!("+{}{var}", -v)),
                }
            }
            if !f.offset.is_zero() {
                let c = &f.offset;
                if c.is_positive() {
                    lin.push_str(&format!("+{c}"));
                } else {
                    lin.push_str(&format!("{c}"));
                }
            }
            let lin = lin.strip_prefix('+').unwrap_or(&lin).to_string();
            parts.push(format!("e^{{{}}}", if lin.is_empty() { "0".into() } else { lin }));
        }
        parts.join(" + ")
    }
}

fn show(x: &[BigRational]) -> Vec<String> {
    x.iter().map(|r| r.to_string()).collect()
}

/// The divisor-generated structure: `m_2 = (−1)^{|a|} a∧b` at zero energy and,
/// for each facet class `β` and `0 ≤ N ≤ arity`,
/// `m_{N,β}(b_1,…,b_N) = (1/N!) Π⟨b_j, ∂β⟩ · 𝟏` on degree-one inputs.
pub fn divisor_core(t: &ToricData, arity: usize, cutoff: BigRational) -> Result<AInftyStructure> {
    let monoid = Arc::new(t.monoid()?);
    Ok(divisor_core_on(monoid, arity, cutoff))
}

/// Divisor core over an explicit monoid (every class treated alike).
pub fn divisor_core_on(monoid: Arc<Monoid>, arity: usize, cutoff: BigRational) -> AInftyStructure {
    let mut a = AInftyStructure::exterior(monoid.clone(), cutoff, arity);
    for pos in 0..monoid.len() {
        let g = monoid.generator(pos);
        for k in 0..=arity {
            let w = BigRational::new(BigInt::one(), factorial(k));
            a.set_patterns(g.clone(), vec![1; k], vec![Pattern { subsets: vec![1 << pos; k], weight: w }]);
        }
    }
    a
}

/// Residual of the divisor identity at class `gamma`:
/// `Σ_{placements} m_{k+l,γ}(…b…) − (1/l!)⟨b,∂γ⟩^l m_{k,γ}(inputs)`,
/// where `b = Σ b_j e_j` and `inputs` are degree-one basis indices.
pub fn divisor_identity_residual(
    a: &AInftyStructure,
    gamma: &MonoidIndex,
    inputs: &[usize],
    b: &[i64],
    l: usize,
) -> Result<ExtElement<Exact>> {
    let mo = a.monoid().clone();
    let cut = a.cutoff().clone();
    let k = inputs.len();
    let mut bel: ExtElement<Exact> = ExtElement::zero(mo.clone(), cut.clone());
    for (j, c) in b.iter().enumerate() {
        bel = bel.add(&ExtElement::generator(mo.clone(), cut.clone(), j).scale(&Exact::from_i64(*c)))?;
    }
    let fixed: Vec<ExtElement<Exact>> = inputs.iter().map(|j| ExtElement::generator(mo.clone(), cut.clone(), *j)).collect();
    let mut lhs: ExtElement<Exact> = ExtElement::zero(mo.clone(), cut.clone());
    for positions in combinations(k + l, l) {
        let mut args = Vec::with_capacity(k + l);
        let mut next_fixed = 0;
        for slot in 0..k + l {
            if positions.contains(&slot) {
                args.push(bel.clone());
            } else {
                args.push(fixed[next_fixed].clone());
                next_fixed += 1;
            }
        }
        lhs = lhs.add(&a.apply(&args)?)?;
    }
    let pairing: i64 = mo.boundary(gamma).iter().zip(b).map(|(v, c)| v * c).sum();
    let scale = BigRational::new(BigInt::from(pairing).pow(l as u32), factorial(l));
    let rhs = a.apply(&fixed)?.scale(&Exact::from_rational(&scale));
    Ok(level_part(&lhs.sub(&rhs)?, gamma))
}

/// Keep only the `T^γ` terms.
pub fn level_part(x: &ExtElement<Exact>, gamma: &MonoidIndex) -> ExtElement<Exact> {
    let mut out = x.zero_like();
    for (m, c) in x.comps() {
        let v = c.coeff(gamma);
        if !v.negligible() {
            out.add_term(*m, gamma.clone(), v);
        }
    }
    out
}

fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, r, &mut Vec::new(), &mut out);
    out
}

/// Standard fixtures used in tests and documentation.
pub mod fixtures {
    use super::*;
    use crate::novikov::rat;

    /// `ℓ₁ = x`, `ℓ₂ = 1 − x`, basepoint `1/2`.
    pub fn cp1() -> ToricData {
        ToricData::new(
            1,
            vec![Facet { normal: vec![1], offset: rat(0, 1) }, Facet { normal: vec![-1], offset: rat(-1, 1) }],
            vec![rat(1, 2)],
        )
        .expect("valid fixture")
    }

    /// `ℓ₁ = x₁`, `ℓ₂ = x₂`, `ℓ₃ = 1 − x₁ − x₂`, basepoint `(1/3, 1/3)`.
    pub fn cp2() -> ToricData {
        ToricData::new(
            2,
            vec![
                Facet { normal: vec![1, 0], offset: rat(0, 1) },
                Facet { normal: vec![0, 1], offset: rat(0, 1) },
                Facet { normal: vec![-1, -1], offset: rat(-1, 1) },
            ],
            vec![rat(1, 3), rat(1, 3)],
        )
        .expect("valid fixture")
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::novikov::{rat, NovikovElement};

    #[test]
    fn parse_fixtures() {
        let t = parse_polytope(r#"{"dimension":1,"facets":[{"normal":[1],"offset":0},{"normal":[-1],"offset":-1}],"basepoint":[0.5]}"#).unwrap();
        assert_eq!(t, cp1());
        let m = t.monoid().unwrap();
        assert_eq!(m.classes()[0].energy0, rat(1, 2));
        assert_eq!(m.classes()[1].boundary, vec![-1]);
        let t2 = parse_polytope(r#"{"dimension":2,"facets":[{"normal":[1,0],"offset":0},{"normal":[0,1],"offset":0},{"normal":[-1,-1],"offset":-1}],"basepoint":["1/3","1/3"]}"#).unwrap();
        assert!(t2.monoid().unwrap().classes().iter().all(|c| c.energy0 == rat(1, 3)));
    }

    #[test]
    fn parse_errors() {
        let on_boundary = r#"{"dimension":2,"facets":[{"normal":[1,0],"offset":0},{"normal":[0,1],"offset":0},{"normal":[-1,-1],"offset":-1}],"basepoint":[0,0]}"#;
        assert!(matches!(parse_polytope(on_boundary), Err(Error::OutsidePolytope(_))));
        let frac = r#"{"dimension":1,"facets":[{"normal":[0.5],"offset":0}],"basepoint":[1]}"#;
        assert!(parse_polytope(frac).is_err());
        let broken = "{\n\"dimension\": 1,\n\"facets\": [\n";
        let err = parse_polytope(broken).unwrap_err().to_string();
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn core_table_cp1() {
        let t = cp1();
        let a = divisor_core(&t, 8, rat(3, 1)).unwrap();
        let mo = a.monoid().clone();
        let e: ExtElement<Exact> = a.basis(1);
        let (t1, t2) = (
            NovikovElement::<Exact>::t_class(mo.clone(), rat(3, 1), 0),
            NovikovElement::<Exact>::t_class(mo.clone(), rat(3, 1), 1),
        );
        for k in 0..=8usize {
            let got = a.apply(&vec![e.clone(); k]).unwrap();
            let sign = if k % 2 == 0 { 1 } else { -1 };
            let want = t1.add(&t2.scale(&Exact::from_i64(sign))).unwrap().scale(&Exact::from_rational(&BigRational::new(
                BigInt::one(),
                factorial(k),
            )));
            let mut expect: ExtElement<Exact> = a.zero_elem();
            expect.add_comp(0, &want);
            assert_eq!(got, expect, "k = {k}");
        }
    }

    #[test]
    fn core_vanishes_on_top_degree() {
        let a = divisor_core(&cp2(), 4, rat(3, 1)).unwrap();
        let e12: ExtElement<Exact> = a.basis(3);
        let val = a.apply(&[e12]).unwrap();
        assert!(val.is_zero());
    }

    #[test]
    fn divisor_identity_holds() {
        let a = divisor_core(&cp2(), 6, rat(3, 1)).unwrap();
        for pos in 0..3 {
            let g = a.monoid().generator(pos);
            for k in 0..=3usize {
                for l in 0..=(6 - k).min(3) {
                    let inputs: Vec<usize> = (0..k).map(|i| i % 2).collect();
                    let r = divisor_identity_residual(&a, &g, &inputs, &[2, -1], l).unwrap();
                    assert!(r.is_zero(), "class {pos} k {k} l {l}");
                }
            }
        }
    }
}
