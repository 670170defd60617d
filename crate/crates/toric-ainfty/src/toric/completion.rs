//! Exact completion of a divisor core on higher wedge degrees.
//!
//! Unknown operators are written in the contraction ansatz: for a class `γ`,
//! arity `k` and input degrees `d`, a weight per pattern `(S_1,…,S_k)` with
//! `S_i ⊆ supp γ`, `|S_i| ≤ d_i` and `Σ|S_i| = k − 2 + μ(γ)`. Weights are
//! affine forms in a global set of parameters. Classes are processed by
//! increasing energy; at each class every A∞ relation of arity `< K` is
//! imposed exactly and reduced into the running row-echelon system. A
//! parameter left free at one class stays symbolic and may be fixed by a
//! later one; whatever is still free at the end is set to zero.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::ainfty::{AInftyStructure, Pattern};
use crate::error::{Error, Result};
use crate::graded::{wedge_degree, wedge_masks, WedgeIndex};
use crate::novikov::{Monoid, MonoidIndex};

#[derive(Clone, Debug)]
pub struct CompletionOptions {
    /// Operators are produced up to this arity; relations are imposed below it.
    pub arity: usize,
    /// Only classes of Maslov index at most this receive new operators, and
    /// only their relations are imposed.
    pub max_level_maslov: Option<i64>,
    /// Also impose the divisor equation on the new operators, which is what
    /// makes them compatible with the Gauss–Manin connection.
    pub divisor_axiom: bool,
}

impl CompletionOptions {
    pub fn new(arity: usize) -> Self {
        CompletionOptions { arity, max_level_maslov: None, divisor_axiom: true }
    }
}

#[derive(Clone, Debug)]
pub struct LevelReport {
    pub class: MonoidIndex,
    pub unknowns: usize,
    pub equations: usize,
    pub rank: usize,
}

#[derive(Clone, Debug, Default)]
pub struct CompletionReport {
    pub levels: Vec<LevelReport>,
    pub unknowns: usize,
    pub equations: usize,
    /// Parameters never fixed by any relation, set to zero at the end.
    pub free_set_to_zero: usize,
    /// Number of nonzero weights added on top of the core.
    pub new_weights: usize,
}

impl CompletionReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "levels_with_unknowns": self.levels.iter().filter(|l| l.unknowns > 0).count(),
            "unknowns": self.unknowns,
            "equations": self.equations,
            "free_set_to_zero": self.free_set_to_zero,
            "new_weights": self.new_weights,
        })
    }
}

/// Affine form `c + Σ a_v x_v` over rationals.
#[derive(Clone, Debug, Default, PartialEq)]
struct Lin {
    c: BigRational,
    v: BTreeMap<usize, BigRational>,
}

impl Lin {
    fn constant(c: BigRational) -> Self {
        Lin { c, v: BTreeMap::new() }
    }

    fn var(i: usize) -> Self {
        let mut v = BTreeMap::new();
        v.insert(i, BigRational::one());
        Lin { c: BigRational::zero(), v }
    }

    fn is_zero(&self) -> bool {
        self.c.is_zero() && self.v.is_empty()
    }

    fn add_scaled(&mut self, other: &Lin, s: &BigRational) {
        if s.is_zero() {
            return;
        }
        self.c += &other.c * s;
        for (k, a) in &other.v {
            let e = self.v.entry(*k).or_insert_with(BigRational::zero);
            *e += a * s;
            if e.is_zero() {
                self.v.remove(k);
            }
        }
    }

    fn scaled(&self, s: &BigRational) -> Lin {
        let mut out = Lin::default();
        out.add_scaled(self, s);
        out
    }

    fn mul(&self, other: &Lin) -> Option<Lin> {
        if self.v.is_empty() {
            Some(other.scaled(&self.c))
        } else if other.v.is_empty() {
            Some(self.scaled(&other.c))
        } else {
            None
        }
    }

    fn subst(&self, piv: &BTreeMap<usize, Lin>) -> Lin {
        if piv.is_empty() || !self.v.keys().any(|k| piv.contains_key(k)) {
            return self.clone();
        }
        let mut out = Lin::constant(self.c.clone());
        for (k, a) in &self.v {
            match piv.get(k) {
                Some(e) => out.add_scaled(e, a),
                None => out.add_scaled(&Lin::var(*k), a),
            }
        }
        out
    }

    fn show(&self) -> String {
        let mut s = format!("{}", self.c);
        for (k, a) in &self.v {
            s.push_str(&format!(" + ({a})·p{k}"));
        }
        s
    }
}

/// Incremental exact row reduction; pivot expressions only mention free parameters.
#[derive(Default)]
struct Echelon {
    pivots: BTreeMap<usize, Lin>,
}

impl Echelon {
    /// `Ok(true)` if the equation added rank, `Ok(false)` if implied, `Err` if contradictory.
    fn add(&mut self, eq: &Lin) -> std::result::Result<bool, Lin> {
        let e = eq.subst(&self.pivots);
        let Some((&p, a)) = e.v.iter().next_back() else {
            return if e.c.is_zero() { Ok(false) } else { Err(e) };
        };
        let inv = -BigRational::one() / a;
        let mut expr = e.clone();
        expr.v.remove(&p);
        let expr = expr.scaled(&inv);
        let one = BTreeMap::from([(p, expr.clone())]);
        for v in self.pivots.values_mut() {
            if v.v.contains_key(&p) {
                *v = v.subst(&one);
            }
        }
        self.pivots.insert(p, expr);
        Ok(true)
    }
}

type EntryKey = (MonoidIndex, Vec<u8>);

struct Solver<'a> {
    monoid: Arc<Monoid>,
    core: &'a AInftyStructure,
    arity: usize,
    dim: usize,
    boundaries: Vec<Vec<i64>>,
    /// Weights for every ansatz entry (core entries hold constants).
    weights: HashMap<EntryKey, Vec<(Vec<u32>, Lin)>>,
    core_keys: BTreeSet<EntryKey>,
    next_var: usize,
    has_explicit: bool,
    cache: HashMap<(Vec<WedgeIndex>, MonoidIndex), Vec<(WedgeIndex, Lin)>>,
}

fn subsets_within(support: &[usize], max: usize) -> Vec<u32> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << support.len()) {
        if mask.count_ones() as usize <= max {
            out.push(support.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).fold(0u32, |m, (_, p)| m | 1 << p));
        }
    }
    out
}

/// All contraction patterns for `(γ, degs)`.
fn patterns_for(monoid: &Monoid, gamma: &MonoidIndex, degs: &[u8]) -> Vec<Vec<u32>> {
    let k = degs.len() as i64;
    let need = k - 2 + monoid.maslov(gamma);
    if need < 0 {
        return Vec::new();
    }
    let supp = gamma.support();
    let per_slot: Vec<Vec<u32>> = degs.iter().map(|d| subsets_within(&supp, *d as usize)).collect();
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(degs.len());
    fn go(i: usize, left: i64, per_slot: &[Vec<u32>], cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == per_slot.len() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for s in &per_slot[i] {
            let c = s.count_ones() as i64;
            if c <= left {
                cur.push(*s);
                go(i + 1, left - c, per_slot, cur, out);
                cur.pop();
            }
        }
    }
    go(0, need, &per_slot, &mut cur, &mut out);
    out
}

fn degree_tuples(dim: usize, k: usize) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::new();
        for t in &out {
            for d in 1..=dim as u8 {
                let mut u = t.clone();
                u.push(d);
                next.push(u);
            }
        }
        out = next;
    }
    out
}

fn mask_tuples(dim: usize, n: usize) -> Vec<Vec<WedgeIndex>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::new();
        for t in &out {
            for m in 1..(1u32 << dim) {
                let mut u = t.clone();
                u.push(m);
                next.push(u);
            }
        }
        out = next;
    }
    out
}

/// Classes of positive energy below the cutoff, by increasing energy.
fn levels_below(monoid: &Monoid, cutoff: &BigRational) -> Result<Vec<MonoidIndex>> {
    if monoid.classes().iter().any(|c| !c.energy0.is_positive()) {
        return Err(Error::Input("completion needs every class to have positive energy".into()));
    }
    let mut out = Vec::new();
    fn go(pos: usize, cur: &mut Vec<u32>, e: BigRational, monoid: &Monoid, cutoff: &BigRational, out: &mut Vec<MonoidIndex>) {
        if pos == cur.len() {
            if cur.iter().any(|m| *m > 0) {
                out.push(MonoidIndex(cur.clone()));
            }
            return;
        }
        let step = monoid.classes()[pos].energy0.clone();
        let mut e2 = e;
        loop {
            go(pos + 1, cur, e2.clone(), monoid, cutoff, out);
            e2 += &step;
            if &e2 >= cutoff {
                break;
            }
            cur[pos] += 1;
        }
        cur[pos] = 0;
    }
    let mut cur = vec![0u32; monoid.len()];
    go(0, &mut cur, BigRational::zero(), monoid, cutoff, &mut out);
    out.sort_by(|a, b| monoid.energy(a).cmp(&monoid.energy(b)).then(a.cmp(b)));
    Ok(out)
}

impl<'a> Solver<'a> {
    fn new(core: &'a AInftyStructure, arity: usize) -> Self {
        let monoid = core.monoid().clone();
        let mut weights = HashMap::new();
        let mut core_keys = BTreeSet::new();
        for (degs, g, pats) in core.pattern_entries() {
            let key = (g.clone(), degs.to_vec());
            weights.insert(key.clone(), pats.iter().map(|p| (p.subsets.clone(), Lin::constant(p.weight.clone()))).collect());
            core_keys.insert(key);
        }
        let has_explicit = core.has_explicit_terms();
        Solver {
            boundaries: monoid.classes().iter().map(|c| c.boundary.clone()).collect(),
            dim: monoid.dim(),
            monoid,
            core,
            arity,
            weights,
            core_keys,
            next_var: 0,
            has_explicit,
            cache: HashMap::new(),
        }
    }

    fn create_unknowns(&mut self, gamma: &MonoidIndex, max_maslov: Option<i64>) -> usize {
        let mu = self.monoid.maslov(gamma);
        if max_maslov.is_some_and(|m| mu > m) {
            return 0;
        }
        let mut created = 0;
        for k in 0..=self.arity {
            for degs in degree_tuples(self.dim, k) {
                let key = (gamma.clone(), degs.clone());
                if self.core_keys.contains(&key) {
                    continue;
                }
                let out_deg = degs.iter().map(|d| *d as i64).sum::<i64>() - k as i64 + 2 - mu;
                if out_deg < 0 || out_deg > self.dim as i64 {
                    continue;
                }
                let pats = patterns_for(&self.monoid, gamma, &degs);
                if pats.is_empty() {
                    continue;
                }
                let mut list = Vec::with_capacity(pats.len());
                for p in pats {
                    list.push((p, Lin::var(self.next_var)));
                    self.next_var += 1;
                    created += 1;
                }
                self.weights.insert(key, list);
            }
        }
        created
    }

    /// Operator value `m_{k,γ}` on basis inputs as affine forms (shifted convention).
    fn value(&mut self, masks: &[WedgeIndex], gamma: &MonoidIndex) -> Vec<(WedgeIndex, Lin)> {
        let ck = (masks.to_vec(), gamma.clone());
        if let Some(v) = self.cache.get(&ck) {
            return v.clone();
        }
        let mut acc: BTreeMap<WedgeIndex, Lin> = BTreeMap::new();
        if gamma.is_zero() {
            if masks.len() == 2 {
                if let Some((m, s)) = wedge_masks(masks[0], masks[1]) {
                    let sign = if wedge_degree(masks[0]) % 2 == 0 { s } else { -s };
                    acc.insert(m, Lin::constant(BigRational::from_integer(sign.into())));
                }
            }
        } else if masks.iter().all(|m| *m != 0) {
            let degs: Vec<u8> = masks.iter().map(|m| wedge_degree(*m) as u8).collect();
            if let Some(list) = self.weights.get(&(gamma.clone(), degs)) {
                for (subs, w) in list {
                    for (m, c) in crate::ainfty::pattern_value(&self.boundaries, masks, subs) {
                        acc.entry(m).or_default().add_scaled(w, &BigRational::from_integer(c.into()));
                    }
                }
            }
        }
        if let Some(extra) = self.core.explicit_value(masks) {
            for ((g, m), c) in extra {
                if g == gamma {
                    acc.entry(*m).or_default().add_scaled(&Lin::constant(BigRational::one()), c);
                }
            }
        }
        let v: Vec<(WedgeIndex, Lin)> = acc.into_iter().filter(|(_, l)| !l.is_zero()).collect();
        self.cache.insert(ck, v.clone());
        v
    }

    fn sub_levels(&self, gamma: &MonoidIndex) -> Vec<MonoidIndex> {
        let mut out = Vec::new();
        let mut cur = vec![0u32; gamma.0.len()];
        fn go(pos: usize, gamma: &MonoidIndex, cur: &mut Vec<u32>, out: &mut Vec<MonoidIndex>) {
            if pos == cur.len() {
                out.push(MonoidIndex(cur.clone()));
                return;
            }
            for m in 0..=gamma.0[pos] {
                cur[pos] = m;
                go(pos + 1, gamma, cur, out);
            }
            cur[pos] = 0;
        }
        go(0, gamma, &mut cur, &mut out);
        out
    }

    /// Level-`γ` part of the shifted relation at a basis tuple.
    fn relation(&mut self, masks: &[WedgeIndex], gamma: &MonoidIndex, subs: &[MonoidIndex]) -> Result<BTreeMap<WedgeIndex, Lin>> {
        let n = masks.len();
        let mut total: BTreeMap<WedgeIndex, Lin> = BTreeMap::new();
        for r in 0..=n {
            let prefix: usize = masks[..r].iter().map(|m| wedge_degree(*m)).sum();
            let sign = if (prefix + r) % 2 == 0 { BigRational::one() } else { -BigRational::one() };
            for s in 0..=(n - r) {
                if n - s + 1 > self.arity {
                    continue;
                }
                for g2 in subs {
                    let inner = self.value(&masks[r..r + s], g2);
                    if inner.is_empty() {
                        continue;
                    }
                    let g1 = gamma.checked_sub(g2).expect("sub-level");
                    for (im, il) in inner {
                        let mut args = masks[..r].to_vec();
                        args.push(im);
                        args.extend_from_slice(&masks[r + s..]);
                        for (om, ol) in self.value(&args, &g1) {
                            let prod = ol.mul(&il).ok_or_else(|| {
                                Error::Nonlinear(format!(
                                    "class {:?}, inputs {:?}: two undetermined operators meet",
                                    gamma.0, masks
                                ))
                            })?;
                            total.entry(om).or_default().add_scaled(&prod, &sign);
                        }
                    }
                }
            }
        }
        total.retain(|_, l| !l.is_zero());
        Ok(total)
    }

    /// `Σ_j m_{k+1,γ}(x_1,…,x_j, e_i, x_{j+1},…,x_k) − ⟨∂γ, e_i⟩ m_{k,γ}(x)`.
    fn divisor(&mut self, masks: &[WedgeIndex], gamma: &MonoidIndex, i: usize) -> BTreeMap<WedgeIndex, Lin> {
        let mut total: BTreeMap<WedgeIndex, Lin> = BTreeMap::new();
        for j in 0..=masks.len() {
            let mut args = masks.to_vec();
            args.insert(j, 1 << i);
            for (m, l) in self.value(&args, gamma) {
                total.entry(m).or_default().add_scaled(&l, &BigRational::one());
            }
        }
        let b = self.monoid.boundary(gamma)[i];
        for (m, l) in self.value(masks, gamma) {
            total.entry(m).or_default().add_scaled(&l, &BigRational::from_integer((-b).into()));
        }
        total.retain(|_, l| !l.is_zero());
        total
    }

    fn substitute_all(&mut self, piv: &BTreeMap<usize, Lin>) {
        if piv.is_empty() {
            return;
        }
        for list in self.weights.values_mut() {
            for (_, w) in list.iter_mut() {
                *w = w.subst(piv);
            }
        }
        self.cache.clear();
    }
}

/// Extend `core` so that every A∞ relation of arity `< opts.arity` holds exactly.
pub fn complete(core: &AInftyStructure, opts: &CompletionOptions) -> Result<(AInftyStructure, CompletionReport)> {
    if opts.arity < 2 {
        return Err(Error::Input("completion needs arity at least 2".into()));
    }
    let core = core.in_convention(crate::ainfty::Convention::Shifted).with_arity_cutoff(opts.arity);
    let monoid = core.monoid().clone();
    let dim = monoid.dim();
    let mut solver = Solver::new(&core, opts.arity);
    let mut report = CompletionReport::default();
    let levels = levels_below(&monoid, core.cutoff())?;
    let max_rel = opts.arity - 1;
    let tuples: Vec<Vec<Vec<WedgeIndex>>> = (0..=max_rel).map(|n| mask_tuples(dim, n)).collect();

    for gamma in &levels {
        // A restricted completion only answers for the sectors it solves.
        if opts.max_level_maslov.is_some_and(|m| monoid.maslov(gamma) > m) {
            continue;
        }
        let created = solver.create_unknowns(gamma, opts.max_level_maslov);
        solver.cache.clear();
        let mu = monoid.maslov(gamma);
        let subs = solver.sub_levels(gamma);
        let mut ech = Echelon::default();
        let mut eqs = 0;
        let mut rank = 0;
        for (n, list) in tuples.iter().enumerate() {
            for masks in list {
                if !solver.has_explicit {
                    let sd: i64 = masks.iter().map(|m| wedge_degree(*m) as i64).sum();
                    let lo = n as i64 - 3 + mu;
                    if sd < lo || sd > lo + dim as i64 {
                        continue;
                    }
                }
                for (om, eq) in solver.relation(masks, gamma, &subs)? {
                    eqs += 1;
                    match ech.add(&eq) {
                        Ok(true) => rank += 1,
                        Ok(false) => {}
                        Err(residue) => {
                            return Err(Error::Inconsistent(format!(
                                "class {:?}, relation on basis tuple {:?}, output component {:?}: reduces to {} = 0",
                                gamma.0,
                                masks.iter().map(|m| crate::graded::wedge_members(*m).iter().map(|i| i + 1).collect::<Vec<_>>()).collect::<Vec<_>>(),
                                crate::graded::wedge_members(om).iter().map(|i| i + 1).collect::<Vec<_>>(),
                                residue.show()
                            )))
                        }
                    }
                }
            }
        }
        if opts.divisor_axiom && created > 0 {
            for (n, list) in tuples.iter().enumerate().take(opts.arity) {
                for masks in list {
                    let sd: i64 = masks.iter().map(|m| wedge_degree(*m) as i64).sum();
                    let lo = n as i64 - 2 + mu;
                    if !solver.has_explicit && (sd < lo || sd > lo + dim as i64) {
                        continue;
                    }
                    for i in 0..dim {
                        for (om, eq) in solver.divisor(masks, gamma, i) {
                            eqs += 1;
                            match ech.add(&eq) {
                                Ok(true) => rank += 1,
                                Ok(false) => {}
                                Err(residue) => {
                                    return Err(Error::Inconsistent(format!(
                                        "class {:?}, divisor equation in direction {} on {:?}, output {:?}: reduces to {} = 0",
                                        gamma.0,
                                        i + 1,
                                        masks,
                                        om,
                                        residue.show()
                                    )))
                                }
                            }
                        }
                    }
                }
            }
        }
        solver.substitute_all(&ech.pivots);
        report.levels.push(LevelReport { class: gamma.clone(), unknowns: created, equations: eqs, rank });
        report.unknowns += created;
        report.equations += eqs;
    }

    let mut free: BTreeSet<usize> = BTreeSet::new();
    for list in solver.weights.values() {
        for (_, w) in list {
            free.extend(w.v.keys().copied());
        }
    }
    report.free_set_to_zero = free.len();

    let mut out = core.clone();
    for (key, list) in &solver.weights {
        if solver.core_keys.contains(key) {
            continue;
        }
        let pats: Vec<Pattern> = list
            .iter()
            .filter(|(_, w)| !w.c.is_zero())
            .map(|(s, w)| Pattern { subsets: s.clone(), weight: w.c.clone() })
            .collect();
        report.new_weights += pats.len();
        if !pats.is_empty() {
            out.set_patterns(key.0.clone(), key.1.clone(), pats);
        }
    }
    Ok((out, report))
}
