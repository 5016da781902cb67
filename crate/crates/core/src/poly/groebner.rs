use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::order::{GrLex, GrevLex, Key, Lex, TermOrder};
use super::{ExactPoly, Monomial, MonomialOrder};
use crate::error::{Error, Result};
use crate::rational::Rational;

/// Budget for a Buchberger run. Exceeding it aborts with
/// [`Error::ResourceLimit`] instead of running unbounded.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroebnerConfig {
    /// Maximum number of reduction steps: one per input generator and one
    /// per S-pair.
    pub max_pairs: usize,
    /// Maximum number of generators kept during the run.
    pub max_basis: usize,
    /// Wall-clock limit.
    pub time_limit: Option<Duration>,
}

impl Default for GroebnerConfig {
    fn default() -> Self {
        GroebnerConfig {
            max_pairs: 200_000,
            max_basis: 20_000,
            time_limit: None,
        }
    }
}

impl GroebnerConfig {
    pub fn with_max_pairs(mut self, max_pairs: usize) -> Self {
        self.max_pairs = max_pairs;
        self
    }

    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.time_limit = Some(limit);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuotientDimension {
    Finite(usize),
    Infinite,
}

impl QuotientDimension {
    pub fn finite(self) -> Option<usize> {
        match self {
            QuotientDimension::Finite(n) => Some(n),
            QuotientDimension::Infinite => None,
        }
    }
}

type Terms = Vec<(Monomial, Rational)>;

/// Reduced Groebner basis. Generators are monic and sorted by decreasing
/// leading monomial.
#[derive(Clone, Debug)]
pub struct GroebnerBasis {
    nvars: usize,
    order: MonomialOrder,
    generators: Vec<ExactPoly>,
    sorted: Vec<Terms>,
    pairs_reduced: usize,
}

impl PartialEq for GroebnerBasis {
    fn eq(&self, other: &Self) -> bool {
        self.nvars == other.nvars
            && self.order == other.order
            && self.generators == other.generators
    }
}

/// Reduced Groebner basis of the ideal generated by `gens`.
pub fn buchberger(
    gens: &[ExactPoly],
    order: MonomialOrder,
    cfg: &GroebnerConfig,
) -> Result<GroebnerBasis> {
    let nvars = match gens.first() {
        Some(g) => g.nvars(),
        None => return Err(Error::Argument("empty generator list".into())),
    };
    if gens.iter().any(|g| g.nvars() != nvars) {
        return Err(Error::Argument("generators live in different rings".into()));
    }
    let (sorted, pairs_reduced) = match order {
        MonomialOrder::LexV1Smallest => run::<Lex>(gens, cfg)?,
        MonomialOrder::GradedReverseLex => run::<GrevLex>(gens, cfg)?,
        MonomialOrder::GradedLex => run::<GrLex>(gens, cfg)?,
    };
    let generators = sorted
        .iter()
        .map(|t| ExactPoly::from_terms(nvars, t.iter().cloned()))
        .collect();
    Ok(GroebnerBasis {
        nvars,
        order,
        generators,
        sorted,
        pairs_reduced,
    })
}

impl GroebnerBasis {
    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> MonomialOrder {
        self.order
    }

    pub fn generators(&self) -> &[ExactPoly] {
        &self.generators
    }

    pub fn is_reduced(&self) -> bool {
        true
    }

    pub fn pairs_reduced(&self) -> usize {
        self.pairs_reduced
    }

    pub fn leading_monomials(&self) -> Vec<Monomial> {
        self.sorted.iter().map(|t| t[0].0.clone()).collect()
    }

    /// The unit ideal.
    pub fn is_unit(&self) -> bool {
        self.sorted.len() == 1 && self.sorted[0][0].0.is_one()
    }

    /// Remainder of multivariate division; unique since the basis is reduced.
    pub fn normal_form(&self, p: &ExactPoly) -> ExactPoly {
        assert_eq!(
            p.nvars(),
            self.nvars,
            "polynomial and basis live in different rings"
        );
        let basis: Vec<&Terms> = self.sorted.iter().collect();
        let input = p.terms().map(|(m, c)| (m.clone(), c.clone()));
        let rem = match self.order {
            MonomialOrder::LexV1Smallest => reduce::<Lex>(input, &basis),
            MonomialOrder::GradedReverseLex => reduce::<GrevLex>(input, &basis),
            MonomialOrder::GradedLex => reduce::<GrLex>(input, &basis),
        };
        ExactPoly::from_terms(self.nvars, rem)
    }

    pub fn contains(&self, p: &ExactPoly) -> bool {
        self.normal_form(p).is_zero()
    }

    fn in_initial_ideal(&self, m: &Monomial) -> bool {
        self.sorted.iter().any(|t| t[0].0.divides(m))
    }

    /// Standard monomials (those outside the initial ideal), or `None` when
    /// there are infinitely many.
    pub fn standard_monomials(&self) -> Option<Vec<Monomial>> {
        if !self.is_zero_dimensional() {
            return None;
        }
        let mut out = Vec::new();
        if self.is_unit() {
            return Some(out);
        }
        let mut cur = Monomial::one(self.nvars);
        self.walk_staircase(0, &mut cur, &mut out);
        Some(out)
    }

    fn is_zero_dimensional(&self) -> bool {
        self.is_unit()
            || (0..self.nvars).all(|i| {
                self.sorted
                    .iter()
                    .any(|t| t[0].0.pure_power_var() == Some(i))
            })
    }

    fn walk_staircase(&self, var: usize, cur: &mut Monomial, out: &mut Vec<Monomial>) {
        if var == self.nvars {
            out.push(cur.clone());
            return;
        }
        let mut e = 0u16;
        loop {
            cur.set_exp(var, e);
            // Standard monomials form an order ideal, so once the partial
            // monomial is in the initial ideal every extension is too.
            if self.in_initial_ideal(cur) {
                break;
            }
            self.walk_staircase(var + 1, cur, out);
            e += 1;
        }
        cur.set_exp(var, 0);
    }

    pub fn quotient_dimension(&self) -> QuotientDimension {
        match self.standard_monomials() {
            Some(s) => QuotientDimension::Finite(s.len()),
            None => QuotientDimension::Infinite,
        }
    }

    /// True iff every variable is nilpotent modulo the ideal, i.e. the
    /// only common zero is the origin.
    pub fn vanishes_only_at_origin(&self) -> Result<bool> {
        let dim = self
            .quotient_dimension()
            .finite()
            .ok_or(Error::NotZeroDimensional)?;
        if self.is_unit() {
            // Empty variety: no zero at all, in particular none besides the origin,
            // but the origin itself is not a zero either.
            return Ok(false);
        }
        for i in 0..self.nvars {
            let v = ExactPoly::var(self.nvars, i);
            let mut r = ExactPoly::one(self.nvars);
            for _ in 0..dim {
                r = self.normal_form(&(&r * &v));
                if r.is_zero() {
                    break;
                }
            }
            if !r.is_zero() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Like `vanishes_only_at_origin`, but a positive-dimensional zero set
    /// answers `false`.
    pub fn zero_set_is_origin(&self) -> Result<bool> {
        match self.vanishes_only_at_origin() {
            Err(Error::NotZeroDimensional) => Ok(false),
            other => other,
        }
    }
}

fn sorted_terms<O: TermOrder>(p: &ExactPoly) -> Terms {
    let mut t: Terms = p.terms().map(|(m, c)| (m.clone(), c.clone())).collect();
    t.sort_by(|a, b| O::cmp(&b.0, &a.0));
    t
}

fn make_monic(mut t: Terms) -> Terms {
    if let Some((_, lc)) = t.first() {
        if !lc.is_one() {
            let inv = lc.recip();
            for (_, c) in t.iter_mut() {
                *c *= &inv;
            }
        }
    }
    t
}

/// Full reduction of `input` by monic generators. Returns terms in
/// decreasing order.
fn reduce<O: TermOrder>(
    input: impl IntoIterator<Item = (Monomial, Rational)>,
    basis: &[&Terms],
) -> Terms {
    reduce_until::<O>(input, basis, None).expect("no deadline")
}

fn reduce_until<O: TermOrder>(
    input: impl IntoIterator<Item = (Monomial, Rational)>,
    basis: &[&Terms],
    deadline: Option<(Instant, Duration)>,
) -> Result<Terms> {
    let mut work: BTreeMap<Key<O>, Rational> = BTreeMap::new();
    for (m, c) in input {
        add_into(&mut work, Key::new(m), c);
    }
    let mut rem = Vec::new();
    while let Some((k, c)) = work.pop_last() {
        if let Some((start, limit)) = deadline {
            if start.elapsed() > limit {
                return Err(time_exceeded(limit));
            }
        }
        match basis.iter().find(|g| g[0].0.divides(&k.0)) {
            Some(g) => {
                let q = k.0.div(&g[0].0);
                for (m, a) in &g[1..] {
                    add_into(&mut work, Key::new(m.mul(&q)), -(a * &c));
                }
            }
            None => {
                rem.push((k.0, c));
            }
        }
    }
    Ok(rem)
}

fn time_exceeded(limit: Duration) -> Error {
    Error::ResourceLimit(format!("Groebner time limit of {limit:?} exceeded"))
}

fn add_into<O: TermOrder>(work: &mut BTreeMap<Key<O>, Rational>, k: Key<O>, c: Rational) {
    use std::collections::btree_map::Entry;
    match work.entry(k) {
        Entry::Vacant(e) => {
            e.insert(c);
        }
        Entry::Occupied(mut e) => {
            *e.get_mut() += c;
            if e.get().is_zero() {
                e.remove();
            }
        }
    }
}

struct Pair {
    i: usize,
    j: usize,
    lcm: Monomial,
    sugar: usize,
}

struct State<'a, O: TermOrder> {
    polys: Vec<Terms>,
    sugar: Vec<usize>,
    active: Vec<bool>,
    pairs: Vec<Pair>,
    cfg: &'a GroebnerConfig,
    start: Instant,
    _order: std::marker::PhantomData<O>,
}

fn run<O: TermOrder>(gens: &[ExactPoly], cfg: &GroebnerConfig) -> Result<(Vec<Terms>, usize)> {
    let mut st = State::<O> {
        polys: Vec::new(),
        sugar: Vec::new(),
        active: Vec::new(),
        pairs: Vec::new(),
        cfg,
        start: Instant::now(),
        _order: std::marker::PhantomData,
    };
    let mut inputs: Vec<Terms> = gens
        .iter()
        .filter(|g| !g.is_zero())
        .map(sorted_terms::<O>)
        .collect();
    inputs.sort_by(|a, b| O::cmp(&a[0].0, &b[0].0));
    // Input reductions count against the step budget along with pairs.
    let mut steps = 0usize;
    for t in inputs {
        steps += 1;
        if steps > cfg.max_pairs {
            return Err(Error::ResourceLimit(format!(
                "Groebner step budget of {} exhausted",
                cfg.max_pairs
            )));
        }
        let sugar = t.iter().map(|(m, _)| m.degree()).max().unwrap_or(0);
        let r = st.reduce_by_active(t)?;
        if !r.is_empty() {
            st.insert(make_monic(r), sugar)?;
        }
    }
    let mut processed = 0usize;
    while let Some(pair) = st.select_pair() {
        processed += 1;
        steps += 1;
        if steps > cfg.max_pairs {
            return Err(Error::ResourceLimit(format!(
                "Groebner step budget of {} exhausted",
                cfg.max_pairs
            )));
        }
        if let Some(limit) = cfg.time_limit {
            if st.start.elapsed() > limit {
                return Err(time_exceeded(limit));
            }
        }
        let s = st.s_poly(&pair);
        let r = st.reduce_by_active(s)?;
        if !r.is_empty() {
            st.insert(make_monic(r), pair.sugar)?;
        }
    }
    Ok((st.interreduce(), processed))
}

impl<O: TermOrder> State<'_, O> {
    fn active_basis(&self) -> Vec<&Terms> {
        self.polys
            .iter()
            .zip(&self.active)
            .filter(|(_, &a)| a)
            .map(|(p, _)| p)
            .collect()
    }

    fn reduce_by_active(&self, t: Terms) -> Result<Terms> {
        reduce_until::<O>(
            t,
            &self.active_basis(),
            self.cfg.time_limit.map(|l| (self.start, l)),
        )
    }

    fn lm(&self, i: usize) -> &Monomial {
        &self.polys[i][0].0
    }

    fn select_pair(&mut self) -> Option<Pair> {
        let best = (0..self.pairs.len()).min_by(|&a, &b| {
            let (pa, pb) = (&self.pairs[a], &self.pairs[b]);
            pa.sugar
                .cmp(&pb.sugar)
                .then_with(|| O::cmp(&pa.lcm, &pb.lcm))
        })?;
        Some(self.pairs.swap_remove(best))
    }

    fn s_poly(&self, p: &Pair) -> Terms {
        let (f, g) = (&self.polys[p.i], &self.polys[p.j]);
        let qf = p.lcm.div(&f[0].0);
        let qg = p.lcm.div(&g[0].0);
        let mut out: Terms = f[1..]
            .iter()
            .map(|(m, c)| (m.mul(&qf), c.clone()))
            .collect();
        out.extend(g[1..].iter().map(|(m, c)| (m.mul(&qg), -c)));
        out
    }

    /// Gebauer-Moeller installation of a new generator.
    fn insert(&mut self, h: Terms, sugar: usize) -> Result<()> {
        if self.polys.len() >= self.cfg.max_basis {
            return Err(Error::ResourceLimit(format!(
                "Groebner basis size cap of {} reached",
                self.cfg.max_basis
            )));
        }
        let hi = self.polys.len();
        let hdeg = h[0].0.degree();
        let hsugar = sugar.max(hdeg);
        self.polys.push(h);
        self.sugar.push(hsugar);
        self.active.push(false);
        let lm_h = self.lm(hi).clone();

        let cands: Vec<(usize, Monomial)> = (0..hi)
            .filter(|&g| self.active[g])
            .map(|g| (g, lm_h.lcm(self.lm(g))))
            .collect();
        let mut kept: Vec<(usize, Monomial)> = Vec::new();
        for (idx, (g, lcm)) in cands.iter().enumerate() {
            let coprime = lm_h.is_coprime(self.lm(*g));
            let dominated = cands[idx + 1..]
                .iter()
                .chain(kept.iter())
                .any(|(_, other)| other.divides(lcm));
            if coprime || !dominated {
                kept.push((*g, lcm.clone()));
            }
        }
        let new_pairs: Vec<Pair> = kept
            .into_iter()
            .filter(|(g, _)| !lm_h.is_coprime(self.lm(*g)))
            .map(|(g, lcm)| {
                let sg = self.sugar[g] + lcm.degree() - self.lm(g).degree();
                let sh = hsugar + lcm.degree() - hdeg;
                Pair {
                    i: g,
                    j: hi,
                    lcm,
                    sugar: sg.max(sh),
                }
            })
            .collect();

        let polys = &self.polys;
        self.pairs.retain(|p| {
            !(lm_h.divides(&p.lcm)
                && polys[p.i][0].0.lcm(&lm_h) != p.lcm
                && polys[p.j][0].0.lcm(&lm_h) != p.lcm)
        });
        self.pairs.extend(new_pairs);

        for g in 0..hi {
            if self.active[g] && lm_h.divides(self.lm(g)) {
                self.active[g] = false;
            }
        }
        self.active[hi] = true;
        Ok(())
    }

    fn interreduce(&self) -> Vec<Terms> {
        let mut basis: Vec<Terms> = self.active_basis().into_iter().cloned().collect();
        // Drop generators whose leading monomial is divisible by another's.
        let lms: Vec<Monomial> = basis.iter().map(|t| t[0].0.clone()).collect();
        let keep: Vec<bool> = (0..basis.len())
            .map(|i| {
                !(0..basis.len())
                    .any(|j| j != i && lms[j].divides(&lms[i]) && (lms[j] != lms[i] || j < i))
            })
            .collect();
        basis = basis
            .into_iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(b, _)| b)
            .collect();
        let mut out = Vec::with_capacity(basis.len());
        for i in 0..basis.len() {
            let others: Vec<&Terms> = basis
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, t)| t)
                .collect();
            let head = basis[i][0].clone();
            let mut tail = reduce::<O>(basis[i][1..].iter().cloned(), &others);
            let mut t = vec![head];
            t.append(&mut tail);
            out.push(make_monic(t));
        }
        out.sort_by(|a, b| O::cmp(&b[0].0, &a[0].0));
        out
    }
}
