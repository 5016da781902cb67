//! Spectral invariants and ideals of generalized spectral invariants
//! `(e_1 + g_1, ..., e_n + g_n)` with `deg g_i < i`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Error, Result};
use crate::minors::{
    all_principal_minors_capped, subset_indices, RationalMatrix, Subset, DEFAULT_MINOR_CAP,
};
use crate::poly::{
    buchberger, elementary_symmetric, ExactPoly, GroebnerBasis, GroebnerConfig, Monomial,
    MonomialOrder,
};
use crate::rational::{to_complex, Rational};

/// Polynomial supported on square-free monomials `v^J`, keyed by `J`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SquareFreePoly {
    nvars: usize,
    terms: BTreeMap<Subset, Rational>,
}

impl SquareFreePoly {
    pub fn zero(nvars: usize) -> Self {
        SquareFreePoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_exact(p: &ExactPoly) -> Option<Self> {
        let mut out = Self::zero(p.nvars());
        for (m, c) in p.terms() {
            if !m.is_square_free() {
                return None;
            }
            out.terms.insert(m.support_mask(), c.clone());
        }
        Some(out)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn add_term(&mut self, j: Subset, c: Rational) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(j).or_insert_with(Rational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&j);
        }
    }

    pub fn coefficient(&self, j: Subset) -> Rational {
        self.terms.get(&j).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (Subset, &Rational)> {
        self.terms.iter().map(|(j, c)| (*j, c))
    }

    pub fn to_exact(&self) -> ExactPoly {
        ExactPoly::from_terms(
            self.nvars,
            self.terms
                .iter()
                .map(|(&j, c)| (Monomial::from_mask(self.nvars, j), c.clone())),
        )
    }

    /// Dense coefficient vector over all `2^n` subsets.
    pub fn to_dense_complex(&self) -> Vec<Complex64> {
        let mut out = vec![Complex64::zero(); 1 << self.nvars];
        for (&j, c) in &self.terms {
            out[j as usize] = to_complex(c);
        }
        out
    }

    pub fn evaluate_complex(&self, point: &[Complex64]) -> Complex64 {
        let prods = subset_products(point);
        self.terms
            .iter()
            .map(|(&j, c)| to_complex(c) * prods[j as usize])
            .sum()
    }
}

/// `v^J` at `point` for every subset `J`, built incrementally from the
/// lowest set bit.
pub fn subset_products(point: &[Complex64]) -> Vec<Complex64> {
    let n = point.len();
    let mut prods = vec![Complex64::one(); 1 << n];
    for s in 1usize..1 << n {
        let low = s.trailing_zeros() as usize;
        prods[s] = prods[s & (s - 1)] * point[low];
    }
    prods
}

/// Coefficients `a^{(i)}_J` of the perturbations `g_i = sum_J a^{(i)}_J v^J`,
/// with column `i` in `1..=n` and `|J| <= i - 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PerturbationTable {
    n: usize,
    cells: BTreeMap<(usize, Subset), Rational>,
}

impl PerturbationTable {
    pub fn new(n: usize) -> Self {
        PerturbationTable {
            n,
            cells: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn check_cell(&self, i: usize, j: Subset) -> Result<()> {
        if i == 0 || i > self.n {
            return arg_err(format!("column {i} outside 1..={}", self.n));
        }
        if self.n < 32 && j >> self.n != 0 {
            return arg_err(format!("subset {j:#b} is not contained in [{}]", self.n));
        }
        if j.count_ones() as usize >= i {
            return arg_err(format!(
                "cell (i={i}, |J|={}) has non-positive auxiliary degree",
                j.count_ones()
            ));
        }
        Ok(())
    }

    /// Sets `a^{(i)}_J`; `j` is a 0-based bitmask.
    pub fn set(&mut self, i: usize, j: Subset, a: Rational) -> Result<()> {
        self.check_cell(i, j)?;
        if a.is_zero() {
            self.cells.remove(&(i, j));
        } else {
            self.cells.insert((i, j), a);
        }
        Ok(())
    }

    /// Convenience for 1-based index lists, as in the JSON format.
    pub fn set_indices(&mut self, i: usize, j: &[usize], a: Rational) -> Result<()> {
        if j.iter().any(|&x| x == 0 || x > self.n) {
            return arg_err(format!(
                "index set {j:?} is not contained in 1..={}",
                self.n
            ));
        }
        let mask = j.iter().fold(0, |acc, &x| acc | 1 << (x - 1));
        self.set(i, mask, a)
    }

    pub fn get(&self, i: usize, j: Subset) -> Rational {
        self.cells
            .get(&(i, j))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, Subset, &Rational)> {
        self.cells.iter().map(|(&(i, j), a)| (i, j, a))
    }

    pub fn aux_degree(i: usize, j: Subset) -> usize {
        i - j.count_ones() as usize
    }

    /// The perturbation `g_i`.
    pub fn column(&self, i: usize) -> SquareFreePoly {
        let mut g = SquareFreePoly::zero(self.n);
        for (_, j, a) in self.cells().filter(|(ci, _, _)| *ci == i) {
            g.add_term(j, a.clone());
        }
        g
    }

    pub fn to_json(&self) -> serde_json::Value {
        let cells: Vec<CellJson> = self
            .cells()
            .map(|(i, j, a)| CellJson {
                i,
                j: subset_indices(j).into_iter().map(|x| x + 1).collect(),
                a: a.clone(),
            })
            .collect();
        serde_json::to_value(TableJson { n: self.n, cells }).expect("table serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let t: TableJson =
            serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        let mut out = PerturbationTable::new(t.n);
        for c in t.cells {
            out.set_indices(c.i, &c.j, c.a)?;
        }
        Ok(out)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let v: serde_json::Value =
            serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_json(&v)
    }
}

#[derive(Serialize, Deserialize)]
struct TableJson {
    n: usize,
    cells: Vec<CellJson>,
}

#[derive(Serialize, Deserialize)]
struct CellJson {
    i: usize,
    #[serde(rename = "J")]
    j: Vec<usize>,
    #[serde(with = "crate::rational::serde_str")]
    a: Rational,
}

/// The ideal `(e_1 + g_1, ..., e_n + g_n)` with `deg g_i < i`.
///
/// Square-free perturbations are the normal case; arbitrary lower-degree
/// perturbations are accepted through [`SpectralIdeal::from_perturbations`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpectralIdeal {
    n: usize,
    perturbations: Vec<ExactPoly>,
}

impl SpectralIdeal {
    pub fn elementary(n: usize) -> Self {
        SpectralIdeal {
            n,
            perturbations: vec![ExactPoly::zero(n); n],
        }
    }

    pub fn from_perturbations(n: usize, perturbations: Vec<ExactPoly>) -> Result<Self> {
        if perturbations.len() != n {
            return arg_err(format!(
                "expected {n} perturbations, got {}",
                perturbations.len()
            ));
        }
        for (idx, g) in perturbations.iter().enumerate() {
            if g.nvars() != n {
                return arg_err(format!(
                    "perturbation g_{} lives in the wrong ring",
                    idx + 1
                ));
            }
            if g.total_degree().is_some_and(|d| d > idx) {
                return arg_err(format!(
                    "perturbation g_{} has degree {} >= {}",
                    idx + 1,
                    g.total_degree().unwrap(),
                    idx + 1
                ));
            }
        }
        Ok(SpectralIdeal { n, perturbations })
    }

    /// Recovers `g_i = f_i - e_i` from full generators.
    pub fn from_generators(gens: Vec<ExactPoly>) -> Result<Self> {
        let n = gens.len();
        let mut perts = Vec::with_capacity(n);
        for (idx, f) in gens.into_iter().enumerate() {
            perts.push(&f - &elementary_symmetric(n, idx + 1)?);
        }
        Self::from_perturbations(n, perts)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `g_i` for `i` in `1..=n`.
    pub fn perturbation(&self, i: usize) -> &ExactPoly {
        &self.perturbations[i - 1]
    }

    pub fn perturbations(&self) -> &[ExactPoly] {
        &self.perturbations
    }

    /// `e_i + g_i` for `i` in `1..=n`.
    pub fn generator(&self, i: usize) -> ExactPoly {
        &elementary_symmetric(self.n, i).expect("i <= n") + &self.perturbations[i - 1]
    }

    pub fn generators(&self) -> Vec<ExactPoly> {
        (1..=self.n).map(|i| self.generator(i)).collect()
    }

    pub fn is_square_free(&self) -> bool {
        self.perturbations.iter().all(ExactPoly::is_square_free)
    }

    pub fn square_free_generators(&self) -> Option<Vec<SquareFreePoly>> {
        self.generators()
            .iter()
            .map(SquareFreePoly::from_exact)
            .collect()
    }

    pub fn table(&self) -> Option<PerturbationTable> {
        let mut t = PerturbationTable::new(self.n);
        for (idx, g) in self.perturbations.iter().enumerate() {
            for (m, c) in g.terms() {
                if !m.is_square_free() {
                    return None;
                }
                t.set(idx + 1, m.support_mask(), c.clone()).ok()?;
            }
        }
        Some(t)
    }

    /// Multiplies each term `c v^a` of `g_i` by `t^(i - |a|)`: the fiber at
    /// `T = t` of the homogenized family.
    pub fn scale(&self, t: &Rational) -> SpectralIdeal {
        let perturbations = self
            .perturbations
            .iter()
            .enumerate()
            .map(|(idx, g)| {
                let i = idx + 1;
                ExactPoly::from_terms(
                    self.n,
                    g.terms()
                        .map(|(m, c)| (m.clone(), c * num_traits::pow(t.clone(), i - m.degree()))),
                )
            })
            .collect();
        SpectralIdeal {
            n: self.n,
            perturbations,
        }
    }

    /// Renames `v_j` to `v_{perm[j]}` in every perturbation.
    pub fn permute(&self, perm: &[usize]) -> SpectralIdeal {
        SpectralIdeal {
            n: self.n,
            perturbations: self
                .perturbations
                .iter()
                .map(|g| g.permute_vars(perm))
                .collect(),
        }
    }

    pub fn groebner(&self, order: MonomialOrder, cfg: &GroebnerConfig) -> Result<GroebnerBasis> {
        if self.n == 0 {
            return arg_err("empty ideal");
        }
        buchberger(&self.generators(), order, cfg)
    }
}

/// The ideal of spectral invariants `(S_1, ..., S_n)` of `a`: the
/// coefficient of `v^J` in `S_i` is the sum of `det(A_N)` over
/// `N` disjoint from `J` with `|N| = i - |J|`.
pub fn spectral_invariants(a: &RationalMatrix) -> Result<SpectralIdeal> {
    let n = a.n();
    let minors = all_principal_minors_capped(a, DEFAULT_MINOR_CAP)?;
    let full: Subset = if n == 0 { 0 } else { (1u32 << n) - 1 };
    let mut perts: Vec<SquareFreePoly> = vec![SquareFreePoly::zero(n); n];
    for j in 1..=full {
        let comp = full & !j;
        // Submasks of the complement, including the empty set.
        let mut sub = comp;
        loop {
            let i = (j.count_ones() + sub.count_ones()) as usize;
            if sub != 0 {
                perts[i - 1].add_term(j, minors.get(sub).clone());
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & comp;
        }
    }
    SpectralIdeal::from_perturbations(n, perts.iter().map(SquareFreePoly::to_exact).collect())
}

pub fn ideal_from_table(table: &PerturbationTable) -> Result<SpectralIdeal> {
    let n = table.n();
    let mut perts = vec![ExactPoly::zero(n); n];
    for (i, j, a) in table.cells() {
        table.check_cell(i, j)?;
        perts[i - 1].add_term(Monomial::from_mask(n, j), a.clone());
    }
    SpectralIdeal::from_perturbations(n, perts)
}

pub fn scale_ideal(e: &SpectralIdeal, t: &Rational) -> SpectralIdeal {
    e.scale(t)
}

/// Compares reduced graded-reverse-lex bases of `e` and `(e_1, ..., e_n)`.
pub fn equals_elementary_ideal(e: &SpectralIdeal, cfg: &GroebnerConfig) -> Result<bool> {
    let order = MonomialOrder::GradedReverseLex;
    let lhs = e.groebner(order, cfg)?;
    let rhs = SpectralIdeal::elementary(e.n()).groebner(order, cfg)?;
    Ok(lhs == rhs)
}

/// The three ideals `I_1, I_2, I_3` in three variables that vanish only at
/// the origin without being `(e_1, e_2, e_3)`.
pub fn exotic_ideals_n3() -> [SpectralIdeal; 3] {
    let mk = |g2: &str, g3: &str| {
        SpectralIdeal::from_perturbations(
            3,
            vec![
                ExactPoly::zero(3),
                ExactPoly::parse(3, g2).unwrap(),
                ExactPoly::parse(3, g3).unwrap(),
            ],
        )
        .unwrap()
    };
    [
        mk("-v1 - v2", "v1*v2 - v1 - v2"),
        mk("v1", "v1^2"),
        mk("-v2", "v1^2 + v1*v2 + v2"),
    ]
}

/// The coefficient of `v^J` in `S_i`, as a sum of `(i-|J|)`-minors avoiding `J`.
pub fn invariant_coefficient(a: &RationalMatrix, i: usize, j: Subset) -> Rational {
    let n = a.n();
    let k = i - j.count_ones() as usize;
    (0u32..1 << n)
        .filter(|s| s & j == 0 && s.count_ones() as usize == k)
        .map(|s| crate::minors::principal_minor(a, s))
        .sum()
}
