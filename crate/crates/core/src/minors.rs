//! Exact principal minors and the symmetrized-principal-minors test.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Error, Result};
use crate::rational::{binomial, Rational};

/// Subsets of `{0, .., n-1}` are bitmasks; bit `i` stands for row/column `i`.
pub type Subset = u32;

pub const DEFAULT_MINOR_CAP: usize = 12;

pub fn subset_from_indices(idx: &[usize]) -> Subset {
    idx.iter().fold(0, |acc, &i| acc | 1 << i)
}

pub fn subset_indices(s: Subset) -> Vec<usize> {
    (0..32).filter(|i| s >> i & 1 == 1).collect()
}

/// Square matrix with exact rational entries, stored row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalMatrix {
    n: usize,
    entries: Vec<Rational>,
}

impl RationalMatrix {
    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return arg_err("matrix is not square");
        }
        if n > 31 {
            return arg_err("matrices larger than 31x31 are not supported");
        }
        Ok(RationalMatrix {
            n,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_integers(rows: &[&[i64]]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| {
                    r.iter()
                        .map(|&x| Rational::from_integer(x.into()))
                        .collect()
                })
                .collect(),
        )
    }

    pub fn zeros(n: usize) -> Self {
        RationalMatrix {
            n,
            entries: vec![Rational::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, Rational::one());
        }
        m
    }

    /// `J_n - I`: adjacency matrix of the complete graph.
    pub fn complete_graph(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m.set(i, j, Rational::one());
                }
            }
        }
        m
    }

    /// Adjacency matrix of the path `0 - 1 - ... - (n-1)`.
    pub fn path_graph(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n.saturating_sub(1) {
            m.set(i, i + 1, Rational::one());
            m.set(i + 1, i, Rational::one());
        }
        m
    }

    /// Adjacency matrix of the cycle on `n` vertices (for `n >= 3`).
    pub fn cycle_graph(n: usize) -> Self {
        let mut m = Self::path_graph(n);
        if n >= 3 {
            m.set(0, n - 1, Rational::one());
            m.set(n - 1, 0, Rational::one());
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.entries[i * self.n + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<Rational>> {
        self.entries
            .chunks(self.n.max(1))
            .take(self.n)
            .map(|r| r.to_vec())
            .collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// `P^T A P` for the permutation sending index `i` to `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n);
        let mut out = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.set(perm[i], perm[j], self.get(i, j).clone());
            }
        }
        out
    }

    /// Adds `shift[i]` to the diagonal.
    pub fn diagonal_shift(&self, shift: &[Rational]) -> Self {
        let mut out = self.clone();
        for (i, s) in shift.iter().enumerate() {
            let v = out.get(i, i) + s;
            out.set(i, i, v);
        }
        out
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries
            .iter()
            .map(|x| crate::rational::to_f64(x).abs())
            .fold(0.0, f64::max)
    }
}

impl fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<String>> = self
            .rows()
            .iter()
            .map(|r| r.iter().map(|x| x.to_string()).collect())
            .collect();
        write!(f, "{rows:?}")
    }
}

/// Determinant of the principal submatrix on `rows`, by fraction-free
/// (Bareiss) elimination after clearing row denominators.
pub fn principal_minor(a: &RationalMatrix, rows: Subset) -> Rational {
    let idx: Vec<usize> = subset_indices(rows)
        .into_iter()
        .filter(|&i| i < a.n())
        .collect();
    debug_assert_eq!(
        idx.len(),
        rows.count_ones() as usize,
        "subset exceeds matrix size"
    );
    if idx.is_empty() {
        return Rational::one();
    }
    let mut scale = BigInt::one();
    let mut m: Vec<Vec<BigInt>> = idx
        .iter()
        .map(|&i| {
            let den = idx
                .iter()
                .fold(BigInt::one(), |acc, &j| acc.lcm(a.get(i, j).denom()));
            let row = idx
                .iter()
                .map(|&j| a.get(i, j).numer() * (&den / a.get(i, j).denom()))
                .collect();
            scale *= &den;
            row
        })
        .collect();
    Rational::new(bareiss(&mut m), scale)
}

/// Fraction-free Gaussian elimination; consumes the matrix.
pub(crate) fn bareiss(m: &mut [Vec<BigInt>]) -> BigInt {
    let k = m.len();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for p in 0..k {
        if m[p][p].is_zero() {
            match (p + 1..k).find(|&r| !m[r][p].is_zero()) {
                Some(r) => {
                    m.swap(p, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in p + 1..k {
            for j in p + 1..k {
                let v = (&m[i][j] * &m[p][p] - &m[i][p] * &m[p][j]) / &prev;
                m[i][j] = v;
            }
            m[i][p] = BigInt::zero();
        }
        prev = m[p][p].clone();
    }
    sign * &m[k - 1][k - 1]
}

/// All `2^n` principal minors, indexed by subset bitmask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinorTable {
    n: usize,
    values: Vec<Rational>,
}

impl MinorTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, s: Subset) -> &Rational {
        &self.values[s as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Subset, &Rational)> {
        self.values
            .iter()
            .enumerate()
            .map(|(s, v)| (s as Subset, v))
    }

    pub fn of_size(&self, k: usize) -> impl Iterator<Item = (Subset, &Rational)> {
        self.iter()
            .filter(move |(s, _)| s.count_ones() as usize == k)
    }

    pub fn sum_of_size(&self, k: usize) -> Rational {
        self.of_size(k).map(|(_, v)| v).sum()
    }
}

pub fn all_principal_minors(a: &RationalMatrix) -> Result<MinorTable> {
    all_principal_minors_capped(a, DEFAULT_MINOR_CAP)
}

pub fn all_principal_minors_capped(a: &RationalMatrix, cap: usize) -> Result<MinorTable> {
    let n = a.n();
    if n > cap {
        return Err(Error::ResourceLimit(format!(
            "{n}x{n} exceeds the principal-minor cap of {cap}"
        )));
    }
    use rayon::prelude::*;
    let values = (0..1u32 << n)
        .into_par_iter()
        .map(|s| principal_minor(a, s))
        .collect();
    Ok(MinorTable { n, values })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum SymmetrizedVerdict {
    Symmetrized,
    /// Smallest size `k` with two unequal `k x k` principal minors.
    Violation {
        k: usize,
        first: Subset,
        #[serde(with = "crate::rational::serde_str")]
        first_value: Rational,
        second: Subset,
        #[serde(with = "crate::rational::serde_str")]
        second_value: Rational,
    },
}

impl SymmetrizedVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, SymmetrizedVerdict::Symmetrized)
    }
}

/// Whether, for every size `k`, all `k x k` principal minors coincide.
/// Stops at the smallest violating size.
pub fn has_symmetrized_principal_minors(a: &RationalMatrix) -> SymmetrizedVerdict {
    let n = a.n();
    for k in 1..=n {
        let mut subsets = (0..1u32 << n).filter(|s| s.count_ones() as usize == k);
        let first = subsets.next().expect("k <= n");
        let first_value = principal_minor(a, first);
        for s in subsets {
            let v = principal_minor(a, s);
            if v != first_value {
                return SymmetrizedVerdict::Violation {
                    k,
                    first,
                    first_value,
                    second: s,
                    second_value: v,
                };
            }
        }
    }
    SymmetrizedVerdict::Symmetrized
}

/// `det(A_{N0})` minus the average of all `m x m` principal minors.
pub fn minor_average_defect(a: &RationalMatrix, m: usize, n0: Subset) -> Result<Rational> {
    let n = a.n();
    if n0.count_ones() as usize != m || m > n || (n0 >> n) != 0 {
        return arg_err(format!("subset {n0:#b} is not an {m}-subset of [{n}]"));
    }
    let sum: Rational = (0..1u32 << n)
        .filter(|s| s.count_ones() as usize == m)
        .map(|s| principal_minor(a, s))
        .sum();
    let avg = sum / Rational::from_integer(binomial(n as u64, m as u64));
    Ok(principal_minor(a, n0) - avg)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphClass {
    Edgeless,
    /// Complete graph whose edge weights all agree up to sign.
    CompleteEqualUpToSign,
    /// Anything else; such graphs admit a nonzero isospectral diagonal shift.
    Other,
}

/// Classifies a weighted simple graph by its adjacency matrix.
pub fn graph_rigidity_class(a: &RationalMatrix) -> Result<GraphClass> {
    let n = a.n();
    if !a.is_symmetric() {
        return arg_err("adjacency matrix must be symmetric");
    }
    if (0..n).any(|i| !a.get(i, i).is_zero()) {
        return arg_err("adjacency matrix must have zero diagonal");
    }
    let weights: Vec<&Rational> = (0..n)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .map(|(i, j)| a.get(i, j))
        .collect();
    if weights.iter().all(|w| w.is_zero()) {
        return Ok(GraphClass::Edgeless);
    }
    let w0 = num_traits::Signed::abs(weights[0]);
    if weights
        .iter()
        .all(|w| !w.is_zero() && num_traits::Signed::abs(*w) == w0)
    {
        return Ok(GraphClass::CompleteEqualUpToSign);
    }
    Ok(GraphClass::Other)
}
