//! Discrete periodic Schrödinger operators `Δ + V` on `Z^d`: Floquet
//! matrices, dispersion polynomials, Floquet isospectrality and the search
//! for nonzero potentials isospectral to zero.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Error, Result};
use crate::invariants::{spectral_invariants, SpectralIdeal};
use crate::minors::RationalMatrix;
use crate::poly::{buchberger, ExactPoly, GroebnerBasis, GroebnerConfig, Monomial, MonomialOrder};
use crate::rational::{to_complex, Rational};
use crate::solver::{
    self, principal_minor_sums, ComplexVector, PolySystem, RigidityStatus, SearchOutcome,
    SolveConfig, Witness,
};

/// Largest `q` handled by the exact Laplace expansion.
pub const EXACT_CAP: usize = 12;
/// Largest `q` handled by the numeric interpolation path.
pub const NUMERIC_CAP: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Periods(Vec<usize>);

impl Periods {
    pub fn new(q: Vec<usize>) -> Result<Self> {
        if q.is_empty() {
            return arg_err("at least one period is required");
        }
        if q.contains(&0) {
            return arg_err("periods must be positive");
        }
        Ok(Periods(q))
    }

    pub fn parse(s: &str) -> Result<Self> {
        let q = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("bad period {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(q)
    }

    pub fn d(&self) -> usize {
        self.0.len()
    }

    pub fn q(&self) -> &[usize] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().product()
    }

    /// Position of `n` in the fundamental domain; `n_1` varies fastest.
    pub fn index(&self, n: &[usize]) -> usize {
        n.iter()
            .zip(&self.0)
            .rev()
            .fold(0, |acc, (&ni, &qi)| acc * qi + ni)
    }

    pub fn point(&self, mut idx: usize) -> Vec<usize> {
        self.0
            .iter()
            .map(|&qi| {
                let r = idx % qi;
                idx /= qi;
                r
            })
            .collect()
    }

    pub fn divides(&self, p: &Periods) -> bool {
        self.d() == p.d() && self.0.iter().zip(&p.0).all(|(q, p)| p % q == 0)
    }
}

impl fmt::Display for Periods {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// A periodic potential given by its values on the fundamental domain.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    periods: Periods,
    values: Vec<Complex64>,
}

impl Potential {
    pub fn new(periods: Periods, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != periods.total() {
            return arg_err(format!(
                "expected {} values for periods {periods}, got {}",
                periods.total(),
                values.len()
            ));
        }
        if values
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return arg_err("potential has non-finite values");
        }
        Ok(Potential { periods, values })
    }

    pub fn zero(periods: Periods) -> Self {
        let q = periods.total();
        Potential {
            periods,
            values: vec![Complex64::zero(); q],
        }
    }

    pub fn random(periods: Periods, seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let values = (0..periods.total())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        Potential { periods, values }
    }

    pub fn periods(&self) -> &Periods {
        &self.periods
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn at(&self, n: &[usize]) -> Complex64 {
        self.values[self.periods.index(n)]
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let values: Vec<PointJson> = (0..self.values.len())
            .map(|i| PointJson {
                n: self.periods.point(i),
                re: self.values[i].re,
                im: self.values[i].im,
            })
            .collect();
        serde_json::to_value(PotentialJson {
            periods: self.periods.0.clone(),
            values,
        })
        .expect("potential serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let p: PotentialJson =
            serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        let periods = Periods::new(p.periods)?;
        let mut values = vec![None; periods.total()];
        for pt in p.values {
            if pt.n.len() != periods.d() || pt.n.iter().zip(periods.q()).any(|(n, q)| n >= q) {
                return Err(Error::Parse(format!(
                    "point {:?} outside the fundamental domain of {periods}",
                    pt.n
                )));
            }
            values[periods.index(&pt.n)] = Some(Complex64::new(pt.re, pt.im));
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                v.ok_or_else(|| Error::Parse(format!("missing value at {:?}", periods.point(i))))
            })
            .collect::<Result<Vec<_>>>()?;
        Potential::new(periods, values)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let v: serde_json::Value =
            serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_json(&v)
    }
}

#[derive(Serialize, Deserialize)]
struct PotentialJson {
    periods: Vec<usize>,
    values: Vec<PointJson>,
}

#[derive(Serialize, Deserialize)]
struct PointJson {
    n: Vec<usize>,
    re: f64,
    #[serde(default)]
    im: f64,
}

/// Ring operations needed to expand determinants with entries in `T[z^±, λ]`.
pub trait Coefficient: Clone + Send + Sync + fmt::Debug {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn is_zero_coeff(&self) -> bool;
    fn add_ref(&self, other: &Self) -> Self;
    fn mul_ref(&self, other: &Self) -> Self;
    fn neg_ref(&self) -> Self;
}

impl Coefficient for Rational {
    fn zero_like(&self) -> Self {
        Rational::zero()
    }
    fn one_like(&self) -> Self {
        Rational::one()
    }
    fn is_zero_coeff(&self) -> bool {
        self.is_zero()
    }
    fn add_ref(&self, other: &Self) -> Self {
        self + other
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
    fn neg_ref(&self) -> Self {
        -self
    }
}

impl Coefficient for Complex64 {
    fn zero_like(&self) -> Self {
        Complex64::zero()
    }
    fn one_like(&self) -> Self {
        Complex64::one()
    }
    fn is_zero_coeff(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn add_ref(&self, other: &Self) -> Self {
        self + other
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
    fn neg_ref(&self) -> Self {
        -self
    }
}

impl Coefficient for ExactPoly {
    fn zero_like(&self) -> Self {
        ExactPoly::zero(self.nvars())
    }
    fn one_like(&self) -> Self {
        ExactPoly::one(self.nvars())
    }
    fn is_zero_coeff(&self) -> bool {
        self.is_zero()
    }
    fn add_ref(&self, other: &Self) -> Self {
        self + other
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
    fn neg_ref(&self) -> Self {
        -self
    }
}

/// `(z exponent, λ exponent)`.
pub type LaurentKey = (Vec<i32>, u32);

/// Polynomial in `z_1^±, ..., z_d^±` and `λ` with coefficients in `T`.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentPoly<T> {
    d: usize,
    terms: BTreeMap<LaurentKey, T>,
}

impl<T: Coefficient> LaurentPoly<T> {
    pub fn zero(d: usize) -> Self {
        LaurentPoly {
            d,
            terms: BTreeMap::new(),
        }
    }

    pub fn monomial(d: usize, z: Vec<i32>, lambda: u32, c: T) -> Self {
        let mut p = Self::zero(d);
        p.add_term((z, lambda), c);
        p
    }

    pub fn z_power(d: usize, axis: usize, e: i32, c: T) -> Self {
        let mut z = vec![0; d];
        z[axis] = e;
        Self::monomial(d, z, 0, c)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&LaurentKey, &T)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, z: &[i32], lambda: u32) -> Option<&T> {
        self.terms.get(&(z.to_vec(), lambda))
    }

    pub fn add_term(&mut self, key: LaurentKey, c: T) {
        if c.is_zero_coeff() {
            return;
        }
        match self.terms.get_mut(&key) {
            Some(v) => {
                *v = v.add_ref(&c);
                if v.is_zero_coeff() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, c);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        LaurentPoly {
            d: self.d,
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (k.clone(), c.neg_ref()))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.d);
        for ((za, la), ca) in &self.terms {
            for ((zb, lb), cb) in &other.terms {
                let z = za.iter().zip(zb).map(|(a, b)| a + b).collect();
                out.add_term((z, la + lb), ca.mul_ref(cb));
            }
        }
        out
    }

    /// `p(z^{-1}, λ)`.
    pub fn invert_z(&self) -> Self {
        LaurentPoly {
            d: self.d,
            terms: self
                .terms
                .iter()
                .map(|((z, l), c)| ((z.iter().map(|e| -e).collect(), *l), c.clone()))
                .collect(),
        }
    }
}

pub trait ToComplex {
    fn to_c64(&self) -> Complex64;
}

impl ToComplex for Rational {
    fn to_c64(&self) -> Complex64 {
        to_complex(self)
    }
}

impl ToComplex for Complex64 {
    fn to_c64(&self) -> Complex64 {
        *self
    }
}

impl<T: Coefficient + ToComplex> LaurentPoly<T> {
    pub fn evaluate(&self, z: &[Complex64], lambda: Complex64) -> Complex64 {
        self.terms
            .iter()
            .map(|((a, b), c)| {
                let zp = a
                    .iter()
                    .zip(z)
                    .fold(Complex64::one(), |acc, (&e, zi)| acc * zi.powi(e));
                c.to_c64() * zp * lambda.powu(*b)
            })
            .sum()
    }
}

/// `L_V(z)` with Laurent-polynomial entries.
#[derive(Clone, Debug, PartialEq)]
pub struct FloquetMatrix<T> {
    periods: Periods,
    entries: Vec<Vec<LaurentPoly<T>>>,
}

impl<T: Coefficient> FloquetMatrix<T> {
    pub fn periods(&self) -> &Periods {
        &self.periods
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize, j: usize) -> &LaurentPoly<T> {
        &self.entries[i][j]
    }

    /// `L(z) = L^T(z^{-1})`, checked coefficientwise.
    pub fn is_inversion_symmetric(&self) -> bool
    where
        T: PartialEq,
    {
        let q = self.size();
        (0..q).all(|i| (0..q).all(|j| self.entries[i][j] == self.entries[j][i].invert_z()))
    }

    /// `det(L(z) - λI)` by Laplace expansion over column subsets.
    pub fn dispersion(&self) -> DispersionPoly<T> {
        let d = self.periods.d();
        let proto = self.prototype();
        let mut m = self.entries.clone();
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = row[i].add(&LaurentPoly::monomial(
                d,
                vec![0; d],
                1,
                proto.one_like().neg_ref(),
            ));
        }
        DispersionPoly {
            periods: self.periods.clone(),
            poly: laplace_det(&m, d, &proto),
        }
    }

    fn prototype(&self) -> T {
        self.entries
            .iter()
            .flatten()
            .flat_map(|p| p.terms.values())
            .next()
            .cloned()
            .expect("Floquet matrices always have nonzero entries")
    }
}

impl<T: Coefficient + ToComplex> FloquetMatrix<T> {
    pub fn evaluate(&self, z: &[Complex64]) -> DMatrix<Complex64> {
        let q = self.size();
        DMatrix::from_fn(q, q, |i, j| {
            self.entries[i][j].evaluate(z, Complex64::zero())
        })
    }
}

fn laplace_det<T: Coefficient>(m: &[Vec<LaurentPoly<T>>], d: usize, proto: &T) -> LaurentPoly<T> {
    let q = m.len();
    let full = (1usize << q) - 1;
    let mut dp: Vec<Option<LaurentPoly<T>>> = vec![None; 1 << q];
    dp[0] = Some(LaurentPoly::monomial(d, vec![0; d], 0, proto.one_like()));
    for mask in 0..full {
        let Some(cur) = dp[mask].take() else { continue };
        let r = mask.count_ones() as usize;
        for c in 0..q {
            if mask >> c & 1 == 1 || m[r][c].is_zero() {
                continue;
            }
            let mut term = cur.mul(&m[r][c]);
            // Earlier rows sitting in larger columns are inversions.
            if (mask >> c).count_ones() % 2 == 1 {
                term = term.neg();
            }
            let slot = &mut dp[mask | 1 << c];
            *slot = Some(match slot.take() {
                Some(acc) => acc.add(&term),
                None => term,
            });
        }
    }
    dp[full].take().unwrap_or_else(|| LaurentPoly::zero(d))
}

pub fn build_floquet_matrix<T: Coefficient>(
    periods: &Periods,
    values: &[T],
) -> Result<FloquetMatrix<T>> {
    if values.len() != periods.total() {
        return arg_err(format!(
            "expected {} values for periods {periods}, got {}",
            periods.total(),
            values.len()
        ));
    }
    let entries = build_blocks(periods.q(), periods.d(), values);
    Ok(FloquetMatrix {
        periods: periods.clone(),
        entries,
    })
}

/// Recursive block structure; with no axes left the matrix is `[V]`.
fn build_blocks<T: Coefficient>(qs: &[usize], d: usize, values: &[T]) -> Vec<Vec<LaurentPoly<T>>> {
    let Some((&qd, rest)) = qs.split_last() else {
        return vec![vec![LaurentPoly::monomial(
            d,
            vec![0; d],
            0,
            values[0].clone(),
        )]];
    };
    let axis = rest.len();
    let qt: usize = rest.iter().product();
    let q = qt * qd;
    let one = values[0].one_like();
    let mut out = vec![vec![LaurentPoly::zero(d); q]; q];
    let ident = |out: &mut Vec<Vec<LaurentPoly<T>>>, bi: usize, bj: usize, p: &LaurentPoly<T>| {
        for k in 0..qt {
            let cell = &mut out[bi * qt + k][bj * qt + k];
            *cell = cell.add(p);
        }
    };
    let unit = LaurentPoly::monomial(d, vec![0; d], 0, one.clone());
    let zp = LaurentPoly::z_power(d, axis, 1, one.clone());
    let zm = LaurentPoly::z_power(d, axis, -1, one.clone());
    for b in 0..qd {
        let sub = build_blocks(rest, d, &values[b * qt..(b + 1) * qt]);
        for (i, row) in sub.into_iter().enumerate() {
            for (j, p) in row.into_iter().enumerate() {
                out[b * qt + i][b * qt + j] = p;
            }
        }
    }
    match qd {
        1 => {
            ident(&mut out, 0, 0, &zp);
            ident(&mut out, 0, 0, &zm);
        }
        2 => {
            ident(&mut out, 0, 1, &unit.add(&zm));
            ident(&mut out, 1, 0, &unit.add(&zp));
        }
        _ => {
            for b in 0..qd - 1 {
                ident(&mut out, b, b + 1, &unit);
                ident(&mut out, b + 1, b, &unit);
            }
            ident(&mut out, 0, qd - 1, &zm);
            ident(&mut out, qd - 1, 0, &zp);
        }
    }
    out
}

/// `D_V(z, λ) = det(L_V(z) - λI)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DispersionPoly<T> {
    periods: Periods,
    poly: LaurentPoly<T>,
}

impl<T: Coefficient> DispersionPoly<T> {
    pub fn periods(&self) -> &Periods {
        &self.periods
    }

    pub fn poly(&self) -> &LaurentPoly<T> {
        &self.poly
    }

    pub fn coefficient(&self, z: &[i32], lambda: u32) -> Option<&T> {
        self.poly.coefficient(z, lambda)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&LaurentKey, &T)> {
        self.poly.terms()
    }

    pub fn lambda_degree(&self) -> u32 {
        self.poly.terms.keys().map(|(_, l)| *l).max().unwrap_or(0)
    }
}

impl<T: Coefficient + ToComplex> DispersionPoly<T> {
    pub fn to_complex(&self) -> DispersionPoly<Complex64> {
        let mut poly = LaurentPoly::zero(self.periods.d());
        for (k, c) in self.poly.terms() {
            poly.add_term(k.clone(), c.to_c64());
        }
        DispersionPoly {
            periods: self.periods.clone(),
            poly,
        }
    }

    /// Largest coefficient difference over the union of supports.
    pub fn max_deviation<U: Coefficient + ToComplex>(&self, other: &DispersionPoly<U>) -> f64 {
        let mut keys: Vec<&LaurentKey> = self.poly.terms.keys().collect();
        keys.extend(other.poly.terms.keys());
        keys.into_iter()
            .map(|k| {
                let a = self
                    .poly
                    .terms
                    .get(k)
                    .map(ToComplex::to_c64)
                    .unwrap_or_default();
                let b = other
                    .poly
                    .terms
                    .get(k)
                    .map(ToComplex::to_c64)
                    .unwrap_or_default();
                (a - b).norm()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DispersionMode {
    #[default]
    Exact,
    Numeric,
}

impl std::str::FromStr for DispersionMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(DispersionMode::Exact),
            "numeric" => Ok(DispersionMode::Numeric),
            _ => Err(Error::Parse(format!("unknown dispersion mode {s:?}"))),
        }
    }
}

pub fn dispersion_poly(v: &Potential, mode: DispersionMode) -> Result<DispersionPoly<Complex64>> {
    let q = v.periods.total();
    match mode {
        DispersionMode::Exact => {
            if q > EXACT_CAP {
                return Err(Error::ResourceLimit(format!(
                    "q = {q} exceeds the exact cap {EXACT_CAP}"
                )));
            }
            Ok(build_floquet_matrix(&v.periods, &v.values)?.dispersion())
        }
        DispersionMode::Numeric => dispersion_numeric(v),
    }
}

pub fn dispersion_exact_rational(
    periods: &Periods,
    values: &[Rational],
) -> Result<DispersionPoly<Rational>> {
    if periods.total() > EXACT_CAP {
        return Err(Error::ResourceLimit(format!(
            "q = {} exceeds the exact cap {EXACT_CAP}",
            periods.total()
        )));
    }
    Ok(build_floquet_matrix(periods, values)?.dispersion())
}

/// Largest `|a_j|` that can occur in `D_V`: every `z_j`-carrying entry sits
/// in one of `q / q_j` rows.
pub fn z_support_bound(periods: &Periods) -> Vec<i32> {
    let q = periods.total();
    periods.q().iter().map(|&qj| (q / qj) as i32).collect()
}

/// Evaluates `det(L_V(z) - λI)` on a grid of roots of unity in every `z_j`
/// and `q + 1` roots of unity in `λ`, then inverts the DFT axis by axis.
fn dispersion_numeric(v: &Potential) -> Result<DispersionPoly<Complex64>> {
    let q = v.periods.total();
    if q > NUMERIC_CAP {
        return Err(Error::ResourceLimit(format!(
            "q = {q} exceeds the numeric cap {NUMERIC_CAP}"
        )));
    }
    let d = v.periods.d();
    let fm = build_floquet_matrix(&v.periods, &v.values)?;
    let bounds = z_support_bound(&v.periods);
    let mut dims: Vec<usize> = bounds.iter().map(|&b| 2 * b as usize + 1).collect();
    dims.push(q + 1);
    let total: usize = dims.iter().product();
    let root = |k: usize, n: usize| {
        Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / n as f64)
    };
    let mut data: Vec<Complex64> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut rem = flat;
            let idx: Vec<usize> = dims
                .iter()
                .map(|&n| {
                    let r = rem % n;
                    rem /= n;
                    r
                })
                .collect();
            let z: Vec<Complex64> = (0..d).map(|j| root(idx[j], dims[j])).collect();
            let lambda = root(idx[d], dims[d]);
            let mut m = fm.evaluate(&z);
            for i in 0..q {
                m[(i, i)] -= lambda;
            }
            m.lu().determinant()
        })
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    let mut stride = 1;
    for &n in &dims {
        let fft = planner.plan_fft_forward(n);
        let mut line = vec![Complex64::zero(); n];
        for base in 0..total {
            if (base / stride) % n != 0 {
                continue;
            }
            for (k, slot) in line.iter_mut().enumerate() {
                *slot = data[base + k * stride];
            }
            fft.process(&mut line);
            for (k, val) in line.iter().enumerate() {
                data[base + k * stride] = val / n as f64;
            }
        }
        stride *= n;
    }
    let scale = data.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
    let mut poly = LaurentPoly::zero(d);
    for (flat, c) in data.iter().enumerate() {
        if c.norm() <= 1e-12 * scale {
            continue;
        }
        let mut rem = flat;
        let idx: Vec<usize> = dims
            .iter()
            .map(|&n| {
                let r = rem % n;
                rem /= n;
                r
            })
            .collect();
        let z: Vec<i32> = (0..d)
            .map(|j| {
                if idx[j] as i32 > bounds[j] {
                    idx[j] as i32 - dims[j] as i32
                } else {
                    idx[j] as i32
                }
            })
            .collect();
        poly.add_term((z, idx[d] as u32), *c);
    }
    Ok(DispersionPoly {
        periods: v.periods.clone(),
        poly,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IsospectralCheck {
    pub isospectral: bool,
    pub max_deviation: f64,
}

pub fn floquet_isospectral(
    v: &Potential,
    w: &Potential,
    mode: DispersionMode,
    tol: f64,
) -> Result<IsospectralCheck> {
    if v.periods != w.periods {
        return arg_err(format!("period mismatch: {} vs {}", v.periods, w.periods));
    }
    let dev = dispersion_poly(v, mode)?.max_deviation(&dispersion_poly(w, mode)?);
    Ok(IsospectralCheck {
        isospectral: dev <= tol,
        max_deviation: dev,
    })
}

/// Coefficients `c_b` of `det(M - λI) = sum c_b λ^b`: principal-minor sums
/// up to `EXACT_CAP`, expanded Schur eigenvalues beyond.
pub fn charpoly_coefficients(m: &DMatrix<Complex64>) -> Vec<Complex64> {
    let q = m.nrows();
    if q <= EXACT_CAP {
        let sums = principal_minor_sums(m);
        return (0..=q)
            .map(|b| {
                if b % 2 == 0 {
                    sums[q - b]
                } else {
                    -sums[q - b]
                }
            })
            .collect();
    }
    let eig = m
        .clone()
        .schur()
        .eigenvalues()
        .map(|e| e.iter().copied().collect::<Vec<_>>())
        .unwrap_or_default();
    eig.iter().fold(vec![Complex64::one()], |acc, &mu| {
        poly_mul(&acc, &[mu, -Complex64::one()])
    })
}

fn random_torus_point<R: Rng>(rng: &mut R, d: usize) -> Vec<Complex64> {
    (0..d)
        .map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)))
        .collect()
}

/// Largest characteristic-polynomial difference of `L_V(z)` and `L_W(z)`
/// over random torus points.
pub fn torus_deviation(v: &Potential, w: &Potential, points: usize, seed: u64) -> Result<f64> {
    if v.periods != w.periods {
        return arg_err(format!("period mismatch: {} vs {}", v.periods, w.periods));
    }
    let (fv, fw) = (
        build_floquet_matrix(&v.periods, &v.values)?,
        build_floquet_matrix(&w.periods, &w.values)?,
    );
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let zs: Vec<Vec<Complex64>> = (0..points)
        .map(|_| random_torus_point(&mut rng, v.periods.d()))
        .collect();
    Ok(zs
        .par_iter()
        .map(|z| {
            let (a, b) = (
                charpoly_coefficients(&fv.evaluate(z)),
                charpoly_coefficients(&fw.evaluate(z)),
            );
            a.iter()
                .zip(&b)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max))
}

/// Generators of the Floquet ideal: nonzero coefficient differences of
/// `D_V - D_{V'}` as polynomials in the potential values `v_1, ..., v_q`.
#[derive(Clone, Debug, PartialEq)]
pub struct FloquetIdeal {
    periods: Periods,
    keys: Vec<LaurentKey>,
    generators: Vec<ExactPoly>,
}

impl FloquetIdeal {
    pub fn periods(&self) -> &Periods {
        &self.periods
    }

    pub fn nvars(&self) -> usize {
        self.periods.total()
    }

    pub fn keys(&self) -> &[LaurentKey] {
        &self.keys
    }

    pub fn generators(&self) -> &[ExactPoly] {
        &self.generators
    }

    pub fn groebner(&self, order: MonomialOrder, cfg: &GroebnerConfig) -> Result<GroebnerBasis> {
        if self.generators.is_empty() {
            return arg_err("the Floquet ideal has no generators");
        }
        buchberger(&self.generators, order, cfg)
    }

    /// For `d = 1`: rescales generator `[λ^{q-i}]` so its degree-`i` part is `e_i`.
    pub fn to_spectral_ideal(&self) -> Result<SpectralIdeal> {
        if self.periods.d() != 1 {
            return arg_err("only one-dimensional systems are spectral ideals in this form");
        }
        let q = self.nvars();
        let mut gens = vec![ExactPoly::zero(q); q];
        for ((z, b), g) in self.keys.iter().zip(&self.generators) {
            if z[0] != 0 || *b as usize >= q {
                return arg_err(format!("unexpected generator at z^{z:?} λ^{b}"));
            }
            let i = q - *b as usize;
            let lead = g.coefficient(&Monomial::from_mask(q, (1u32 << i) - 1));
            if lead.is_zero() {
                return arg_err(format!("generator at λ^{b} lacks the e_{i} part"));
            }
            gens[i - 1] = g.scale(&(Rational::one() / lead));
        }
        SpectralIdeal::from_generators(gens)
    }
}

/// The Floquet ideal for `V'` = 0.
pub fn spectral_invariant_system(periods: &Periods) -> Result<FloquetIdeal> {
    spectral_invariant_system_against(periods, &vec![Rational::zero(); periods.total()])
}

/// The Floquet ideal of potentials isospectral to a rational `V'`.
pub fn spectral_invariant_system_against(
    periods: &Periods,
    v_prime: &[Rational],
) -> Result<FloquetIdeal> {
    let q = periods.total();
    if q > EXACT_CAP {
        return Err(Error::ResourceLimit(format!(
            "q = {q} exceeds the exact cap {EXACT_CAP}"
        )));
    }
    let vars: Vec<ExactPoly> = (0..q).map(|i| ExactPoly::var(q, i)).collect();
    let sym = build_floquet_matrix(periods, &vars)?.dispersion();
    let base = dispersion_exact_rational(periods, v_prime)?;
    let mut diff = sym.poly.clone();
    for (k, c) in base.terms() {
        diff.add_term(k.clone(), ExactPoly::constant(q, -c.clone()));
    }
    let (keys, generators) = diff.terms.into_iter().unzip();
    Ok(FloquetIdeal {
        periods: periods.clone(),
        keys,
        generators,
    })
}

/// `L_0(z)` at `z = 1` as a rational matrix: the cycle adjacency for `q >= 3`.
pub fn circulant_matrix(q: usize) -> Result<RationalMatrix> {
    let periods = Periods::new(vec![q])?;
    let fm = build_floquet_matrix(&periods, &vec![Rational::zero(); q])?;
    let rows = (0..q)
        .map(|i| {
            (0..q)
                .map(|j| fm.get(i, j).terms().map(|(_, c)| c.clone()).sum())
                .collect()
        })
        .collect();
    RationalMatrix::from_rows(rows)
}

/// `V_P(n) = V(n mod Q)`.
pub fn lift_potential(v: &Potential, p: &Periods) -> Result<Potential> {
    if !v.periods.divides(p) {
        return arg_err(format!("{} does not divide {p}", v.periods));
    }
    let values = (0..p.total())
        .map(|i| {
            let n: Vec<usize> = p
                .point(i)
                .iter()
                .zip(v.periods.q())
                .map(|(n, q)| n % q)
                .collect();
            v.at(&n)
        })
        .collect();
    Potential::new(p.clone(), values)
}

fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Checks `D_{V_P}(z^{P/Q}, λ) = prod_{μ} D_V(μ z, λ)` at random torus
/// points; returns the largest coefficient deviation relative to
/// `max(1, |coefficient|)`.
pub fn check_lifting_formula(v: &Potential, p: &Periods, points: usize, seed: u64) -> Result<f64> {
    let vp = lift_potential(v, p)?;
    let fq = build_floquet_matrix(&v.periods, &v.values)?;
    let fp = build_floquet_matrix(p, &vp.values)?;
    let ratios: Vec<usize> = p
        .q()
        .iter()
        .zip(v.periods.q())
        .map(|(p, q)| p / q)
        .collect();
    let shifts: usize = ratios.iter().product();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let zs: Vec<Vec<Complex64>> = (0..points)
        .map(|_| random_torus_point(&mut rng, p.d()))
        .collect();
    Ok(zs
        .par_iter()
        .map(|z| {
            let zp: Vec<Complex64> = z
                .iter()
                .zip(&ratios)
                .map(|(zi, &r)| zi.powu(r as u32))
                .collect();
            let lhs = charpoly_coefficients(&fp.evaluate(&zp));
            let mut rhs = vec![Complex64::one()];
            for s in 0..shifts {
                let mut rem = s;
                let mz: Vec<Complex64> = z
                    .iter()
                    .zip(&ratios)
                    .map(|(zi, &r)| {
                        let k = rem % r;
                        rem /= r;
                        zi * Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / r as f64)
                    })
                    .collect();
                rhs = poly_mul(&rhs, &charpoly_coefficients(&fq.evaluate(&mz)));
            }
            lhs.iter()
                .zip(&rhs)
                .map(|(a, b)| (a - b).norm() / a.norm().max(b.norm()).max(1.0))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandSample {
    pub z: Vec<Complex64>,
    pub eigenvalues: Vec<Complex64>,
}

fn sort_complex(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Eigenvalues of `L_V(z)` on the product grid of `grid`-th roots of unity.
pub fn band_spectrum_sample(v: &Potential, grid: usize) -> Result<Vec<BandSample>> {
    if grid == 0 {
        return arg_err("grid must be at least 1");
    }
    let fm = build_floquet_matrix(&v.periods, &v.values)?;
    let d = v.periods.d();
    let count = grid.pow(d as u32);
    (0..count)
        .into_par_iter()
        .map(|mut idx| {
            let z: Vec<Complex64> = (0..d)
                .map(|_| {
                    let k = idx % grid;
                    idx /= grid;
                    Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / grid as f64)
                })
                .collect();
            let m = fm.evaluate(&z);
            let mut eigenvalues: Vec<Complex64> = m
                .schur()
                .eigenvalues()
                .ok_or_else(|| Error::Degenerate("Schur form did not converge".into()))?
                .iter()
                .copied()
                .collect();
            sort_complex(&mut eigenvalues);
            Ok(BandSample { z, eigenvalues })
        })
        .collect()
}

/// Greedy multiset matching of two spectra within `tol`.
pub fn spectra_match(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    a.iter().all(|x| {
        let best = (0..b.len())
            .filter(|&j| !used[j])
            .min_by(|&i, &j| (b[i] - x).norm().total_cmp(&(b[j] - x).norm()));
        match best {
            Some(j) if (b[j] - x).norm() <= tol => {
                used[j] = true;
                true
            }
            _ => false,
        }
    })
}

pub fn band_csv(samples: &[BandSample]) -> String {
    let mut out = String::new();
    if let Some(first) = samples.first() {
        let mut header: Vec<String> = (1..=first.z.len())
            .flat_map(|j| [format!("z{j}_re"), format!("z{j}_im")])
            .collect();
        header.extend(
            (1..=first.eigenvalues.len()).flat_map(|k| [format!("ev{k}_re"), format!("ev{k}_im")]),
        );
        out.push_str(&header.join(","));
        out.push('\n');
    }
    for s in samples {
        let cells: Vec<String> =
            s.z.iter()
                .chain(&s.eigenvalues)
                .flat_map(|c| [format!("{}", c.re), format!("{}", c.im)])
                .collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct FloquetWitness {
    pub potential: Potential,
    /// Axis and period of the one-dimensional problem that was solved.
    pub axis: usize,
    pub base_period: usize,
    pub base: Witness,
    pub torus_deviation: f64,
    pub coefficient_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FloquetOutcome {
    Witness(Box<FloquetWitness>),
    Rigid {
        reduced: Periods,
        groebner_pairs: Option<usize>,
    },
    Inconclusive {
        reduced: Periods,
        reason: String,
    },
}

impl FloquetOutcome {
    pub fn verdict(&self) -> &'static str {
        match self {
            FloquetOutcome::Witness(_) => "witness",
            FloquetOutcome::Rigid { .. } => "rigid",
            FloquetOutcome::Inconclusive { .. } => "inconclusive",
        }
    }
}

/// Drops every coordinate with period 1 or 2; an empty result becomes `(1)`.
pub fn strip_small_periods(periods: &Periods) -> Periods {
    let kept: Vec<usize> = periods.q().iter().copied().filter(|&q| q > 2).collect();
    Periods(if kept.is_empty() { vec![1] } else { kept })
}

fn one_dimensional_witness(
    q: usize,
    cfg: &SolveConfig,
) -> Result<Option<(Vec<Complex64>, Witness)>> {
    let periods = Periods::new(vec![q])?;
    let e = spectral_invariants(&circulant_matrix(q)?)?;
    let sys = PolySystem::from_ideal(&e);
    let zero = Potential::zero(periods.clone());
    let reference = dispersion_poly(&zero, DispersionMode::Exact)?;
    let outcome = solver::search_system(&sys, cfg, 2.0, |x| {
        Potential::new(periods.clone(), x.to_vec())
            .and_then(|v| dispersion_poly(&v, DispersionMode::Exact))
            .map(|dv| dv.max_deviation(&reference))
            .unwrap_or(f64::INFINITY)
    })?;
    Ok(match outcome {
        SearchOutcome::Found(w) => Some((w.d.as_slice().to_vec(), w)),
        SearchOutcome::NoneFound { .. } => None,
    })
}

/// Nonzero potential Floquet isospectral to zero, a rigidity certificate,
/// or an inconclusive verdict for `(3, 3, 3, ...)`-type periods.
pub fn find_isospectral_potential(
    periods: &Periods,
    cfg: &SolveConfig,
    gb: &GroebnerConfig,
) -> Result<FloquetOutcome> {
    let reduced = strip_small_periods(periods);
    let big = periods
        .q()
        .iter()
        .enumerate()
        .filter(|(_, &q)| q >= 4)
        .min_by_key(|(_, &q)| q);
    if let Some((axis, &base_period)) = big {
        let Some((values, base)) = one_dimensional_witness(base_period, cfg)? else {
            return Ok(FloquetOutcome::Inconclusive {
                reduced,
                reason: format!("no witness found for the period-{base_period} circulant within the restart budget"),
            });
        };
        let mut unit = vec![1; periods.d()];
        unit[axis] = base_period;
        let v1 = Potential::new(Periods(unit), values)?;
        let potential = lift_potential(&v1, periods)?;
        let zero = Potential::zero(periods.clone());
        let torus_deviation = torus_deviation(&potential, &zero, 32, cfg.seed)?;
        let mode = if periods.total() <= EXACT_CAP {
            DispersionMode::Exact
        } else {
            DispersionMode::Numeric
        };
        let coefficient_residual =
            floquet_isospectral(&potential, &zero, mode, f64::INFINITY)?.max_deviation;
        return Ok(FloquetOutcome::Witness(Box::new(FloquetWitness {
            potential,
            axis,
            base_period,
            base,
            torus_deviation,
            coefficient_residual,
        })));
    }
    let threes = reduced.q().iter().filter(|&&q| q == 3).count();
    if threes > 2 {
        return Ok(FloquetOutcome::Inconclusive {
            reduced,
            reason: "periods (3,3,3,...) in three or more directions: rigidity is an open problem"
                .into(),
        });
    }
    let system = spectral_invariant_system(&reduced)?;
    match system.groebner(MonomialOrder::GradedReverseLex, gb) {
        Ok(basis) => {
            if basis.zero_set_is_origin()? {
                Ok(FloquetOutcome::Rigid {
                    reduced,
                    groebner_pairs: Some(basis.pairs_reduced()),
                })
            } else {
                Ok(FloquetOutcome::Inconclusive {
                    reduced,
                    reason: "Groebner basis admits nonzero solutions".into(),
                })
            }
        }
        Err(Error::ResourceLimit(msg)) => Ok(FloquetOutcome::Inconclusive {
            reduced,
            reason: msg,
        }),
        Err(e) => Err(e),
    }
}

/// Exact rigidity status of the Floquet ideal of `periods` against zero.
pub fn certify_floquet_rigid(periods: &Periods, gb: &GroebnerConfig) -> Result<RigidityStatus> {
    let basis =
        match spectral_invariant_system(periods)?.groebner(MonomialOrder::GradedReverseLex, gb) {
            Ok(b) => b,
            Err(Error::ResourceLimit(_)) => return Ok(RigidityStatus::Inconclusive),
            Err(e) => return Err(e),
        };
    Ok(if basis.zero_set_is_origin()? {
        RigidityStatus::Rigid
    } else {
        RigidityStatus::NotRigid
    })
}

/// Distinct nonzero solutions of the period-`q` circulant system reached by
/// the total-degree homotopy, clustered at `cluster_tol`.
pub fn circulant_witness_set(q: usize, seed: u64, cluster_tol: f64) -> Result<Vec<ComplexVector>> {
    let e = spectral_invariants(&circulant_matrix(q)?)?;
    let sys = PolySystem::from_ideal(&e);
    let hom = solver::Homotopy::new(&sys, seed);
    let mut out: Vec<ComplexVector> = Vec::new();
    for end in hom.track_all() {
        let Some(x) = end.point else { continue };
        let Some(x) = solver::polish(&sys, x) else {
            continue;
        };
        let v = ComplexVector::new(x)?;
        if v.norm_inf() <= 1e-6 {
            continue;
        }
        let dup = out.iter().any(|w| {
            w.as_slice()
                .iter()
                .zip(v.as_slice())
                .all(|(a, b)| (a - b).norm() <= cluster_tol)
        });
        if !dup {
            out.push(v);
        }
    }
    Ok(out)
}
