//! Numerical search for nonzero isospectral diagonal shifts and exact
//! rigidity certificates.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Error, Result};
use crate::invariants::{spectral_invariants, SpectralIdeal};
use crate::minors::{
    has_symmetrized_principal_minors, RationalMatrix, SymmetrizedVerdict, DEFAULT_MINOR_CAP,
};
use crate::poly::{ExactPoly, GroebnerConfig, MonomialOrder};
use crate::rational::{from_f64_dyadic, round_dyadic, to_complex, to_f64, Rational};

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ComplexVector(Vec<Complex64>);

impl ComplexVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return arg_err("complex vector has non-finite entries");
        }
        Ok(ComplexVector(entries))
    }

    pub fn zeros(n: usize) -> Self {
        ComplexVector(vec![Complex64::zero(); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.0
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn conj(&self) -> ComplexVector {
        ComplexVector(self.0.iter().map(|z| z.conj()).collect())
    }
}

#[derive(Serialize, Deserialize)]
struct ComplexJson {
    re: f64,
    im: f64,
}

impl Serialize for ComplexVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<ComplexJson> = self
            .0
            .iter()
            .map(|z| ComplexJson { re: z.re, im: z.im })
            .collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<ComplexJson>::deserialize(d)?;
        ComplexVector::new(v.into_iter().map(|c| Complex64::new(c.re, c.im)).collect())
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMode {
    #[default]
    NewtonMultistart,
    TotalDegreeHomotopy,
}

impl fmt::Display for SolveMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveMode::NewtonMultistart => "newton-multistart",
            SolveMode::TotalDegreeHomotopy => "total-degree-homotopy",
        })
    }
}

impl std::str::FromStr for SolveMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "newton-multistart" | "newton" => Ok(SolveMode::NewtonMultistart),
            "total-degree-homotopy" | "homotopy" => Ok(SolveMode::TotalDegreeHomotopy),
            _ => Err(Error::Parse(format!("unknown solve mode {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub residual_tol: f64,
    pub zero_threshold: f64,
    /// `None` means `200 n!`.
    pub max_restarts: Option<usize>,
    pub newton_max_iter: usize,
    pub seed: u64,
    pub mode: SolveMode,
    /// Polish the witness with exact-rational Newton steps rounded to 256 bits.
    pub high_precision: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            residual_tol: 1e-10,
            zero_threshold: 1e-6,
            max_restarts: None,
            newton_max_iter: 100,
            seed: 0,
            mode: SolveMode::NewtonMultistart,
            high_precision: false,
        }
    }
}

impl SolveConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_mode(mut self, mode: SolveMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tol > 0.0 && self.zero_threshold > 0.0) {
            return arg_err("tolerances must be positive");
        }
        if self.zero_threshold <= self.residual_tol {
            return arg_err("zero_threshold must exceed residual_tol");
        }
        Ok(())
    }

    pub fn restarts_for(&self, n: usize) -> usize {
        self.max_restarts
            .unwrap_or_else(|| 200 * (1..=n).product::<usize>().max(1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(rename = "D")]
    pub d: ComplexVector,
    pub residual: f64,
    pub seed: u64,
    pub mode: SolveMode,
    pub certified_nonzero: bool,
    /// Restart or path index that produced the witness.
    pub attempt: usize,
    /// log10 of the exact residual after high-precision polishing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refined_log10_residual: Option<f64>,
}

impl Witness {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("witness serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SearchOutcome {
    Found(Witness),
    NoneFound { attempts: usize },
}

impl SearchOutcome {
    pub fn witness(&self) -> Option<&Witness> {
        match self {
            SearchOutcome::Found(w) => Some(w),
            SearchOutcome::NoneFound { .. } => None,
        }
    }
}

/// A square polynomial system compiled for complex evaluation.
#[derive(Clone, Debug)]
pub struct PolySystem {
    n: usize,
    /// Per equation: `(coefficient, exponents)`.
    terms: Vec<Vec<(Complex64, Vec<u16>)>>,
    degrees: Vec<usize>,
}

impl PolySystem {
    pub fn new(polys: &[ExactPoly]) -> Result<Self> {
        let n = polys.len();
        if polys.iter().any(|p| p.nvars() != n) {
            return arg_err("system must be square");
        }
        let terms = polys
            .iter()
            .map(|p| {
                p.terms()
                    .map(|(m, c)| (to_complex(c), m.exponents().to_vec()))
                    .collect()
            })
            .collect();
        let degrees = polys
            .iter()
            .map(|p| p.total_degree().unwrap_or(0))
            .collect();
        Ok(PolySystem { n, terms, degrees })
    }

    pub fn from_ideal(e: &SpectralIdeal) -> Self {
        Self::new(&e.generators()).expect("spectral ideals are square")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    fn powers(&self, x: &[Complex64]) -> Vec<Vec<Complex64>> {
        let maxdeg = self.degrees.iter().copied().max().unwrap_or(0);
        x.iter()
            .map(|&xi| {
                let mut p = Vec::with_capacity(maxdeg + 1);
                p.push(Complex64::one());
                for k in 1..=maxdeg {
                    p.push(p[k - 1] * xi);
                }
                p
            })
            .collect()
    }

    pub fn evaluate(&self, x: &[Complex64]) -> Vec<Complex64> {
        let pw = self.powers(x);
        self.terms
            .iter()
            .map(|eq| {
                eq.iter()
                    .map(|(c, e)| {
                        e.iter()
                            .enumerate()
                            .fold(*c, |acc, (j, &k)| acc * pw[j][k as usize])
                    })
                    .sum()
            })
            .collect()
    }

    pub fn jacobian(&self, x: &[Complex64]) -> DMatrix<Complex64> {
        let pw = self.powers(x);
        let mut jac = DMatrix::zeros(self.n, self.n);
        for (i, eq) in self.terms.iter().enumerate() {
            for (c, e) in eq {
                for j in 0..self.n {
                    if e[j] == 0 {
                        continue;
                    }
                    let mut t = *c * e[j] as f64;
                    for (l, &k) in e.iter().enumerate() {
                        let k = if l == j { k - 1 } else { k } as usize;
                        t *= pw[l][k];
                    }
                    jac[(i, j)] += t;
                }
            }
        }
        jac
    }
}

pub fn evaluate_system(e: &SpectralIdeal, d: &ComplexVector) -> Result<Vec<Complex64>> {
    if d.len() != e.n() {
        return arg_err(format!(
            "shift has {} entries, ideal has {} variables",
            d.len(),
            e.n()
        ));
    }
    Ok(PolySystem::from_ideal(e).evaluate(d.as_slice()))
}

pub fn jacobian(e: &SpectralIdeal, d: &ComplexVector) -> Result<DMatrix<Complex64>> {
    if d.len() != e.n() {
        return arg_err(format!(
            "shift has {} entries, ideal has {} variables",
            d.len(),
            e.n()
        ));
    }
    Ok(PolySystem::from_ideal(e).jacobian(d.as_slice()))
}

fn inf_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Sums of `k x k` principal minors of a complex matrix for `k = 0..=n`,
/// i.e. the characteristic-polynomial coefficients up to sign.
pub fn principal_minor_sums(m: &DMatrix<Complex64>) -> Vec<Complex64> {
    let n = m.nrows();
    let sums: Vec<(usize, Complex64)> = (0u32..1 << n)
        .into_par_iter()
        .map(|s| {
            let idx: Vec<usize> = (0..n).filter(|&i| s >> i & 1 == 1).collect();
            let k = idx.len();
            if k == 0 {
                return (0, Complex64::one());
            }
            let sub = DMatrix::from_fn(k, k, |r, c| m[(idx[r], idx[c])]);
            (k, sub.lu().determinant())
        })
        .collect();
    let mut out = vec![Complex64::zero(); n + 1];
    for (k, v) in sums {
        out[k] += v;
    }
    out
}

fn complex_matrix(a: &RationalMatrix) -> DMatrix<Complex64> {
    DMatrix::from_fn(a.n(), a.n(), |i, j| to_complex(a.get(i, j)))
}

/// Largest deviation between the characteristic-polynomial coefficients of
/// `A + D` and `A`.
pub fn verify_witness(a: &RationalMatrix, d: &ComplexVector) -> Result<f64> {
    if d.len() != a.n() {
        return arg_err(format!(
            "shift has {} entries, matrix is {}x{}",
            d.len(),
            a.n(),
            a.n()
        ));
    }
    let base = complex_matrix(a);
    let mut shifted = base.clone();
    for (i, z) in d.as_slice().iter().enumerate() {
        shifted[(i, i)] += z;
    }
    let c0 = principal_minor_sums(&base);
    let c1 = principal_minor_sums(&shifted);
    Ok(c0
        .iter()
        .zip(&c1)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max))
}

fn solve_linear(jac: DMatrix<Complex64>, rhs: &[Complex64]) -> Option<Vec<Complex64>> {
    let lu = jac.lu();
    let sol = lu.solve(&DVector::from_column_slice(rhs))?;
    sol.iter()
        .all(|z| z.re.is_finite() && z.im.is_finite())
        .then(|| sol.iter().copied().collect())
}

/// Damped Newton; returns the point only if the residual and the last step
/// are both small.
fn newton(
    sys: &PolySystem,
    start: Vec<Complex64>,
    max_iter: usize,
    tol: f64,
) -> Option<Vec<Complex64>> {
    let mut x = start;
    let mut f = sys.evaluate(&x);
    let mut fnorm = inf_norm(&f);
    for _ in 0..max_iter {
        let rhs: Vec<Complex64> = f.iter().map(|z| -z).collect();
        let dx = solve_linear(sys.jacobian(&x), &rhs)?;
        let step = inf_norm(&dx);
        let mut lambda = 1.0;
        let mut accepted = None;
        while lambda > 1e-4 {
            let trial: Vec<Complex64> = x.iter().zip(&dx).map(|(a, b)| a + b * lambda).collect();
            let ft = sys.evaluate(&trial);
            let nt = inf_norm(&ft);
            if nt.is_finite() && (nt < fnorm || nt <= tol) {
                accepted = Some((trial, ft, nt));
                break;
            }
            lambda *= 0.5;
        }
        let (nx, nf, nn) = accepted?;
        x = nx;
        f = nf;
        fnorm = nn;
        let scale = 1.0 + inf_norm(&x);
        // A tiny residual alone is not enough: near a multiple root at the
        // origin Newton crawls with small residuals but O(|x|) steps.
        if fnorm <= tol * 1e-2 && step * lambda <= 1e-9 * scale {
            return Some(x);
        }
        if fnorm <= tol && step * lambda <= 1e-12 * scale {
            return Some(x);
        }
    }
    (fnorm <= tol * 1e-2).then_some(x).filter(|x| {
        let dx = solve_linear(sys.jacobian(x), &sys.evaluate(x));
        dx.is_some_and(|d| inf_norm(&d) <= 1e-8 * (1.0 + inf_norm(x)))
    })
}

/// Newton-polishes an approximate root to a tight residual.
pub fn polish(sys: &PolySystem, x: Vec<Complex64>) -> Option<Vec<Complex64>> {
    newton(sys, x, 100, 1e-12)
}

fn stream_rng(seed: u64, index: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn random_in_disc<R: Rng>(rng: &mut R, radius: f64) -> Complex64 {
    loop {
        let re: f64 = rng.random_range(-1.0..1.0);
        let im: f64 = rng.random_range(-1.0..1.0);
        if re * re + im * im <= 1.0 {
            return Complex64::new(re * radius, im * radius);
        }
    }
}

/// Generic witness search for a square system whose zeros are verified by
/// `verify`.
pub fn search_system<F>(
    sys: &PolySystem,
    cfg: &SolveConfig,
    scale: f64,
    verify: F,
) -> Result<SearchOutcome>
where
    F: Fn(&[Complex64]) -> f64 + Sync,
{
    cfg.validate()?;
    let n = sys.n();
    let accept = |idx: usize, x: Vec<Complex64>| -> Option<Witness> {
        let d = ComplexVector::new(x).ok()?;
        if d.norm_inf() <= cfg.zero_threshold {
            return None;
        }
        let residual = verify(d.as_slice());
        if !(residual <= cfg.residual_tol) {
            log::debug!("attempt {idx}: endpoint rejected with residual {residual:e}");
            return None;
        }
        Some(Witness {
            certified_nonzero: d.norm_inf() > cfg.zero_threshold,
            d,
            residual,
            seed: cfg.seed,
            mode: cfg.mode,
            attempt: idx,
            refined_log10_residual: None,
        })
    };
    let tried = AtomicUsize::new(0);
    let found = match cfg.mode {
        SolveMode::NewtonMultistart => {
            let radius = scale.max(1.0);
            (0..cfg.restarts_for(n))
                .into_par_iter()
                .find_map_first(|idx| {
                    tried.fetch_add(1, Ordering::Relaxed);
                    let mut rng = stream_rng(cfg.seed, idx);
                    // Mix start radii: roots can sit well inside the unit ball.
                    let r = radius * [1.0, 0.5, 2.0, 0.25][idx % 4];
                    let start: Vec<Complex64> =
                        (0..n).map(|_| random_in_disc(&mut rng, r)).collect();
                    newton(sys, start, cfg.newton_max_iter, cfg.residual_tol * 1e-2)
                        .and_then(|x| accept(idx, x))
                })
        }
        SolveMode::TotalDegreeHomotopy => {
            let hom = Homotopy::new(sys, cfg.seed);
            (0..hom.path_count()).into_par_iter().find_map_first(|idx| {
                tried.fetch_add(1, Ordering::Relaxed);
                let end = hom.track(idx)?;
                newton(sys, end, cfg.newton_max_iter, cfg.residual_tol * 1e-2)
                    .and_then(|x| accept(idx, x))
            })
        }
    };
    Ok(match found {
        Some(w) => SearchOutcome::Found(w),
        None => SearchOutcome::NoneFound {
            attempts: tried.load(Ordering::Relaxed),
        },
    })
}

/// Total-degree homotopy `(1 - t) γ g + t f` with start system
/// `g_i = x_i^{d_i} - c_i`.
pub struct Homotopy<'a> {
    target: &'a PolySystem,
    gamma: Complex64,
    constants: Vec<Complex64>,
}

#[derive(Clone, Debug)]
pub struct PathEnd {
    pub index: usize,
    pub point: Option<Vec<Complex64>>,
}

impl<'a> Homotopy<'a> {
    pub fn new(target: &'a PolySystem, seed: u64) -> Self {
        let mut rng = stream_rng(seed ^ 0x9e37_79b9_7f4a_7c15, 0);
        let unimodular = |rng: &mut ChaCha20Rng| {
            Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))
        };
        let gamma = unimodular(&mut rng);
        let constants = (0..target.n()).map(|_| unimodular(&mut rng)).collect();
        Homotopy {
            target,
            gamma,
            constants,
        }
    }

    fn degrees(&self) -> Vec<usize> {
        self.target.degrees().iter().map(|&d| d.max(1)).collect()
    }

    pub fn path_count(&self) -> usize {
        self.degrees().iter().product()
    }

    fn start_point(&self, mut index: usize) -> Vec<Complex64> {
        self.degrees()
            .iter()
            .zip(&self.constants)
            .map(|(&d, c)| {
                let k = index % d;
                index /= d;
                let root = c.powf(1.0 / d as f64);
                root * Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / d as f64)
            })
            .collect()
    }

    fn start_eval(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.degrees()
            .iter()
            .zip(&self.constants)
            .zip(x)
            .map(|((&d, c), xi)| xi.powu(d as u32) - c)
            .collect()
    }

    fn start_jac_diag(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.degrees()
            .iter()
            .zip(x)
            .map(|(&d, xi)| xi.powu(d as u32 - 1) * d as f64)
            .collect()
    }

    fn h_and_jac(
        &self,
        x: &[Complex64],
        t: f64,
    ) -> (Vec<Complex64>, DMatrix<Complex64>, Vec<Complex64>) {
        let f = self.target.evaluate(x);
        let g = self.start_eval(x);
        let s = self.gamma * (1.0 - t);
        let h = f.iter().zip(&g).map(|(fi, gi)| fi * t + gi * s).collect();
        let mut jac = self.target.jacobian(x) * Complex64::new(t, 0.0);
        for (i, dg) in self.start_jac_diag(x).into_iter().enumerate() {
            jac[(i, i)] += dg * s;
        }
        let ht = f
            .iter()
            .zip(&g)
            .map(|(fi, gi)| fi - gi * self.gamma)
            .collect();
        (h, jac, ht)
    }

    /// Euler predictor with Newton corrector and adaptive step; returns the
    /// point at `t = 1` or `None` when the path fails.
    pub fn track(&self, index: usize) -> Option<Vec<Complex64>> {
        let mut x = self.start_point(index);
        let mut t = 0.0f64;
        let mut h = 0.02f64;
        let mut streak = 0;
        for _ in 0..50_000 {
            if t >= 1.0 {
                return Some(x);
            }
            let step = h.min(1.0 - t);
            let (_, jac, ht) = self.h_and_jac(&x, t);
            let rhs: Vec<Complex64> = ht.iter().map(|z| -z).collect();
            let Some(dxdt) = solve_linear(jac, &rhs) else {
                h *= 0.5;
                if h < 1e-13 {
                    return None;
                }
                continue;
            };
            let mut y: Vec<Complex64> = x.iter().zip(&dxdt).map(|(a, b)| a + b * step).collect();
            let tn = t + step;
            let mut ok = false;
            for _ in 0..4 {
                let (hv, jac, _) = self.h_and_jac(&y, tn);
                let rhs: Vec<Complex64> = hv.iter().map(|z| -z).collect();
                let Some(dy) = solve_linear(jac, &rhs) else {
                    break;
                };
                for (yi, di) in y.iter_mut().zip(&dy) {
                    *yi += di;
                }
                if inf_norm(&dy) <= 1e-9 * (1.0 + inf_norm(&y)) {
                    ok = true;
                    break;
                }
            }
            if ok && inf_norm(&y).is_finite() {
                x = y;
                t = tn;
                streak += 1;
                if streak >= 3 {
                    h = (h * 1.6).min(0.1);
                    streak = 0;
                }
            } else {
                h *= 0.5;
                streak = 0;
                if h < 1e-13 {
                    return None;
                }
            }
        }
        None
    }

    /// Tracks every path; failed paths have `point == None`.
    pub fn track_all(&self) -> Vec<PathEnd> {
        (0..self.path_count())
            .into_par_iter()
            .map(|index| PathEnd {
                index,
                point: self.track(index),
            })
            .collect()
    }
}

/// Searches for a nonzero complex diagonal `D` with `A + D` isospectral to `A`.
pub fn find_nonzero_witness(a: &RationalMatrix, cfg: &SolveConfig) -> Result<SearchOutcome> {
    if a.n() > DEFAULT_MINOR_CAP {
        return Err(Error::ResourceLimit(format!(
            "n = {} exceeds the cap {DEFAULT_MINOR_CAP}",
            a.n()
        )));
    }
    let e = spectral_invariants(a)?;
    let sys = PolySystem::from_ideal(&e);
    let scale = a.max_abs_entry() * a.n() as f64;
    let mut out = search_system(&sys, cfg, scale, |d| {
        verify_witness(a, &ComplexVector(d.to_vec())).unwrap_or(f64::INFINITY)
    })?;
    if cfg.high_precision {
        if let SearchOutcome::Found(w) = &mut out {
            w.refined_log10_residual = Some(refine_high_precision(&e, &mut w.d, 6));
        }
    }
    Ok(out)
}

/// Exact complex rational, used for high-precision polishing.
#[derive(Clone, Debug, PartialEq)]
struct CRat {
    re: Rational,
    im: Rational,
}

impl CRat {
    fn zero() -> Self {
        CRat {
            re: Rational::zero(),
            im: Rational::zero(),
        }
    }
    fn from_real(r: Rational) -> Self {
        CRat {
            re: r,
            im: Rational::zero(),
        }
    }
    fn add(&self, o: &CRat) -> CRat {
        CRat {
            re: &self.re + &o.re,
            im: &self.im + &o.im,
        }
    }
    fn sub(&self, o: &CRat) -> CRat {
        CRat {
            re: &self.re - &o.re,
            im: &self.im - &o.im,
        }
    }
    fn mul(&self, o: &CRat) -> CRat {
        CRat {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }
    fn div(&self, o: &CRat) -> CRat {
        let den = &o.re * &o.re + &o.im * &o.im;
        CRat {
            re: (&self.re * &o.re + &self.im * &o.im) / &den,
            im: (&self.im * &o.re - &self.re * &o.im) / &den,
        }
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    fn round(&self, bits: u32) -> CRat {
        CRat {
            re: round_dyadic(&self.re, bits),
            im: round_dyadic(&self.im, bits),
        }
    }
    fn norm_f64(&self) -> f64 {
        to_f64(&self.re).hypot(to_f64(&self.im))
    }
}

fn eval_exact(p: &ExactPoly, x: &[CRat]) -> CRat {
    let mut acc = CRat::zero();
    for (m, c) in p.terms() {
        let mut t = CRat::from_real(c.clone());
        for (j, &e) in m.exponents().iter().enumerate() {
            for _ in 0..e {
                t = t.mul(&x[j]);
            }
        }
        acc = acc.add(&t);
    }
    acc
}

/// Newton iterations in exact Gaussian-rational arithmetic, rounding the
/// iterate to 256 fractional bits after each step. Returns log10 of the
/// final exact residual and overwrites `d` with the rounded result.
pub fn refine_high_precision(e: &SpectralIdeal, d: &mut ComplexVector, steps: usize) -> f64 {
    const BITS: u32 = 256;
    let n = e.n();
    let gens = e.generators();
    let derivs: Vec<Vec<ExactPoly>> = gens
        .iter()
        .map(|g| (0..n).map(|j| g.derivative(j)).collect())
        .collect();
    let mut x: Vec<CRat> = d
        .as_slice()
        .iter()
        .map(|z| CRat {
            re: from_f64_dyadic(z.re, 60),
            im: from_f64_dyadic(z.im, 60),
        })
        .collect();
    let residual = |x: &[CRat]| {
        gens.iter()
            .map(|g| eval_exact(g, x).norm_f64())
            .fold(0.0, f64::max)
    };
    for _ in 0..steps {
        let f: Vec<CRat> = gens.iter().map(|g| eval_exact(g, &x)).collect();
        if f.iter().all(CRat::is_zero) {
            break;
        }
        let mut jac: Vec<Vec<CRat>> = derivs
            .iter()
            .map(|row| row.iter().map(|p| eval_exact(p, &x)).collect())
            .collect();
        let mut rhs = f;
        // Gaussian elimination with first-nonzero pivoting (exact arithmetic).
        let mut singular = false;
        for col in 0..n {
            let Some(piv) = (col..n).find(|&r| !jac[r][col].is_zero()) else {
                singular = true;
                break;
            };
            jac.swap(col, piv);
            rhs.swap(col, piv);
            for r in col + 1..n {
                if jac[r][col].is_zero() {
                    continue;
                }
                let factor = jac[r][col].div(&jac[col][col]);
                for c in col..n {
                    let v = factor.mul(&jac[col][c]);
                    jac[r][c] = jac[r][c].sub(&v);
                }
                let v = factor.mul(&rhs[col]);
                rhs[r] = rhs[r].sub(&v);
            }
        }
        if singular {
            break;
        }
        let mut dx = vec![CRat::zero(); n];
        for r in (0..n).rev() {
            let mut acc = rhs[r].clone();
            for c in r + 1..n {
                acc = acc.sub(&jac[r][c].mul(&dx[c]));
            }
            dx[r] = acc.div(&jac[r][r]);
        }
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi = xi.sub(di).round(BITS);
        }
    }
    *d = ComplexVector(
        x.iter()
            .map(|z| Complex64::new(to_f64(&z.re), to_f64(&z.im)))
            .collect(),
    );
    let r = residual(&x);
    if r == 0.0 {
        // Below f64 range: estimate from the exact value.
        let worst = gens
            .iter()
            .map(|g| {
                let v = eval_exact(g, &x);
                let mag = &v.re * &v.re + &v.im * &v.im;
                if mag.is_zero() {
                    f64::NEG_INFINITY
                } else {
                    0.5 * (log10_big(mag.numer()) - log10_big(mag.denom()))
                }
            })
            .fold(f64::NEG_INFINITY, f64::max);
        return worst;
    }
    r.log10()
}

fn log10_big(x: &num_bigint::BigInt) -> f64 {
    let bits = x.bits();
    if bits < 1000 {
        return to_f64(&Rational::from_integer(x.clone())).abs().log10();
    }
    let shift = bits - 60;
    let top: num_bigint::BigInt = x >> shift;
    to_f64(&Rational::from_integer(top)).abs().log10() + shift as f64 * std::f64::consts::LOG10_2
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RigidityStatus {
    Rigid,
    NotRigid,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RigidityCertificate {
    pub status: RigidityStatus,
    pub symmetrized: SymmetrizedVerdict,
    pub groebner_pairs: Option<usize>,
    pub note: Option<String>,
}

impl RigidityCertificate {
    /// The exact certificate and the minor test must agree unless the
    /// Gröbner run was cut short.
    pub fn consistent(&self) -> bool {
        match self.status {
            RigidityStatus::Rigid => self.symmetrized.holds(),
            RigidityStatus::NotRigid => !self.symmetrized.holds(),
            RigidityStatus::Inconclusive => true,
        }
    }
}

/// Decides whether the spectral invariants of `a` vanish only at the origin.
pub fn certify_rigid(a: &RationalMatrix, cfg: &GroebnerConfig) -> Result<RigidityCertificate> {
    let symmetrized = has_symmetrized_principal_minors(a);
    let e = spectral_invariants(a)?;
    certify_ideal(&e, cfg).map(|(status, pairs, note)| RigidityCertificate {
        status,
        symmetrized,
        groebner_pairs: pairs,
        note,
    })
}

/// Rigidity status of an arbitrary spectral ideal.
pub fn certify_ideal(
    e: &SpectralIdeal,
    cfg: &GroebnerConfig,
) -> Result<(RigidityStatus, Option<usize>, Option<String>)> {
    match e.groebner(MonomialOrder::GradedReverseLex, cfg) {
        Ok(gb) => {
            let rigid = gb.vanishes_only_at_origin()?;
            let status = if rigid {
                RigidityStatus::Rigid
            } else {
                RigidityStatus::NotRigid
            };
            Ok((status, Some(gb.pairs_reduced()), None))
        }
        Err(Error::ResourceLimit(msg)) => Ok((RigidityStatus::Inconclusive, None, Some(msg))),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn m(rows: &[&[i64]]) -> RationalMatrix {
        RationalMatrix::from_integers(rows).unwrap()
    }

    #[test]
    fn system_examples() {
        let a = m(&[&[1, 2], &[3, 4]]);
        let e = spectral_invariants(&a).unwrap();
        let zero = evaluate_system(&e, &ComplexVector::zeros(2)).unwrap();
        assert!(zero.iter().all(|z| z.norm() == 0.0));
        let v = evaluate_system(
            &e,
            &ComplexVector::new(vec![c(1.0, 0.0), c(-1.0, 0.0)]).unwrap(),
        )
        .unwrap();
        assert_eq!(v, vec![c(0.0, 0.0), c(2.0, 0.0)]);
    }

    #[test]
    fn system_matches_charpoly_difference() {
        let a = m(&[&[1, 2, 0], &[-1, 3, 1], &[2, 0, -2]]);
        let e = spectral_invariants(&a).unwrap();
        let d = ComplexVector::new(vec![c(0.3, -0.2), c(-1.1, 0.5), c(0.7, 0.9)]).unwrap();
        let s = evaluate_system(&e, &d).unwrap();
        let base = complex_matrix(&a);
        let mut shifted = base.clone();
        for i in 0..3 {
            shifted[(i, i)] += d.as_slice()[i];
        }
        let (c0, c1) = (principal_minor_sums(&base), principal_minor_sums(&shifted));
        for k in 1..=3 {
            assert!((s[k - 1] - (c1[k] - c0[k])).norm() < 1e-12);
        }
    }

    #[test]
    fn jacobian_examples() {
        let a = m(&[&[1, 2, 0, 1], &[-1, 3, 1, 0], &[2, 0, -2, 1], &[0, 1, 1, 1]]);
        let e = spectral_invariants(&a).unwrap();
        let j0 = jacobian(&e, &ComplexVector::zeros(4)).unwrap();
        for j in 0..4 {
            assert_eq!(j0[(0, j)], c(1.0, 0.0));
        }
        // at the origin: sum of (i-1)-minors avoiding j
        let minors = crate::minors::all_principal_minors(&a).unwrap();
        for i in 1..=4 {
            for j in 0..4 {
                let want: Rational = minors
                    .iter()
                    .filter(|(s, _)| s.count_ones() as usize == i - 1 && s >> j & 1 == 0)
                    .map(|(_, v)| v.clone())
                    .sum();
                assert!((j0[(i - 1, j)] - to_complex(&want)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = stream_rng(7, 0);
        for n in 2..=5 {
            let a = RationalMatrix::from_rows(
                (0..n)
                    .map(|_| (0..n).map(|_| rat(rng.random_range(-5..=5))).collect())
                    .collect(),
            )
            .unwrap();
            let sys = PolySystem::from_ideal(&spectral_invariants(&a).unwrap());
            for _ in 0..100 {
                let x: Vec<Complex64> = (0..n).map(|_| random_in_disc(&mut rng, 2.0)).collect();
                let jac = sys.jacobian(&x);
                let h = 1e-6;
                for j in 0..n {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[j] += h;
                    xm[j] -= h;
                    let (fp, fm) = (sys.evaluate(&xp), sys.evaluate(&xm));
                    for i in 0..n {
                        let fd = (fp[i] - fm[i]) / (2.0 * h);
                        let scale = jac[(i, j)].norm().max(1.0);
                        assert!((fd - jac[(i, j)]).norm() / scale < 1e-6, "n={n} ({i},{j})");
                    }
                }
            }
        }
    }

    #[test]
    fn verify_examples() {
        let a = RationalMatrix::path_graph(3);
        assert_eq!(verify_witness(&a, &ComplexVector::zeros(3)).unwrap(), 0.0);
        let junk = ComplexVector::new(vec![c(0.5, 0.1), c(-0.2, 0.0), c(1.0, 1.0)]).unwrap();
        assert!(verify_witness(&a, &junk).unwrap() > 1e-3);
    }

    #[test]
    fn path_graph_has_a_witness() {
        let a = RationalMatrix::path_graph(3);
        let w = find_nonzero_witness(&a, &SolveConfig::default().with_seed(1)).unwrap();
        let w = w.witness().expect("P3 is not rigid").clone();
        assert!(w.certified_nonzero && w.d.norm_inf() > 1e-6);
        assert!(w.residual <= 1e-10);
        assert!(verify_witness(&a, &w.d).unwrap() <= 1e-10);
        // Real matrix: the conjugate shift works too.
        assert!(verify_witness(&a, &w.d.conj()).unwrap() <= 1e-10);
    }

    #[test]
    fn homotopy_finds_witness() {
        let a = RationalMatrix::path_graph(3);
        let cfg = SolveConfig::default()
            .with_seed(3)
            .with_mode(SolveMode::TotalDegreeHomotopy);
        let w = find_nonzero_witness(&a, &cfg).unwrap();
        assert!(w.witness().is_some());
    }

    #[test]
    fn homotopy_path_count() {
        let a = m(&[&[1, 2, 0], &[-1, 3, 1], &[2, 0, -2]]);
        let sys = PolySystem::from_ideal(&spectral_invariants(&a).unwrap());
        let hom = Homotopy::new(&sys, 11);
        assert_eq!(hom.path_count(), 6);
        let ends = hom.track_all();
        assert_eq!(ends.len(), 6);
        let finite = ends
            .iter()
            .filter(|e| e.point.as_ref().is_some_and(|p| inf_norm(p).is_finite()))
            .count();
        assert!(finite >= 5, "only {finite} paths finished");
    }

    #[test]
    fn rigid_matrix_has_no_witness() {
        let a = RationalMatrix::complete_graph(4);
        let cfg = SolveConfig {
            max_restarts: Some(200),
            ..SolveConfig::default()
        };
        assert!(find_nonzero_witness(&a, &cfg).unwrap().witness().is_none());
        let cert = certify_rigid(&a, &GroebnerConfig::default()).unwrap();
        assert_eq!(cert.status, RigidityStatus::Rigid);
        assert!(cert.consistent());
    }

    #[test]
    fn certificates() {
        let tri = m(&[&[2, 5, -1], &[0, 2, 3], &[0, 0, 2]]);
        assert_eq!(
            certify_rigid(&tri, &GroebnerConfig::default())
                .unwrap()
                .status,
            RigidityStatus::Rigid
        );
        let p3 = certify_rigid(&RationalMatrix::path_graph(3), &GroebnerConfig::default()).unwrap();
        assert_eq!(p3.status, RigidityStatus::NotRigid);
        assert!(p3.consistent());
        for n in 2..=5 {
            let cert = certify_rigid(
                &RationalMatrix::complete_graph(n),
                &GroebnerConfig::default(),
            )
            .unwrap();
            assert_eq!(cert.status, RigidityStatus::Rigid, "n={n}");
        }
        let tiny = GroebnerConfig {
            max_basis: 2,
            ..GroebnerConfig::default()
        };
        let a = m(&[&[1, 2, 0, 1], &[-1, 3, 1, 0], &[2, 0, -2, 1], &[0, 1, 1, 1]]);
        assert_eq!(
            certify_rigid(&a, &tiny).unwrap().status,
            RigidityStatus::Inconclusive
        );
    }

    #[test]
    fn high_precision_refinement() {
        let a = RationalMatrix::path_graph(3);
        let cfg = SolveConfig {
            high_precision: true,
            ..SolveConfig::default().with_seed(5)
        };
        let w = find_nonzero_witness(&a, &cfg)
            .unwrap()
            .witness()
            .cloned()
            .unwrap();
        assert!(
            w.refined_log10_residual.unwrap() < -30.0,
            "{:?}",
            w.refined_log10_residual
        );
    }

    #[test]
    fn witness_json_round_trip() {
        let a = RationalMatrix::path_graph(3);
        let w = find_nonzero_witness(&a, &SolveConfig::default())
            .unwrap()
            .witness()
            .cloned()
            .unwrap();
        let v = w.to_json();
        assert!(v["D"][0]["re"].is_number());
        assert_eq!(v["mode"], "newton-multistart");
        assert_eq!(Witness::from_json_str(&v.to_string()).unwrap(), w);
    }

    #[test]
    fn config_validation() {
        assert!(SolveConfig::default().validate().is_ok());
        let bad = SolveConfig {
            zero_threshold: 1e-12,
            ..SolveConfig::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!(SolveConfig::default().restarts_for(3), 1200);
        assert!(ComplexVector::new(vec![c(f64::NAN, 0.0)]).is_err());
    }
}
