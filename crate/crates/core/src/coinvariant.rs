//! The coinvariant algebra `P/(e_1, ..., e_n)`, normal forms modulo ideals of
//! generalized spectral invariants, multiplication matrices and their traces.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::error::{arg_err, Result};
use crate::invariants::SpectralIdeal;
use crate::minors::{all_principal_minors, principal_minor, RationalMatrix, Subset};
use crate::poly::{complete_homogeneous, ExactPoly, Key, Lex, Monomial};
use crate::rational::{factorial, format_rational, Rational};

/// `l_i <= n - i` for every (1-based) `i`.
pub fn is_artin_monomial(m: &Monomial) -> bool {
    let n = m.nvars();
    m.exponents()
        .iter()
        .enumerate()
        .all(|(i, &l)| (l as usize) < n - i)
}

/// The `n!` Artin monomials sorted by total degree, then lex with `v1 < ... < vn`.
pub fn artin_basis(n: usize) -> Vec<Monomial> {
    let mut out = Vec::new();
    let mut exps = vec![0u16; n];
    fn walk(i: usize, n: usize, exps: &mut Vec<u16>, out: &mut Vec<Monomial>) {
        if i == n {
            out.push(Monomial::from_exponents(exps));
            return;
        }
        for l in 0..(n - i) as u16 {
            exps[i] = l;
            walk(i + 1, n, exps, out);
        }
        exps[i] = 0;
    }
    walk(0, n, &mut exps, &mut out);
    out.sort_by(|a, b| {
        a.degree()
            .cmp(&b.degree())
            .then_with(|| Key::<Lex>::new(a.clone()).cmp(&Key::new(b.clone())))
    });
    out
}

#[derive(Clone, Debug)]
pub struct ArtinBasis {
    n: usize,
    monomials: Vec<Monomial>,
    index: HashMap<Monomial, usize>,
}

impl ArtinBasis {
    pub fn new(n: usize) -> Self {
        let monomials = artin_basis(n);
        let index = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        ArtinBasis {
            n,
            monomials,
            index,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn index_of(&self, m: &Monomial) -> Option<usize> {
        self.index.get(m).copied()
    }
}

/// A residue class written in the Artin basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArtinVector {
    n: usize,
    coeffs: BTreeMap<Monomial, Rational>,
}

impl ArtinVector {
    pub fn zero(n: usize) -> Self {
        ArtinVector {
            n,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> Rational {
        self.coeffs.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.coeffs.iter()
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        debug_assert!(is_artin_monomial(&m));
        if c.is_zero() {
            return;
        }
        let e = self.coeffs.entry(m).or_insert_with(Rational::zero);
        *e += c;
        if e.is_zero() {
            let m = self
                .coeffs
                .iter()
                .find(|(_, v)| v.is_zero())
                .map(|(k, _)| k.clone())
                .unwrap();
            self.coeffs.remove(&m);
        }
    }

    fn absorb(&mut self, other: ArtinVector) {
        for (m, c) in other.coeffs {
            self.add_term(m, c);
        }
    }

    pub fn to_poly(&self) -> ExactPoly {
        ExactPoly::from_terms(
            self.n,
            self.coeffs.iter().map(|(m, c)| (m.clone(), c.clone())),
        )
    }

    pub fn to_dense(&self, basis: &ArtinBasis) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); basis.len()];
        for (m, c) in &self.coeffs {
            out[basis.index_of(m).expect("Artin monomial")] = c.clone();
        }
        out
    }
}

/// The closed-form Gröbner basis `h_j = H_{n-j+1}(v_1, ..., v_j)` of
/// `(e_1, ..., e_n)` for lex with `v1 < ... < vn`, with leading monomial
/// `v_j^{n-j+1}`.
#[derive(Clone, Debug)]
struct HBasis {
    n: usize,
    /// Non-leading monomials of `h_j` (all coefficients are 1).
    tails: Vec<Vec<Monomial>>,
    /// `conv[j][t-1] = (-1)^{t+1} H_{s_j - t}(v_1..v_j)`, so that
    /// `h_j = sum_t conv[j][t-1] e_t`.
    conv: Vec<Vec<ExactPoly>>,
}

impl HBasis {
    fn new(n: usize) -> Self {
        let mut tails = Vec::with_capacity(n);
        let mut conv = Vec::with_capacity(n);
        for j in 0..n {
            let s = n - j;
            let lead = Monomial::var_pow(n, j, s as u16);
            let h = complete_homogeneous(s, j + 1, n).expect("j < n");
            tails.push(
                h.terms()
                    .map(|(m, _)| m.clone())
                    .filter(|m| *m != lead)
                    .collect(),
            );
            conv.push(
                (1..=s)
                    .map(|t| {
                        let hp = complete_homogeneous(s - t, j + 1, n).expect("j < n");
                        if t % 2 == 1 {
                            hp
                        } else {
                            -hp
                        }
                    })
                    .collect(),
            );
        }
        HBasis { n, tails, conv }
    }

    fn leading_exponent(&self, j: usize) -> u16 {
        (self.n - j) as u16
    }

    /// Divides `p` by the `h_j`; returns the Artin remainder and quotients `Q_j`.
    fn divide(&self, p: &ExactPoly, track: bool) -> (ArtinVector, Vec<ExactPoly>) {
        let n = self.n;
        let mut work: BTreeMap<Key<Lex>, Rational> = p
            .terms()
            .map(|(m, c)| (Key::new(m.clone()), c.clone()))
            .collect();
        let mut rem = ArtinVector::zero(n);
        let mut quot = vec![ExactPoly::zero(n); if track { n } else { 0 }];
        while let Some((key, c)) = work.pop_last() {
            let m = key.0;
            if c.is_zero() {
                continue;
            }
            let Some(j) = (0..n).rev().find(|&j| m.exp(j) >= self.leading_exponent(j)) else {
                rem.add_term(m, c);
                continue;
            };
            let mut q = m.clone();
            q.set_exp(j, m.exp(j) - self.leading_exponent(j));
            for t in &self.tails[j] {
                let e = work
                    .entry(Key::new(q.mul(t)))
                    .or_insert_with(Rational::zero);
                *e -= &c;
            }
            if track {
                quot[j].add_term(q, c);
            }
        }
        (rem, quot)
    }
}

pub fn artin_reduction(p: &ExactPoly) -> ArtinVector {
    HBasis::new(p.nvars()).divide(p, false).0
}

/// Returns the Artin remainder `r` and cofactors `q_1..q_n` with
/// `p = r + sum q_i e_i`.
pub fn artin_reduction_with_cofactors(p: &ExactPoly) -> (ArtinVector, Vec<ExactPoly>) {
    let n = p.nvars();
    let h = HBasis::new(n);
    let (rem, quot) = h.divide(p, true);
    let mut cof = vec![ExactPoly::zero(n); n];
    for (j, qj) in quot.iter().enumerate() {
        if qj.is_zero() {
            continue;
        }
        for (t, c) in h.conv[j].iter().enumerate() {
            cof[t] = &cof[t] + &(qj * c);
        }
    }
    (rem, cof)
}

/// Normal forms in `P/E` through the Artin-basis section.
///
/// Each round Artin-reduces the current polynomial, keeps the remainder and
/// replaces `sum q_i e_i` by `-sum q_i g_i`, which has strictly lower degree.
#[derive(Clone, Debug)]
pub struct Reducer {
    h: HBasis,
    /// `w[j] = sum_t conv[j][t-1] g_t`, so `q_j h_j = -q_j w[j]` modulo `E`.
    w: Vec<ExactPoly>,
}

impl Reducer {
    pub fn new(e: &SpectralIdeal) -> Self {
        let n = e.n();
        let h = HBasis::new(n);
        let w = (0..n)
            .map(|j| {
                let mut acc = ExactPoly::zero(n);
                for (t, c) in h.conv[j].iter().enumerate() {
                    let g = e.perturbation(t + 1);
                    if !g.is_zero() {
                        acc = &acc + &(c * g);
                    }
                }
                acc
            })
            .collect();
        Reducer { h, w }
    }

    pub fn normal_form(&self, p: &ExactPoly) -> ArtinVector {
        assert_eq!(p.nvars(), self.h.n, "polynomial lives in the wrong ring");
        let mut acc = ArtinVector::zero(self.h.n);
        let mut cur = p.clone();
        while !cur.is_zero() {
            let (rem, quot) = self.h.divide(&cur, true);
            acc.absorb(rem);
            let mut next = ExactPoly::zero(self.h.n);
            for (qj, wj) in quot.iter().zip(&self.w) {
                if !qj.is_zero() && !wj.is_zero() {
                    next = &next - &(qj * wj);
                }
            }
            cur = next;
        }
        acc
    }
}

pub fn normal_form_mod_e(p: &ExactPoly, e: &SpectralIdeal) -> ArtinVector {
    Reducer::new(e).normal_form(p)
}

/// Multiplication by `u` on `P/E` in the Artin basis.
#[derive(Clone, Debug)]
pub struct MultMatrix {
    u: ExactPoly,
    basis: ArtinBasis,
    /// Row-major; column `c` is the normal form of `u * basis[c]`.
    entries: Vec<Vec<Rational>>,
}

impl MultMatrix {
    pub fn new(u: &ExactPoly, e: &SpectralIdeal) -> Result<Self> {
        if u.nvars() != e.n() {
            return arg_err(format!(
                "multiplier has {} variables, ideal has {}",
                u.nvars(),
                e.n()
            ));
        }
        let basis = ArtinBasis::new(e.n());
        let reducer = Reducer::new(e);
        let columns: Vec<Vec<Rational>> = basis
            .monomials()
            .par_iter()
            .map(|b| reducer.normal_form(&u.mul_monomial(b)).to_dense(&basis))
            .collect();
        let dim = basis.len();
        let entries = (0..dim)
            .map(|r| (0..dim).map(|c| columns[c][r].clone()).collect())
            .collect();
        Ok(MultMatrix {
            u: u.clone(),
            basis,
            entries,
        })
    }

    pub fn multiplier(&self) -> &ExactPoly {
        &self.u
    }

    pub fn basis(&self) -> &ArtinBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, r: usize, c: usize) -> &Rational {
        &self.entries[r][c]
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.entries
    }

    pub fn trace(&self) -> Rational {
        (0..self.dim()).map(|i| self.entries[i][i].clone()).sum()
    }

    /// Coefficients `c_0, ..., c_N` of `det(x I - M) = sum c_k x^k`, by
    /// Faddeev-LeVerrier.
    pub fn charpoly(&self) -> Vec<Rational> {
        let dim = self.dim();
        let a = &self.entries;
        let mut coeffs = vec![Rational::zero(); dim + 1];
        coeffs[dim] = Rational::one();
        let mut m = vec![vec![Rational::zero(); dim]; dim];
        for k in 1..=dim {
            // M_k = A M_{k-1} + c_{N-k+1} I
            let mut next = mat_mul(a, &m);
            for (i, row) in next.iter_mut().enumerate() {
                row[i] += &coeffs[dim - k + 1];
            }
            m = next;
            let am = mat_mul(a, &m);
            let tr: Rational = (0..dim).map(|i| am[i][i].clone()).sum();
            coeffs[dim - k] = -tr / Rational::from_integer(BigInt::from(k));
        }
        coeffs
    }
}

fn mat_mul(a: &[Vec<Rational>], b: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let dim = a.len();
    (0..dim)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![Rational::zero(); dim];
            for (k, aik) in a[i].iter().enumerate() {
                if aik.is_zero() {
                    continue;
                }
                for (j, bkj) in b[k].iter().enumerate() {
                    if !bkj.is_zero() {
                        row[j] += aik * bkj;
                    }
                }
            }
            row
        })
        .collect()
}

pub fn mult_matrix(u: &ExactPoly, e: &SpectralIdeal) -> Result<MultMatrix> {
    MultMatrix::new(u, e)
}

/// Trace of multiplication by `v^J` on `P/E`.
pub fn hc_obstruction(e: &SpectralIdeal, j: Subset) -> Result<Rational> {
    if j == 0 {
        return arg_err("obstructions are indexed by nonempty subsets");
    }
    let n = e.n();
    if n < 32 && j >> n != 0 {
        return arg_err(format!("subset {j:#b} is not contained in [{n}]"));
    }
    Ok(MultMatrix::new(
        &ExactPoly::term(Monomial::from_mask(n, j), Rational::one()),
        e,
    )?
    .trace())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LambdaKey {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub j: usize,
}

impl LambdaKey {
    pub fn new(n: usize, m: usize, k: usize, j: usize) -> Result<Self> {
        if m < 1 || m > n || k > n - m || j > k.min(m) {
            return arg_err(format!("invalid lambda indices n={n} m={m} k={k} j={j}"));
        }
        Ok(LambdaKey { n, m, k, j })
    }

    /// All valid keys for a given `n`.
    pub fn all(n: usize) -> Vec<LambdaKey> {
        let mut out = Vec::new();
        for m in 1..=n {
            for k in 0..=n - m {
                for j in 0..=k.min(m) {
                    out.push(LambdaKey { n, m, k, j });
                }
            }
        }
        out
    }

    /// A subset `J` with `|J| = k` and `|J ∩ [m]| = j`.
    pub fn representative_subset(&self) -> Subset {
        let inside: Subset = (1 << self.j) - 1;
        let outside: Subset = ((1 << (self.k - self.j)) - 1) << self.m;
        inside | outside
    }
}

/// `m (-1)^{j+1} (m+k-j-1)! (n-m-k+j)!`
pub fn lambda_closed_form(key: LambdaKey) -> Result<Rational> {
    let LambdaKey { n, m, k, j } = LambdaKey::new(key.n, key.m, key.k, key.j)?;
    let mag =
        BigInt::from(m) * factorial((m + k - j - 1) as u64) * factorial((n - m - k + j) as u64);
    let v = if j % 2 == 0 { -mag } else { mag };
    Ok(Rational::from_integer(v))
}

/// Trace of multiplication by `v_1 ... v_m` on
/// `P/(e_1, ..., e_{m+k} + v^J, ..., e_n)`.
pub fn lambda_via_trace(n: usize, m: usize, k: usize, j: Subset) -> Result<Rational> {
    if m < 1 || m + k > n {
        return arg_err(format!("invalid indices n={n} m={m} k={k}"));
    }
    if j.count_ones() as usize != k || (n < 32 && j >> n != 0) {
        return arg_err(format!("subset {j:#b} must have {k} elements inside [{n}]"));
    }
    let mut perts = vec![ExactPoly::zero(n); n];
    perts[m + k - 1] = ExactPoly::term(Monomial::from_mask(n, j), Rational::one());
    let e = SpectralIdeal::from_perturbations(n, perts)?;
    let u = ExactPoly::term(Monomial::from_mask(n, (1 << m) - 1), Rational::one());
    Ok(MultMatrix::new(&u, &e)?.trace())
}

/// `m!(n-m)! sum_{|N|=m} det(A_N) - n! det(A_[m])`
pub fn top_obstruction_value(a: &RationalMatrix, m: usize) -> Result<Rational> {
    let n = a.n();
    if m < 1 || m > n {
        return arg_err(format!("m={m} outside 1..={n}"));
    }
    let minors = all_principal_minors(a)?;
    let w = Rational::from_integer(factorial(m as u64) * factorial((n - m) as u64));
    Ok(w * minors.sum_of_size(m)
        - Rational::from_integer(factorial(n as u64)) * principal_minor(a, (1 << m) - 1))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LambdaRow {
    pub key: LambdaKey,
    pub closed_form: Rational,
    pub via_trace: Option<Rational>,
    /// `λ_{k,j} + λ_{k-1,j-1}`, for `j >= 1`.
    pub recursion_defect: Option<Rational>,
}

impl LambdaRow {
    pub fn agrees(&self) -> bool {
        self.via_trace
            .as_ref()
            .is_none_or(|t| *t == self.closed_form)
    }
}

/// Every valid `(m, k, j)` for `n`; the trace column is filled when
/// `with_trace` is set.
pub fn lambda_table(n: usize, with_trace: bool) -> Result<Vec<LambdaRow>> {
    LambdaKey::all(n)
        .into_iter()
        .map(|key| {
            let closed_form = lambda_closed_form(key)?;
            let via_trace = if with_trace {
                Some(lambda_via_trace(
                    n,
                    key.m,
                    key.k,
                    key.representative_subset(),
                )?)
            } else {
                None
            };
            let recursion_defect = if key.j >= 1 {
                Some(
                    &closed_form
                        + lambda_closed_form(LambdaKey {
                            k: key.k - 1,
                            j: key.j - 1,
                            ..key
                        })?,
                )
            } else {
                None
            };
            Ok(LambdaRow {
                key,
                closed_form,
                via_trace,
                recursion_defect,
            })
        })
        .collect()
}

/// `sum_j λ_{k,j} C(m,j) C(n-m,k-j)`, which vanishes for `k >= 1`.
pub fn lambda_binomial_identity(n: usize, m: usize, k: usize) -> Result<Rational> {
    let mut acc = Rational::zero();
    for j in 0..=k.min(m) {
        if k - j > n - m {
            continue;
        }
        let w = crate::rational::binomial(m as u64, j as u64)
            * crate::rational::binomial((n - m) as u64, (k - j) as u64);
        acc += lambda_closed_form(LambdaKey::new(n, m, k, j)?)? * Rational::from_integer(w);
    }
    Ok(acc)
}

pub fn lambda_table_csv(rows: &[LambdaRow]) -> String {
    let mut out = String::from("n,m,k,j,value,trace,equal,recursion\n");
    for r in rows {
        let LambdaKey { n, m, k, j } = r.key;
        let trace = r
            .via_trace
            .as_ref()
            .map(format_rational)
            .unwrap_or_default();
        let rec = r
            .recursion_defect
            .as_ref()
            .map(|d| d.is_zero().to_string())
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{n},{m},{k},{j},{},{trace},{},{rec}",
            format_rational(&r.closed_form),
            r.agrees()
        );
    }
    out
}

/// Largest absolute entry of a multiplication matrix, for diagnostics.
pub fn max_abs_entry(m: &MultMatrix) -> Rational {
    m.rows()
        .iter()
        .flatten()
        .map(|x| x.abs())
        .max()
        .unwrap_or_else(Rational::zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::{
        exotic_ideals_n3, ideal_from_table, spectral_invariants, PerturbationTable,
    };
    use crate::minors::has_symmetrized_principal_minors;
    use crate::poly::{buchberger, elementary_symmetric, GroebnerConfig, MonomialOrder};
    use crate::rational::rat;
    use proptest::prelude::*;

    fn p(n: usize, s: &str) -> ExactPoly {
        ExactPoly::parse(n, s).unwrap()
    }

    #[test]
    fn basis_sizes() {
        let mut f = 1;
        for n in 1..=6 {
            f *= n;
            let b = artin_basis(n);
            assert_eq!(b.len(), f);
            assert!(b.iter().all(is_artin_monomial));
        }
        let b3 = artin_basis(3);
        assert_eq!(b3[0], Monomial::one(3));
        assert_eq!(b3.last().unwrap(), &Monomial::from_exponents(&[2, 1, 0]));
    }

    #[test]
    fn reduction_examples() {
        assert_eq!(artin_reduction(&p(2, "v2")).to_poly(), p(2, "-v1"));
        assert!(artin_reduction(&p(2, "v1^2")).is_zero());
        for m in artin_basis(4) {
            let x = ExactPoly::term(m.clone(), rat(1));
            assert_eq!(artin_reduction(&x).to_poly(), x);
        }
    }

    #[test]
    fn cofactor_examples() {
        let (r, q) = artin_reduction_with_cofactors(&elementary_symmetric(3, 3).unwrap());
        assert!(r.is_zero());
        assert_eq!(
            q,
            vec![ExactPoly::zero(3), ExactPoly::zero(3), ExactPoly::one(3)]
        );
        let (r, q) = artin_reduction_with_cofactors(&p(2, "v1^2"));
        assert!(r.is_zero());
        assert_eq!(q, vec![p(2, "v1"), p(2, "-1")]);
    }

    fn reassemble(r: &ArtinVector, q: &[ExactPoly]) -> ExactPoly {
        let n = r.n();
        let mut acc = r.to_poly();
        for (i, qi) in q.iter().enumerate() {
            acc = &acc + &(qi * &elementary_symmetric(n, i + 1).unwrap());
        }
        acc
    }

    #[test]
    fn normal_form_with_constant_perturbation() {
        // E = (e1, e2 - 1): v1^2 = v1 e1 - e2 is congruent to -1.
        let e = SpectralIdeal::from_perturbations(2, vec![ExactPoly::zero(2), p(2, "-1")]).unwrap();
        assert_eq!(normal_form_mod_e(&p(2, "v1^2"), &e).to_poly(), p(2, "-1"));
        // Spectral invariants never have constant terms: a single edge gives (e1, e2).
        let a = RationalMatrix::from_integers(&[&[0, 1], &[1, 0]]).unwrap();
        assert_eq!(
            spectral_invariants(&a).unwrap(),
            SpectralIdeal::elementary(2)
        );
    }

    #[test]
    fn normal_form_elementary_is_artin_reduction() {
        let e = SpectralIdeal::elementary(3);
        let x = p(3, "v3^4 - 2*v1*v2^3 + v2 + 7");
        assert_eq!(normal_form_mod_e(&x, &e), artin_reduction(&x));
    }

    #[test]
    fn mult_matrix_examples() {
        let e = SpectralIdeal::elementary(2);
        let id = MultMatrix::new(&ExactPoly::one(2), &e).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(id.get(i, j), &rat(if i == j { 1 } else { 0 }));
            }
        }
        let m = MultMatrix::new(&p(2, "v1"), &e).unwrap();
        assert_eq!(m.rows(), &[vec![rat(0), rat(0)], vec![rat(1), rat(0)]]);
        assert_eq!(m.trace(), rat(0));
    }

    #[test]
    fn trace_of_minus_one_is_minus_n_factorial() {
        // In P/(e_1, ..., e_m + 1, ..., e_n), e_m acts as -1.
        for (n, m) in [(3, 1), (3, 2), (4, 2)] {
            let mut perts = vec![ExactPoly::zero(n); n];
            perts[m - 1] = ExactPoly::one(n);
            let e = SpectralIdeal::from_perturbations(n, perts).unwrap();
            let tr = MultMatrix::new(&elementary_symmetric(n, m).unwrap(), &e)
                .unwrap()
                .trace();
            assert_eq!(tr, Rational::from_integer(-factorial(n as u64)));
        }
    }

    #[test]
    fn obstruction_examples() {
        for j in 1u32..8 {
            assert_eq!(
                hc_obstruction(&SpectralIdeal::elementary(3), j).unwrap(),
                rat(0)
            );
        }
        let k3 = spectral_invariants(&RationalMatrix::complete_graph(3)).unwrap();
        for j in 1u32..8 {
            assert_eq!(hc_obstruction(&k3, j).unwrap(), rat(0));
        }
        let p3 = spectral_invariants(&RationalMatrix::path_graph(3)).unwrap();
        assert!((1u32..8)
            .filter(|j| j.count_ones() == 2)
            .any(|j| !hc_obstruction(&p3, j).unwrap().is_zero()));
        assert!(hc_obstruction(&k3, 0).is_err());
    }

    #[test]
    fn lambda_examples() {
        for (n, m) in [(3, 1), (4, 2), (5, 3)] {
            let mf = factorial(m as u64) * factorial((n - m) as u64);
            assert_eq!(
                lambda_closed_form(LambdaKey::new(n, m, 0, 0).unwrap()).unwrap(),
                -Rational::from_integer(mf)
            );
        }
        assert_eq!(
            lambda_closed_form(LambdaKey::new(3, 1, 1, 0).unwrap()).unwrap(),
            rat(-1)
        );
        assert_eq!(
            lambda_closed_form(LambdaKey::new(3, 1, 1, 1).unwrap()).unwrap(),
            rat(2)
        );
        assert_eq!(lambda_binomial_identity(3, 1, 1).unwrap(), rat(0));
        assert!(LambdaKey::new(3, 0, 0, 0).is_err());
        assert!(LambdaKey::new(3, 1, 3, 0).is_err());
        assert!(LambdaKey::new(3, 2, 1, 2).is_err());
    }

    #[test]
    fn lambda_trace_examples() {
        assert_eq!(lambda_via_trace(3, 1, 0, 0).unwrap(), rat(-2));
        assert_eq!(
            lambda_via_trace(3, 2, 1, 0b001).unwrap(),
            lambda_closed_form(LambdaKey::new(3, 2, 1, 1).unwrap()).unwrap()
        );
    }

    #[test]
    fn lambda_trace_matches_closed_form_n4() {
        for n in 1..=4 {
            for key in LambdaKey::all(n) {
                for j in 0u32..1 << n {
                    if j.count_ones() as usize != key.k
                        || (j & ((1 << key.m) - 1)).count_ones() as usize != key.j
                    {
                        continue;
                    }
                    assert_eq!(
                        lambda_via_trace(n, key.m, key.k, j).unwrap(),
                        lambda_closed_form(key).unwrap(),
                        "{key:?} J={j:#b}"
                    );
                }
            }
        }
    }

    #[test]
    fn lambda_recursion_and_identity() {
        for n in 1..=8 {
            for row in lambda_table(n, false).unwrap() {
                if let Some(d) = row.recursion_defect {
                    assert!(d.is_zero());
                }
            }
            for m in 1..=n {
                for k in 1..=n - m {
                    assert_eq!(lambda_binomial_identity(n, m, k).unwrap(), rat(0));
                }
            }
        }
    }

    #[test]
    fn lambda_table_n2() {
        let rows = lambda_table(2, true).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(LambdaRow::agrees));
        let csv = lambda_table_csv(&rows);
        assert!(csv.starts_with("n,m,k,j,value"));
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn top_obstruction_examples() {
        assert_eq!(
            top_obstruction_value(&RationalMatrix::path_graph(3), 2).unwrap(),
            rat(2)
        );
        for m in 1..=4 {
            assert_eq!(
                top_obstruction_value(&RationalMatrix::identity(4), m).unwrap(),
                rat(0)
            );
            assert_eq!(
                top_obstruction_value(&RationalMatrix::complete_graph(4), m).unwrap(),
                rat(0)
            );
        }
    }

    #[test]
    fn charpoly_of_small_matrix() {
        let e = SpectralIdeal::from_perturbations(2, vec![ExactPoly::zero(2), p(2, "-1")]).unwrap();
        let m = MultMatrix::new(&p(2, "v1"), &e).unwrap();
        // v1^2 = -1 on a 2-dimensional algebra: charpoly x^2 + 1.
        assert_eq!(m.charpoly(), vec![rat(1), rat(0), rat(1)]);
    }

    #[test]
    fn conditional_top_part_identity() {
        let mats = [
            RationalMatrix::from_integers(&[&[1, 2, 0], &[3, 1, 1], &[0, -1, 1]]).unwrap(),
            RationalMatrix::from_integers(&[
                &[2, 1, 0, 3],
                &[-1, 2, 1, 1],
                &[0, 5, 2, 2],
                &[1, 1, 1, 2],
            ])
            .unwrap(),
            RationalMatrix::path_graph(3),
            RationalMatrix::path_graph(4),
            RationalMatrix::cycle_graph(4),
        ];
        for a in &mats {
            let first_bad = match has_symmetrized_principal_minors(a) {
                crate::minors::SymmetrizedVerdict::Violation { k, .. } => k,
                _ => a.n() + 1,
            };
            let e = spectral_invariants(a).unwrap();
            for m in 1..=first_bad.min(a.n()) {
                assert_eq!(
                    hc_obstruction(&e, (1 << m) - 1).unwrap(),
                    top_obstruction_value(a, m).unwrap(),
                    "m={m} {a:?}"
                );
            }
        }
    }

    fn small_poly(n: usize) -> impl Strategy<Value = ExactPoly> {
        prop::collection::vec((prop::collection::vec(0u16..5, n), -4i64..5), 0..6).prop_map(
            move |ts| {
                ExactPoly::from_terms(
                    n,
                    ts.into_iter()
                        .map(|(e, c)| (Monomial::from_exponents(&e), rat(c))),
                )
            },
        )
    }

    fn small_table(n: usize) -> impl Strategy<Value = PerturbationTable> {
        prop::collection::vec((1..=n, 0u32..1 << n, -3i64..4), 0..6).prop_map(move |cells| {
            let mut t = PerturbationTable::new(n);
            for (i, j, a) in cells {
                let _ = t.set(i, j, rat(a));
            }
            t
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn cofactors_reassemble(x in (1usize..=4).prop_flat_map(small_poly)) {
            let (r, q) = artin_reduction_with_cofactors(&x);
            prop_assert_eq!(reassemble(&r, &q), x);
        }

        #[test]
        fn reduction_is_linear_projection(a in small_poly(3), b in small_poly(3), c in -3i64..4) {
            let ra = artin_reduction(&a);
            prop_assert_eq!(artin_reduction(&ra.to_poly()), ra.clone());
            let lhs = artin_reduction(&(&a + &b.scale(&rat(c)))).to_poly();
            let rhs = &ra.to_poly() + &artin_reduction(&b).to_poly().scale(&rat(c));
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn v1_exponent_is_preserved(n in 2usize..=5, r in 0u16..4, rest in prop::collection::vec(0u16..5, 4)) {
            let mut exps = vec![0u16; n];
            exps[0] = r;
            for i in 1..n { exps[i] = rest[i - 1]; }
            let x = ExactPoly::term(Monomial::from_exponents(&exps), rat(1));
            for (m, _) in artin_reduction(&x).terms() {
                prop_assert!(m.exp(0) >= r);
            }
        }

        #[test]
        fn normal_form_agrees_with_groebner(x in small_poly(3), t in small_table(3)) {
            let e = ideal_from_table(&t).unwrap();
            let gb = buchberger(&e.generators(), MonomialOrder::GradedReverseLex, &GroebnerConfig::default()).unwrap();
            let nf = normal_form_mod_e(&x, &e).to_poly();
            prop_assert!(gb.contains(&(&x - &nf)));
        }

        #[test]
        fn normal_form_agrees_with_groebner_n4(x in small_poly(4), t in small_table(4)) {
            let e = ideal_from_table(&t).unwrap();
            let gb = buchberger(&e.generators(), MonomialOrder::GradedReverseLex, &GroebnerConfig::default()).unwrap();
            let nf = normal_form_mod_e(&x, &e).to_poly();
            prop_assert!(gb.contains(&(&x - &nf)));
        }

        #[test]
        fn traces_are_permutation_equivariant(t in small_table(4), perm in Just((0..4usize).collect::<Vec<_>>()).prop_shuffle(), j in 1u32..16) {
            let e = ideal_from_table(&t).unwrap();
            let ep = e.permute(&perm);
            let jp = (0..4).filter(|&i| j >> i & 1 == 1).fold(0u32, |acc, i| acc | 1 << perm[i]);
            prop_assert_eq!(hc_obstruction(&ep, jp).unwrap(), hc_obstruction(&e, j).unwrap());
        }
    }

    #[test]
    fn exotic_ideals_have_vanishing_traces() {
        for e in exotic_ideals_n3() {
            for j in 1u32..8 {
                assert_eq!(hc_obstruction(&e, j).unwrap(), rat(0));
            }
        }
    }
}
