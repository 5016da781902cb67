use num_traits::One;

use super::{ExactPoly, Monomial};
use crate::error::{arg_err, Result};
use crate::rational::Rational;

/// `e_i(v1, ..., vn)`: the sum of all square-free monomials of degree `i`.
pub fn elementary_symmetric(n: usize, i: usize) -> Result<ExactPoly> {
    if i > n {
        return arg_err(format!(
            "elementary symmetric degree {i} exceeds variable count {n}"
        ));
    }
    if n > 31 {
        return arg_err("at most 31 variables supported");
    }
    let terms = (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == i)
        .map(|m| (Monomial::from_mask(n, m), Rational::one()));
    Ok(ExactPoly::from_terms(n, terms))
}

/// `H_i(v1, ..., vj)` embedded in the ring with `n` variables.
pub fn complete_homogeneous(i: usize, j: usize, n: usize) -> Result<ExactPoly> {
    if j > n {
        return arg_err(format!(
            "H_{i} uses {j} variables but the ring has only {n}"
        ));
    }
    let mut out = ExactPoly::zero(n);
    let mut exps = vec![0u16; n];
    push_compositions(i, 0, j, &mut exps, &mut out);
    Ok(out)
}

fn push_compositions(left: usize, var: usize, j: usize, exps: &mut Vec<u16>, out: &mut ExactPoly) {
    if var + 1 >= j {
        if j == 0 {
            if left == 0 {
                out.add_term(Monomial::from_exponents(exps), Rational::one());
            }
            return;
        }
        exps[var] = left as u16;
        out.add_term(Monomial::from_exponents(exps), Rational::one());
        exps[var] = 0;
        return;
    }
    for e in 0..=left {
        exps[var] = e as u16;
        push_compositions(left - e, var + 1, j, exps, out);
    }
    exps[var] = 0;
}
