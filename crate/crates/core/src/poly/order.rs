use std::cmp::Ordering;
use std::marker::PhantomData;

use serde::{Deserialize, Serialize};

use super::Monomial;

/// Monomial orders used for Groebner computations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MonomialOrder {
    /// Pure lexicographic with `v1 < v2 < ... < vn`.
    LexV1Smallest,
    /// Graded reverse lexicographic with `v1 > v2 > ... > vn`.
    GradedReverseLex,
    /// Graded lexicographic with `v1 > v2 > ... > vn`.
    GradedLex,
}

impl Default for MonomialOrder {
    fn default() -> Self {
        MonomialOrder::GradedReverseLex
    }
}

impl MonomialOrder {
    pub fn cmp(self, a: &Monomial, b: &Monomial) -> Ordering {
        match self {
            MonomialOrder::LexV1Smallest => Lex::cmp(a, b),
            MonomialOrder::GradedReverseLex => GrevLex::cmp(a, b),
            MonomialOrder::GradedLex => GrLex::cmp(a, b),
        }
    }
}

/// Static term order, so ordered containers can key on monomials directly.
pub trait TermOrder: Send + Sync + 'static {
    const KIND: MonomialOrder;
    fn cmp(a: &Monomial, b: &Monomial) -> Ordering;
}

pub struct Lex;
pub struct GrevLex;
pub struct GrLex;

impl TermOrder for Lex {
    const KIND: MonomialOrder = MonomialOrder::LexV1Smallest;
    fn cmp(a: &Monomial, b: &Monomial) -> Ordering {
        a.exponents().iter().rev().cmp(b.exponents().iter().rev())
    }
}

impl TermOrder for GrevLex {
    const KIND: MonomialOrder = MonomialOrder::GradedReverseLex;
    fn cmp(a: &Monomial, b: &Monomial) -> Ordering {
        a.degree().cmp(&b.degree()).then_with(|| {
            for (x, y) in a.exponents().iter().zip(b.exponents()).rev() {
                if x != y {
                    return y.cmp(x);
                }
            }
            Ordering::Equal
        })
    }
}

impl TermOrder for GrLex {
    const KIND: MonomialOrder = MonomialOrder::GradedLex;
    fn cmp(a: &Monomial, b: &Monomial) -> Ordering {
        a.degree()
            .cmp(&b.degree())
            .then_with(|| a.exponents().cmp(b.exponents()))
    }
}

/// A monomial ordered by `O`.
pub struct Key<O>(pub Monomial, PhantomData<O>);

impl<O> Key<O> {
    pub fn new(m: Monomial) -> Self {
        Key(m, PhantomData)
    }
}

impl<O> Clone for Key<O> {
    fn clone(&self) -> Self {
        Key::new(self.0.clone())
    }
}

impl<O: TermOrder> PartialEq for Key<O> {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl<O: TermOrder> Eq for Key<O> {}

impl<O: TermOrder> PartialOrd for Key<O> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<O: TermOrder> Ord for Key<O> {
    fn cmp(&self, other: &Self) -> Ordering {
        O::cmp(&self.0, &other.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(e: &[u16]) -> Monomial {
        Monomial::from_exponents(e)
    }

    #[test]
    fn lex_has_v1_smallest() {
        assert_eq!(Lex::cmp(&m(&[5, 0]), &m(&[0, 1])), Ordering::Less);
        assert_eq!(Lex::cmp(&m(&[2, 1]), &m(&[1, 1])), Ordering::Greater);
    }

    #[test]
    fn grevlex_breaks_ties_on_last_variable() {
        // v1*v3 < v2^2 in grevlex
        assert_eq!(GrevLex::cmp(&m(&[1, 0, 1]), &m(&[0, 2, 0])), Ordering::Less);
        assert_eq!(
            GrevLex::cmp(&m(&[0, 0, 2]), &m(&[1, 0, 0])),
            Ordering::Greater
        );
    }

    #[test]
    fn grlex_breaks_ties_lexicographically() {
        assert_eq!(
            GrLex::cmp(&m(&[1, 0, 1]), &m(&[0, 2, 0])),
            Ordering::Greater
        );
    }
}
