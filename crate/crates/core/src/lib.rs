//! Spectral rigidity of matrices under diagonal perturbation, and Floquet
//! isospectrality of discrete periodic Schroedinger operators.

pub mod coinvariant;
pub mod error;
pub mod floquet;
pub mod invariants;
pub mod io;
pub mod minors;
pub mod poly;
pub mod rational;
pub mod selftest;
pub mod solver;

pub use error::{Error, Result};
pub use poly::{
    ExactPoly, GroebnerBasis, GroebnerConfig, Monomial, MonomialOrder, QuotientDimension,
};
pub use rational::Rational;
