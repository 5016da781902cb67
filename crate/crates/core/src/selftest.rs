//! Desk-scale run of the invariant suite, one row per acceptance criterion.

use std::time::Instant;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::coinvariant::{
    artin_basis, lambda_binomial_identity, lambda_closed_form, lambda_via_trace, LambdaKey,
};
use crate::error::Result;
use crate::floquet::{self, FloquetOutcome, Periods, Potential};
use crate::invariants::{exotic_ideals_n3, SpectralIdeal};
use crate::minors::{has_symmetrized_principal_minors, RationalMatrix};
use crate::poly::{
    buchberger, elementary_symmetric, GroebnerConfig, MonomialOrder, QuotientDimension,
};
use crate::rational::{rat, Rational};
use crate::solver::{
    certify_rigid, find_nonzero_witness, RigidityStatus, SearchOutcome, SolveConfig,
};

#[derive(Clone, Debug, Default)]
pub struct SelftestOptions {
    pub seed: u64,
    /// Negative control: flips the sign of the closed-form λ.
    pub corrupt_lambda: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckRow {
    pub criterion: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub millis: u128,
}

#[derive(Clone, Debug, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub rows: Vec<CheckRow>,
}

impl SelftestReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn matrix(&self) -> String {
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "[{}] {:>2} {:<28} {}\n",
                    if r.passed { "pass" } else { "FAIL" },
                    r.criterion,
                    r.name,
                    r.detail
                )
            })
            .collect()
    }
}

fn row(
    criterion: usize,
    name: &'static str,
    f: impl FnOnce() -> Result<(bool, String)>,
) -> CheckRow {
    let t = Instant::now();
    let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
    CheckRow {
        criterion,
        name,
        passed,
        detail,
        millis: t.elapsed().as_millis(),
    }
}

pub fn random_integer_matrix<R: Rng>(rng: &mut R, n: usize, bound: i64) -> RationalMatrix {
    let rows = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| rat(rng.random_range(-bound..=bound)))
                .collect()
        })
        .collect();
    RationalMatrix::from_rows(rows).expect("square by construction")
}

/// Triangular with equal diagonal, `J_n - I`, or scalar.
pub fn symmetrized_instance<R: Rng>(rng: &mut R, n: usize, kind: usize) -> RationalMatrix {
    match kind % 3 {
        0 => {
            let c = rat(rng.random_range(-5..=5));
            let mut a = RationalMatrix::zeros(n);
            for i in 0..n {
                a.set(i, i, c.clone());
                for j in i + 1..n {
                    a.set(i, j, rat(rng.random_range(-5..=5)));
                }
            }
            a
        }
        1 => RationalMatrix::complete_graph(n),
        _ => {
            let c = rat(rng.random_range(-5..=5));
            RationalMatrix::identity(n)
                .diagonal_shift(&vec![c - Rational::from_integer(1.into()); n])
        }
    }
}

fn lambda_formula(key: LambdaKey, corrupt: bool) -> Result<Rational> {
    let v = lambda_closed_form(key)?;
    Ok(if corrupt { -v } else { v })
}

pub fn run_selftest(opts: &SelftestOptions) -> SelftestReport {
    let gb = GroebnerConfig::default();
    let cfg = SolveConfig::default().with_seed(opts.seed);
    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    let mut instances: Vec<RationalMatrix> = Vec::new();
    for n in 2..=3 {
        for _ in 0..6 {
            instances.push(random_integer_matrix(&mut rng, n, 5));
        }
        for kind in 0..3 {
            instances.push(symmetrized_instance(&mut rng, n, kind));
        }
    }
    let mut rows = Vec::new();

    rows.push(row(1, "exact rigidity round trip", || {
        for a in &instances {
            let cert = certify_rigid(a, &gb)?;
            if cert.status == RigidityStatus::Inconclusive || !cert.consistent() {
                return Ok((false, format!("disagreement on {:?}", a.rows())));
            }
        }
        Ok((true, format!("{} matrices, n <= 3", instances.len())))
    }));

    rows.push(row(2, "numeric witnesses", || {
        let mut count = 0;
        for a in instances
            .iter()
            .filter(|a| !has_symmetrized_principal_minors(a).holds())
        {
            match find_nonzero_witness(a, &cfg)? {
                SearchOutcome::Found(w) if w.d.norm_inf() > 1e-6 && w.residual <= 1e-10 => {
                    count += 1
                }
                _ => return Ok((false, format!("no witness for {:?}", a.rows()))),
            }
        }
        Ok((true, format!("{count} witnesses")))
    }));

    rows.push(row(3, "exotic ideals for n = 3", || {
        for (i, e) in exotic_ideals_n3().iter().enumerate() {
            let gens = e.generators();
            if !buchberger(&gens, MonomialOrder::GradedReverseLex, &gb)?.zero_set_is_origin()? {
                return Ok((false, format!("I{} not rigid", i + 1)));
            }
            for drop in 0..gens.len() {
                let rest: Vec<_> = gens
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != drop)
                    .map(|(_, g)| g.clone())
                    .collect();
                if buchberger(&rest, MonomialOrder::GradedReverseLex, &gb)?.zero_set_is_origin()? {
                    return Ok((
                        false,
                        format!("I{} without generator {} still rigid", i + 1, drop + 1),
                    ));
                }
            }
        }
        Ok((true, "3 ideals, 9 deletions".into()))
    }));

    rows.push(row(4, "lambda oracle", || {
        let mut checked = 0;
        let mut keys: Vec<LambdaKey> = (1..=4).flat_map(LambdaKey::all).collect();
        keys.extend((0..3).map(|_| {
            let all = LambdaKey::all(5);
            all[rng.random_range(0..all.len())]
        }));
        for key in keys {
            let trace = lambda_via_trace(key.n, key.m, key.k, key.representative_subset())?;
            if trace != lambda_formula(key, opts.corrupt_lambda)? {
                return Ok((
                    false,
                    format!(
                        "mismatch at n={} m={} k={} j={}",
                        key.n, key.m, key.k, key.j
                    ),
                ));
            }
            checked += 1;
        }
        for n in 1..=6 {
            for m in 1..=n {
                for k in 1..=n - m {
                    if !lambda_binomial_identity(n, m, k)?.is_zero() {
                        return Ok((false, format!("identity fails at n={n} m={m} k={k}")));
                    }
                }
            }
        }
        Ok((true, format!("{checked} trace rows")))
    }));

    rows.push(row(5, "coinvariant dimensions", || {
        for n in 1..=4 {
            let dim = SpectralIdeal::elementary(n)
                .groebner(MonomialOrder::GradedReverseLex, &gb)?
                .quotient_dimension();
            let fact: usize = (1..=n).product();
            if dim != QuotientDimension::Finite(fact) || artin_basis(n).len() != fact {
                return Ok((false, format!("n={n}: {dim:?}")));
            }
        }
        Ok((true, "n <= 4".into()))
    }));

    rows.push(row(6, "small-period Floquet ideals", || {
        let e = |n, i| elementary_symmetric(n, i);
        let expected = [
            vec![e(1, 1)?],
            vec![e(2, 1)?, e(2, 2)?],
            vec![e(3, 1)?, e(3, 2)?, &e(3, 3)? - &e(3, 1)?],
        ];
        for (q, want) in (1..=3).zip(expected) {
            let sys =
                floquet::spectral_invariant_system(&Periods::new(vec![q])?)?.to_spectral_ideal()?;
            if sys.generators() != want
                || floquet::certify_floquet_rigid(&Periods::new(vec![q])?, &gb)?
                    != RigidityStatus::Rigid
            {
                return Ok((false, format!("q={q}")));
            }
        }
        Ok((true, "q = 1, 2, 3".into()))
    }));

    rows.push(row(7, "Floquet witnesses", || {
        for q in 4..=5 {
            let FloquetOutcome::Witness(w) =
                floquet::find_isospectral_potential(&Periods::new(vec![q])?, &cfg, &gb)?
            else {
                return Ok((false, format!("no witness for q={q}")));
            };
            if w.potential.norm_inf() <= 1e-6
                || w.torus_deviation > 1e-8
                || w.coefficient_residual > 1e-8
            {
                return Ok((
                    false,
                    format!(
                        "q={q}: deviation {:e}",
                        w.torus_deviation.max(w.coefficient_residual)
                    ),
                ));
            }
        }
        Ok((true, "q = 4, 5".into()))
    }));

    rows.push(row(8, "rigidity of (3,2)", || {
        let out = floquet::find_isospectral_potential(&Periods::new(vec![3, 2])?, &cfg, &gb)?;
        let q = 4;
        let sys = floquet::spectral_invariant_system(&Periods::new(vec![q])?)?;
        let sos = &(&elementary_symmetric(q, 1)? * &elementary_symmetric(q, 1)?)
            - &elementary_symmetric(q, 2)?.scale(&rat(2));
        let member = sys
            .groebner(MonomialOrder::GradedReverseLex, &gb)?
            .contains(&sos);
        Ok((
            out.verdict() == "rigid" && member,
            format!(
                "verdict {}, sum of squares in ideal: {member}",
                out.verdict()
            ),
        ))
    }));

    rows.push(row(9, "lifting formula", || {
        let pairs = [
            (vec![1], vec![3]),
            (vec![2], vec![4]),
            (vec![2, 1], vec![2, 3]),
        ];
        let mut worst: f64 = 0.0;
        for (i, (q, p)) in pairs.into_iter().enumerate() {
            let v = Potential::random(Periods::new(q)?, opts.seed.wrapping_add(i as u64));
            worst = worst.max(floquet::check_lifting_formula(
                &v,
                &Periods::new(p)?,
                8,
                opts.seed,
            )?);
        }
        Ok((worst <= 1e-9, format!("max relative deviation {worst:.2e}")))
    }));

    SelftestReport {
        seed: opts.seed,
        rows,
    }
}
