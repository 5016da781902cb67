//! Acceptance suite: one pass/fail line per criterion.
//!
//! Runs as a plain binary (`harness = false`). The stretch row never fails
//! the run; its time budget is read from `ISOSPECTRA_STRETCH_SECS`
//! (default 1800).

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_traits::Zero;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use isospectra::coinvariant::{
    artin_basis, lambda_binomial_identity, lambda_closed_form, lambda_via_trace, LambdaKey,
};
use isospectra::floquet::{self, DispersionMode, FloquetOutcome, Periods, Potential};
use isospectra::invariants::{exotic_ideals_n3, SpectralIdeal};
use isospectra::minors::{has_symmetrized_principal_minors, RationalMatrix};
use isospectra::poly::{buchberger, elementary_symmetric};
use isospectra::rational::rat;
use isospectra::selftest::{random_integer_matrix, symmetrized_instance};
use isospectra::solver::{
    certify_rigid, find_nonzero_witness, verify_witness, RigidityStatus, SearchOutcome, SolveConfig,
};
use isospectra::{Error, GroebnerConfig, MonomialOrder, QuotientDimension, Rational, Result};

const SEED: u64 = 20240607;

enum Verdict {
    Pass(String),
    Fail(String),
    /// Stretch rows only: reported but never counted as a failure.
    Inconclusive(String),
}

struct Suite {
    failures: usize,
}

impl Suite {
    fn run(&mut self, id: &str, name: &str, f: impl FnOnce() -> Result<Verdict>) {
        let t = Instant::now();
        let verdict = f().unwrap_or_else(|e| Verdict::Fail(format!("error: {e}")));
        let secs = t.elapsed().as_secs_f64();
        let (tag, detail) = match verdict {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                self.failures += 1;
                ("FAIL", d)
            }
            Verdict::Inconclusive(d) => ("INCONCLUSIVE", d),
        };
        println!("{tag:<12} criterion {id:<3} {name:<40} {detail} [{secs:.1}s]");
    }
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

/// 50 random and 50 constructed instances per size.
fn instances() -> Vec<RationalMatrix> {
    let mut rng = ChaCha20Rng::seed_from_u64(SEED);
    let mut out = Vec::new();
    for n in 2..=4 {
        for _ in 0..50 {
            out.push(random_integer_matrix(&mut rng, n, 5));
        }
        for kind in 0..50 {
            out.push(symmetrized_instance(&mut rng, n, kind));
        }
    }
    out
}

fn rigidity_round_trip(all: &[RationalMatrix], gb: &GroebnerConfig) -> Result<Verdict> {
    let mut counts = [0usize; 2];
    for a in all {
        let cert = certify_rigid(a, gb)?;
        let expected = if has_symmetrized_principal_minors(a).holds() {
            RigidityStatus::Rigid
        } else {
            RigidityStatus::NotRigid
        };
        if cert.status != expected {
            return Ok(Verdict::Fail(format!(
                "{:?} on {:?}, expected {expected:?}",
                cert.status,
                a.rows()
            )));
        }
        counts[(expected == RigidityStatus::Rigid) as usize] += 1;
    }
    Ok(Verdict::Pass(format!(
        "{} instances: {} rigid, {} not rigid",
        all.len(),
        counts[1],
        counts[0]
    )))
}

fn numeric_witnesses(all: &[RationalMatrix]) -> Result<Verdict> {
    let cfg = SolveConfig::default().with_seed(SEED);
    let mut count = 0;
    let mut worst: f64 = 0.0;
    for a in all
        .iter()
        .filter(|a| !has_symmetrized_principal_minors(a).holds())
    {
        let SearchOutcome::Found(w) = find_nonzero_witness(a, &cfg)? else {
            return Ok(Verdict::Fail(format!("no witness for {:?}", a.rows())));
        };
        // Recomputed from the matrix, not taken from the solver's report.
        let residual = verify_witness(a, &w.d)?;
        if w.d.norm_inf() <= 1e-6 || residual > 1e-10 {
            return Ok(Verdict::Fail(format!(
                "weak witness for {:?}: |D| = {:e}, residual {residual:e}",
                a.rows(),
                w.d.norm_inf()
            )));
        }
        worst = worst.max(residual);
        count += 1;
    }
    Ok(Verdict::Pass(format!(
        "{count} witnesses, worst residual {worst:.1e}"
    )))
}

fn exotic_ideals(gb: &GroebnerConfig) -> Result<Verdict> {
    let mut deletions = 0;
    for (i, e) in exotic_ideals_n3().iter().enumerate() {
        let gens = e.generators();
        if !buchberger(&gens, MonomialOrder::GradedReverseLex, gb)?.vanishes_only_at_origin()? {
            return Ok(Verdict::Fail(format!(
                "I{} does not vanish only at the origin",
                i + 1
            )));
        }
        for drop in 0..gens.len() {
            let rest: Vec<_> = gens
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != drop)
                .map(|(_, g)| g.clone())
                .collect();
            // A positive-dimensional remainder is reported as an error by
            // `vanishes_only_at_origin`; that counts as "false" here.
            let origin_only = match buchberger(&rest, MonomialOrder::GradedReverseLex, gb)?
                .vanishes_only_at_origin()
            {
                Ok(b) => b,
                Err(Error::NotZeroDimensional) => false,
                Err(e) => return Err(e),
            };
            if origin_only {
                return Ok(Verdict::Fail(format!(
                    "I{} without generator {} still vanishes only at 0",
                    i + 1,
                    drop + 1
                )));
            }
            deletions += 1;
        }
    }
    Ok(Verdict::Pass(format!(
        "3 ideals rigid, {deletions} deletions not"
    )))
}

fn subsets_of_size(n: usize, k: usize) -> Vec<u32> {
    (0u32..1 << n)
        .filter(|s| s.count_ones() as usize == k)
        .collect()
}

fn lambda_oracle() -> Result<Verdict> {
    let mut compared = 0;
    let check_one = |n: usize, m: usize, k: usize, j: u32| -> Result<bool> {
        let inside = (j & ((1 << m) - 1)).count_ones() as usize;
        Ok(lambda_via_trace(n, m, k, j)? == lambda_closed_form(LambdaKey::new(n, m, k, inside)?)?)
    };
    for n in 1..=4 {
        for m in 1..=n {
            for k in 0..=n - m {
                for j in subsets_of_size(n, k) {
                    if !check_one(n, m, k, j)? {
                        return Ok(Verdict::Fail(format!(
                            "trace mismatch n={n} m={m} k={k} J={j:#b}"
                        )));
                    }
                    compared += 1;
                }
            }
        }
    }
    let mut rng = ChaCha20Rng::seed_from_u64(SEED);
    for _ in 0..30 {
        let n = 5;
        let m = rng.random_range(1..=n);
        let k = rng.random_range(0..=n - m);
        let j = *subsets_of_size(n, k).choose(&mut rng).expect("nonempty");
        if !check_one(n, m, k, j)? {
            return Ok(Verdict::Fail(format!(
                "trace mismatch n=5 m={m} k={k} J={j:#b}"
            )));
        }
        compared += 1;
    }
    let mut relations = 0;
    for n in 1..=8 {
        for key in LambdaKey::all(n) {
            if key.j >= 1 {
                let prev = LambdaKey::new(n, key.m, key.k - 1, key.j - 1)?;
                if !(lambda_closed_form(key)? + lambda_closed_form(prev)?).is_zero() {
                    return Ok(Verdict::Fail(format!("recursion fails at {key:?}")));
                }
                relations += 1;
            }
        }
        for m in 1..=n {
            for k in 1..=n - m {
                if !lambda_binomial_identity(n, m, k)?.is_zero() {
                    return Ok(Verdict::Fail(format!(
                        "binomial identity fails at n={n} m={m} k={k}"
                    )));
                }
                relations += 1;
            }
        }
    }
    Ok(Verdict::Pass(format!(
        "{compared} trace comparisons, {relations} relations"
    )))
}

fn coinvariant_dimensions(gb: &GroebnerConfig) -> Result<Verdict> {
    for n in 1..=6 {
        let dim = SpectralIdeal::elementary(n)
            .groebner(MonomialOrder::GradedReverseLex, gb)?
            .quotient_dimension();
        let fact: usize = (1..=n).product();
        if dim != QuotientDimension::Finite(fact) {
            return Ok(Verdict::Fail(format!(
                "n={n}: quotient dimension {dim:?}, expected {fact}"
            )));
        }
    }
    for n in 1..=7 {
        let fact: usize = (1..=n).product();
        if artin_basis(n).len() != fact {
            return Ok(Verdict::Fail(format!(
                "n={n}: {} Artin monomials",
                artin_basis(n).len()
            )));
        }
    }
    Ok(Verdict::Pass(
        "quotient n! for n <= 6, Artin count n! for n <= 7".into(),
    ))
}

fn small_periods(gb: &GroebnerConfig) -> Result<Verdict> {
    let e = |n, i| elementary_symmetric(n, i);
    let expected = [
        vec![e(1, 1)?],
        vec![e(2, 1)?, e(2, 2)?],
        vec![e(3, 1)?, e(3, 2)?, &e(3, 3)? - &e(3, 1)?],
    ];
    for (q, want) in (1..=3).zip(expected) {
        let periods = Periods::new(vec![q])?;
        let sys = floquet::spectral_invariant_system(&periods)?.to_spectral_ideal()?;
        // Equal as ideals: each reduced basis generates the other.
        let a = buchberger(&sys.generators(), MonomialOrder::GradedReverseLex, gb)?;
        let b = buchberger(&want, MonomialOrder::GradedReverseLex, gb)?;
        if a.generators() != b.generators() {
            return Ok(Verdict::Fail(format!("q={q}: ideal differs")));
        }
        if floquet::certify_floquet_rigid(&periods, gb)? != RigidityStatus::Rigid {
            return Ok(Verdict::Fail(format!("q={q}: not certified rigid")));
        }
    }
    Ok(Verdict::Pass(
        "q = 1, 2, 3 ideals match and are rigid".into(),
    ))
}

fn one_dimensional_witness(q: usize, gb: &GroebnerConfig) -> Result<Option<Potential>> {
    let cfg = SolveConfig::default().with_seed(SEED);
    Ok(
        match floquet::find_isospectral_potential(&Periods::new(vec![q])?, &cfg, gb)? {
            FloquetOutcome::Witness(w) => Some(w.potential),
            _ => None,
        },
    )
}

fn floquet_witnesses(gb: &GroebnerConfig) -> Result<Verdict> {
    let mut worst: f64 = 0.0;
    for q in 4..=7 {
        let Some(v) = one_dimensional_witness(q, gb)? else {
            return Ok(Verdict::Fail(format!("no witness for q={q}")));
        };
        let zero = Potential::zero(v.periods().clone());
        let torus = floquet::torus_deviation(&v, &zero, 32, SEED)?;
        let coeffs = floquet::floquet_isospectral(&v, &zero, DispersionMode::Exact, 1e-8)?;
        if v.norm_inf() <= 1e-6 || torus > 1e-8 || !coeffs.isospectral {
            return Ok(Verdict::Fail(format!(
                "q={q}: |V| = {:e}, torus {torus:e}, coefficients {:e}",
                v.norm_inf(),
                coeffs.max_deviation
            )));
        }
        worst = worst.max(torus).max(coeffs.max_deviation);
    }
    Ok(Verdict::Pass(format!(
        "q = 4..7, worst deviation {worst:.1e}"
    )))
}

fn rigidity_32(gb: &GroebnerConfig) -> Result<Verdict> {
    let periods = Periods::new(vec![3, 2])?;
    let out =
        floquet::find_isospectral_potential(&periods, &SolveConfig::default().with_seed(SEED), gb)?;
    if out.verdict() != "rigid" {
        return Ok(Verdict::Fail(format!("pipeline verdict {}", out.verdict())));
    }
    let direct = floquet::spectral_invariant_system(&periods)?
        .groebner(MonomialOrder::GradedReverseLex, gb)?;
    if !direct.vanishes_only_at_origin()? {
        return Ok(Verdict::Fail(
            "full (3,2) system has nonzero solutions".into(),
        ));
    }
    for q in 4..=6 {
        let sys = floquet::spectral_invariant_system(&Periods::new(vec![q])?)?;
        let e1 = elementary_symmetric(q, 1)?;
        let target = &(&e1 * &e1) - &elementary_symmetric(q, 2)?.scale(&rat(2));
        if !sys
            .groebner(MonomialOrder::GradedReverseLex, gb)?
            .contains(&target)
        {
            return Ok(Verdict::Fail(format!(
                "sum of squares not in the ideal for q={q}"
            )));
        }
    }
    Ok(Verdict::Pass(
        "pipeline and full system rigid; sum of squares in E for q = 4, 5, 6".into(),
    ))
}

fn divisor_pairs() -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut out = Vec::new();
    for p1 in 1..=12usize {
        for q1 in (1..=p1).filter(|q| p1 % q == 0) {
            out.push((vec![q1], vec![p1]));
        }
        for p2 in 1..=12 / p1 {
            for q1 in (1..=p1).filter(|q| p1 % q == 0) {
                for q2 in (1..=p2).filter(|q| p2 % q == 0) {
                    if (q1, q2) != (p1, p2) {
                        out.push((vec![q1, q2], vec![p1, p2]));
                    }
                }
            }
        }
    }
    out.retain(|(q, p)| q != p);
    out
}

fn lifting(gb: &GroebnerConfig) -> Result<Verdict> {
    let mut rng = ChaCha20Rng::seed_from_u64(SEED);
    let pairs: Vec<_> = divisor_pairs()
        .choose_multiple(&mut rng, 10)
        .cloned()
        .collect();
    let mut worst: f64 = 0.0;
    for (i, (q, p)) in pairs.iter().enumerate() {
        let v = Potential::random(Periods::new(q.clone())?, SEED + i as u64);
        let dev =
            floquet::check_lifting_formula(&v, &Periods::new(p.clone())?, 16, SEED + i as u64)?;
        if dev > 1e-9 {
            return Ok(Verdict::Fail(format!(
                "{q:?} -> {p:?}: relative deviation {dev:e}"
            )));
        }
        worst = worst.max(dev);
    }
    let Some(w) = one_dimensional_witness(4, gb)? else {
        return Ok(Verdict::Fail("no q=4 witness to lift".into()));
    };
    let as_2d = Potential::new(Periods::new(vec![4, 1])?, w.values().to_vec())?;
    for (base, target) in [(&w, vec![8]), (&as_2d, vec![4, 2])] {
        let lifted = floquet::lift_potential(base, &Periods::new(target.clone())?)?;
        let zero = Potential::zero(lifted.periods().clone());
        let torus = floquet::torus_deviation(&lifted, &zero, 16, SEED)?;
        let coeffs = floquet::floquet_isospectral(&lifted, &zero, DispersionMode::Exact, 1e-8)?;
        if torus > 1e-8 || !coeffs.isospectral {
            return Ok(Verdict::Fail(format!(
                "lifted witness on {target:?}: torus {torus:e}, coefficients {:e}",
                coeffs.max_deviation
            )));
        }
    }
    let shown: Vec<String> = pairs.iter().map(|(q, p)| format!("{q:?}->{p:?}")).collect();
    Ok(Verdict::Pass(format!(
        "worst relative deviation {worst:.1e} over {}; q=4 witness isospectral on (8), (4,2)",
        shown.join(" ")
    )))
}

fn degree(
    values: &[i64],
    limit: Duration,
) -> Result<std::result::Result<QuotientDimension, String>> {
    let periods = Periods::new(vec![3, 2])?;
    let v: Vec<Rational> = values.iter().map(|&x| rat(x)).collect();
    let sys = floquet::spectral_invariant_system_against(&periods, &v)?;
    let gb = GroebnerConfig::default()
        .with_max_pairs(usize::MAX)
        .with_time_limit(limit);
    match sys.groebner(MonomialOrder::GradedReverseLex, &gb) {
        Ok(g) => Ok(Ok(g.quotient_dimension())),
        Err(Error::ResourceLimit(msg)) => Ok(Err(msg)),
        Err(e) => Err(e),
    }
}

fn degrees_32(limit: Duration) -> Result<Verdict> {
    let zero = degree(&[0; 6], limit)?;
    let random = degree(&[1, 0, -1, 2, 1, -1], limit)?;
    let show = |r: &std::result::Result<QuotientDimension, String>| match r {
        Ok(d) => format!("{d:?}"),
        Err(msg) => format!("inconclusive ({msg})"),
    };
    let detail = format!("V'=0: {}, random V': {}", show(&zero), show(&random));
    Ok(match (&zero, &random) {
        (Ok(a), Ok(b)) => check(
            *a == QuotientDimension::Finite(51) && *b == QuotientDimension::Finite(12),
            detail,
        ),
        (Ok(a), Err(_)) if *a != QuotientDimension::Finite(51) => Verdict::Fail(detail),
        _ => Verdict::Inconclusive(detail),
    })
}

fn main() -> ExitCode {
    let gb = GroebnerConfig::default();
    let stretch = std::env::var("ISOSPECTRA_STRETCH_SECS")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(1800);
    let mut suite = Suite { failures: 0 };
    let all = instances();

    suite.run("1", "exact rigidity round trip", || {
        rigidity_round_trip(&all, &gb)
    });
    suite.run("2", "numeric witnesses", || numeric_witnesses(&all));
    suite.run("3", "exotic ideals for n = 3", || exotic_ideals(&gb));
    suite.run("4", "lambda closed form vs trace", lambda_oracle);
    suite.run("5", "coinvariant dimensions", || {
        coinvariant_dimensions(&gb)
    });
    suite.run("6", "small-period Floquet ideals", || small_periods(&gb));
    suite.run("7", "Floquet witnesses q = 4..7", || floquet_witnesses(&gb));
    suite.run("8", "rigidity of (3,2)", || rigidity_32(&gb));
    suite.run("9", "lifting formula", || lifting(&gb));
    suite.run("10", "(3,2) degrees (stretch)", || {
        degrees_32(Duration::from_secs(stretch))
    });

    if suite.failures == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} criteria failed", suite.failures);
        ExitCode::FAILURE
    }
}
