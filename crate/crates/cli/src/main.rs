use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use isospectra::coinvariant::{lambda_table, lambda_table_csv};
use isospectra::floquet::{self, DispersionMode, FloquetOutcome, Periods, Potential};
use isospectra::io::{matrix_to_json, read_matrix};
use isospectra::minors::{has_symmetrized_principal_minors, SymmetrizedVerdict};
use isospectra::selftest::{run_selftest, SelftestOptions};
use isospectra::solver::{
    certify_rigid, find_nonzero_witness, RigidityStatus, SearchOutcome, SolveConfig,
};
use isospectra::{Error, GroebnerConfig};

#[derive(Parser, Debug)]
#[command(
    name = "isospectra",
    version,
    about = "Spectral rigidity under diagonal perturbation and Floquet isospectrality"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args, Debug)]
struct Global {
    /// RNG seed for witness searches and torus sampling.
    #[arg(long, global = true, env = "ISOSPECTRA_SEED", default_value_t = 0)]
    seed: u64,
    /// Worker thread cap.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Groebner step cap (input reductions plus S-pairs).
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Groebner wall-clock cap in seconds; 0 disables it.
    #[arg(long, global = true, default_value_t = 1800)]
    time_limit: u64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Residual tolerance for numeric checks.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide spectral rigidity of a square matrix (JSON or CSV).
    Rigidity {
        matrix: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Both)]
        mode: Mode,
    },
    /// Floquet isospectrality for a periodic potential.
    Floquet(FloquetArgs),
    /// Closed-form and trace-oracle lambda table as CSV.
    LambdaTable {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=6))]
        n: u64,
    },
    /// Desk-scale invariant suite.
    Selftest {
        #[arg(long, hide = true)]
        corrupt_lambda: bool,
    },
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("action").required(true).args(["search", "check", "bands"])))]
struct FloquetArgs {
    #[arg(long)]
    periods: String,
    /// Search for a nonzero potential Floquet isospectral to zero.
    #[arg(long)]
    search: bool,
    /// Compare two potential JSON files.
    #[arg(long, num_args = 2, value_names = ["V", "V2"])]
    check: Option<Vec<PathBuf>>,
    /// Sample band eigenvalues on a grid of roots of unity.
    #[arg(long, value_name = "GRID")]
    bands: Option<usize>,
    /// Potential for --bands; zero if omitted.
    #[arg(long)]
    potential: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    Numeric,
    Both,
}

struct Outcome {
    report: Option<Value>,
    text: Option<String>,
    code: u8,
}

const DISAGREEMENT: u8 = 2;
const USAGE: u8 = 3;

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    if let Some(t) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("warning: thread cap not applied: {e}");
        }
    }
    let start = Instant::now();
    let result = match &cli.command {
        Command::Rigidity { matrix, mode } => cmd_rigidity(&cli.global, matrix, *mode),
        Command::Floquet(args) => cmd_floquet(&cli.global, args),
        Command::LambdaTable { n } => lambda_table(*n as usize, true).map(|rows| Outcome {
            report: None,
            text: Some(lambda_table_csv(&rows)),
            code: if rows.iter().all(|r| r.agrees()) {
                0
            } else {
                1
            },
        }),
        Command::Selftest { corrupt_lambda } => {
            let report = run_selftest(&SelftestOptions {
                seed: cli.global.seed,
                corrupt_lambda: *corrupt_lambda,
            });
            eprint!("{}", report.matrix());
            let code = if report.all_passed() { 0 } else { 1 };
            Ok(Outcome {
                report: Some(json!({
                    "command": "selftest",
                    "inputs": {"corrupt_lambda": corrupt_lambda},
                    "verdict": if report.all_passed() { "pass" } else { "fail" },
                    "certificates": report.rows,
                })),
                text: None,
                code,
            })
        }
    };
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(USAGE);
        }
    };
    let body = match (outcome.report, outcome.text) {
        (Some(mut r), _) => {
            r["timing_ms"] = json!(start.elapsed().as_millis() as u64);
            r["seed"] = json!(cli.global.seed);
            serde_json::to_string_pretty(&r).expect("report serializes") + "\n"
        }
        (None, Some(t)) => t,
        (None, None) => String::new(),
    };
    if let Err(e) = emit(cli.global.out.as_deref(), &body) {
        eprintln!("error: {e}");
        return ExitCode::from(USAGE);
    }
    ExitCode::from(outcome.code)
}

fn emit(out: Option<&Path>, body: &str) -> std::io::Result<()> {
    match out {
        Some(p) => std::fs::write(p, body),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn groebner_config(g: &Global) -> GroebnerConfig {
    let mut cfg = GroebnerConfig::default();
    if let Some(b) = g.budget {
        cfg = cfg.with_max_pairs(b);
    }
    if g.time_limit > 0 {
        cfg = cfg.with_time_limit(std::time::Duration::from_secs(g.time_limit));
    }
    cfg
}

fn solve_config(g: &Global) -> SolveConfig {
    let mut cfg = SolveConfig::default().with_seed(g.seed);
    if let Some(t) = g.tol {
        cfg.residual_tol = t;
    }
    cfg
}

fn minor_certificate(v: &SymmetrizedVerdict) -> Value {
    json!({"kind": "minor-witness", "result": v})
}

fn cmd_rigidity(g: &Global, path: &Path, mode: Mode) -> Result<Outcome, Error> {
    let a = read_matrix(path)?;
    let symmetrized = has_symmetrized_principal_minors(&a);
    let mut certificates = vec![minor_certificate(&symmetrized)];
    let mut exact = None;
    let mut numeric = None;
    if mode != Mode::Numeric {
        let cert = certify_rigid(&a, &groebner_config(g))?;
        certificates.push(json!({
            "kind": "groebner",
            "status": cert.status,
            "pairs": cert.groebner_pairs,
            "note": cert.note,
            "agrees_with_minors": cert.consistent(),
        }));
        exact = Some(cert);
    }
    if mode != Mode::Exact && !symmetrized.holds() {
        let outcome = find_nonzero_witness(&a, &solve_config(g))?;
        match &outcome {
            SearchOutcome::Found(w) => {
                certificates.push(json!({"kind": "witness", "witness": w.to_json()}))
            }
            SearchOutcome::NoneFound { attempts } => {
                certificates.push(json!({"kind": "witness", "found": false, "attempts": attempts}))
            }
        }
        numeric = Some(outcome);
    }
    let found = numeric.as_ref().is_some_and(|o| o.witness().is_some());
    let mut code = 0;
    let mut diagnostics = Vec::new();
    if let Some(cert) = &exact {
        if !cert.consistent() {
            diagnostics.push("exact certificate contradicts the principal-minor test".to_string());
            code = DISAGREEMENT;
        }
        if mode == Mode::Both {
            let contradicts = match cert.status {
                RigidityStatus::Rigid => found,
                RigidityStatus::NotRigid => !found,
                RigidityStatus::Inconclusive => false,
            };
            if contradicts {
                diagnostics.push(format!(
                    "exact status {:?} but numeric witness found = {found}",
                    cert.status
                ));
                code = DISAGREEMENT;
            }
        }
    }
    let verdict = if symmetrized.holds() {
        match &exact {
            Some(c) if c.status == RigidityStatus::Inconclusive => "inconclusive",
            _ => "rigid",
        }
    } else if found
        || exact
            .as_ref()
            .is_some_and(|c| c.status == RigidityStatus::NotRigid)
    {
        "witness"
    } else {
        "inconclusive"
    };
    for d in &diagnostics {
        eprintln!("error: {d}");
    }
    Ok(Outcome {
        report: Some(json!({
            "command": "rigidity",
            "inputs": {"matrix": matrix_to_json(&a), "mode": format!("{mode:?}").to_lowercase()},
            "verdict": verdict,
            "certificates": certificates,
            "diagnostics": diagnostics,
        })),
        text: None,
        code,
    })
}

fn dispersion_mode(mode: Option<Mode>, q: usize) -> Result<DispersionMode, Error> {
    match mode {
        Some(Mode::Exact) => Ok(DispersionMode::Exact),
        Some(Mode::Numeric) => Ok(DispersionMode::Numeric),
        Some(Mode::Both) => Err(Error::Argument(
            "floquet accepts --mode exact or numeric".into(),
        )),
        None if q <= 8 => Ok(DispersionMode::Exact),
        None => Ok(DispersionMode::Numeric),
    }
}

fn read_potential(path: &Path) -> Result<Potential, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    Potential::from_json_str(&text)
}

fn cmd_floquet(g: &Global, args: &FloquetArgs) -> Result<Outcome, Error> {
    let periods = Periods::parse(&args.periods)?;
    let inputs = json!({"periods": periods.q()});
    if args.search {
        let outcome =
            floquet::find_isospectral_potential(&periods, &solve_config(g), &groebner_config(g))?;
        let certificates = match &outcome {
            FloquetOutcome::Witness(w) => vec![json!({
                "kind": "witness",
                "potential": w.potential.to_json(),
                "axis": w.axis,
                "base_period": w.base_period,
                "base_witness": w.base.to_json(),
                "torus_deviation": w.torus_deviation,
                "coefficient_residual": w.coefficient_residual,
            })],
            FloquetOutcome::Rigid {
                reduced,
                groebner_pairs,
            } => {
                vec![
                    json!({"kind": "groebner", "status": "rigid", "reduced_periods": reduced.q(), "pairs": groebner_pairs}),
                ]
            }
            FloquetOutcome::Inconclusive { reduced, reason } => {
                vec![json!({"kind": "note", "reduced_periods": reduced.q(), "reason": reason})]
            }
        };
        return Ok(Outcome {
            report: Some(
                json!({"command": "floquet-search", "inputs": inputs, "verdict": outcome.verdict(), "certificates": certificates}),
            ),
            text: None,
            code: 0,
        });
    }
    if let Some(paths) = &args.check {
        let (v, w) = (read_potential(&paths[0])?, read_potential(&paths[1])?);
        if v.periods() != &periods || w.periods() != &periods {
            return Err(Error::Argument(format!(
                "potentials must both have periods {periods}"
            )));
        }
        let mode = dispersion_mode(args.mode, periods.total())?;
        let tol = g.tol.unwrap_or(1e-8);
        let check = floquet::floquet_isospectral(&v, &w, mode, tol)?;
        let torus = floquet::torus_deviation(&v, &w, 32, g.seed)?;
        let iso = check.isospectral && torus <= tol;
        return Ok(Outcome {
            report: Some(json!({
                "command": "floquet-check",
                "inputs": {"periods": periods.q(), "v": v.to_json(), "v2": w.to_json(), "tol": tol},
                "verdict": if iso { "isospectral" } else { "not-isospectral" },
                "certificates": [
                    {"kind": "dispersion", "mode": mode, "max_deviation": check.max_deviation},
                    {"kind": "torus", "points": 32, "max_deviation": torus},
                ],
            })),
            text: None,
            code: if iso { 0 } else { 1 },
        });
    }
    let grid = args.bands.expect("clap enforces one action");
    let v = match &args.potential {
        Some(p) => read_potential(p)?,
        None => Potential::zero(periods.clone()),
    };
    if v.periods() != &periods {
        return Err(Error::Argument(format!(
            "potential must have periods {periods}"
        )));
    }
    let samples = floquet::band_spectrum_sample(&v, grid)?;
    Ok(Outcome {
        report: None,
        text: Some(floquet::band_csv(&samples)),
        code: 0,
    })
}
