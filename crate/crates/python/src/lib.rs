//! Python bindings: rigidity decisions, λ values and Floquet tools.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use isospectra::coinvariant::{
    lambda_closed_form, lambda_table, lambda_table_csv, lambda_via_trace, LambdaKey,
};
use isospectra::floquet::{self, DispersionMode, FloquetOutcome, Periods};
use isospectra::minors::{has_symmetrized_principal_minors, subset_from_indices, RationalMatrix};
use isospectra::rational::{format_rational, parse_rational};
use isospectra::selftest::{run_selftest, SelftestOptions};
use isospectra::solver::{self, RigidityStatus, SearchOutcome, SolveConfig, SolveMode};
use isospectra::{Error, GroebnerConfig};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Argument(_) | Error::Parse(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Entries may be ints, floats or "p/q" strings.
fn entry(v: &Bound<'_, PyAny>) -> PyResult<isospectra::Rational> {
    let text = if let Ok(i) = v.extract::<i64>() {
        i.to_string()
    } else if let Ok(s) = v.extract::<String>() {
        s
    } else if let Ok(f) = v.extract::<f64>() {
        format!("{f:?}")
    } else {
        return Err(PyValueError::new_err(
            "matrix entries must be int, float or str",
        ));
    };
    parse_rational(&text).map_err(to_py)
}

fn matrix(rows: Vec<Vec<Bound<'_, PyAny>>>) -> PyResult<RationalMatrix> {
    let rows = rows
        .iter()
        .map(|r| r.iter().map(entry).collect::<PyResult<Vec<_>>>())
        .collect::<PyResult<Vec<_>>>()?;
    RationalMatrix::from_rows(rows).map_err(to_py)
}

fn groebner(budget: Option<usize>, time_limit: Option<f64>) -> GroebnerConfig {
    let mut cfg = GroebnerConfig::default();
    if let Some(b) = budget {
        cfg = cfg.with_max_pairs(b);
    }
    if let Some(secs) = time_limit {
        cfg = cfg.with_time_limit(std::time::Duration::from_secs_f64(secs.max(0.0)));
    }
    cfg
}

fn dispersion_mode(mode: &str) -> PyResult<DispersionMode> {
    mode.parse().map_err(to_py)
}

/// Spectral invariants `S_1, ..., S_n` as polynomial strings.
#[pyfunction]
fn spectral_invariants(rows: Vec<Vec<Bound<'_, PyAny>>>) -> PyResult<Vec<String>> {
    let e = isospectra::invariants::spectral_invariants(&matrix(rows)?).map_err(to_py)?;
    Ok(e.generators().iter().map(|g| g.to_string()).collect())
}

/// Smallest size `k` with unequal principal minors, or `None`.
#[pyfunction]
fn symmetrized_violation(rows: Vec<Vec<Bound<'_, PyAny>>>) -> PyResult<Option<usize>> {
    Ok(match has_symmetrized_principal_minors(&matrix(rows)?) {
        isospectra::minors::SymmetrizedVerdict::Symmetrized => None,
        isospectra::minors::SymmetrizedVerdict::Violation { k, .. } => Some(k),
    })
}

/// "rigid", "not-rigid" or "inconclusive".
#[pyfunction]
#[pyo3(signature = (rows, budget=None, time_limit=None))]
fn certify_rigid(
    rows: Vec<Vec<Bound<'_, PyAny>>>,
    budget: Option<usize>,
    time_limit: Option<f64>,
) -> PyResult<&'static str> {
    let cert =
        solver::certify_rigid(&matrix(rows)?, &groebner(budget, time_limit)).map_err(to_py)?;
    Ok(match cert.status {
        RigidityStatus::Rigid => "rigid",
        RigidityStatus::NotRigid => "not-rigid",
        RigidityStatus::Inconclusive => "inconclusive",
    })
}

#[pyclass(frozen)]
struct Witness {
    inner: solver::Witness,
}

#[pymethods]
impl Witness {
    #[getter]
    fn d(&self) -> Vec<Complex64> {
        self.inner.d.as_slice().to_vec()
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.inner.residual
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    fn to_json(&self) -> String {
        self.inner.to_json().to_string()
    }

    fn __repr__(&self) -> String {
        format!(
            "Witness(residual={:e}, seed={})",
            self.inner.residual, self.inner.seed
        )
    }
}

/// Nonzero diagonal shift `D` with `A + D` isospectral to `A`, or `None`.
#[pyfunction]
#[pyo3(signature = (rows, seed=0, mode="newton"))]
fn find_nonzero_witness(
    rows: Vec<Vec<Bound<'_, PyAny>>>,
    seed: u64,
    mode: &str,
) -> PyResult<Option<Witness>> {
    let mode: SolveMode = mode.parse().map_err(to_py)?;
    let cfg = SolveConfig::default().with_seed(seed).with_mode(mode);
    Ok(
        match solver::find_nonzero_witness(&matrix(rows)?, &cfg).map_err(to_py)? {
            SearchOutcome::Found(w) => Some(Witness { inner: w }),
            SearchOutcome::NoneFound { .. } => None,
        },
    )
}

#[pyfunction]
fn lambda_value(n: usize, m: usize, k: usize, j: usize) -> PyResult<String> {
    let key = LambdaKey::new(n, m, k, j).map_err(to_py)?;
    lambda_closed_form(key)
        .map(|r| format_rational(&r))
        .map_err(to_py)
}

/// Trace oracle for λ with an explicit 1-based subset `J`.
#[pyfunction]
fn lambda_trace(n: usize, m: usize, subset: Vec<usize>) -> PyResult<String> {
    if subset.iter().any(|&i| i == 0 || i > n) {
        return Err(PyValueError::new_err(
            "subset indices are 1-based and at most n",
        ));
    }
    let zero_based: Vec<usize> = subset.iter().map(|i| i - 1).collect();
    let k = subset.len();
    lambda_via_trace(n, m, k, subset_from_indices(&zero_based))
        .map(|r| format_rational(&r))
        .map_err(to_py)
}

#[pyfunction]
fn lambda_csv(n: usize) -> PyResult<String> {
    if n == 0 || n > 6 {
        return Err(PyValueError::new_err("n must be between 1 and 6"));
    }
    lambda_table(n, true)
        .map(|rows| lambda_table_csv(&rows))
        .map_err(to_py)
}

#[pyclass(frozen)]
struct Potential {
    inner: floquet::Potential,
}

#[pymethods]
impl Potential {
    #[new]
    fn new(periods: Vec<usize>, values: Vec<Complex64>) -> PyResult<Self> {
        let periods = Periods::new(periods).map_err(to_py)?;
        floquet::Potential::new(periods, values)
            .map(|inner| Potential { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    fn zero(periods: Vec<usize>) -> PyResult<Self> {
        Ok(Potential {
            inner: floquet::Potential::zero(Periods::new(periods).map_err(to_py)?),
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        floquet::Potential::from_json_str(text)
            .map(|inner| Potential { inner })
            .map_err(to_py)
    }

    fn to_json(&self) -> String {
        self.inner.to_json().to_string()
    }

    #[getter]
    fn periods(&self) -> Vec<usize> {
        self.inner.periods().q().to_vec()
    }

    #[getter]
    fn values(&self) -> Vec<Complex64> {
        self.inner.values().to_vec()
    }

    /// Coefficients of the dispersion polynomial keyed by `(z exponents, λ power)`.
    #[pyo3(signature = (mode="exact"))]
    fn dispersion(&self, mode: &str) -> PyResult<Vec<((Vec<i32>, u32), Complex64)>> {
        let d = floquet::dispersion_poly(&self.inner, dispersion_mode(mode)?).map_err(to_py)?;
        Ok(d.terms().map(|(k, c)| (k.clone(), *c)).collect())
    }

    /// Sorted eigenvalues of `L_V(z)` on the `grid`-th roots of unity.
    fn bands(&self, grid: usize) -> PyResult<Vec<(Vec<Complex64>, Vec<Complex64>)>> {
        let samples = floquet::band_spectrum_sample(&self.inner, grid).map_err(to_py)?;
        Ok(samples.into_iter().map(|s| (s.z, s.eigenvalues)).collect())
    }

    fn lift(&self, periods: Vec<usize>) -> PyResult<Potential> {
        let p = Periods::new(periods).map_err(to_py)?;
        floquet::lift_potential(&self.inner, &p)
            .map(|inner| Potential { inner })
            .map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Potential(periods={}, values={:?})",
            self.inner.periods(),
            self.inner.values()
        )
    }
}

/// `(isospectral, max coefficient deviation)`.
#[pyfunction]
#[pyo3(signature = (v, w, mode="exact", tol=1e-8))]
fn floquet_isospectral(
    v: &Potential,
    w: &Potential,
    mode: &str,
    tol: f64,
) -> PyResult<(bool, f64)> {
    let check = floquet::floquet_isospectral(&v.inner, &w.inner, dispersion_mode(mode)?, tol)
        .map_err(to_py)?;
    Ok((check.isospectral, check.max_deviation))
}

/// `("witness", Potential)`, `("rigid", None)` or `("inconclusive", None)`.
#[pyfunction]
#[pyo3(signature = (periods, seed=0, budget=None, time_limit=None))]
fn find_isospectral_potential(
    periods: Vec<usize>,
    seed: u64,
    budget: Option<usize>,
    time_limit: Option<f64>,
) -> PyResult<(&'static str, Option<Potential>)> {
    let periods = Periods::new(periods).map_err(to_py)?;
    let cfg = SolveConfig::default().with_seed(seed);
    let out = floquet::find_isospectral_potential(&periods, &cfg, &groebner(budget, time_limit))
        .map_err(to_py)?;
    Ok(match out {
        FloquetOutcome::Witness(w) => ("witness", Some(Potential { inner: w.potential })),
        other => (other.verdict(), None),
    })
}

/// Runs the desk-scale suite; returns `(all passed, pass/fail matrix)`.
#[pyfunction]
#[pyo3(signature = (seed=0))]
fn selftest(seed: u64) -> (bool, String) {
    let report = run_selftest(&SelftestOptions {
        seed,
        corrupt_lambda: false,
    });
    (report.all_passed(), report.matrix())
}

#[pymodule]
fn isospectra_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Witness>()?;
    m.add_class::<Potential>()?;
    m.add_function(wrap_pyfunction!(spectral_invariants, m)?)?;
    m.add_function(wrap_pyfunction!(symmetrized_violation, m)?)?;
    m.add_function(wrap_pyfunction!(certify_rigid, m)?)?;
    m.add_function(wrap_pyfunction!(find_nonzero_witness, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_value, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_trace, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_csv, m)?)?;
    m.add_function(wrap_pyfunction!(floquet_isospectral, m)?)?;
    m.add_function(wrap_pyfunction!(find_isospectral_potential, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    Ok(())
}
