//! Python bindings. Numbers cross the boundary as decimal strings so no
//! precision is lost to binary floats; plain ints, floats and `Fraction`s are
//! accepted on input through their `str()`.

// pyo3's generated wrappers trip this lint on every `PyResult` function.
#![allow(clippy::useless_conversion)]

use pyo3::create_exception;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use lambertq::bench::{run_bench, BenchSeries};
use lambertq::bilateral::{jordan_direct, jordan_form1, jordan_form2, jordan_theta, BilateralParams};
use lambertq::identities::{self, IdentityReport};
use lambertq::lambert::{
    glambert_lhs, glambert_theta, lambert_naive, lambert_theta, series_qxt_alt, series_qxt_lhs,
    series_qxt_rhs, QxtParams,
};
use lambertq::qcore::{self, SeriesValue};
use lambertq::recurrences::{
    fib_even_theta, fib_odd_theta, fib_recip_gosper_auto, recip_sum_fast, recip_sum_naive,
    HoradamSequence,
};
use lambertq::{format_real, gospermat, make_context, BigReal, Error, RealContext};

const GOSPER_MATRIX: &str = "gosper-matrix";

create_exception!(lambertq, PoleError, PyArithmeticError, "A denominator vanishes at working precision.");
create_exception!(lambertq, ConvergenceError, PyArithmeticError, "The sum diverged or lost its error budget.");

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Pole(_) => PoleError::new_err(e.to_string()),
        Error::Divergence(_) | Error::PrecisionLoss(_) => ConvergenceError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn context(digits: u32) -> PyResult<RealContext> {
    make_context(digits).map_err(to_py)
}

fn real(obj: &Bound<'_, PyAny>, ctx: &RealContext) -> PyResult<BigReal> {
    let text = obj.str()?.to_string();
    ctx.parse(&text).map_err(to_py)
}

fn required(obj: Option<&Bound<'_, PyAny>>, name: &str, ctx: &RealContext) -> PyResult<BigReal> {
    match obj {
        Some(o) => real(o, ctx),
        None => Err(PyValueError::new_err(format!("{name} is required"))),
    }
}

fn unknown_method(m: &str) -> Error {
    Error::InvalidArgument(format!("unknown method {m:?} for this series"))
}

/// The method tables shared by the evaluation functions below.
fn eval_lambert(q: &BigReal, method: &str, ctx: &RealContext) -> Result<SeriesValue, Error> {
    match method {
        "naive" => lambert_naive(q, ctx),
        "theta" => lambert_theta(q, ctx),
        m => Err(unknown_method(m)),
    }
}

fn eval_glambert(x: &BigReal, q: &BigReal, method: &str, ctx: &RealContext) -> Result<SeriesValue, Error> {
    match method {
        "naive" => glambert_lhs(x, q, ctx),
        "theta" => glambert_theta(x, q, ctx),
        m => Err(unknown_method(m)),
    }
}

fn eval_qxt(p: &QxtParams, method: &str, ctx: &RealContext) -> Result<SeriesValue, Error> {
    match method {
        "naive" => series_qxt_lhs(p, ctx),
        "theta" => series_qxt_rhs(p, ctx),
        "alt" => series_qxt_alt(p, ctx),
        m => Err(unknown_method(m)),
    }
}

fn eval_bilateral(p: &BilateralParams, method: &str, ctx: &RealContext) -> Result<SeriesValue, Error> {
    match method {
        "direct" | "naive" => jordan_direct(p, ctx),
        "theta" => jordan_theta(p, ctx),
        "form1" => jordan_form1(p, ctx),
        "form2" => jordan_form2(p, ctx),
        m => Err(unknown_method(m)),
    }
}

fn eval_recip(seq: &HoradamSequence, method: &str, ctx: &RealContext) -> Result<SeriesValue, Error> {
    if matches!(method, "gosper" | "split") && !seq.is_fibonacci() {
        return Err(Error::InvalidArgument(format!("method {method} needs m1 = m2 = 1")));
    }
    match method {
        "naive" => recip_sum_naive(seq, ctx),
        "horadam" => recip_sum_fast(seq, ctx),
        "gosper" => fib_recip_gosper_auto(ctx),
        "split" => Ok(fib_even_theta(ctx)?.combine(&fib_odd_theta(ctx)?, "split")),
        m => Err(unknown_method(m)),
    }
}

fn run_check(name: &str, trials: u32, seed: i64, factors: Option<u64>, ctx: &RealContext) -> Result<IdentityReport, Error> {
    if name == GOSPER_MATRIX {
        gospermat::verify(&gospermat::default_qs(ctx), factors, seed, ctx)
    } else {
        identities::check_identity(name, trials, seed, ctx)
    }
}

/// A truncated sum with its certified tail bound.
#[pyclass(name = "SeriesValue", frozen, get_all)]
#[derive(Clone)]
struct PySeriesValue {
    /// The value to the requested number of significant digits.
    value: String,
    terms_used: u64,
    tail_bound: String,
    method: String,
    digits: u32,
}

impl PySeriesValue {
    fn new(v: &SeriesValue, method: &str, ctx: &RealContext) -> Self {
        Self {
            value: format_real(&v.value, ctx),
            terms_used: v.terms_used,
            tail_bound: v.tail_bound.to_scientific(6),
            method: method.to_string(),
            digits: ctx.target_digits(),
        }
    }
}

#[pymethods]
impl PySeriesValue {
    fn __float__(&self) -> PyResult<f64> {
        self.value.parse().map_err(|_| PyValueError::new_err("value is not a float literal"))
    }

    fn __str__(&self) -> String {
        self.value.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "SeriesValue(value='{}', terms_used={}, tail_bound='{}', method='{}')",
            self.value, self.terms_used, self.tail_bound, self.method
        )
    }
}

/// Outcome of a sampled identity check.
#[pyclass(name = "IdentityReport", frozen)]
struct PyIdentityReport {
    #[pyo3(get)]
    name: String,
    #[pyo3(get)]
    trials: u32,
    #[pyo3(get)]
    seed: i64,
    #[pyo3(get)]
    target_digits: u32,
    #[pyo3(get)]
    worst_deviation: String,
    #[pyo3(get)]
    passed: bool,
    /// The report as one JSON line, in the CLI format.
    #[pyo3(get)]
    json: String,
    points: Vec<(String, String)>,
}

#[pymethods]
impl PyIdentityReport {
    /// The parameter point with the largest deviation, as decimal strings.
    #[getter]
    fn worst_point<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new_bound(py);
        for (k, v) in &self.points {
            d.set_item(k, v)?;
        }
        Ok(d)
    }

    fn __bool__(&self) -> bool {
        self.passed
    }

    fn __repr__(&self) -> String {
        format!(
            "IdentityReport(name='{}', passed={}, worst_deviation='{}')",
            self.name,
            if self.passed { "True" } else { "False" },
            self.worst_deviation
        )
    }
}

impl From<&IdentityReport> for PyIdentityReport {
    fn from(r: &IdentityReport) -> Self {
        Self {
            name: r.name.clone(),
            trials: r.trials,
            seed: r.seed,
            target_digits: r.target_digits,
            worst_deviation: r.worst_deviation.to_scientific(6),
            passed: r.pass,
            json: serde_json::to_string(r).expect("reports serialize"),
            points: r.worst_point.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }
}

/// Recurrence `H(n) = m1 H(n-1) + m2 H(n-2)` with `H(0) = 0`, `H(1) = 1`.
#[pyclass(name = "HoradamSequence", frozen)]
struct PyHoradam(HoradamSequence);

#[pymethods]
impl PyHoradam {
    #[new]
    fn new(m1: i64, m2: i64) -> PyResult<Self> {
        HoradamSequence::new(m1, m2).map(Self).map_err(to_py)
    }

    #[getter]
    fn m1(&self) -> i64 {
        self.0.m1()
    }

    #[getter]
    fn m2(&self) -> i64 {
        self.0.m2()
    }

    fn term<'py>(&self, py: Python<'py>, n: usize) -> PyResult<Bound<'py, PyAny>> {
        let builtins = py.import_bound("builtins")?;
        builtins.getattr("int")?.call1((self.0.term(n).to_string(),))
    }

    #[pyo3(signature = (digits = 30, method = "horadam"))]
    fn recip_sum(&self, digits: u32, method: &str) -> PyResult<PySeriesValue> {
        let ctx = context(digits)?;
        let v = eval_recip(&self.0, method, &ctx).map_err(to_py)?;
        Ok(PySeriesValue::new(&v, method, &ctx))
    }

    fn __repr__(&self) -> String {
        format!("HoradamSequence(m1={}, m2={})", self.0.m1(), self.0.m2())
    }
}

/// `sum_{n>=1} q^n / (1 - q^n)`.
#[pyfunction]
#[pyo3(signature = (q, digits = 30, method = "theta"))]
fn lambert(q: &Bound<'_, PyAny>, digits: u32, method: &str) -> PyResult<PySeriesValue> {
    let ctx = context(digits)?;
    let v = eval_lambert(&real(q, &ctx)?, method, &ctx).map_err(to_py)?;
    Ok(PySeriesValue::new(&v, method, &ctx))
}

/// `sum_{n>=1} x q^n / (1 - x q^n)`.
#[pyfunction]
#[pyo3(signature = (x, q, digits = 30, method = "theta"))]
fn glambert(x: &Bound<'_, PyAny>, q: &Bound<'_, PyAny>, digits: u32, method: &str) -> PyResult<PySeriesValue> {
    let ctx = context(digits)?;
    let v = eval_glambert(&real(x, &ctx)?, &real(q, &ctx)?, method, &ctx).map_err(to_py)?;
    Ok(PySeriesValue::new(&v, method, &ctx))
}

/// `sum_{n>=0} t^n / (1 - x q^n)`.
#[pyfunction]
#[pyo3(signature = (x, t, q, digits = 30, method = "theta"))]
fn qxt(
    x: &Bound<'_, PyAny>,
    t: &Bound<'_, PyAny>,
    q: &Bound<'_, PyAny>,
    digits: u32,
    method: &str,
) -> PyResult<PySeriesValue> {
    let ctx = context(digits)?;
    let p = QxtParams::new(real(x, &ctx)?, real(t, &ctx)?, real(q, &ctx)?, &ctx).map_err(to_py)?;
    let v = eval_qxt(&p, method, &ctx).map_err(to_py)?;
    Ok(PySeriesValue::new(&v, method, &ctx))
}

/// `sum_{n in Z} t^n / (1 - x q^n)` for `|q| < |t| < 1`.
#[pyfunction]
#[pyo3(signature = (x, t, q, digits = 30, method = "theta"))]
fn bilateral(
    x: &Bound<'_, PyAny>,
    t: &Bound<'_, PyAny>,
    q: &Bound<'_, PyAny>,
    digits: u32,
    method: &str,
) -> PyResult<PySeriesValue> {
    let ctx = context(digits)?;
    let p = BilateralParams::new(real(x, &ctx)?, real(t, &ctx)?, real(q, &ctx)?, &ctx).map_err(to_py)?;
    let v = eval_bilateral(&p, method, &ctx).map_err(to_py)?;
    Ok(PySeriesValue::new(&v, method, &ctx))
}

#[pyfunction]
#[pyo3(signature = (q, digits = 30))]
fn theta3(q: &Bound<'_, PyAny>, digits: u32) -> PyResult<PySeriesValue> {
    let ctx = context(digits)?;
    let v = qcore::theta3(&real(q, &ctx)?, &ctx).map_err(to_py)?;
    Ok(PySeriesValue::new(&v, "theta", &ctx))
}

/// The infinite product `(a; q)_inf`.
#[pyfunction]
#[pyo3(signature = (a, q, digits = 30))]
fn qpochhammer(a: &Bound<'_, PyAny>, q: &Bound<'_, PyAny>, digits: u32) -> PyResult<PySeriesValue> {
    let ctx = context(digits)?;
    let v = qcore::qpochhammer_inf(&real(a, &ctx)?, &real(q, &ctx)?, &ctx).map_err(to_py)?;
    Ok(PySeriesValue::new(&v, "product", &ctx))
}

/// Sum of `1/H(n)`, `n >= 1`; methods naive, horadam, gosper, split.
#[pyfunction]
#[pyo3(signature = (m1, m2, digits = 30, method = "horadam"))]
fn recip_sum(m1: i64, m2: i64, digits: u32, method: &str) -> PyResult<PySeriesValue> {
    PyHoradam::new(m1, m2)?.recip_sum(digits, method)
}

/// Names accepted by [`check_identity`].
#[pyfunction]
fn identity_names() -> Vec<String> {
    identities::registry()
        .iter()
        .map(|e| e.name.to_string())
        .chain([GOSPER_MATRIX.to_string()])
        .collect()
}

#[pyfunction]
#[pyo3(signature = (name, trials = 100, seed = 42, digits = 30, factors = None))]
fn check_identity(name: &str, trials: u32, seed: i64, digits: u32, factors: Option<u64>) -> PyResult<PyIdentityReport> {
    let ctx = context(digits)?;
    let report = run_check(name, trials, seed, factors, &ctx).map_err(to_py)?;
    Ok(PyIdentityReport::from(&report))
}

/// Every method of `series` side by side, as a dict.
#[pyfunction]
#[pyo3(name = "bench", signature = (series, q, x = None, t = None, digits = 30))]
fn bench_series<'py>(
    py: Python<'py>,
    series: &str,
    q: &Bound<'py, PyAny>,
    x: Option<&Bound<'py, PyAny>>,
    t: Option<&Bound<'py, PyAny>>,
    digits: u32,
) -> PyResult<Bound<'py, PyAny>> {
    let ctx = context(digits)?;
    let q = real(q, &ctx)?;
    let series = match series {
        "lambert" => BenchSeries::Lambert { q },
        "glambert" => BenchSeries::GLambert { x: required(x, "x", &ctx)?, q },
        "qxt" => BenchSeries::Qxt {
            x: required(x, "x", &ctx)?,
            t: required(t, "t", &ctx)?,
            q,
        },
        other => return Err(PyValueError::new_err(format!("unknown bench series {other:?}"))),
    };
    let report = run_bench(&series, &ctx).map_err(to_py)?;
    let text = serde_json::to_string(&report).expect("reports serialize");
    py.import_bound("json")?.getattr("loads")?.call1((text,))
}

#[pymodule]
#[pyo3(name = "lambertq")]
fn lambertq_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<PySeriesValue>()?;
    m.add_class::<PyIdentityReport>()?;
    m.add_class::<PyHoradam>()?;
    m.add("PoleError", py.get_type_bound::<PoleError>())?;
    m.add("ConvergenceError", py.get_type_bound::<ConvergenceError>())?;
    m.add_function(wrap_pyfunction!(lambert, m)?)?;
    m.add_function(wrap_pyfunction!(glambert, m)?)?;
    m.add_function(wrap_pyfunction!(qxt, m)?)?;
    m.add_function(wrap_pyfunction!(bilateral, m)?)?;
    m.add_function(wrap_pyfunction!(theta3, m)?)?;
    m.add_function(wrap_pyfunction!(qpochhammer, m)?)?;
    m.add_function(wrap_pyfunction!(recip_sum, m)?)?;
    m.add_function(wrap_pyfunction!(identity_names, m)?)?;
    m.add_function(wrap_pyfunction!(check_identity, m)?)?;
    m.add_function(wrap_pyfunction!(bench_series, m)?)?;
    m.add("__all__", PyList::new_bound(py, [
        "SeriesValue", "IdentityReport", "HoradamSequence", "PoleError", "ConvergenceError",
        "lambert", "glambert", "qxt", "bilateral", "theta3", "qpochhammer", "recip_sum",
        "identity_names", "check_identity", "bench",
    ]))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_tables_match_the_cli() {
        let c = make_context(20).unwrap();
        let q = c.parse("1/2").unwrap();
        let naive = eval_lambert(&q, "naive", &c).unwrap();
        let theta = eval_lambert(&q, "theta", &c).unwrap();
        assert_eq!(format_real(&naive.value, &c), format_real(&theta.value, &c));
        assert!(matches!(eval_lambert(&q, "alt", &c), Err(Error::InvalidArgument(_))));

        let pell = HoradamSequence::new(2, 1).unwrap();
        assert!(eval_recip(&pell, "gosper", &c).is_err());
        let fib = HoradamSequence::fibonacci();
        let split = eval_recip(&fib, "split", &c).unwrap();
        assert!(format_real(&split.value, &c).starts_with("3.35988566624317755"));
    }

    #[test]
    fn gosper_matrix_is_checked_by_name() {
        let c = make_context(20).unwrap();
        let r = run_check(GOSPER_MATRIX, 1, 1, Some(120), &c).unwrap();
        assert!(r.pass);
        assert!(identity_names().contains(&GOSPER_MATRIX.to_string()));
    }
}
