//! Python bindings: datasets, the sharing pipeline and the verifier toolkit.

use std::str::FromStr;

use ::genoshare as core;
use core::calibration::{KappaVariant, DEFAULT_SMOOTHING};
use core::gwas::{self, ContingencyTable, TestKind};
use core::pipeline::{self, PrivacyBudget, SanitizeOptions, DEFAULT_SPLIT};
use core::privacy_eval::{self, Calibration, Distance, HdtOptions};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: core::Error) -> PyErr {
    match e {
        core::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(format!("{}: {other}", other.kind())),
    }
}

/// Genotype matrix: individuals by SNPs, entries 0, 1 or 2.
#[pyclass(name = "SnpMatrix", module = "genoshare")]
struct PySnpMatrix {
    inner: core::data::SnpMatrix,
}

#[pymethods]
impl PySnpMatrix {
    #[new]
    #[pyo3(signature = (rows, snp_ids = None))]
    fn new(rows: Vec<Vec<u8>>, snp_ids: Option<Vec<String>>) -> PyResult<Self> {
        let inner = match snp_ids {
            Some(ids) => core::data::SnpMatrix::from_rows(&rows, ids),
            None => core::data::SnpMatrix::from_rows_default_ids(&rows),
        }
        .map_err(err)?;
        Ok(PySnpMatrix { inner })
    }

    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        Ok(PySnpMatrix { inner: core::data::read_dataset(path).map_err(err)? })
    }

    fn write(&self, path: &str) -> PyResult<()> {
        core::data::write_dataset(&self.inner, path).map_err(err)
    }

    #[getter]
    fn rows(&self) -> usize {
        self.inner.rows()
    }

    #[getter]
    fn cols(&self) -> usize {
        self.inner.cols()
    }

    #[getter]
    fn snp_ids(&self) -> Vec<String> {
        self.inner.snp_ids().to_vec()
    }

    fn get(&self, i: usize, j: usize) -> PyResult<u8> {
        if i >= self.inner.rows() || j >= self.inner.cols() {
            return Err(PyValueError::new_err(format!("index ({i}, {j}) out of range")));
        }
        Ok(self.inner.get(i, j))
    }

    fn to_rows(&self) -> Vec<Vec<u8>> {
        self.inner.to_rows()
    }

    fn __len__(&self) -> usize {
        self.inner.rows()
    }

    fn __repr__(&self) -> String {
        format!("SnpMatrix(rows={}, cols={})", self.inner.rows(), self.inner.cols())
    }
}

fn test_kind(test: &str) -> PyResult<TestKind> {
    TestKind::from_str(test).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (n_case, n_control, snps, n_assoc, maf_shift, seed = 0))]
fn generate_synthetic(
    n_case: usize,
    n_control: usize,
    snps: usize,
    n_assoc: usize,
    maf_shift: f64,
    seed: u64,
) -> PyResult<(PySnpMatrix, PySnpMatrix)> {
    let params = core::data::SyntheticParams { n_case, n_control, snps, n_assoc, maf_shift };
    let (case, control) = core::data::generate_synthetic(&params, seed).map_err(err)?;
    Ok((PySnpMatrix { inner: case }, PySnpMatrix { inner: control }))
}

/// Shares `data` under `epsilon`-differential privacy. Returns a dict with the
/// shared and XOR-only datasets plus the noise calibration.
#[pyfunction]
#[pyo3(signature = (data, reference, epsilon, split = DEFAULT_SPLIT, seed = 0, kappa = "proof-positive-part", smoothing = DEFAULT_SMOOTHING))]
#[allow(clippy::too_many_arguments)]
fn sanitize<'py>(
    py: Python<'py>,
    data: &PySnpMatrix,
    reference: &PySnpMatrix,
    epsilon: f64,
    split: f64,
    seed: u64,
    kappa: &str,
    smoothing: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let options = SanitizeOptions {
        budget: PrivacyBudget::new(epsilon, split).map_err(err)?,
        kappa_variant: KappaVariant::from_str(kappa).map_err(err)?,
        smoothing,
    };
    let out = pipeline::sanitize(&data.inner, &reference.inner, &options, seed).map_err(err)?;
    let profile = PyDict::new(py);
    profile.set_item("flip_prob", &out.profile.flip_prob)?;
    profile.set_item("kappa", &out.profile.kappa)?;
    profile.set_item("lambda_norm", out.profile.lambda_norm)?;
    profile.set_item("s_f", out.profile.s_f)?;
    profile.set_item("eps_x", out.budget.eps_x)?;
    profile.set_item("eps_c", out.budget.eps_c)?;
    profile.set_item("half_branch_bits", out.profile.half_branch_bits)?;
    let result = PyDict::new(py);
    result.set_item("shared", PySnpMatrix { inner: out.shared })?;
    result.set_item("perturbed", PySnpMatrix { inner: out.perturbed })?;
    result.set_item("profile", profile)?;
    Ok(result)
}

/// SNPs ranked by association, strongest first, as `(index, snp, statistic, p_value)`.
#[pyfunction]
#[pyo3(signature = (case, control, test = "chi2"))]
fn rank_snps(case: &PySnpMatrix, control: &PySnpMatrix, test: &str) -> PyResult<Vec<(usize, String, f64, f64)>> {
    let ranking = gwas::rank_snps(&case.inner, &control.inner, test_kind(test)?).map_err(err)?;
    Ok(ranking.entries.into_iter().map(|e| (e.index, e.snp, e.statistic, e.p_value)).collect())
}

#[pyfunction]
#[pyo3(signature = (case, control, omega = 0.05, delta = 0.0, test = "chi2"))]
fn shift_findings(case: &PySnpMatrix, control: &PySnpMatrix, omega: f64, delta: f64, test: &str) -> PyResult<Vec<usize>> {
    let ranking = gwas::rank_snps(&case.inner, &control.inner, test_kind(test)?).map_err(err)?;
    gwas::shift_findings(&ranking, omega, delta).map_err(err)
}

/// Retention of `reported` column indices in the shared dataset's top window.
#[pyfunction]
#[pyo3(signature = (reported, shared, control, threshold, omega = 0.05, zeta = 0.7, test = "chi2"))]
#[allow(clippy::too_many_arguments)]
fn validate<'py>(
    py: Python<'py>,
    reported: Vec<usize>,
    shared: &PySnpMatrix,
    control: &PySnpMatrix,
    threshold: f64,
    omega: f64,
    zeta: f64,
    test: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let ranking = gwas::rank_snps(&shared.inner, &control.inner, test_kind(test)?).map_err(err)?;
    let r = gwas::validate(&reported, &ranking, omega, zeta, threshold).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("window", r.window)?;
    d.set_item("reported", r.reported)?;
    d.set_item("retained", r.retained)?;
    d.set_item("retention_ratio", r.retention_ratio)?;
    d.set_item("reproducible", r.verdict == gwas::Verdict::Reproducible)?;
    Ok(d)
}

/// `(statistic, df, p_value)` for genotype counts of the two groups.
#[pyfunction]
fn chi_square(case: [u64; 3], control: [u64; 3]) -> PyResult<(f64, u32, f64)> {
    let t = ContingencyTable::new(case, control).map_err(err)?;
    let c = gwas::chi_square(&t).map_err(err)?;
    Ok((c.statistic, c.df, c.p_value))
}

#[pyfunction]
fn odds_ratio<'py>(py: Python<'py>, case: [u64; 3], control: [u64; 3]) -> PyResult<Bound<'py, PyDict>> {
    let t = ContingencyTable::new(case, control).map_err(err)?;
    let o = gwas::odds_ratio(&t).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("odds_ratio", o.odds_ratio)?;
    d.set_item("ci", (o.ci_low, o.ci_high))?;
    d.set_item("se", o.se)?;
    d.set_item("z", o.z)?;
    d.set_item("p_value", o.p_value)?;
    d.set_item("corrected", o.corrected)?;
    Ok(d)
}

/// Optimal transport plan between two genotype distributions on {0, 1, 2}.
#[pyfunction]
fn ot_plan(source: [f64; 3], target: [f64; 3]) -> PyResult<([[f64; 3]; 3], f64)> {
    let plan = core::restoration::ot_plan(source, target).map_err(err)?;
    Ok((plan.t, plan.cost()))
}

#[pyfunction]
fn utility_metrics<'py>(py: Python<'py>, original: &PySnpMatrix, shared: &PySnpMatrix) -> PyResult<Bound<'py, PyDict>> {
    let u = privacy_eval::utility_metrics(&original.inner, &shared.inner).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("point_error", u.point_error)?;
    d.set_item("sample_error", u.sample_error)?;
    d.set_item("mean_error", u.mean_error)?;
    d.set_item("variance_error", u.variance_error)?;
    Ok(d)
}

/// Recall of the Hamming-distance membership attack on `members`.
#[pyfunction]
#[pyo3(signature = (shared, control, members, fpr = 0.05, calibration = "leave-one-out-control", distance = "genotype"))]
fn attack_power(
    shared: &PySnpMatrix,
    control: &PySnpMatrix,
    members: &PySnpMatrix,
    fpr: f64,
    calibration: &str,
    distance: &str,
) -> PyResult<f64> {
    let options = HdtOptions {
        false_positive_rate: fpr,
        calibration: Calibration::from_str(calibration).map_err(err)?,
        distance: Distance::from_str(distance).map_err(err)?,
    };
    let model = privacy_eval::hdt_calibrate(&shared.inner, &control.inner, options).map_err(err)?;
    privacy_eval::attack_power(&model, &members.inner).map_err(err)
}

#[pymodule]
fn genoshare(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySnpMatrix>()?;
    m.add_function(wrap_pyfunction!(generate_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(sanitize, m)?)?;
    m.add_function(wrap_pyfunction!(rank_snps, m)?)?;
    m.add_function(wrap_pyfunction!(shift_findings, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(chi_square, m)?)?;
    m.add_function(wrap_pyfunction!(odds_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(ot_plan, m)?)?;
    m.add_function(wrap_pyfunction!(utility_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(attack_power, m)?)?;
    Ok(())
}
