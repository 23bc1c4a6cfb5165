//! Python bindings: datasets, training, evaluation, the ablation harness
//! and the numeric kernels, exposed as the `stagewin` module.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use stagewin::dataio::{self, TickSeries};
use stagewin::eval::{self, EvalSplit, MetricsReport, RunConfig, Variant};
use stagewin::model::{self, Checkpoint};
use stagewin::numerics::{self, Matrix};
use stagewin::pipeline;
use stagewin::training;

create_exception!(stagewin, StagewinError, PyException, "Raised for any stagewin failure.");

fn to_py(e: stagewin::Error) -> PyErr {
    StagewinError::new_err(format!("{}: {}", e.kind(), e))
}

fn config(json: Option<&str>) -> PyResult<RunConfig> {
    json.map_or_else(|| Ok(RunConfig::default()), |j| RunConfig::from_json(j).map_err(to_py))
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(StagewinError::new_err("shape: ragged rows"));
    }
    Matrix::from_vec(r, c, rows.into_iter().flatten().collect()).map_err(to_py)
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

fn split(name: &str) -> PyResult<EvalSplit> {
    name.parse().map_err(to_py)
}

fn metrics_dict<'py>(py: Python<'py>, m: &MetricsReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("accuracy", m.accuracy)?;
    d.set_item("f1", m.f1)?;
    d.set_item("auc_roc", m.auc_roc)?;
    d.set_item("threshold", m.threshold)?;
    d.set_item("samples", m.samples)?;
    d.set_item("tp", m.confusion.tp)?;
    d.set_item("fp", m.confusion.fp)?;
    d.set_item("tn", m.confusion.tn)?;
    d.set_item("fn", m.confusion.fneg)?;
    Ok(d)
}

/// Timestamped feature rows with binary labels.
#[pyclass(name = "TickSeries", module = "stagewin", frozen)]
struct PyTickSeries {
    inner: TickSeries,
}

#[pymethods]
impl PyTickSeries {
    #[staticmethod]
    fn load_csv(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: dataio::load_csv(path).map_err(to_py)?,
        })
    }

    /// Synthetic order-book series; `config_json` may carry a `synth` section.
    #[staticmethod]
    #[pyo3(signature = (config_json=None))]
    fn synthetic(config_json: Option<&str>) -> PyResult<Self> {
        let cfg = config(config_json)?;
        Ok(Self {
            inner: dataio::generate_synthetic(&cfg.synth).map_err(to_py)?.series,
        })
    }

    fn write_csv(&self, path: &str) -> PyResult<()> {
        dataio::write_csv(&self.inner, path).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.inner.feature_names().to_vec()
    }

    #[getter]
    fn timestamps(&self) -> Vec<i64> {
        self.inner.records().iter().map(|r| r.timestamp).collect()
    }

    #[getter]
    fn labels(&self) -> Vec<bool> {
        self.inner.labels().collect()
    }

    #[getter]
    fn features(&self) -> Vec<Vec<f64>> {
        self.inner.records().iter().map(|r| r.features.clone()).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "TickSeries(len={}, dim={}, positives={})",
            self.inner.len(),
            self.inner.dim(),
            self.inner.positive_count()
        )
    }
}

/// Trained model with its window layout, standardization and threshold.
#[pyclass(name = "Checkpoint", module = "stagewin", frozen)]
struct PyCheckpoint {
    inner: Checkpoint,
}

#[pymethods]
impl PyCheckpoint {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: Checkpoint::load(path).map_err(to_py)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(to_py)
    }

    #[getter]
    fn threshold(&self) -> f64 {
        self.inner.threshold
    }

    #[getter]
    fn param_count(&self) -> usize {
        self.inner.param_count
    }

    #[getter]
    fn params(&self) -> Vec<f64> {
        self.inner.params.clone()
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    /// Metrics on one chronological split (`train`, `val`, `test` or `all`).
    #[pyo3(signature = (series, split="test"))]
    fn evaluate<'py>(&self, py: Python<'py>, series: &PyTickSeries, split: &str) -> PyResult<Bound<'py, PyDict>> {
        let set = eval::prepare_for_checkpoint(&series.inner, &self.inner, self::split(split)?).map_err(to_py)?;
        let params = self.inner.model_params().map_err(to_py)?;
        let (m, _) = eval::evaluate(&set, &params, &self.inner.model, self.inner.threshold).map_err(to_py)?;
        metrics_dict(py, &m)
    }

    /// `(timestamp, probability, predicted, actual)` per window.
    #[pyo3(signature = (series, split="test"))]
    fn detect(&self, series: &PyTickSeries, split: &str) -> PyResult<Vec<(i64, f64, bool, bool)>> {
        let set = eval::prepare_for_checkpoint(&series.inner, &self.inner, self::split(split)?).map_err(to_py)?;
        let params = self.inner.model_params().map_err(to_py)?;
        let rows = eval::timeline(&set, &params, &self.inner.model, self.inner.threshold).map_err(to_py)?;
        Ok(rows
            .into_iter()
            .map(|r| (r.timestamp, r.probability, r.predicted, r.actual))
            .collect())
    }
}

/// Trains on the 70% split; returns the checkpoint and the per-epoch
/// `(epoch, train_loss, val_loss, lr)` history.
#[pyfunction]
#[pyo3(signature = (series, config_json=None))]
fn train(
    py: Python<'_>,
    series: &PyTickSeries,
    config_json: Option<&str>,
) -> PyResult<(PyCheckpoint, Vec<(usize, f64, f64, f64)>)> {
    let cfg = config(config_json)?;
    let trained = py
        .detach(|| eval::train_model(&series.inner, &cfg))
        .map_err(to_py)?;
    let history = trained
        .fit
        .history
        .iter()
        .map(|r| (r.epoch, r.train_loss, r.val_loss, r.lr))
        .collect();
    Ok((PyCheckpoint { inner: trained.checkpoint() }, history))
}

/// One dict per (seed, variant) with test metrics or an `error` entry.
#[pyfunction]
#[pyo3(signature = (series, config_json=None, seeds=5))]
fn ablate<'py>(
    py: Python<'py>,
    series: &PyTickSeries,
    config_json: Option<&str>,
    seeds: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = config(config_json)?;
    let seed_list: Vec<u64> = (0..seeds as u64).map(|i| cfg.train.seed.wrapping_add(i)).collect();
    let table = py.detach(|| eval::ablate(&series.inner, &cfg, &seed_list));
    table
        .rows
        .iter()
        .map(|row| {
            let d = match &row.outcome {
                Ok(m) => metrics_dict(py, m)?,
                Err(e) => {
                    let d = PyDict::new(py);
                    d.set_item("error", e)?;
                    d
                }
            };
            d.set_item("variant", row.variant.name())?;
            d.set_item("seed", row.seed)?;
            Ok(d)
        })
        .collect()
}

#[pyfunction]
fn ablation_variants() -> Vec<&'static str> {
    Variant::ALL.iter().map(|v| v.name()).collect()
}

#[pyfunction]
fn matmul(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    Ok(rows(&numerics::matmul(&matrix(a)?, &matrix(b)?).map_err(to_py)?))
}

#[pyfunction]
fn softmax_rows(m: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    Ok(rows(&numerics::softmax_rows(&matrix(m)?)))
}

#[pyfunction]
#[pyo3(signature = (z, epsilon=1e-6))]
fn entropy_weights(z: Vec<Vec<f64>>, epsilon: f64) -> PyResult<Vec<f64>> {
    Ok(model::entropy_weights(&matrix(z)?, epsilon).w)
}

#[pyfunction]
fn positional_encoding(window: usize, d: usize) -> Vec<Vec<f64>> {
    rows(&pipeline::positional_encoding(window, d).table)
}

#[pyfunction]
fn auc_roc(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<f64> {
    eval::auc_roc(&scores, &labels).map_err(to_py)
}

/// `(accuracy, f1, (tp, fp, tn, fn))`.
#[pyfunction]
fn accuracy_f1(predictions: Vec<bool>, labels: Vec<bool>) -> PyResult<(f64, f64, (usize, usize, usize, usize))> {
    let (acc, f1, c) = eval::accuracy_f1(&predictions, &labels).map_err(to_py)?;
    Ok((acc, f1, (c.tp, c.fp, c.tn, c.fneg)))
}

/// `(tau, f1, degenerate)`.
#[pyfunction]
fn select_threshold(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<(f64, f64, bool)> {
    let t = training::select_threshold(&scores, &labels).map_err(to_py)?;
    Ok((t.tau, t.f1, t.degenerate))
}

#[pymodule]
#[pyo3(name = "stagewin")]
fn stagewin_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("StagewinError", m.py().get_type::<StagewinError>())?;
    m.add_class::<PyTickSeries>()?;
    m.add_class::<PyCheckpoint>()?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(ablate, m)?)?;
    m.add_function(wrap_pyfunction!(ablation_variants, m)?)?;
    m.add_function(wrap_pyfunction!(matmul, m)?)?;
    m.add_function(wrap_pyfunction!(softmax_rows, m)?)?;
    m.add_function(wrap_pyfunction!(entropy_weights, m)?)?;
    m.add_function(wrap_pyfunction!(positional_encoding, m)?)?;
    m.add_function(wrap_pyfunction!(auc_roc, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy_f1, m)?)?;
    m.add_function(wrap_pyfunction!(select_threshold, m)?)?;
    Ok(())
}
