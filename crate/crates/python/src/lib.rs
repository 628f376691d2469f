//! Python bindings: models, encoders, exact measures, IB curves and training.

use std::collections::BTreeSet;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use infolab::encoders::EncoderSpec;
use infolab::harness::resolve_model;
use infolab::ib::{ib_curve, Solver};
use infolab::infocalc::{
    conditional_entropy, entropy_y, layer_losses, mil, mutual_information, optimal_decoder,
    pushforward, risk_exact,
};
use infolab::learner::{train, MLPArch, TrainConfig};
use infolab::model::{HistogramModel, ModelSpec};

fn py_err(e: infolab::Error) -> PyErr {
    PyValueError::new_err(format!("{}: {e}", e.kind()))
}

#[pyclass(name = "Model", frozen)]
struct PyModel {
    id: String,
    inner: HistogramModel,
}

#[pymethods]
impl PyModel {
    /// Preset name or path to a model JSON file.
    #[new]
    fn new(name_or_path: &str) -> PyResult<Self> {
        let (id, inner) = resolve_model(name_or_path).map_err(py_err)?;
        Ok(PyModel { id, inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec = ModelSpec::from_json(text).map_err(py_err)?;
        let id = spec.id.clone().unwrap_or_else(|| "model".into());
        Ok(PyModel { id, inner: spec.build().map_err(py_err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        ModelSpec::from_model(&self.inner, Some(self.id.clone())).to_json().map_err(py_err)
    }

    #[getter]
    fn id(&self) -> &str {
        &self.id
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn classes(&self) -> usize {
        self.inner.classes()
    }

    #[getter]
    fn prior(&self) -> Vec<f64> {
        self.inner.prior().to_vec()
    }

    fn mutual_information(&self) -> f64 {
        mutual_information(&self.inner).bits()
    }

    fn conditional_entropy(&self) -> f64 {
        conditional_entropy(&self.inner).bits()
    }

    fn entropy_y(&self) -> f64 {
        entropy_y(&self.inner).bits()
    }

    fn true_posterior(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.true_posterior(&x).map_err(py_err)
    }

    /// `(features, labels)` with features as a list of rows.
    fn sample(&self, seed: u64, n: usize) -> PyResult<(Vec<Vec<f64>>, Vec<usize>)> {
        let d = self.inner.sample(seed, n).map_err(py_err)?;
        let xs = (0..d.len()).map(|i| d.x(i).to_vec()).collect();
        Ok((xs, d.labels().to_vec()))
    }

    /// Pools the listed 0-based coordinates.
    fn mask(&self, coords: Vec<usize>) -> PyResult<Self> {
        let set: BTreeSet<usize> = coords.into_iter().collect();
        let inner = self.inner.mask(&set).map_err(py_err)?;
        Ok(PyModel { id: format!("{}-masked", self.id), inner })
    }

    fn marginal(&self, coords: Vec<usize>) -> PyResult<Self> {
        let inner = self.inner.marginal(&coords).map_err(py_err)?;
        Ok(PyModel { id: format!("{}-marginal", self.id), inner })
    }

    fn __repr__(&self) -> String {
        format!("Model({:?}, dim={}, classes={})", self.id, self.dim(), self.classes())
    }
}

#[pyclass(name = "Encoder", frozen)]
struct PyEncoder {
    inner: infolab::Encoder,
}

#[pymethods]
impl PyEncoder {
    /// Encoder JSON (or a path to one). `model` is needed by grid-dependent
    /// variants such as `cells` and `orbit`.
    #[new]
    #[pyo3(signature = (spec, model=None))]
    fn new(spec: &str, model: Option<&PyModel>) -> PyResult<Self> {
        let s = EncoderSpec::from_arg(spec).map_err(py_err)?;
        let inner = s.build(model.map(|m| &m.inner)).map_err(py_err)?;
        Ok(PyEncoder { inner })
    }

    fn describe(&self) -> String {
        self.inner.describe()
    }

    /// Vector outputs come back as lists, discrete labels as strings.
    fn apply(&self, py: Python<'_>, x: Vec<f64>) -> PyResult<Py<PyAny>> {
        match self.inner.apply(&infolab::Representation::Vector(x)).map_err(py_err)? {
            infolab::Representation::Vector(v) => Ok(v.into_pyobject(py)?.into_any().unbind()),
            infolab::Representation::Label(l) => Ok(l.to_string().into_pyobject(py)?.into_any().unbind()),
        }
    }

    fn __repr__(&self) -> String {
        format!("Encoder({})", self.inner.describe())
    }
}

/// Information loss `I(X;Y) - I(U;Y)` in bits.
#[pyfunction]
fn information_loss(model: &PyModel, encoder: &PyEncoder) -> PyResult<f64> {
    Ok(mil(&model.inner, &encoder.inner).map_err(py_err)?.bits())
}

/// `I(U;Y)` in bits.
#[pyfunction]
fn representation_information(model: &PyModel, encoder: &PyEncoder) -> PyResult<f64> {
    Ok(pushforward(&model.inner, &encoder.inner).map_err(py_err)?.mi().bits())
}

/// Risk of the optimal decoder, split into `total`, `conditional_entropy`,
/// `encoder_effect` and `decoder_effect` (bits).
#[pyfunction]
fn optimal_risk(model: &PyModel, encoder: &PyEncoder) -> PyResult<Vec<(String, f64)>> {
    let dec = optimal_decoder(&model.inner, &encoder.inner).map_err(py_err)?;
    let d = risk_exact(&model.inner, &encoder.inner, &dec).map_err(py_err)?;
    Ok(vec![
        ("total".into(), d.total.bits()),
        ("conditional_entropy".into(), d.conditional_entropy.bits()),
        ("encoder_effect".into(), d.encoder_effect.bits()),
        ("decoder_effect".into(), d.decoder_effect.bits()),
    ])
}

/// Loss contributed by each layer of a chain encoder.
#[pyfunction]
fn chain_losses(model: &PyModel, encoder: &PyEncoder) -> PyResult<Vec<f64>> {
    let l = layer_losses(&model.inner, &encoder.inner.layers()).map_err(py_err)?;
    Ok(l.into_iter().map(|v| v.bits()).collect())
}

/// `(B, H(U), I(U;Y), groups)` per budget.
#[pyfunction]
#[pyo3(signature = (model, budgets, solver="greedy"))]
fn ib(model: &PyModel, budgets: Vec<f64>, solver: &str) -> PyResult<Vec<(f64, f64, f64, usize)>> {
    let solver: Solver = solver.parse().map_err(py_err)?;
    let curve = ib_curve(&model.inner, &budgets, solver).map_err(py_err)?;
    Ok(curve
        .points
        .iter()
        .map(|p| (p.b_bits, p.h_u.bits(), p.i_uy.bits(), p.num_groups()))
        .collect())
}

/// Trains an MLP and returns `(epoch, train_loss_bits, val_risk_bits,
/// val_se_bits)` per epoch.
#[pyfunction]
#[pyo3(signature = (model, n, arch="mlp32", epochs=30, seed=0, val_size=100_000, pre_encoder=None))]
fn train_mlp(
    py: Python<'_>,
    model: &PyModel,
    n: usize,
    arch: &str,
    epochs: usize,
    seed: u64,
    val_size: usize,
    pre_encoder: Option<&PyEncoder>,
) -> PyResult<Vec<(usize, f64, f64, f64)>> {
    let cfg = TrainConfig {
        epochs,
        seed,
        val_size,
        pre_encoder: pre_encoder.map(|e| e.inner.clone()),
        ..TrainConfig::default()
    };
    let input = cfg.input_dim(&model.inner).map_err(py_err)?;
    let arch = MLPArch::preset(arch, input, model.inner.classes()).map_err(py_err)?;
    let hist = py
        .detach(|| train(&model.inner, n, &arch, &cfg))
        .map_err(py_err)?;
    Ok(hist
        .records
        .iter()
        .map(|r| (r.epoch, r.train_loss_bits, r.val_risk_bits, r.val_se_bits))
        .collect())
}

#[pymodule(name = "infolab")]
fn infolab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PyEncoder>()?;
    m.add_function(wrap_pyfunction!(information_loss, m)?)?;
    m.add_function(wrap_pyfunction!(representation_information, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_risk, m)?)?;
    m.add_function(wrap_pyfunction!(chain_losses, m)?)?;
    m.add_function(wrap_pyfunction!(ib, m)?)?;
    m.add_function(wrap_pyfunction!(train_mlp, m)?)?;
    m.add("PRESETS", infolab::model::presets::PRESET_NAMES.to_vec())?;
    Ok(())
}
