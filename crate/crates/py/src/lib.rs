//! Python bindings. Documents cross the boundary as JSON and come back as
//! plain dicts and lists.

use std::path::PathBuf;

use chartquiz_core::alignment::{overall_score as overall, AlignmentWeights};
use chartquiz_core::features::McqFeatureSet;
use chartquiz_core::gateway::SchemaRegistry;
use chartquiz_core::question::InstructorInput;
use chartquiz_core::students::CohortSpec;
use chartquiz_core::studio::{Studio as CoreStudio, StudioConfig, StudioError};
use chartquiz_core::templates::{TemplateQuery, TemplateStore};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(chartquiz, ChartquizError, PyException, "A studio operation failed; the message starts with its code.");

fn studio_err(e: StudioError) -> PyErr {
    ChartquizError::new_err(format!("[{}] {e}", e.code()))
}

fn to_py<'py>(py: Python<'py>, doc: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(doc).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_json<T: serde::de::DeserializeOwned>(what: &str, text: &str) -> PyResult<T> {
    serde_json::from_str(text).map_err(|e| PyValueError::new_err(format!("{what}: {e}")))
}

/// Weighted alignment score; weights default to 0.4 / 0.4 / 0.2.
#[pyfunction]
#[pyo3(signature = (cognitive, steps, semantic, weights=None))]
fn overall_score(cognitive: f64, steps: f64, semantic: f64, weights: Option<(f64, f64, f64)>) -> PyResult<f64> {
    let w = weights.map_or_else(AlignmentWeights::default, |(a, b, c)| AlignmentWeights { w_cognitive: a, w_steps: b, w_semantic: c });
    overall(cognitive, steps, semantic, &w).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Raises ValueError listing every violation when `doc` does not conform.
#[pyfunction]
fn validate(schema_id: &str, doc: &str) -> PyResult<()> {
    let value: serde_json::Value = from_json("document", doc)?;
    SchemaRegistry::builtin().validate(schema_id, &value).map_err(PyValueError::new_err)
}

/// Ranks the seed templates against a feature set given as JSON.
#[pyfunction]
#[pyo3(signature = (features, k=3))]
fn retrieve_templates(features: &str, k: usize) -> PyResult<Vec<(String, f64)>> {
    let features: McqFeatureSet = from_json("features", features)?;
    let store = TemplateStore::new();
    store.ingest_bundle(&TemplateStore::seed_bundle_dir()).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let ranked = store.retrieve(&TemplateQuery { features, k }).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(ranked.into_iter().map(|(t, s)| (t.id.clone(), s)).collect())
}

/// A studio over a data directory, in mock mode unless configured otherwise.
#[pyclass(name = "Studio", frozen)]
struct Studio {
    inner: CoreStudio,
}

#[pymethods]
impl Studio {
    #[new]
    #[pyo3(signature = (data_dir, fixtures=Vec::new(), config=None))]
    fn new(data_dir: PathBuf, fixtures: Vec<PathBuf>, config: Option<PathBuf>) -> PyResult<Self> {
        let mut cfg = match config {
            Some(p) => StudioConfig::load(Some(&p)).map_err(studio_err)?,
            None => StudioConfig::default(),
        };
        cfg.data_dir = data_dir;
        cfg.fixtures.extend(fixtures);
        Ok(Self { inner: CoreStudio::open(cfg).map_err(studio_err)? })
    }

    #[pyo3(signature = (title, model_id=None))]
    fn create_project<'py>(&self, py: Python<'py>, title: &str, model_id: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.create_project(title, model_id).map_err(studio_err)?)
    }

    fn project<'py>(&self, py: Python<'py>, pid: &str) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.project(pid).map_err(studio_err)?)
    }

    /// Extracts features from an instructor's free-text request.
    fn analyze<'py>(&self, py: Python<'py>, pid: &str, text: &str) -> PyResult<Bound<'py, PyAny>> {
        let input = InstructorInput::text(text);
        let f = py.detach(|| self.inner.analyze_requirements(pid, &input)).map_err(studio_err)?;
        to_py(py, &f)
    }

    /// Generates from `features` (JSON), or from the analyzed requirements.
    #[pyo3(signature = (pid, features=None))]
    fn generate<'py>(&self, py: Python<'py>, pid: &str, features: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
        let features = features.map(|f| from_json::<McqFeatureSet>("features", f)).transpose()?;
        let v = py.detach(|| self.inner.generate(pid, features)).map_err(studio_err)?;
        to_py(py, &v)
    }

    #[pyo3(signature = (pid, spec="{}"))]
    fn generate_cohort<'py>(&self, py: Python<'py>, pid: &str, spec: &str) -> PyResult<Bound<'py, PyAny>> {
        let spec: CohortSpec = from_json("cohort spec", spec)?;
        let view = py.detach(|| self.inner.generate_cohort(pid, &spec)).map_err(studio_err)?;
        to_py(py, &view)
    }

    fn simulate<'py>(&self, py: Python<'py>, pid: &str, vid: &str) -> PyResult<Bound<'py, PyAny>> {
        let run = py.detach(|| self.inner.simulate(pid, vid)).map_err(studio_err)?;
        to_py(py, &run)
    }

    fn sankey<'py>(&self, py: Python<'py>, pid: &str, rid: &str) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.sankey(pid, rid).map_err(studio_err)?)
    }

    #[pyo3(signature = (pid, rid, k=5))]
    fn strategies<'py>(&self, py: Python<'py>, pid: &str, rid: &str, k: usize) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.strategies(pid, rid, k).map_err(studio_err)?)
    }

    fn compare<'py>(&self, py: Python<'py>, pid: &str, rid: &str) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.compare(pid, rid).map_err(studio_err)?)
    }
}

#[pymodule]
fn chartquiz(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(overall_score, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(retrieve_templates, m)?)?;
    m.add_class::<Studio>()?;
    m.add("ChartquizError", m.py().get_type::<ChartquizError>())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use pyo3::types::PyDict;

    fn with_module(f: impl FnOnce(Python<'_>, &Bound<'_, PyModule>)) {
        Python::initialize();
        Python::attach(|py| {
            let m = PyModule::new(py, "chartquiz").unwrap();
            chartquiz(&m).unwrap();
            f(py, &m);
        });
    }

    #[test]
    fn module_scores_and_validates() {
        with_module(|py, m| {
            let x: f64 = m.getattr("overall_score").unwrap().call1((0.7, 0.6, 0.5)).unwrap().extract().unwrap();
            assert!((x - 0.62).abs() <= 1e-12);
            let err = m.getattr("overall_score").unwrap().call1((1.5, 0.5, 0.5)).unwrap_err();
            assert!(err.is_instance_of::<PyValueError>(py));
            assert!(m.getattr("validate").unwrap().call1(("cohort_spec", r#"{"size": 5}"#)).is_ok());
            assert!(m.getattr("validate").unwrap().call1(("cohort_spec", r#"{"size": "five"}"#)).is_err());
        });
    }

    #[test]
    fn studio_errors_carry_codes() {
        let dir = std::env::temp_dir().join(format!("chartquiz-py-{}", std::process::id()));
        with_module(|py, m| {
            let studio = m.getattr("Studio").unwrap().call1((dir.clone(),)).unwrap();
            let project = studio.call_method1("create_project", ("Bindings",)).unwrap();
            let project = project.cast::<PyDict>().unwrap();
            let pid: String = project.get_item("id").unwrap().unwrap().extract().unwrap();
            let err = studio.call_method1("simulate", (pid, "v1")).unwrap_err();
            assert!(err.is_instance_of::<ChartquizError>(py));
            assert!(err.value(py).to_string().starts_with("[UnknownVersion]"));
        });
        let _ = std::fs::remove_dir_all(dir);
    }
}
