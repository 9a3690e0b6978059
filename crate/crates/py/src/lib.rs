//! Python bindings. Nets and trajectories are wrapped as classes; the
//! remaining structured values (wiring diagrams, open nets, fit specs and
//! results) cross the boundary as JSON strings in the same formats the
//! command line tool reads and writes.

use std::collections::BTreeMap;

use opetri_core::analyze::{self, Dataset, FitSpec, OutcomeSpec};
use opetri_core::compose::{oapply, Binding, OpenPetriNet, Uwd};
use opetri_core::dot::{to_dot, DotOptions};
use opetri_core::dynamics::mass_action;
use opetri_core::fixtures;
use opetri_core::iso::is_isomorphic;
use opetri_core::morphism::TypedPetriNet;
use opetri_core::petri::{conserves_population, validate_net, PetriNet};
use opetri_core::solve::{self, Method, SolveConfig, Trajectory};
use opetri_core::stratify;
use opetri_core::uwd_dsl;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "PetriNet", module = "opetri")]
pub struct PyPetriNet {
    inner: PetriNet,
}

#[pymethods]
impl PyPetriNet {
    /// `transitions` holds `(name, rate, inputs, outputs)` with species
    /// repeated for multiplicity.
    #[new]
    fn new(
        species: Vec<String>,
        transitions: Vec<(String, f64, Vec<String>, Vec<String>)>,
    ) -> PyResult<Self> {
        let mut net = PetriNet::new();
        for s in &species {
            net.add_species(s.clone());
        }
        let idx = |names: &[String]| -> PyResult<Vec<usize>> {
            names
                .iter()
                .map(|n| {
                    net.species_index(n)
                        .ok_or_else(|| PyValueError::new_err(format!("unknown species '{n}'")))
                })
                .collect()
        };
        let mut arcs = Vec::new();
        for (name, rate, ins, outs) in &transitions {
            arcs.push((name.clone(), *rate, idx(ins)?, idx(outs)?));
        }
        for (name, rate, ins, outs) in arcs {
            net.add_transition(name, rate, &ins, &outs);
        }
        Ok(Self { inner: net })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: serde_json::from_str(text).map_err(err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner).map_err(err)
    }

    #[getter]
    fn species(&self) -> Vec<String> {
        self.inner.species_names()
    }

    #[getter]
    fn transitions(&self) -> Vec<String> {
        self.inner.transition_names()
    }

    #[getter]
    fn rates(&self) -> BTreeMap<String, f64> {
        self.inner
            .transitions
            .iter()
            .map(|t| (t.name.clone(), t.rate))
            .collect()
    }

    /// Well-formedness problems, empty when the net is valid.
    fn validate(&self) -> Vec<String> {
        validate_net(&self.inner)
            .iter()
            .map(|v| v.to_string())
            .collect()
    }

    fn conserves_population(&self) -> bool {
        conserves_population(&self.inner)
    }

    /// Mass-action derivative at state `u`.
    fn mass_action(&self, u: Vec<f64>) -> PyResult<Vec<f64>> {
        self.check()?;
        if u.len() != self.inner.species.len() {
            return Err(PyValueError::new_err(format!(
                "state has {} entries for {} species",
                u.len(),
                self.inner.species.len()
            )));
        }
        Ok(mass_action(&self.inner).eval(0.0, &u, None))
    }

    fn with_rates(&self, rates: BTreeMap<String, f64>) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.with_rates(&rate_vector(&self.inner, &rates)?),
        })
    }

    #[pyo3(signature = (name = None, rates = false))]
    fn to_dot(&self, name: Option<String>, rates: bool) -> String {
        let opts = DotOptions {
            name,
            show_rates: rates,
            ..DotOptions::default()
        };
        to_dot(&self.inner, &opts)
    }

    fn is_isomorphic(&self, other: &PyPetriNet) -> PyResult<bool> {
        Ok(is_isomorphic(&self.inner, &other.inner)
            .map_err(err)?
            .is_some())
    }

    fn __eq__(&self, other: &PyPetriNet) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "PetriNet(species={:?}, transitions={:?})",
            self.inner.species_names(),
            self.inner.transition_names()
        )
    }
}

impl PyPetriNet {
    fn check(&self) -> PyResult<()> {
        let v = validate_net(&self.inner);
        if v.is_empty() {
            Ok(())
        } else {
            Err(PyValueError::new_err(format!("malformed net: {}", v[0])))
        }
    }
}

fn rate_vector(net: &PetriNet, overrides: &BTreeMap<String, f64>) -> PyResult<Vec<f64>> {
    let mut r = net.rates();
    for (k, v) in overrides {
        let t = net
            .transition_index(k)
            .ok_or_else(|| PyValueError::new_err(format!("'{k}' is not a transition")))?;
        r[t] = *v;
    }
    Ok(r)
}

#[pyclass(name = "TypedPetriNet", module = "opetri")]
pub struct PyTypedPetriNet {
    inner: TypedPetriNet,
}

#[pymethods]
impl PyTypedPetriNet {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: serde_json::from_str(text).map_err(err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner).map_err(err)
    }

    #[getter]
    fn net(&self) -> PyPetriNet {
        PyPetriNet {
            inner: self.inner.net.clone(),
        }
    }

    #[getter]
    fn type_net(&self) -> PyPetriNet {
        PyPetriNet {
            inner: self.inner.type_net.clone(),
        }
    }

    /// Typing problems, empty when the typing is a valid morphism.
    fn validate(&self) -> Vec<String> {
        self.inner
            .validate()
            .iter()
            .map(|v| v.to_string())
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "TypedPetriNet(species={:?}, type_species={:?})",
            self.inner.net.species_names(),
            self.inner.type_net.species_names()
        )
    }
}

#[pyclass(name = "Trajectory", module = "opetri")]
pub struct PyTrajectory {
    inner: Trajectory,
}

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times.clone()
    }

    #[getter]
    fn states(&self) -> Vec<Vec<f64>> {
        self.inner.states.clone()
    }

    #[getter]
    fn var_names(&self) -> Vec<String> {
        self.inner.var_names.clone()
    }

    fn column(&self, name: &str) -> PyResult<Vec<f64>> {
        let k = self
            .inner
            .var_index(name)
            .ok_or_else(|| PyValueError::new_err(format!("no variable '{name}'")))?;
        Ok(self.inner.column(k))
    }

    fn final_state(&self) -> Vec<f64> {
        self.inner.final_state().to_vec()
    }

    /// Linear interpolation; `None` outside the solved interval.
    fn interpolate(&self, t: f64) -> Option<Vec<f64>> {
        self.inner.interpolate(t)
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn __len__(&self) -> usize {
        self.inner.times.len()
    }
}

fn config(t0: f64, t1: f64, method: &str, dt: f64, tol: f64) -> PyResult<SolveConfig> {
    let method = match method {
        "rk4" => Method::Rk4,
        "rk45" => Method::Rk45,
        other => return Err(PyValueError::new_err(format!("unknown method '{other}'"))),
    };
    Ok(SolveConfig {
        t0,
        t1,
        dt,
        method,
        abs_tol: tol,
        rel_tol: tol,
        ..SolveConfig::default()
    })
}

fn state(net: &PetriNet, u0: &BTreeMap<String, f64>) -> PyResult<Vec<f64>> {
    if let Some(k) = u0.keys().find(|k| net.species_index(k).is_none()) {
        return Err(PyValueError::new_err(format!("'{k}' is not a species")));
    }
    net.species
        .iter()
        .map(|s| {
            u0.get(&s.name).copied().ok_or_else(|| {
                PyValueError::new_err(format!("missing initial value for '{}'", s.name))
            })
        })
        .collect()
}

/// Mass-action trajectory of `net` from the initial values `u0`.
#[pyfunction]
#[pyo3(signature = (net, u0, t1, t0 = 0.0, method = "rk45", dt = 0.01, tol = 1e-8))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    net: &PyPetriNet,
    u0: BTreeMap<String, f64>,
    t1: f64,
    t0: f64,
    method: &str,
    dt: f64,
    tol: f64,
) -> PyResult<PyTrajectory> {
    net.check()?;
    let cfg = config(t0, t1, method, dt, tol)?;
    let u = state(&net.inner, &u0)?;
    let f = mass_action(&net.inner);
    let tr = py.detach(|| solve::simulate(&f, &u, &cfg)).map_err(err)?;
    Ok(PyTrajectory { inner: tr })
}

/// Fits a net to a CSV dataset; `spec` and the result are JSON documents.
#[pyfunction]
#[pyo3(signature = (net, u0, data_csv, spec, t1, t0 = 0.0, method = "rk4", dt = 0.1, tol = 1e-8, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn calibrate(
    py: Python<'_>,
    net: &PyPetriNet,
    u0: BTreeMap<String, f64>,
    data_csv: &str,
    spec: &str,
    t1: f64,
    t0: f64,
    method: &str,
    dt: f64,
    tol: f64,
    seed: u64,
) -> PyResult<String> {
    net.check()?;
    let cfg = config(t0, t1, method, dt, tol)?;
    let u = state(&net.inner, &u0)?;
    let data = Dataset::from_csv_str(data_csv).map_err(err)?;
    let spec: FitSpec = serde_json::from_str(spec).map_err(err)?;
    let fit = py
        .detach(|| analyze::calibrate(&net.inner, &u, &data, &spec, &cfg, seed))
        .map_err(err)?;
    serde_json::to_string(&fit.summary()).map_err(err)
}

/// Derivative of the time integral of `species` over `[t0, t1]` with respect
/// to every rate.
#[pyfunction]
#[pyo3(signature = (net, u0, species, t1, t0 = 0.0, rates = None, method = "rk4", dt = 0.1, tol = 1e-8, h = analyze::DEFAULT_STEP))]
#[allow(clippy::too_many_arguments)]
fn sensitivity(
    py: Python<'_>,
    net: &PyPetriNet,
    u0: BTreeMap<String, f64>,
    species: Vec<String>,
    t1: f64,
    t0: f64,
    rates: Option<BTreeMap<String, f64>>,
    method: &str,
    dt: f64,
    tol: f64,
    h: f64,
) -> PyResult<BTreeMap<String, f64>> {
    net.check()?;
    let cfg = config(t0, t1, method, dt, tol)?;
    let u = state(&net.inner, &u0)?;
    let r = rate_vector(&net.inner, &rates.unwrap_or_default())?;
    let spec = OutcomeSpec { species, t0, t1 };
    py.detach(|| analyze::sensitivity(&net.inner, &r, &u, &spec, &cfg, h))
        .map_err(err)
}

#[pyfunction]
fn sensitivity_heatmap(net: &PyPetriNet, values: BTreeMap<String, f64>) -> PyResult<String> {
    analyze::sensitivity_heatmap(&net.inner, &values).map_err(err)
}

/// Parses wiring-diagram source into `(name, uwd_json)`.
#[pyfunction]
fn parse_uwd(src: &str) -> PyResult<(String, String)> {
    let doc = uwd_dsl::parse_uwd(src).map_err(err)?;
    Ok((doc.name, serde_json::to_string(&doc.uwd).map_err(err)?))
}

#[pyfunction]
#[pyo3(signature = (uwd_json, name = None))]
fn print_uwd(uwd_json: &str, name: Option<&str>) -> PyResult<String> {
    let u: Uwd = serde_json::from_str(uwd_json).map_err(err)?;
    match name {
        Some(n) => uwd_dsl::print_named_uwd(n, &u),
        None => uwd_dsl::print_uwd(&u),
    }
    .map_err(err)
}

/// Composes open nets (JSON, keyed by box name) along a diagram given as
/// source text; returns the composite open net as JSON.
#[pyfunction]
fn compose(uwd_src: &str, binding: BTreeMap<String, String>) -> PyResult<String> {
    let u = uwd_dsl::parse_uwd(uwd_src).map_err(err)?.uwd;
    let mut b: Binding<OpenPetriNet> = BTreeMap::new();
    for (k, v) in binding {
        b.insert(k, serde_json::from_str(&v).map_err(err)?);
    }
    let c = oapply(&u, &b).map_err(err)?;
    serde_json::to_string_pretty(&c).map_err(err)
}

#[pyfunction]
fn pullback(a: &PyTypedPetriNet, b: &PyTypedPetriNet) -> PyResult<PyTypedPetriNet> {
    let s = stratify::pullback(&a.inner, &b.inner).map_err(err)?;
    Ok(PyTypedPetriNet { inner: s.result })
}

/// A built-in net: `sir`, `sis`, `sviivr`, `sis_vector`, `p_infectious` or
/// `p_vector_borne`.
#[pyfunction]
fn fixture(name: &str) -> PyResult<PyPetriNet> {
    let inner = match name {
        "sir" => fixtures::sir(),
        "sis" => fixtures::sis(),
        "sviivr" => fixtures::sviivr(),
        "sis_vector" => fixtures::sis_vector(),
        "p_infectious" => fixtures::p_infectious(),
        "p_vector_borne" => fixtures::p_vector_borne(),
        other => return Err(PyValueError::new_err(format!("no fixture '{other}'"))),
    };
    Ok(PyPetriNet { inner })
}

/// A built-in typed net: any of the infectious palette, or `sis_vector`.
#[pyfunction]
fn typed_fixture(name: &str) -> PyResult<PyTypedPetriNet> {
    if name == "sis_vector" {
        return Ok(PyTypedPetriNet {
            inner: fixtures::sis_vector_typed(),
        });
    }
    fixtures::infectious_palette()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, inner)| PyTypedPetriNet { inner })
        .ok_or_else(|| PyValueError::new_err(format!("no typed fixture '{name}'")))
}

/// Open components of the vaccination diagram, as JSON keyed by box name.
#[pyfunction]
fn epi_binding() -> PyResult<BTreeMap<String, String>> {
    fixtures::epi_binding()
        .into_iter()
        .map(|(k, v)| Ok((k, serde_json::to_string(&v).map_err(err)?)))
        .collect()
}

#[pymodule]
fn opetri(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPetriNet>()?;
    m.add_class::<PyTypedPetriNet>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(sensitivity, m)?)?;
    m.add_function(wrap_pyfunction!(sensitivity_heatmap, m)?)?;
    m.add_function(wrap_pyfunction!(parse_uwd, m)?)?;
    m.add_function(wrap_pyfunction!(print_uwd, m)?)?;
    m.add_function(wrap_pyfunction!(compose, m)?)?;
    m.add_function(wrap_pyfunction!(pullback, m)?)?;
    m.add_function(wrap_pyfunction!(fixture, m)?)?;
    m.add_function(wrap_pyfunction!(typed_fixture, m)?)?;
    m.add_function(wrap_pyfunction!(epi_binding, m)?)?;
    m.add("EPI_UWD", fixtures::EPI_UWD)?;
    m.add("MALARIA_UWD", fixtures::MALARIA_UWD)?;
    Ok(())
}
