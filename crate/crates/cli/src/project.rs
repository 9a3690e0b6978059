//! Project files: a JSON document naming every resource a command can use.
//!
//! Model-like resources (nets, open nets, typed nets, typed open nets and
//! dynamics instantiations) share one namespace so that references in
//! simulations and bindings are unambiguous. Each model entry is either an
//! inline JSON object or a path, relative to the project file, to a JSON
//! file holding one. UWDs and datasets are always paths.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use opetri_core::analyze::{Dataset, FitSpec, OutcomeSpec};
use opetri_core::compose::{validate_uwd, Binding, OpenPetriNet, TypedOpenPetriNet, Uwd};
use opetri_core::dynamics::{instantiate, ode_to_dde, petri_to_open_dynamics, OpenDynamics};
use opetri_core::morphism::{PetriMorphism, TypedPetriNet};
use opetri_core::petri::{validate_net, PetriNet};
use opetri_core::solve::SolveConfig;
use opetri_core::uwd_dsl::parse_uwd;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::UsageError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectFile {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub nets: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub open_nets: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub typed_nets: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub typed_open_nets: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub typings: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub uwds: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub dynamics: BTreeMap<String, DynamicsEntry>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub datasets: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub simulations: BTreeMap<String, SimulationEntry>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub fits: BTreeMap<String, FitEntry>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sensitivities: BTreeMap<String, SensitivityEntry>,
}

/// A registered component with parameter overrides.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsEntry {
    pub component: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    /// Wrap an ODE component so it can sit next to delayed ones.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub delay_capable: bool,
}

/// Either a single model, or a wiring diagram with a model per box.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelRef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub net: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uwd: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub binding: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationEntry {
    pub model: ModelRef,
    pub u0: BTreeMap<String, f64>,
    /// Rate overrides by transition name; only for Petri net models.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub rates: BTreeMap<String, f64>,
    pub config: SolveConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitEntry {
    pub net: String,
    pub dataset: String,
    pub u0: BTreeMap<String, f64>,
    pub spec: FitSpec,
    pub config: SolveConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityEntry {
    pub net: String,
    pub u0: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub rates: BTreeMap<String, f64>,
    pub outcome: OutcomeSpec,
    pub config: SolveConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

/// A resource from the shared model namespace.
#[derive(Debug, Clone)]
pub enum Model {
    Net(PetriNet),
    Open(OpenPetriNet),
    Typed(TypedPetriNet),
    TypedOpen(TypedOpenPetriNet),
    Dynamics(DynamicsEntry),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Net(_) => "net",
            Model::Open(_) => "open net",
            Model::Typed(_) => "typed net",
            Model::TypedOpen(_) => "typed open net",
            Model::Dynamics(_) => "dynamics",
        }
    }

    pub fn net(&self) -> Option<&PetriNet> {
        match self {
            Model::Net(n) => Some(n),
            Model::Open(o) => Some(&o.net),
            Model::Typed(t) => Some(&t.net),
            Model::TypedOpen(t) => Some(&t.typed.net),
            Model::Dynamics(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Project {
    pub models: BTreeMap<String, Model>,
    pub typings: BTreeMap<String, PetriMorphism>,
    pub uwds: BTreeMap<String, Uwd>,
    pub datasets: BTreeMap<String, Dataset>,
    pub simulations: BTreeMap<String, SimulationEntry>,
    pub fits: BTreeMap<String, FitEntry>,
    pub sensitivities: BTreeMap<String, SensitivityEntry>,
}

fn resource<T: DeserializeOwned>(base: &Path, section: &str, name: &str, v: &Value) -> Result<T> {
    let what = format!("{section}.{name}");
    match v {
        Value::String(p) => {
            let path = base.join(p);
            let text = fs::read_to_string(&path)
                .with_context(|| format!("{what}: cannot read {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("{what}: {}", path.display()))
        }
        other => serde_json::from_value(other.clone()).with_context(|| what),
    }
}

impl Project {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read project {}", path.display()))?;
        let file: ProjectFile =
            serde_json::from_str(&text).with_context(|| format!("project {}", path.display()))?;
        let base = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Self::from_file(file, &base)
    }

    pub fn from_file(file: ProjectFile, base: &Path) -> Result<Self> {
        let mut models = BTreeMap::new();
        let mut insert = |name: &String, m: Model| -> Result<()> {
            if let Some(prev) = models.insert(name.clone(), m) {
                bail!(
                    "resource name '{name}' is used twice (already a {})",
                    prev.kind()
                );
            }
            Ok(())
        };
        for (k, v) in &file.nets {
            insert(k, Model::Net(resource(base, "nets", k, v)?))?;
        }
        for (k, v) in &file.open_nets {
            insert(k, Model::Open(resource(base, "open_nets", k, v)?))?;
        }
        for (k, v) in &file.typed_nets {
            insert(k, Model::Typed(resource(base, "typed_nets", k, v)?))?;
        }
        for (k, v) in &file.typed_open_nets {
            insert(
                k,
                Model::TypedOpen(resource(base, "typed_open_nets", k, v)?),
            )?;
        }
        for (k, v) in &file.dynamics {
            insert(k, Model::Dynamics(v.clone()))?;
        }
        let mut typings = BTreeMap::new();
        for (k, v) in &file.typings {
            typings.insert(k.clone(), resource(base, "typings", k, v)?);
        }
        let mut uwds = BTreeMap::new();
        for (k, p) in &file.uwds {
            let path = base.join(p);
            let text = fs::read_to_string(&path)
                .with_context(|| format!("uwds.{k}: cannot read {}", path.display()))?;
            let doc = parse_uwd(&text).map_err(|e| anyhow!("{}:{e}", path.display()))?;
            uwds.insert(k.clone(), doc.uwd);
        }
        let mut datasets = BTreeMap::new();
        for (k, p) in &file.datasets {
            let path = base.join(p);
            let d = Dataset::from_csv_path(&path)
                .with_context(|| format!("datasets.{k}: {}", path.display()))?;
            datasets.insert(k.clone(), d);
        }
        let project = Self {
            models,
            typings,
            uwds,
            datasets,
            simulations: file.simulations,
            fits: file.fits,
            sensitivities: file.sensitivities,
        };
        project.check_references()?;
        Ok(project)
    }

    fn check_references(&self) -> Result<()> {
        let has_net = |what: &str, name: &str| -> Result<()> {
            match self.models.get(name) {
                Some(m) if m.net().is_some() => Ok(()),
                Some(m) => bail!("{what}: '{name}' is a {}, not a Petri net", m.kind()),
                None => bail!("{what}: no model named '{name}'"),
            }
        };
        for (k, s) in &self.simulations {
            let what = format!("simulations.{k}");
            match (&s.model.net, &s.model.uwd) {
                (Some(n), None) => {
                    has_net(&what, n)?;
                    if !s.model.binding.is_empty() {
                        bail!("{what}: a binding needs a uwd");
                    }
                }
                (None, Some(u)) => {
                    if !self.uwds.contains_key(u) {
                        bail!("{what}: no uwd named '{u}'");
                    }
                    if !s.rates.is_empty() {
                        bail!("{what}: rate overrides apply to net models only");
                    }
                    for (b, m) in &s.model.binding {
                        if !self.models.contains_key(m) {
                            bail!("{what}: box '{b}' is bound to unknown model '{m}'");
                        }
                    }
                }
                _ => bail!("{what}: model needs exactly one of 'net' or 'uwd'"),
            }
        }
        for (k, f) in &self.fits {
            let what = format!("fits.{k}");
            has_net(&what, &f.net)?;
            if !self.datasets.contains_key(&f.dataset) {
                bail!("{what}: no dataset named '{}'", f.dataset);
            }
        }
        for (k, s) in &self.sensitivities {
            has_net(&format!("sensitivities.{k}"), &s.net)?;
        }
        Ok(())
    }

    pub fn model(&self, name: &str) -> Result<&Model> {
        self.models
            .get(name)
            .ok_or_else(|| UsageError(format!("no model named '{name}'")).into())
    }

    /// The Petri net behind a model, rejected if malformed.
    pub fn net(&self, name: &str) -> Result<&PetriNet> {
        let m = self.model(name)?;
        let net = m
            .net()
            .ok_or_else(|| UsageError(format!("'{name}' is a {}, not a Petri net", m.kind())))?;
        let v = validate_net(net);
        if !v.is_empty() {
            bail!("net '{name}' is malformed: {}", join(&v));
        }
        Ok(net)
    }

    pub fn typed(&self, name: &str) -> Result<&TypedPetriNet> {
        match self.model(name)? {
            Model::Typed(t) => Ok(t),
            Model::TypedOpen(t) => Ok(&t.typed),
            m => Err(UsageError(format!("'{name}' is a {}, not a typed net", m.kind())).into()),
        }
    }

    pub fn uwd(&self, name: &str) -> Result<&Uwd> {
        let u = self
            .uwds
            .get(name)
            .ok_or_else(|| UsageError(format!("no uwd named '{name}'")))?;
        let v = validate_uwd(u);
        if !v.is_empty() {
            bail!("uwd '{name}' is malformed: {}", join(&v));
        }
        Ok(u)
    }

    /// Dynamics for a box: registry components are instantiated, nets are
    /// compiled to mass action (plain nets expose every species).
    pub fn open_dynamics(&self, name: &str) -> Result<OpenDynamics> {
        Ok(match self.model(name)? {
            Model::Dynamics(d) => dynamics_of(name, d)?,
            Model::Open(o) => petri_to_open_dynamics(o),
            Model::TypedOpen(t) => petri_to_open_dynamics(&t.open()),
            Model::Net(n) => petri_to_open_dynamics(&OpenPetriNet::exposing_all(n.clone())),
            Model::Typed(t) => petri_to_open_dynamics(&OpenPetriNet::exposing_all(t.net.clone())),
        })
    }

    pub fn dynamics_binding(
        &self,
        binding: &BTreeMap<String, String>,
    ) -> Result<Binding<OpenDynamics>> {
        binding
            .iter()
            .map(|(b, m)| Ok((b.clone(), self.open_dynamics(m)?)))
            .collect()
    }
}

pub fn dynamics_of(name: &str, d: &DynamicsEntry) -> Result<OpenDynamics> {
    let dy = instantiate(&d.component, &d.params).with_context(|| format!("dynamics '{name}'"))?;
    if d.delay_capable && !dy.field.is_delay_capable() {
        return ode_to_dde(&dy).with_context(|| format!("dynamics '{name}'"));
    }
    Ok(dy)
}

pub fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Orders a name-keyed map along `names`, requiring exact coverage.
pub fn by_name(what: &str, names: &[String], values: &BTreeMap<String, f64>) -> Result<Vec<f64>> {
    if let Some(k) = values.keys().find(|k| !names.contains(k)) {
        bail!("{what}: '{k}' is not one of {}", names.join(", "));
    }
    names
        .iter()
        .map(|n| {
            values
                .get(n)
                .copied()
                .ok_or_else(|| anyhow!("{what}: missing value for '{n}'"))
        })
        .collect()
}
