//! Continuous semantics: vector fields, mass-action compilation of Petri
//! nets, and composition of open ODE/DDE components along wiring diagrams.
//!
//! Composite fields identify the variables wired to a common junction and
//! sum the rates of change contributed by each component, using the same
//! gluing as Petri-net composition so both routes agree on variable order.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::compose::{resolve, Binding, ComposeError, OpenPetriNet, Uwd};
use crate::gluing::{glue, ComponentShape, Gluing};
use crate::petri::PetriNet;

/// Past states of a delayed system, supplied by the integrator.
pub trait History: Sync {
    /// Writes the state at time `t` into `out`.
    fn state_at(&self, t: f64, out: &mut [f64]);
}

impl<F> History for F
where
    F: Fn(f64, &mut [f64]) + Sync,
{
    fn state_at(&self, t: f64, out: &mut [f64]) {
        self(t, out)
    }
}

/// Reads the state at `t` from `h`; without a history the current state `u`
/// stands in, which is exact for zero delays.
pub fn lookup(h: Option<&dyn History>, t: f64, u: &[f64], out: &mut [f64]) {
    match h {
        Some(h) => h.state_at(t, out),
        None => out.copy_from_slice(u),
    }
}

type Rhs = dyn Fn(f64, &[f64], Option<&dyn History>, &mut [f64]) + Send + Sync;

/// A possibly delayed vector field. The right-hand side must overwrite every
/// entry of its output slice.
#[derive(Clone)]
pub struct VectorField {
    var_names: Vec<String>,
    delays: Vec<f64>,
    delay_capable: bool,
    rhs: Arc<Rhs>,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("var_names", &self.var_names)
            .field("delays", &self.delays)
            .field("delay_capable", &self.delay_capable)
            .finish_non_exhaustive()
    }
}

impl VectorField {
    /// An ODE field; `rhs` never sees a history.
    pub fn ode<F>(var_names: Vec<String>, rhs: F) -> Self
    where
        F: Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            var_names,
            delays: Vec::new(),
            delay_capable: false,
            rhs: Arc::new(move |t, u, _h, du| rhs(t, u, du)),
        }
    }

    /// A delayed field with fixed nonnegative delays.
    pub fn dde<F>(var_names: Vec<String>, delays: Vec<f64>, rhs: F) -> Self
    where
        F: Fn(f64, &[f64], Option<&dyn History>, &mut [f64]) + Send + Sync + 'static,
    {
        assert!(
            delays.iter().all(|d| d.is_finite() && *d >= 0.0),
            "delays must be finite and nonnegative"
        );
        Self {
            var_names,
            delays,
            delay_capable: true,
            rhs: Arc::new(rhs),
        }
    }

    pub fn dim(&self) -> usize {
        self.var_names.len()
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn delays(&self) -> &[f64] {
        &self.delays
    }

    pub fn max_delay(&self) -> f64 {
        self.delays.iter().copied().fold(0.0, f64::max)
    }

    /// True for fields that may take part in delayed composition: genuine
    /// DDEs and ODEs coerced by [`ode_to_dde`].
    pub fn is_delay_capable(&self) -> bool {
        self.delay_capable
    }

    pub fn eval_into(&self, t: f64, u: &[f64], h: Option<&dyn History>, du: &mut [f64]) {
        debug_assert_eq!(u.len(), self.dim());
        debug_assert_eq!(du.len(), self.dim());
        (self.rhs)(t, u, h, du)
    }

    pub fn eval(&self, t: f64, u: &[f64], h: Option<&dyn History>) -> Vec<f64> {
        let mut du = vec![0.0; self.dim()];
        self.eval_into(t, u, h, &mut du);
        du
    }
}

/// A vector field with exposed variables.
#[derive(Debug, Clone)]
pub struct OpenDynamics {
    pub field: VectorField,
    pub legs: Vec<usize>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("field already has delays {0:?}")]
    AlreadyDelayed(Vec<f64>),
    #[error("unknown component '{0}'")]
    UnknownComponent(String),
    #[error("component '{component}' has no parameter '{param}'")]
    UnknownParameter { component: String, param: String },
    #[error("parameter '{param}' of '{component}' must be {requirement}, got {value}")]
    InvalidParameter {
        component: String,
        param: String,
        requirement: &'static str,
        value: f64,
    },
}

/// Mass-action kinetics: each transition fires at its rate times the
/// product of its input concentrations (with multiplicity), removing one
/// unit from the source of every input arc and adding one to the target of
/// every output arc.
pub fn mass_action(net: &PetriNet) -> VectorField {
    let nt = net.transitions.len();
    let mut consumed: Vec<Vec<usize>> = vec![Vec::new(); nt];
    for a in &net.inputs {
        consumed[a.it].push(a.is);
    }
    let rates = net.rates();
    let inputs: Vec<(usize, usize)> = net.inputs.iter().map(|a| (a.is, a.it)).collect();
    let outputs: Vec<(usize, usize)> = net.outputs.iter().map(|a| (a.os, a.ot)).collect();
    VectorField::ode(net.species_names(), move |_t, u, du| {
        let flux: Vec<f64> = consumed
            .iter()
            .zip(&rates)
            .map(|(ins, &rate)| ins.iter().fold(rate, |acc, &s| acc * u[s]))
            .collect();
        du.iter_mut().for_each(|x| *x = 0.0);
        for &(s, t) in &inputs {
            du[s] -= flux[t];
        }
        for &(s, t) in &outputs {
            du[s] += flux[t];
        }
    })
}

pub fn petri_to_open_dynamics(m: &OpenPetriNet) -> OpenDynamics {
    OpenDynamics {
        field: mass_action(&m.net),
        legs: m.legs.clone(),
    }
}

/// Marks an ODE as usable alongside delayed components. The field is
/// unchanged and simply ignores the history.
pub fn ode_to_dde(d: &OpenDynamics) -> Result<OpenDynamics, DynamicsError> {
    if !d.field.delays.is_empty() {
        return Err(DynamicsError::AlreadyDelayed(d.field.delays.clone()));
    }
    let mut field = d.field.clone();
    field.delay_capable = true;
    Ok(OpenDynamics {
        field,
        legs: d.legs.clone(),
    })
}

/// Gathers a composite history into one component's local variables.
struct LocalHistory<'a> {
    inner: &'a dyn History,
    classes: &'a [usize],
    global_dim: usize,
}

impl History for LocalHistory<'_> {
    fn state_at(&self, t: f64, out: &mut [f64]) {
        let mut g = vec![0.0; self.global_dim];
        self.inner.state_at(t, &mut g);
        for (o, &c) in out.iter_mut().zip(self.classes) {
            *o = g[c];
        }
    }
}

/// Composes open dynamics along a wiring diagram.
pub fn compose_dynamics(u: &Uwd, b: &Binding<OpenDynamics>) -> Result<OpenDynamics, ComposeError> {
    compose_dynamics_with_gluing(u, b).map(|(d, _)| d)
}

pub fn compose_dynamics_with_gluing(
    u: &Uwd,
    b: &Binding<OpenDynamics>,
) -> Result<(OpenDynamics, Gluing), ComposeError> {
    let comps = resolve(u, b)?;
    let any_delayed = comps.iter().any(|c| !c.field.delays.is_empty());
    for (bx, c) in u.boxes.iter().zip(&comps) {
        if c.legs.len() != bx.ports.len() {
            return Err(ComposeError::ArityMismatch {
                name: bx.name.clone(),
                ports: bx.ports.len(),
                legs: c.legs.len(),
            });
        }
        if let Some(&bad) = c.legs.iter().find(|&&l| l >= c.field.dim()) {
            return Err(ComposeError::InvalidComponent {
                name: bx.name.clone(),
                violations: vec![crate::petri::Violation::new(
                    "legs",
                    format!(
                        "variable index {bad} out of range (dimension {})",
                        c.field.dim()
                    ),
                )],
            });
        }
        if any_delayed && !c.field.delay_capable {
            return Err(ComposeError::NotDelayCapable(bx.name.clone()));
        }
    }
    let shapes: Vec<ComponentShape<'_>> = comps
        .iter()
        .map(|c| ComponentShape {
            names: c.field.var_names.iter().map(String::as_str).collect(),
            legs: &c.legs,
        })
        .collect();
    let gluing = glue(u, &shapes);

    let mut delays: Vec<f64> = comps
        .iter()
        .flat_map(|c| c.field.delays.iter().copied())
        .collect();
    delays.sort_by(f64::total_cmp);
    delays.dedup();
    let delay_capable = comps.iter().any(|c| c.field.delay_capable);

    let parts: Vec<(VectorField, Vec<usize>)> = comps
        .iter()
        .zip(&gluing.local_to_class)
        .map(|(c, cls)| (c.field.clone(), cls.clone()))
        .collect();
    let dim = gluing.len();
    let rhs = move |t: f64, x: &[f64], h: Option<&dyn History>, dx: &mut [f64]| {
        dx.iter_mut().for_each(|v| *v = 0.0);
        for (field, classes) in &parts {
            let local: Vec<f64> = classes.iter().map(|&c| x[c]).collect();
            let mut dlocal = vec![0.0; local.len()];
            match h {
                Some(inner) => {
                    let lh = LocalHistory {
                        inner,
                        classes,
                        global_dim: dim,
                    };
                    field.eval_into(t, &local, Some(&lh), &mut dlocal);
                }
                None => field.eval_into(t, &local, None, &mut dlocal),
            }
            for (&c, d) in classes.iter().zip(&dlocal) {
                dx[c] += d;
            }
        }
    };
    let field = VectorField {
        var_names: gluing.class_names.clone(),
        delays,
        delay_capable,
        rhs: Arc::new(rhs),
    };
    let legs = gluing.outer_legs.clone();
    Ok((OpenDynamics { field, legs }, gluing))
}

/// Parameters of the shipped Ross-Macdonald components: biting rate `a`,
/// infection efficacy for hosts `b` and vectors `c`, host recovery rate `r`,
/// vector death rate `g`, total host and vector populations `H` and `V`,
/// and extrinsic incubation delay `tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RossMacdonald {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub r: f64,
    pub g: f64,
    pub h: f64,
    pub v: f64,
    pub tau: f64,
}

impl Default for RossMacdonald {
    fn default() -> Self {
        Self {
            a: 0.3,
            b: 0.5,
            c: 0.5,
            r: 0.01,
            g: 0.1,
            h: 1000.0,
            v: 5000.0,
            tau: 10.0,
        }
    }
}

impl RossMacdonald {
    const NAMES: [&'static str; 8] = ["a", "b", "c", "r", "g", "H", "V", "tau"];

    fn slot(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "a" => &mut self.a,
            "b" => &mut self.b,
            "c" => &mut self.c,
            "r" => &mut self.r,
            "g" => &mut self.g,
            "H" => &mut self.h,
            "V" => &mut self.v,
            "tau" => &mut self.tau,
            _ => return None,
        })
    }

    pub fn from_params(
        component: &str,
        params: &BTreeMap<String, f64>,
    ) -> Result<Self, DynamicsError> {
        let mut p = Self::default();
        for (k, &v) in params {
            let slot = p.slot(k).ok_or_else(|| DynamicsError::UnknownParameter {
                component: component.to_string(),
                param: k.clone(),
            })?;
            *slot = v;
        }
        for name in Self::NAMES {
            let v = *p.slot(name).expect("known name");
            let positive = matches!(name, "H" | "V");
            let ok = v.is_finite() && if positive { v > 0.0 } else { v >= 0.0 };
            if !ok {
                return Err(DynamicsError::InvalidParameter {
                    component: component.to_string(),
                    param: name.to_string(),
                    requirement: if positive { "positive" } else { "nonnegative" },
                    value: v,
                });
            }
        }
        Ok(p)
    }

    /// Host recovery: `dI_H/dt = -r I_H`.
    pub fn host(&self) -> OpenDynamics {
        let r = self.r;
        OpenDynamics {
            field: VectorField::ode(vec!["I_H".into()], move |_t, u, du| du[0] = -r * u[0]),
            legs: vec![0],
        }
    }

    /// Vector death: `dI_V/dt = -g I_V`.
    pub fn vector(&self) -> OpenDynamics {
        let g = self.g;
        OpenDynamics {
            field: VectorField::ode(vec!["I_V".into()], move |_t, u, du| du[0] = -g * u[0]),
            legs: vec![0],
        }
    }

    /// Transmission in the bloodmeal:
    /// `dI_H/dt = a b (I_V/H)(H - I_H)`, `dI_V/dt = a c (I_H/H)(V - I_V)`.
    pub fn bloodmeal(&self) -> OpenDynamics {
        let p = *self;
        OpenDynamics {
            field: VectorField::ode(vec!["I_H".into(), "I_V".into()], move |_t, u, du| {
                du[0] = p.a * p.b * (u[1] / p.h) * (p.h - u[0]);
                du[1] = p.a * p.c * (u[0] / p.h) * (p.v - u[1]);
            }),
            legs: vec![0, 1],
        }
    }

    /// Bloodmeal with extrinsic incubation: vectors that bit infected hosts
    /// `tau` ago and survived incubation (probability `exp(-g tau)`) become
    /// infectious now. With `tau = 0` this is [`Self::bloodmeal`].
    pub fn bloodmeal_delayed(&self) -> OpenDynamics {
        let p = *self;
        let survive = (-p.g * p.tau).exp();
        OpenDynamics {
            field: VectorField::dde(
                vec!["I_H".into(), "I_V".into()],
                vec![p.tau],
                move |t, u, h, du| {
                    let mut past = [0.0; 2];
                    lookup(h, t - p.tau, u, &mut past);
                    du[0] = p.a * p.b * (u[1] / p.h) * (p.h - u[0]);
                    du[1] = p.a * p.c * survive * (past[0] / p.h) * (p.v - past[1]);
                },
            ),
            legs: vec![0, 1],
        }
    }
}

/// Names accepted by [`instantiate`].
pub const COMPONENTS: [&str; 4] = [
    "rm_host",
    "rm_vector",
    "rm_bloodmeal",
    "rm_bloodmeal_delayed",
];

/// Builds a registered component from named parameters; unspecified
/// parameters take their defaults.
pub fn instantiate(
    name: &str,
    params: &BTreeMap<String, f64>,
) -> Result<OpenDynamics, DynamicsError> {
    if !COMPONENTS.contains(&name) {
        return Err(DynamicsError::UnknownComponent(name.to_string()));
    }
    let p = RossMacdonald::from_params(name, params)?;
    Ok(match name {
        "rm_host" => p.host(),
        "rm_vector" => p.vector(),
        "rm_bloodmeal" => p.bloodmeal(),
        _ => p.bloodmeal_delayed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_relative_eq;

    #[test]
    fn sir_mass_action_by_hand() {
        let f = mass_action(&fixtures::sir());
        let du = f.eval(0.0, &[0.99, 0.01, 0.0], None);
        // inf: 0.3 * 0.99 * 0.01 = 0.00297, rec: 0.1 * 0.01 = 0.001
        assert_relative_eq!(du[0], -0.00297, max_relative = 1e-12);
        assert_relative_eq!(du[1], 0.00197, max_relative = 1e-12);
        assert_relative_eq!(du[2], 0.001, max_relative = 1e-12);
        assert_eq!(f.var_names(), ["S", "I", "R"]);
        assert!(f.delays().is_empty());
    }

    #[test]
    fn no_transitions_zero_field() {
        let net = PetriNet::from_names(&["A", "B"], &[]);
        let f = mass_action(&net);
        assert_eq!(f.eval(1.0, &[3.0, 4.0], None), [0.0, 0.0]);
    }

    #[test]
    fn stoichiometry_from_multiplicity() {
        let beta = 0.7;
        let net = PetriNet::from_names(&["A", "B"], &[("dimer", beta, &["A", "A"], &["B"])]);
        let f = mass_action(&net);
        let a = 1.3;
        let du = f.eval(0.0, &[a, 0.2], None);
        assert_relative_eq!(du[0], -2.0 * beta * a * a, max_relative = 1e-14);
        assert_relative_eq!(du[1], beta * a * a, max_relative = 1e-14);
    }

    #[test]
    fn open_dynamics_shapes() {
        let d = petri_to_open_dynamics(&fixtures::sir_open());
        assert_eq!((d.field.dim(), d.legs.len()), (3, 3));
        let d = petri_to_open_dynamics(&OpenPetriNet::default());
        assert_eq!(d.field.dim(), 0);
        let d = petri_to_open_dynamics(&fixtures::cross_open());
        assert_eq!((d.field.dim(), d.legs.len()), (4, 4));
    }

    fn plus_one() -> OpenDynamics {
        OpenDynamics {
            field: VectorField::ode(vec!["x".into()], |_t, _u, du| du[0] = 1.0),
            legs: vec![0],
        }
    }

    #[test]
    fn shared_variable_rates_add() {
        let u = crate::uwd_dsl::parse_uwd("uwd f(X) { a(X); b(X) }")
            .unwrap()
            .uwd;
        let b: Binding<_> = [("a".to_string(), plus_one()), ("b".to_string(), plus_one())]
            .into_iter()
            .collect();
        let c = compose_dynamics(&u, &b).unwrap();
        assert_eq!(c.field.eval(0.0, &[5.0], None), [2.0]);
    }

    #[test]
    fn ross_macdonald_composite_matches_closed_form() {
        let p = RossMacdonald::default();
        let b: Binding<_> = [
            ("host".to_string(), p.host()),
            ("vector".to_string(), p.vector()),
            ("bloodmeal".to_string(), p.bloodmeal()),
        ]
        .into_iter()
        .collect();
        let c = compose_dynamics(&fixtures::malaria_uwd(), &b).unwrap();
        assert_eq!(c.field.var_names(), ["IH", "IV"]);
        let (ih, iv) = (120.0, 800.0);
        let du = c.field.eval(0.0, &[ih, iv], None);
        let dih = p.a * p.b * (iv / p.h) * (p.h - ih) - p.r * ih;
        let div = p.a * p.c * (ih / p.h) * (p.v - iv) - p.g * iv;
        assert_relative_eq!(du[0], dih, max_relative = 1e-12);
        assert_relative_eq!(du[1], div, max_relative = 1e-12);
    }

    #[test]
    fn coercion() {
        let d = petri_to_open_dynamics(&fixtures::sir_open());
        let c = ode_to_dde(&d).unwrap();
        assert!(c.field.is_delay_capable());
        assert!(!d.field.is_delay_capable());
        let x = [0.5, 0.2, 0.3];
        assert_eq!(c.field.eval(0.0, &x, None), d.field.eval(0.0, &x, None));
        let delayed = RossMacdonald::default().bloodmeal_delayed();
        assert!(matches!(
            ode_to_dde(&delayed),
            Err(DynamicsError::AlreadyDelayed(_))
        ));
    }

    #[test]
    fn uncoerced_ode_with_dde_is_rejected() {
        let p = RossMacdonald::default();
        let b: Binding<_> = [
            ("host".to_string(), p.host()),
            ("vector".to_string(), ode_to_dde(&p.vector()).unwrap()),
            ("bloodmeal".to_string(), p.bloodmeal_delayed()),
        ]
        .into_iter()
        .collect();
        assert_eq!(
            compose_dynamics(&fixtures::malaria_uwd(), &b).unwrap_err(),
            ComposeError::NotDelayCapable("host".into())
        );
    }

    #[test]
    fn registry() {
        let mut params = BTreeMap::new();
        params.insert("r".to_string(), 0.2);
        let h = instantiate("rm_host", &params).unwrap();
        assert_eq!(h.field.eval(0.0, &[10.0], None), [-2.0]);
        assert!(matches!(
            instantiate("nope", &params),
            Err(DynamicsError::UnknownComponent(_))
        ));
        params.insert("zeta".to_string(), 1.0);
        assert!(matches!(
            instantiate("rm_host", &params),
            Err(DynamicsError::UnknownParameter { .. })
        ));
        let mut bad = BTreeMap::new();
        bad.insert("H".to_string(), 0.0);
        assert!(matches!(
            instantiate("rm_bloodmeal", &bad),
            Err(DynamicsError::InvalidParameter { .. })
        ));
    }
}
