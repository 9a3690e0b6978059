use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::nelder_mead::{minimize, Bounds, NelderMeadOptions};
use super::{AnalyzeError, Dataset};
use crate::dynamics::mass_action;
use crate::petri::PetriNet;
use crate::solve::{simulate, SolveConfig, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeParam {
    pub name: String,
    pub guess: f64,
    #[serde(default)]
    pub lower: f64,
    /// `None` means unbounded above.
    #[serde(default)]
    pub upper: Option<f64>,
}

impl FreeParam {
    pub fn new(name: impl Into<String>, guess: f64, lower: f64, upper: Option<f64>) -> Self {
        Self {
            name: name.into(),
            guess,
            lower,
            upper,
        }
    }

    fn bounds(&self) -> Bounds {
        Bounds::new(self.lower, self.upper.unwrap_or(f64::INFINITY))
    }
}

fn default_max_evals() -> usize {
    2000
}

fn default_tol() -> f64 {
    1e-14
}

fn default_restarts() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSpec {
    #[serde(default)]
    pub free_rates: Vec<FreeParam>,
    #[serde(default)]
    pub fixed_rates: BTreeMap<String, f64>,
    /// Species whose initial values are estimated; the rest come from the
    /// template.
    #[serde(default)]
    pub free_u0: Vec<FreeParam>,
    #[serde(default = "default_max_evals")]
    pub max_evals: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

impl FitSpec {
    pub fn new(free_rates: Vec<FreeParam>, fixed_rates: BTreeMap<String, f64>) -> Self {
        Self {
            free_rates,
            fixed_rates,
            free_u0: Vec::new(),
            max_evals: default_max_evals(),
            tol: default_tol(),
            restarts: default_restarts(),
        }
    }

    pub fn validate(&self, net: &PetriNet) -> Result<(), AnalyzeError> {
        let bad = |m: String| Err(AnalyzeError::FitSpec(m));
        let mut seen = BTreeSet::new();
        for p in &self.free_rates {
            if net.transition_index(&p.name).is_none() {
                return bad(format!("no transition named '{}'", p.name));
            }
            if !seen.insert(p.name.as_str()) {
                return bad(format!("transition '{}' listed twice", p.name));
            }
        }
        for (name, &v) in &self.fixed_rates {
            if net.transition_index(name).is_none() {
                return bad(format!("no transition named '{name}'"));
            }
            if !seen.insert(name.as_str()) {
                return bad(format!("transition '{name}' is both free and fixed"));
            }
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!(
                    "fixed rate of '{name}' must be nonnegative, got {v}"
                ));
            }
        }
        if let Some(t) = net
            .transitions
            .iter()
            .find(|t| !seen.contains(t.name.as_str()))
        {
            return bad(format!("transition '{}' is neither free nor fixed", t.name));
        }
        let mut seen_u0 = BTreeSet::new();
        for p in &self.free_u0 {
            if net.species_index(&p.name).is_none() {
                return bad(format!("no species named '{}'", p.name));
            }
            if !seen_u0.insert(p.name.as_str()) {
                return bad(format!("species '{}' listed twice", p.name));
            }
        }
        for p in self.free_rates.iter().chain(&self.free_u0) {
            let hi = p.upper.unwrap_or(f64::INFINITY);
            if !(p.lower.is_finite() && p.lower <= hi && !hi.is_nan()) {
                return bad(format!("bounds of '{}' are not ordered", p.name));
            }
            if !p.guess.is_finite() {
                return bad(format!("guess of '{}' is not finite", p.name));
            }
        }
        if let Some(p) = self.free_rates.iter().find(|p| p.lower < 0.0) {
            return bad(format!(
                "lower bound of rate '{}' must be nonnegative",
                p.name
            ));
        }
        if self.max_evals == 0 {
            return bad("max_evals must be positive".into());
        }
        Ok(())
    }
}

/// Sum of squared residuals between a trajectory, linearly interpolated at
/// the data times, and every present observation.
pub fn sse_loss(traj: &Trajectory, data: &Dataset) -> Result<f64, AnalyzeError> {
    let cols: Vec<(usize, &Vec<Option<f64>>)> = data
        .observations
        .iter()
        .map(|(name, series)| {
            traj.var_index(name)
                .map(|k| (k, series))
                .ok_or_else(|| AnalyzeError::Dataset(format!("'{name}' is not a model variable")))
        })
        .collect::<Result<_, _>>()?;
    let mut sse = 0.0;
    for (i, &t) in data.times.iter().enumerate() {
        let state = traj.interpolate(t).ok_or_else(|| {
            AnalyzeError::Dataset(format!("time {t} outside the simulated horizon"))
        })?;
        for (k, series) in &cols {
            if let Some(y) = series[i] {
                sse += (state[*k] - y).powi(2);
            }
        }
    }
    Ok(sse)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub rates: BTreeMap<String, f64>,
    pub u0: BTreeMap<String, f64>,
    pub loss: f64,
    pub evals: usize,
    /// False when the evaluation budget ran out first.
    pub converged: bool,
    /// Candidates whose simulation failed and were scored as infinite loss.
    pub failures: usize,
    /// Best loss after each evaluation.
    pub history: Vec<f64>,
}

/// The results document written by the command line tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub rates: BTreeMap<String, f64>,
    pub u0: BTreeMap<String, f64>,
    pub loss: f64,
    pub evals: usize,
}

impl FitResult {
    pub fn summary(&self) -> FitSummary {
        FitSummary {
            rates: self.rates.clone(),
            u0: self.u0.clone(),
            loss: self.loss,
            evals: self.evals,
        }
    }

    /// Rates in transition order of `net`.
    pub fn rate_vector(&self, net: &PetriNet) -> Vec<f64> {
        net.transitions
            .iter()
            .map(|t| self.rates[&t.name])
            .collect()
    }

    pub fn u0_vector(&self, net: &PetriNet) -> Vec<f64> {
        net.species.iter().map(|s| self.u0[&s.name]).collect()
    }
}

/// Fits free rates and initial values by bounded Nelder-Mead on the SSE.
/// `seed` only affects the order of vertices with tied loss.
pub fn calibrate(
    net: &PetriNet,
    u0_template: &[f64],
    data: &Dataset,
    spec: &FitSpec,
    cfg: &SolveConfig,
    seed: u64,
) -> Result<FitResult, AnalyzeError> {
    spec.validate(net)?;
    data.validate()?;
    if u0_template.len() != net.species.len() {
        return Err(AnalyzeError::FitSpec(format!(
            "initial state has {} entries for {} species",
            u0_template.len(),
            net.species.len()
        )));
    }
    for name in data.observations.keys() {
        if net.species_index(name).is_none() {
            return Err(AnalyzeError::Dataset(format!("'{name}' is not a species")));
        }
    }
    if let (Some(&a), Some(&b)) = (data.times.first(), data.times.last()) {
        if a < cfg.t0 || b > cfg.t1 {
            return Err(AnalyzeError::Dataset(format!(
                "data span [{a}, {b}] exceeds the solver horizon [{}, {}]",
                cfg.t0, cfg.t1
            )));
        }
    }

    let rate_slot: Vec<usize> = spec
        .free_rates
        .iter()
        .map(|p| net.transition_index(&p.name).expect("validated"))
        .collect();
    let u0_slot: Vec<usize> = spec
        .free_u0
        .iter()
        .map(|p| net.species_index(&p.name).expect("validated"))
        .collect();
    let mut base_rates = vec![0.0; net.transitions.len()];
    for (name, &v) in &spec.fixed_rates {
        base_rates[net.transition_index(name).expect("validated")] = v;
    }
    let params: Vec<&FreeParam> = spec.free_rates.iter().chain(&spec.free_u0).collect();
    let bounds: Vec<Bounds> = params.iter().map(|p| p.bounds()).collect();
    let x0: Vec<f64> = params.iter().map(|p| p.guess).collect();
    let nr = rate_slot.len();

    let unpack = |x: &[f64]| {
        let mut rates = base_rates.clone();
        for (&k, &v) in rate_slot.iter().zip(&x[..nr]) {
            rates[k] = v;
        }
        let mut u0 = u0_template.to_vec();
        for (&k, &v) in u0_slot.iter().zip(&x[nr..]) {
            u0[k] = v;
        }
        (rates, u0)
    };

    let mut failures = 0usize;
    let objective = |x: &[f64]| -> f64 {
        let (rates, u0) = unpack(x);
        let field = mass_action(&net.with_rates(&rates));
        match simulate(&field, &u0, cfg)
            .map_err(AnalyzeError::from)
            .and_then(|tr| sse_loss(&tr, data))
        {
            Ok(v) => v,
            Err(_) => {
                failures += 1;
                f64::INFINITY
            }
        }
    };
    let opts = NelderMeadOptions {
        max_evals: spec.max_evals,
        ftol: spec.tol,
        restarts: spec.restarts,
        seed,
        ..NelderMeadOptions::default()
    };
    let best = minimize(objective, &x0, &bounds, &opts);
    let (rates, u0) = unpack(&best.x);
    Ok(FitResult {
        rates: net
            .transitions
            .iter()
            .map(|t| t.name.clone())
            .zip(rates)
            .collect(),
        u0: net.species.iter().map(|s| s.name.clone()).zip(u0).collect(),
        loss: best.value,
        evals: best.evals,
        converged: best.converged,
        failures,
        history: best.history,
    })
}
