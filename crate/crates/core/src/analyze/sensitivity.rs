use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AnalyzeError;
use crate::dynamics::mass_action;
use crate::petri::PetriNet;
use crate::solve::{simulate, SolveConfig, Trajectory};

pub const DEFAULT_STEP: f64 = 1e-4;

/// Time integral of the summed population of `species` over `[t0, t1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSpec {
    pub species: Vec<String>,
    pub t0: f64,
    pub t1: f64,
}

/// Trapezoid rule over the trajectory points inside the horizon, with the
/// endpoints interpolated linearly.
pub fn outcome(traj: &Trajectory, spec: &OutcomeSpec) -> Result<f64, AnalyzeError> {
    let bad = |m: String| AnalyzeError::Outcome(m);
    if spec.species.is_empty() {
        return Err(bad("no species selected".into()));
    }
    let idx: Vec<usize> = spec
        .species
        .iter()
        .map(|s| {
            traj.var_index(s)
                .ok_or_else(|| bad(format!("unknown species '{s}'")))
        })
        .collect::<Result<_, _>>()?;
    if spec.t0.is_nan() || spec.t1.is_nan() || spec.t0 > spec.t1 {
        return Err(bad(format!(
            "horizon [{}, {}] is reversed",
            spec.t0, spec.t1
        )));
    }
    let total = |s: &[f64]| idx.iter().map(|&k| s[k]).sum::<f64>();
    let at = |t: f64| {
        traj.interpolate(t)
            .map(|s| total(&s))
            .ok_or_else(|| bad(format!("time {t} outside the trajectory")))
    };
    let mut pts = vec![(spec.t0, at(spec.t0)?)];
    for (t, s) in traj.times.iter().zip(&traj.states) {
        if *t > spec.t0 && *t < spec.t1 {
            pts.push((*t, total(s)));
        }
    }
    if spec.t1 > spec.t0 {
        pts.push((spec.t1, at(spec.t1)?));
    }
    Ok(pts
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum())
}

/// dO/dβ for every transition by central differences with step `h·β`
/// (or `h` for a zero rate). Perturbations run in parallel.
pub fn sensitivity(
    net: &PetriNet,
    rates: &[f64],
    u0: &[f64],
    ospec: &OutcomeSpec,
    cfg: &SolveConfig,
    h: f64,
) -> Result<BTreeMap<String, f64>, AnalyzeError> {
    if rates.len() != net.transitions.len() {
        return Err(AnalyzeError::Outcome(format!(
            "{} rates for {} transitions",
            rates.len(),
            net.transitions.len()
        )));
    }
    if !(h > 0.0 && h < 1.0) {
        return Err(AnalyzeError::Outcome(format!(
            "relative step {h} must lie in (0, 1)"
        )));
    }
    let run = |r: &[f64]| -> Result<f64, AnalyzeError> {
        let tr = simulate(&mass_action(&net.with_rates(r)), u0, cfg)?;
        outcome(&tr, ospec)
    };
    let values: Vec<Result<f64, AnalyzeError>> = (0..rates.len())
        .into_par_iter()
        .map(|k| {
            let delta = if rates[k] > 0.0 { h * rates[k] } else { h };
            let mut up = rates.to_vec();
            up[k] += delta;
            let mut down = rates.to_vec();
            down[k] -= delta;
            Ok((run(&up)? - run(&down)?) / (2.0 * delta))
        })
        .collect();
    net.transitions
        .iter()
        .zip(values)
        .map(|(t, v)| v.map(|v| (t.name.clone(), v)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn constant_trajectory() {
        let tr = Trajectory {
            times: vec![0.0, 1.0, 2.5, 4.0],
            states: vec![vec![3.0]; 4],
            var_names: names(&["x"]),
        };
        let o = |t0, t1| {
            outcome(
                &tr,
                &OutcomeSpec {
                    species: names(&["x"]),
                    t0,
                    t1,
                },
            )
            .unwrap()
        };
        assert_eq!(o(0.0, 4.0), 12.0);
        assert!((o(0.5, 3.0) - 7.5).abs() < 1e-12);
        assert_eq!(o(2.0, 2.0), 0.0);
        assert!(
            (outcome(
                &tr.scaled(-2.0),
                &OutcomeSpec {
                    species: names(&["x"]),
                    t0: 0.0,
                    t1: 4.0
                }
            )
            .unwrap()
                + 24.0)
                .abs()
                < 1e-12
        );
    }

    #[test]
    fn outcome_errors() {
        let tr = Trajectory {
            times: vec![0.0, 1.0],
            states: vec![vec![1.0]; 2],
            var_names: names(&["x"]),
        };
        for spec in [
            OutcomeSpec {
                species: vec![],
                t0: 0.0,
                t1: 1.0,
            },
            OutcomeSpec {
                species: names(&["y"]),
                t0: 0.0,
                t1: 1.0,
            },
            OutcomeSpec {
                species: names(&["x"]),
                t0: 0.0,
                t1: 2.0,
            },
        ] {
            assert!(outcome(&tr, &spec).is_err());
        }
    }

    #[test]
    fn sir_signs() {
        let net = fixtures::sir();
        let cfg = SolveConfig::rk4(0.0, 100.0, 0.1);
        let spec = OutcomeSpec {
            species: names(&["S", "R"]),
            t0: 0.0,
            t1: 100.0,
        };
        let s = sensitivity(
            &net,
            &net.rates(),
            &[0.99, 0.01, 0.0],
            &spec,
            &cfg,
            DEFAULT_STEP,
        )
        .unwrap();
        assert!(s["inf"] < 0.0 && s["rec"] > 0.0, "{s:?}");
    }

    #[test]
    fn isolated_transition_is_insensitive() {
        let mut net = fixtures::sir();
        let a = net.add_species("A");
        let b = net.add_species("B");
        net.add_transition("idle", 0.5, &[a], &[b]);
        let cfg = SolveConfig::rk4(0.0, 20.0, 0.1);
        let spec = OutcomeSpec {
            species: names(&["S", "A", "B"]),
            t0: 0.0,
            t1: 20.0,
        };
        let s = sensitivity(
            &net,
            &net.rates(),
            &[0.99, 0.01, 0.0, 0.0, 0.0],
            &spec,
            &cfg,
            DEFAULT_STEP,
        )
        .unwrap();
        assert!(s["idle"].abs() < 1e-12);
    }
}
