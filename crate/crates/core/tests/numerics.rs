mod common;

use std::collections::BTreeMap;

use common::*;
use opetri_core::analyze::{
    calibrate, outcome, sensitivity, Dataset, FitSpec, FreeParam, OutcomeSpec, DEFAULT_STEP,
};
use opetri_core::compose::Binding;
use opetri_core::dynamics::{
    compose_dynamics, lookup, mass_action, ode_to_dde, OpenDynamics, RossMacdonald, VectorField,
};
use opetri_core::fixtures;
use opetri_core::solve::{simulate, solve_dde, solve_ode, SolveConfig};
use proptest::prelude::*;

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

#[test]
fn rk45_error_within_hundred_times_tolerance() {
    let f = VectorField::ode(names(&["u"]), |_t, u, du| du[0] = -u[0]);
    for tol in [1e-6, 1e-8, 1e-10] {
        let tr = solve_ode(&f, &[1.0], &SolveConfig::rk45(0.0, 5.0, tol)).unwrap();
        let worst = tr
            .times
            .iter()
            .zip(&tr.states)
            .map(|(t, s)| (s[0] - (-t).exp()).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 100.0 * tol, "tol {tol}: error {worst}");
    }
}

#[test]
fn solves_are_deterministic() {
    let f = mass_action(&fixtures::sviivr());
    let u0 = [0.9, 0.05, 0.0, 0.0, 0.05];
    let cfg = SolveConfig::rk45(0.0, 50.0, 1e-8);
    assert_eq!(
        solve_ode(&f, &u0, &cfg).unwrap().to_csv(),
        solve_ode(&f, &u0, &cfg).unwrap().to_csv()
    );
}

#[test]
fn zero_delay_dde_matches_ode() {
    let p = RossMacdonald {
        tau: 0.0,
        ..RossMacdonald::default()
    };
    let u = fixtures::malaria_uwd();
    let ode: Binding<OpenDynamics> = [
        ("host".to_string(), p.host()),
        ("vector".to_string(), p.vector()),
        ("bloodmeal".to_string(), p.bloodmeal()),
    ]
    .into_iter()
    .collect();
    let dde: Binding<OpenDynamics> = [
        ("host".to_string(), ode_to_dde(&p.host()).unwrap()),
        ("vector".to_string(), ode_to_dde(&p.vector()).unwrap()),
        ("bloodmeal".to_string(), p.bloodmeal_delayed()),
    ]
    .into_iter()
    .collect();
    let a = compose_dynamics(&u, &ode).unwrap().field;
    let b = compose_dynamics(&u, &dde).unwrap().field;
    let cfg = SolveConfig::rk4(0.0, 100.0, 0.05);
    let u0 = [10.0, 50.0];
    let x = solve_ode(&a, &u0, &cfg).unwrap();
    let y = simulate(&b, &u0, &cfg).unwrap();
    assert_eq!(x.times, y.times);
    for (p, q) in x.states.iter().zip(&y.states) {
        for (s, t) in p.iter().zip(q) {
            assert!(close(*s, *t, 1e-8), "{s} vs {t}");
        }
    }
}

#[test]
fn positive_delay_slows_the_epidemic() {
    let run = |tau: f64| {
        let p = RossMacdonald {
            tau,
            ..RossMacdonald::default()
        };
        let b: Binding<OpenDynamics> = [
            ("host".to_string(), ode_to_dde(&p.host()).unwrap()),
            ("vector".to_string(), ode_to_dde(&p.vector()).unwrap()),
            ("bloodmeal".to_string(), p.bloodmeal_delayed()),
        ]
        .into_iter()
        .collect();
        let f = compose_dynamics(&fixtures::malaria_uwd(), &b)
            .unwrap()
            .field;
        simulate(&f, &[10.0, 50.0], &SolveConfig::rk4(0.0, 60.0, 0.1)).unwrap()
    };
    let fast = run(0.0);
    let slow = run(10.0);
    assert!(slow.final_state()[0] < fast.final_state()[0]);
    assert!(slow
        .states
        .iter()
        .flatten()
        .all(|x| x.is_finite() && *x >= 0.0));
}

#[test]
fn dde_with_two_delays() {
    // u'(t) = -u(t-1) - u(t-0.5), hist = 1: on [0, 0.5] u = 1 - 2t.
    let f = VectorField::dde(names(&["u"]), vec![1.0, 0.5], |t, u, h, du| {
        let (mut a, mut b) = ([0.0], [0.0]);
        lookup(h, t - 1.0, u, &mut a);
        lookup(h, t - 0.5, u, &mut b);
        du[0] = -a[0] - b[0];
    });
    let one = |_t: f64, out: &mut [f64]| out[0] = 1.0;
    let tr = solve_dde(&f, &[1.0], &one, &SolveConfig::rk4(0.0, 1.0, 0.1)).unwrap();
    assert!(tr.interpolate(0.5).unwrap()[0].abs() < 1e-12);
    // On [0.5, 1]: u' = -1 - (1 - 2(t - 0.5)) = -3 + 2t, so u(1) = 0 - 1.5 + 0.75.
    assert!((tr.final_state()[0] + 0.75).abs() < 1e-10);
}

fn sir_synthetic() -> (Dataset, SolveConfig) {
    let cfg = SolveConfig::rk4(0.0, 49.0, 0.1);
    let tr = simulate(&mass_action(&fixtures::sir()), &[0.99, 0.01, 0.0], &cfg).unwrap();
    let times: Vec<f64> = (0..50).map(f64::from).collect();
    (
        Dataset::from_trajectory(&tr, &times, &["S", "I", "R"]).unwrap(),
        cfg,
    )
}

#[test]
fn recovers_sir_rates_with_gaps_in_data() {
    let (mut data, cfg) = sir_synthetic();
    for (k, series) in data.observations.values_mut().enumerate() {
        for (i, x) in series.iter_mut().enumerate() {
            if (i + k) % 3 == 0 {
                *x = None;
            }
        }
    }
    let spec = FitSpec::new(
        vec![
            FreeParam::new("inf", 0.5, 0.0, Some(2.0)),
            FreeParam::new("rec", 0.5, 0.0, Some(2.0)),
        ],
        BTreeMap::new(),
    );
    let fit = calibrate(&fixtures::sir(), &[0.99, 0.01, 0.0], &data, &spec, &cfg, 3).unwrap();
    assert!((fit.rates["inf"] / 0.3 - 1.0).abs() < 0.05, "{fit:?}");
    assert!((fit.rates["rec"] / 0.1 - 1.0).abs() < 0.05);
    assert!(fit.history.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn recovers_initial_infected_fraction() {
    let (data, cfg) = sir_synthetic();
    let mut spec = FitSpec::new(
        vec![FreeParam::new("inf", 0.5, 0.0, Some(2.0))],
        BTreeMap::new(),
    );
    spec.fixed_rates.insert("rec".into(), 0.1);
    spec.free_u0.push(FreeParam::new("I", 0.05, 0.0, Some(1.0)));
    let fit = calibrate(&fixtures::sir(), &[0.99, 0.0, 0.0], &data, &spec, &cfg, 0).unwrap();
    assert!((fit.u0["I"] / 0.01 - 1.0).abs() < 0.05, "{fit:?}");
    assert_eq!(fit.u0["S"], 0.99);
    assert_eq!(fit.rates["rec"], 0.1);
}

#[test]
fn seed_does_not_change_a_well_posed_fit() {
    let (data, cfg) = sir_synthetic();
    let spec = FitSpec::new(
        vec![
            FreeParam::new("inf", 0.5, 0.0, Some(2.0)),
            FreeParam::new("rec", 0.5, 0.0, Some(2.0)),
        ],
        BTreeMap::new(),
    );
    let a = calibrate(&fixtures::sir(), &[0.99, 0.01, 0.0], &data, &spec, &cfg, 1).unwrap();
    let b = calibrate(&fixtures::sir(), &[0.99, 0.01, 0.0], &data, &spec, &cfg, 1).unwrap();
    assert_eq!(a, b);
}

#[test]
fn failed_simulations_are_penalized_not_fatal() {
    let net = opetri_core::petri::PetriNet::from_names(
        &["X"],
        &[("grow", 1.0, &["X", "X"], &["X", "X", "X"])],
    );
    let cfg = SolveConfig::rk4(0.0, 10.0, 0.1);
    let data = Dataset::from_csv_str("t,X\n0,1\n1,1.1\n").unwrap();
    let mut spec = FitSpec::new(
        vec![FreeParam::new("grow", 0.05, 0.0, Some(10.0))],
        BTreeMap::new(),
    );
    spec.max_evals = 30;
    let fit = calibrate(&net, &[1.0], &data, &spec, &cfg, 0).unwrap();
    assert!(fit.failures > 0);
    assert!(fit.loss.is_finite());
}

#[test]
fn outcome_over_all_species_is_population_times_horizon() {
    for rates in [[0.3, 0.1], [0.9, 0.02], [0.05, 0.5]] {
        let net = fixtures::sir().with_rates(&rates);
        let tr = simulate(
            &mass_action(&net),
            &[0.7, 0.2, 0.1],
            &SolveConfig::rk45(0.0, 80.0, 1e-10),
        )
        .unwrap();
        let o = outcome(
            &tr,
            &OutcomeSpec {
                species: names(&["S", "I", "R"]),
                t0: 0.0,
                t1: 80.0,
            },
        )
        .unwrap();
        assert!((o - 80.0).abs() < 1e-8, "{o}");
        let sr = outcome(
            &tr,
            &OutcomeSpec {
                species: names(&["S", "R"]),
                t0: 0.0,
                t1: 80.0,
            },
        )
        .unwrap();
        assert!(sr > 0.0 && sr < 80.0);
    }
}

#[test]
fn sviivr_sensitivity_pattern() {
    let net = fixtures::sviivr();
    let cfg = SolveConfig::rk4(0.0, 150.0, 0.1);
    let u0 = [0.99, 0.01, 0.0, 0.0, 0.0];
    let spec = OutcomeSpec {
        species: names(&["S", "R", "V"]),
        t0: 0.0,
        t1: 150.0,
    };
    let s = sensitivity(&net, &net.rates(), &u0, &spec, &cfg, DEFAULT_STEP).unwrap();
    assert!(s["beta_uu"] < 0.0);
    assert!(s["gamma_u"] > 0.0);
    assert_eq!(s.len(), 7);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn outcome_is_linear(seed in any::<u64>(), c in -5.0f64..5.0) {
        let mut r = rng(seed);
        let u0 = random_state(&mut r, 3);
        let tr = simulate(&mass_action(&fixtures::sir()), &u0, &SolveConfig::rk4(0.0, 10.0, 0.25)).unwrap();
        let spec = OutcomeSpec { species: names(&["S", "I"]), t0: 1.0, t1: 7.3 };
        let a = outcome(&tr.scaled(c), &spec).unwrap();
        let b = c * outcome(&tr, &spec).unwrap();
        prop_assert!(close(a, b, 1e-12));
    }

    #[test]
    fn conservation_along_trajectories(seed in any::<u64>()) {
        let mut r = rng(seed);
        let palette = fixtures::infectious_palette();
        let (_, t) = &palette[(seed % palette.len() as u64) as usize];
        let u0 = random_state(&mut r, t.net.species.len());
        let total: f64 = u0.iter().sum();
        let tr = simulate(&mass_action(&t.net), &u0, &SolveConfig::rk45(0.0, 30.0, 1e-8)).unwrap();
        for s in &tr.states {
            prop_assert!((s.iter().sum::<f64>() - total).abs() <= 1e-9);
        }
    }
}
