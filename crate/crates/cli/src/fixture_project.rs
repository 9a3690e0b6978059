//! The example project written by `opetri fixtures`.

use std::collections::BTreeMap;

use anyhow::Result;
use opetri_core::analyze::{Dataset, FitSpec, FreeParam, OutcomeSpec};
use opetri_core::compose::{OpenPetriNet, TypedOpenPetriNet};
use opetri_core::dynamics::mass_action;
use opetri_core::fixtures as fx;
use opetri_core::morphism::{PetriMorphism, TypedPetriNet};
use opetri_core::solve::{simulate, SolveConfig};
use opetri_core::uwd_dsl::{parse_uwd, print_named_uwd};
use serde_json::Value;

use crate::commands::json;
use crate::project::{
    DynamicsEntry, FitEntry, ModelRef, ProjectFile, SensitivityEntry, SimulationEntry,
};

const SINGLE_UWD: &str = "uwd single(S,I,R){ sir(S,I,R) }";
const CLASH_UWD: &str = "uwd clash(X){ host(X); vector(X) }";

fn map(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// The SIR run that generated `data/sir_synthetic.csv`, with every fifth
/// infected count and every seventh recovered count left out.
fn sir_dataset() -> Result<Dataset> {
    let cfg = SolveConfig::rk4(0.0, 49.0, 0.1);
    let tr = simulate(&mass_action(&fx::sir()), &[0.99, 0.01, 0.0], &cfg)?;
    let times: Vec<f64> = (0..50).map(f64::from).collect();
    let mut d = Dataset::from_trajectory(&tr, &times, &["S", "I", "R"])?;
    for (k, x) in d.observations.get_mut("I").unwrap().iter_mut().enumerate() {
        if k % 5 == 4 {
            *x = None;
        }
    }
    for (k, x) in d.observations.get_mut("R").unwrap().iter_mut().enumerate() {
        if k % 7 == 6 {
            *x = None;
        }
    }
    Ok(d)
}

fn exposing(t: &TypedPetriNet, legs: &[&str]) -> TypedOpenPetriNet {
    TypedOpenPetriNet {
        typed: t.clone(),
        legs: legs
            .iter()
            .map(|n| t.net.species_index(n).unwrap())
            .collect(),
    }
}

/// Every file of the example project, as (relative path, contents).
pub fn files() -> Result<Vec<(String, String)>> {
    let mut files = Vec::new();
    let mut p = ProjectFile::default();

    let mut add = |section: &mut BTreeMap<String, Value>, dir: &str, name: &str, body: String| {
        let path = format!("{dir}/{name}.json");
        section.insert(name.to_string(), Value::String(path.clone()));
        files.push((path, body));
    };

    let nets = [
        ("sir", fx::sir()),
        ("sis", fx::sis()),
        ("sviivr", fx::sviivr()),
        ("sis_vector", fx::sis_vector()),
        ("sis_vector_forbidden", fx::sis_vector_forbidden()),
        ("p_infectious", fx::p_infectious()),
        ("p_vector_borne", fx::p_vector_borne()),
    ];
    for (n, net) in &nets {
        add(&mut p.nets, "nets", n, json(net)?);
    }
    let open: [(&str, OpenPetriNet); 3] = [
        ("sir_open", fx::sir_open()),
        ("viv_open", fx::viv_open()),
        ("cross_open", fx::cross_open()),
    ];
    for (n, o) in &open {
        add(&mut p.open_nets, "open_nets", n, json(o)?);
    }
    let ty = fx::p_infectious();
    let mut typed: Vec<(String, TypedPetriNet)> = fx::infectious_palette()
        .into_iter()
        .map(|(n, t)| (format!("{n}_typed"), t))
        .collect();
    typed.push(("sis_vector_typed".into(), fx::sis_vector_typed()));
    typed.push((
        "infectious_identity".into(),
        TypedPetriNet {
            net: ty.clone(),
            type_net: ty.clone(),
            typing: PetriMorphism::identity(&ty),
        },
    ));
    for (n, t) in &typed {
        add(&mut p.typed_nets, "typed_nets", n, json(t)?);
    }
    let mut typed_open: Vec<(String, TypedOpenPetriNet)> = fx::epi_typed_binding()
        .into_iter()
        .map(|(b, t)| (format!("{b}_typed_open"), t))
        .collect();
    // Two ends of one host/vector model; wiring them together is a type clash.
    let sv = fx::sis_vector_typed();
    typed_open.push(("host_end".into(), exposing(&sv, &["S_H"])));
    typed_open.push(("vector_end".into(), exposing(&sv, &["S_V"])));
    for (n, t) in &typed_open {
        add(&mut p.typed_open_nets, "typed_open_nets", n, json(t)?);
    }
    add(
        &mut p.typings,
        "typings",
        "sis_vector_forbidden_typing",
        json(&fx::sis_vector_forbidden_typing())?,
    );

    for (n, src) in [
        ("epi", fx::EPI_UWD),
        ("malaria", fx::MALARIA_UWD),
        ("single", SINGLE_UWD),
        ("clash", CLASH_UWD),
    ] {
        let doc = parse_uwd(src).expect("built-in diagram parses");
        let path = format!("uwds/{n}.uwd");
        files.push((path.clone(), print_named_uwd(&doc.name, &doc.uwd)?));
        p.uwds.insert(n.into(), path);
    }

    let dynamics = |component: &str, delay_capable: bool| DynamicsEntry {
        component: component.into(),
        params: BTreeMap::new(),
        delay_capable,
    };
    p.dynamics
        .insert("rm_host".into(), dynamics("rm_host", false));
    p.dynamics
        .insert("rm_vector".into(), dynamics("rm_vector", false));
    p.dynamics
        .insert("rm_bloodmeal".into(), dynamics("rm_bloodmeal", false));
    p.dynamics
        .insert("rm_host_dde".into(), dynamics("rm_host", true));
    p.dynamics
        .insert("rm_vector_dde".into(), dynamics("rm_vector", true));
    p.dynamics.insert(
        "rm_bloodmeal_delayed".into(),
        dynamics("rm_bloodmeal_delayed", false),
    );

    files.push(("data/sir_synthetic.csv".into(), sir_dataset()?.to_csv()));
    p.datasets
        .insert("sir_synthetic".into(), "data/sir_synthetic.csv".into());

    let sir_u0 = map(&[("S", 0.99), ("I", 0.01), ("R", 0.0)]);
    let net = |n: &str| ModelRef {
        net: Some(n.into()),
        ..ModelRef::default()
    };
    let wired = |binding: &[(&str, &str)]| ModelRef {
        uwd: Some("malaria".into()),
        binding: binding
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect(),
        ..ModelRef::default()
    };
    p.simulations.insert(
        "sir".into(),
        SimulationEntry {
            model: net("sir"),
            u0: sir_u0.clone(),
            rates: BTreeMap::new(),
            config: SolveConfig::rk45(0.0, 100.0, 1e-8),
        },
    );
    p.simulations.insert(
        "sviivr".into(),
        SimulationEntry {
            model: net("sviivr"),
            u0: map(&[
                ("S", 0.98),
                ("I", 0.01),
                ("Iv", 0.0),
                ("R", 0.0),
                ("V", 0.01),
            ]),
            rates: BTreeMap::new(),
            config: SolveConfig::rk45(0.0, 150.0, 1e-8),
        },
    );
    let rm_u0 = map(&[("IH", 10.0), ("IV", 50.0)]);
    p.simulations.insert(
        "malaria".into(),
        SimulationEntry {
            model: wired(&[
                ("host", "rm_host"),
                ("vector", "rm_vector"),
                ("bloodmeal", "rm_bloodmeal"),
            ]),
            u0: rm_u0.clone(),
            rates: BTreeMap::new(),
            config: SolveConfig::rk4(0.0, 100.0, 0.05),
        },
    );
    p.simulations.insert(
        "malaria_delayed".into(),
        SimulationEntry {
            model: wired(&[
                ("host", "rm_host_dde"),
                ("vector", "rm_vector_dde"),
                ("bloodmeal", "rm_bloodmeal_delayed"),
            ]),
            u0: rm_u0,
            rates: BTreeMap::new(),
            config: SolveConfig::rk4(0.0, 100.0, 0.05),
        },
    );

    p.fits.insert(
        "sir_recovery".into(),
        FitEntry {
            net: "sir".into(),
            dataset: "sir_synthetic".into(),
            u0: sir_u0.clone(),
            spec: FitSpec::new(
                vec![
                    FreeParam::new("inf", 0.5, 0.0, Some(5.0)),
                    FreeParam::new("rec", 0.5, 0.0, Some(5.0)),
                ],
                BTreeMap::new(),
            ),
            config: SolveConfig::rk4(0.0, 49.0, 0.1),
        },
    );

    p.sensitivities.insert(
        "sir_susceptible_and_recovered".into(),
        SensitivityEntry {
            net: "sir".into(),
            u0: sir_u0,
            rates: BTreeMap::new(),
            outcome: OutcomeSpec {
                species: names(&["S", "R"]),
                t0: 0.0,
                t1: 100.0,
            },
            config: SolveConfig::rk4(0.0, 100.0, 0.1),
            step: None,
        },
    );
    p.sensitivities.insert(
        "sviivr_never_infected".into(),
        SensitivityEntry {
            net: "sviivr".into(),
            u0: map(&[
                ("S", 0.99),
                ("I", 0.01),
                ("Iv", 0.0),
                ("R", 0.0),
                ("V", 0.0),
            ]),
            rates: BTreeMap::new(),
            outcome: OutcomeSpec {
                species: names(&["S", "V"]),
                t0: 0.0,
                t1: 150.0,
            },
            config: SolveConfig::rk4(0.0, 150.0, 0.1),
            step: None,
        },
    );

    files.push(("project.json".into(), json(&p)?));
    files.sort();
    Ok(files)
}
