//! Built-in example models: the SIR net, the vaccination composite and its
//! components, the infectious and vector-borne type systems, and a palette of
//! typed disease models and stratification schemes.
//!
//! Reflexive "stay in stratum" transitions carry rate 1 so that the product
//! rule used by stratification keeps the rate of the meaningful factor.

use crate::compose::{Binding, OpenPetriNet, TypedOpenPetriNet, Uwd};
use crate::morphism::{typing_by_names, TypedPetriNet};
use crate::petri::PetriNet;
use crate::uwd_dsl::parse_uwd;

/// Three-box vaccination wiring diagram.
pub const EPI_UWD: &str = "uwd epi(S,I,Iv,R,V){ sir(S,I,R); viv(V,Iv,R); cross(S,I,Iv,V) }";

/// Host / vector / bloodmeal wiring for vector-borne transmission.
pub const MALARIA_UWD: &str = "uwd malaria(IH,IV){ host(IH); vector(IV); bloodmeal(IH,IV) }";

pub fn epi_uwd() -> Uwd {
    parse_uwd(EPI_UWD).expect("fixture parses").uwd
}

pub fn malaria_uwd() -> Uwd {
    parse_uwd(MALARIA_UWD).expect("fixture parses").uwd
}

pub fn sir() -> PetriNet {
    PetriNet::from_names(
        &["S", "I", "R"],
        &[
            ("inf", 0.3, &["S", "I"], &["I", "I"]),
            ("rec", 0.1, &["I"], &["R"]),
        ],
    )
}

pub fn sis() -> PetriNet {
    PetriNet::from_names(
        &["S", "I"],
        &[
            ("inf", 0.3, &["S", "I"], &["I", "I"]),
            ("rec", 0.1, &["I"], &["S"]),
        ],
    )
}

/// The vaccination composite, encoded by hand.
pub fn sviivr() -> PetriNet {
    PetriNet::from_names(
        &["S", "I", "Iv", "R", "V"],
        &[
            ("beta_uu", 0.3, &["S", "I"], &["I", "I"]),
            ("gamma_u", 1.0 / 14.0, &["I"], &["R"]),
            ("beta_vv", 0.03, &["V", "Iv"], &["Iv", "Iv"]),
            ("gamma_v", 1.0 / 14.0, &["Iv"], &["R"]),
            ("beta_uv", 0.05, &["S", "Iv"], &["I", "Iv"]),
            ("beta_vu", 0.03, &["V", "I"], &["Iv", "I"]),
            ("nu", 0.01, &["S"], &["V"]),
        ],
    )
}

pub fn sir_open() -> OpenPetriNet {
    let net = PetriNet::from_names(
        &["S", "I", "R"],
        &[
            ("beta_uu", 0.3, &["S", "I"], &["I", "I"]),
            ("gamma_u", 1.0 / 14.0, &["I"], &["R"]),
        ],
    );
    OpenPetriNet::new(net, vec![0, 1, 2])
}

pub fn viv_open() -> OpenPetriNet {
    let net = PetriNet::from_names(
        &["V", "Iv", "R"],
        &[
            ("beta_vv", 0.03, &["V", "Iv"], &["Iv", "Iv"]),
            ("gamma_v", 1.0 / 14.0, &["Iv"], &["R"]),
        ],
    );
    OpenPetriNet::new(net, vec![0, 1, 2])
}

pub fn cross_open() -> OpenPetriNet {
    let net = PetriNet::from_names(
        &["S", "I", "Iv", "V"],
        &[
            ("beta_uv", 0.05, &["S", "Iv"], &["I", "Iv"]),
            ("beta_vu", 0.03, &["V", "I"], &["Iv", "I"]),
            ("nu", 0.01, &["S"], &["V"]),
        ],
    );
    OpenPetriNet::new(net, vec![0, 1, 2, 3])
}

/// Box name to component bindings for [`EPI_UWD`].
pub fn epi_binding() -> Binding<OpenPetriNet> {
    [
        ("sir".to_string(), sir_open()),
        ("viv".to_string(), viv_open()),
        ("cross".to_string(), cross_open()),
    ]
    .into_iter()
    .collect()
}

/// Type system for infectious disease: one population type and transition
/// types for interaction, change of disease status, and change of stratum.
pub fn p_infectious() -> PetriNet {
    PetriNet::from_names(
        &["Pop"],
        &[
            ("infect", 1.0, &["Pop", "Pop"], &["Pop", "Pop"]),
            ("disease", 1.0, &["Pop"], &["Pop"]),
            ("strata", 1.0, &["Pop"], &["Pop"]),
        ],
    )
}

/// Type system for vector-borne disease: interactions only between hosts
/// and vectors, and no transitions changing host into vector or back.
pub fn p_vector_borne() -> PetriNet {
    PetriNet::from_names(
        &["H", "V"],
        &[
            ("host_disease", 1.0, &["H"], &["H"]),
            ("vector_disease", 1.0, &["V"], &["V"]),
            ("host_infection", 1.0, &["H", "V"], &["H", "V"]),
            ("vector_infection", 1.0, &["V", "H"], &["V", "H"]),
        ],
    )
}

fn with_strata_loops(mut net: PetriNet) -> PetriNet {
    for s in 0..net.species.len() {
        let name = format!("strata_{}", net.species[s].name);
        net.add_transition(name, 1.0, &[s], &[s]);
    }
    net
}

fn type_all(net: PetriNet, species_type: &str, transitions: &[(&str, &str)]) -> TypedPetriNet {
    let ty = p_infectious();
    let species: Vec<(String, &str)> = net
        .species
        .iter()
        .map(|s| (s.name.clone(), species_type))
        .collect();
    let species: Vec<(&str, &str)> = species.iter().map(|(a, b)| (a.as_str(), *b)).collect();
    let loops: Vec<(String, &str)> = net
        .transitions
        .iter()
        .filter(|t| t.name.starts_with("strata_"))
        .map(|t| (t.name.clone(), "strata"))
        .collect();
    let mut tmap: Vec<(&str, &str)> = transitions.to_vec();
    tmap.extend(loops.iter().map(|(a, b)| (a.as_str(), *b)));
    let typing = typing_by_names(&net, &ty, &species, &tmap);
    TypedPetriNet {
        net,
        type_net: ty,
        typing,
    }
}

/// SIR typed by the infectious type system, with a reflexive stratum
/// transition on every species.
pub fn sir_typed() -> TypedPetriNet {
    type_all(
        with_strata_loops(sir()),
        "Pop",
        &[("inf", "infect"), ("rec", "disease")],
    )
}

pub fn sis_typed() -> TypedPetriNet {
    type_all(
        with_strata_loops(sis()),
        "Pop",
        &[("inf", "infect"), ("rec", "disease")],
    )
}

pub fn sviivr_typed() -> TypedPetriNet {
    type_all(
        sviivr(),
        "Pop",
        &[
            ("beta_uu", "infect"),
            ("gamma_u", "disease"),
            ("beta_vv", "infect"),
            ("gamma_v", "disease"),
            ("beta_uv", "infect"),
            ("beta_vu", "infect"),
            ("nu", "strata"),
        ],
    )
}

/// Quarantine scheme: quarantined individuals do not interact.
pub fn quarantine_typed() -> TypedPetriNet {
    let net = PetriNet::from_names(
        &["Q", "~Q"],
        &[
            ("enter_q", 0.05, &["~Q"], &["Q"]),
            ("exit_q", 0.1, &["Q"], &["~Q"]),
            ("interact", 1.0, &["~Q", "~Q"], &["~Q", "~Q"]),
            ("disease_Q", 1.0, &["Q"], &["Q"]),
            ("disease_~Q", 1.0, &["~Q"], &["~Q"]),
        ],
    );
    type_all(
        net,
        "Pop",
        &[
            ("enter_q", "strata"),
            ("exit_q", "strata"),
            ("interact", "infect"),
            ("disease_Q", "disease"),
            ("disease_~Q", "disease"),
        ],
    )
}

/// Age scheme: children and adults interact in every combination; nobody
/// changes age group.
pub fn age_typed() -> TypedPetriNet {
    let net = PetriNet::from_names(
        &["Child", "Adult"],
        &[
            ("cc", 1.0, &["Child", "Child"], &["Child", "Child"]),
            ("ca", 1.0, &["Child", "Adult"], &["Child", "Adult"]),
            ("ac", 1.0, &["Adult", "Child"], &["Adult", "Child"]),
            ("aa", 1.0, &["Adult", "Adult"], &["Adult", "Adult"]),
            ("disease_Child", 1.0, &["Child"], &["Child"]),
            ("disease_Adult", 1.0, &["Adult"], &["Adult"]),
        ],
    );
    type_all(
        net,
        "Pop",
        &[
            ("cc", "infect"),
            ("ca", "infect"),
            ("ac", "infect"),
            ("aa", "infect"),
            ("disease_Child", "disease"),
            ("disease_Adult", "disease"),
        ],
    )
}

/// Two-patch flux model: movement between patches, interaction within a
/// patch only.
pub fn flux_typed() -> TypedPetriNet {
    let net = PetriNet::from_names(
        &["P1", "P2"],
        &[
            ("move_12", 0.02, &["P1"], &["P2"]),
            ("move_21", 0.02, &["P2"], &["P1"]),
            ("interact_1", 1.0, &["P1", "P1"], &["P1", "P1"]),
            ("interact_2", 1.0, &["P2", "P2"], &["P2", "P2"]),
            ("disease_1", 1.0, &["P1"], &["P1"]),
            ("disease_2", 1.0, &["P2"], &["P2"]),
        ],
    );
    type_all(
        net,
        "Pop",
        &[
            ("move_12", "strata"),
            ("move_21", "strata"),
            ("interact_1", "infect"),
            ("interact_2", "infect"),
            ("disease_1", "disease"),
            ("disease_2", "disease"),
        ],
    )
}

/// Two-patch simple trip model. `P_ij` is currently in patch `i` and
/// resides in patch `j`; trips never change residence and interactions
/// happen between people currently in the same patch.
pub fn simple_trip_typed() -> TypedPetriNet {
    let names = ["P11", "P12", "P21", "P22"];
    let mut net = PetriNet::new();
    for n in names {
        net.add_species(n);
    }
    let idx = |i: usize, j: usize| (i - 1) * 2 + (j - 1);
    let mut types: Vec<(String, &str)> = Vec::new();
    for j in 1..=2 {
        for i in 1..=2 {
            if i != j {
                let go = format!("trip_{j}{j}_to_{i}{j}");
                net.add_transition(go.clone(), 0.05, &[idx(j, j)], &[idx(i, j)]);
                types.push((go, "strata"));
                let back = format!("return_{i}{j}_to_{j}{j}");
                net.add_transition(back.clone(), 0.5, &[idx(i, j)], &[idx(j, j)]);
                types.push((back, "strata"));
            }
        }
    }
    for patch in 1..=2 {
        for a in 1..=2 {
            for b in 1..=2 {
                let (sa, sb) = (idx(patch, a), idx(patch, b));
                let name = format!("interact_{}_{}", names[sa], names[sb]);
                net.add_transition(name.clone(), 1.0, &[sa, sb], &[sa, sb]);
                types.push((name, "infect"));
            }
        }
    }
    for (k, n) in names.iter().enumerate() {
        let name = format!("disease_{n}");
        net.add_transition(name.clone(), 1.0, &[k], &[k]);
        types.push((name, "disease"));
    }
    let t: Vec<(&str, &str)> = types.iter().map(|(a, b)| (a.as_str(), *b)).collect();
    type_all(net, "Pop", &t)
}

/// Host/vector SIS model with only transitions allowed by the vector-borne
/// type system.
pub fn sis_vector() -> PetriNet {
    PetriNet::from_names(
        &["S_H", "I_H", "S_V", "I_V"],
        &[
            ("host_recovery", 0.05, &["I_H"], &["S_H"]),
            ("vector_recovery", 0.1, &["I_V"], &["S_V"]),
            ("host_infection", 0.3, &["S_H", "I_V"], &["I_H", "I_V"]),
            ("vector_infection", 0.3, &["S_V", "I_H"], &["I_V", "I_H"]),
        ],
    )
}

pub fn sis_vector_typed() -> TypedPetriNet {
    let net = sis_vector();
    let type_net = p_vector_borne();
    let typing = typing_by_names(
        &net,
        &type_net,
        &[("S_H", "H"), ("I_H", "H"), ("S_V", "V"), ("I_V", "V")],
        &[
            ("host_recovery", "host_disease"),
            ("vector_recovery", "vector_disease"),
            ("host_infection", "host_infection"),
            ("vector_infection", "vector_infection"),
        ],
    );
    TypedPetriNet {
        net,
        type_net,
        typing,
    }
}

/// The host/vector SIS model extended with two transitions the vector-borne
/// type system forbids: a host turning into a vector, and vectors infecting
/// each other.
pub fn sis_vector_forbidden() -> PetriNet {
    let mut net = sis_vector();
    net.add_transition("S_H->S_V", 0.01, &[0], &[2]);
    net.add_transition("I_V+S_V->2I_V", 0.01, &[3, 2], &[3, 3]);
    net
}

/// An attempted typing of [`sis_vector_forbidden`]: species typed by
/// population, the allowed transitions typed as in [`sis_vector_typed`], and
/// the forbidden ones sent to the closest-looking type transitions
/// (`host_disease` and `vector_infection`). Arc maps pair arcs in order.
pub fn sis_vector_forbidden_typing() -> crate::morphism::PetriMorphism {
    let ty = p_vector_borne();
    let mut f = sis_vector_typed().typing;
    // The two extra transitions and their arcs were appended last, in order.
    for ty_t in [0, 3] {
        f.transition_map.push(ty_t);
        f.input_map.extend(ty.input_arcs_of(ty_t));
        f.output_map.extend(ty.output_arcs_of(ty_t));
    }
    f
}

/// Typed components of the vaccination composite.
pub fn epi_typed_binding() -> Binding<TypedOpenPetriNet> {
    let ty = p_infectious();
    let typed = |open: OpenPetriNet, tmap: &[(&str, &str)]| {
        let species: Vec<(String, &str)> = open
            .net
            .species
            .iter()
            .map(|s| (s.name.clone(), "Pop"))
            .collect();
        let species: Vec<(&str, &str)> = species.iter().map(|(a, b)| (a.as_str(), *b)).collect();
        let typing = typing_by_names(&open.net, &ty, &species, tmap);
        TypedOpenPetriNet {
            typed: TypedPetriNet {
                net: open.net,
                type_net: ty.clone(),
                typing,
            },
            legs: open.legs,
        }
    };
    [
        (
            "sir".to_string(),
            typed(sir_open(), &[("beta_uu", "infect"), ("gamma_u", "disease")]),
        ),
        (
            "viv".to_string(),
            typed(viv_open(), &[("beta_vv", "infect"), ("gamma_v", "disease")]),
        ),
        (
            "cross".to_string(),
            typed(
                cross_open(),
                &[
                    ("beta_uv", "infect"),
                    ("beta_vu", "infect"),
                    ("nu", "strata"),
                ],
            ),
        ),
    ]
    .into_iter()
    .collect()
}

/// Every fixture typed by the infectious type system.
pub fn infectious_palette() -> Vec<(&'static str, TypedPetriNet)> {
    vec![
        ("sir", sir_typed()),
        ("sis", sis_typed()),
        ("sviivr", sviivr_typed()),
        ("quarantine", quarantine_typed()),
        ("age", age_typed()),
        ("flux", flux_typed()),
        ("simple_trip", simple_trip_typed()),
    ]
}
