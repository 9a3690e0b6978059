//! Stratification of typed Petri nets by pullback over a shared type net.
//!
//! The stratified net has as species (transitions, input arcs, output arcs)
//! all pairs of species (transitions, input arcs, output arcs) of the two
//! factors that carry the same type. Arc sources and targets are the pairs
//! of the factors' sources and targets, which exist because typings respect
//! them. Pairs are enumerated lexicographically by (left index, right index).
//!
//! Rates of paired transitions are the product of the factor rates.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::dot::{to_dot, DotOptions};
use crate::morphism::{validate_morphism, PetriMorphism, TypedPetriNet};
use crate::petri::{InputArc, OutputArc, PetriNet, Species, Transition, Violation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StratifyError {
    #[error("the two typed nets are typed over different type nets")]
    TypeNetMismatch,
    #[error("{which} factor is not a valid typed net: {}", crate::compose::join(.violations))]
    InvalidFactor {
        which: &'static str,
        violations: Vec<Violation>,
    },
}

/// Factor indices each part of a stratified net came from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Provenance {
    pub species: Vec<(usize, usize)>,
    pub transitions: Vec<(usize, usize)>,
    pub inputs: Vec<(usize, usize)>,
    pub outputs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StratifiedNet {
    pub result: TypedPetriNet,
    pub proj_left: PetriMorphism,
    pub proj_right: PetriMorphism,
    pub provenance: Provenance,
}

fn pairs(left: &[usize], right: &[usize]) -> Vec<(usize, usize)> {
    let mut by_type: HashMap<usize, Vec<usize>> = HashMap::new();
    for (j, &ty) in right.iter().enumerate() {
        by_type.entry(ty).or_default().push(j);
    }
    let mut out = Vec::new();
    for (i, ty) in left.iter().enumerate() {
        if let Some(js) = by_type.get(ty) {
            out.extend(js.iter().map(|&j| (i, j)));
        }
    }
    out
}

pub fn pullback(a: &TypedPetriNet, b: &TypedPetriNet) -> Result<StratifiedNet, StratifyError> {
    if a.type_net != b.type_net {
        return Err(StratifyError::TypeNetMismatch);
    }
    for (which, t) in [("left", a), ("right", b)] {
        let v = t.validate();
        if !v.is_empty() {
            return Err(StratifyError::InvalidFactor {
                which,
                violations: v,
            });
        }
    }
    let (fa, fb) = (&a.typing, &b.typing);
    let prov = Provenance {
        species: pairs(&fa.species_map, &fb.species_map),
        transitions: pairs(&fa.transition_map, &fb.transition_map),
        inputs: pairs(&fa.input_map, &fb.input_map),
        outputs: pairs(&fa.output_map, &fb.output_map),
    };
    let species_index: HashMap<(usize, usize), usize> = prov
        .species
        .iter()
        .enumerate()
        .map(|(k, &p)| (p, k))
        .collect();
    let transition_index: HashMap<(usize, usize), usize> = prov
        .transitions
        .iter()
        .enumerate()
        .map(|(k, &p)| (p, k))
        .collect();

    let mut net = PetriNet::new();
    net.species = prov
        .species
        .iter()
        .map(|&(i, j)| Species {
            name: format!("({}, {})", a.net.species[i].name, b.net.species[j].name),
        })
        .collect();
    net.transitions = prov
        .transitions
        .iter()
        .map(|&(i, j)| {
            let (ta, tb) = (&a.net.transitions[i], &b.net.transitions[j]);
            Transition {
                name: format!("({}, {})", ta.name, tb.name),
                rate: ta.rate * tb.rate,
            }
        })
        .collect();
    // Same-typed arcs have same-typed endpoints, so every lookup succeeds.
    net.inputs = prov
        .inputs
        .iter()
        .map(|&(i, j)| {
            let (x, y) = (a.net.inputs[i], b.net.inputs[j]);
            InputArc {
                is: species_index[&(x.is, y.is)],
                it: transition_index[&(x.it, y.it)],
            }
        })
        .collect();
    net.outputs = prov
        .outputs
        .iter()
        .map(|&(i, j)| {
            let (x, y) = (a.net.outputs[i], b.net.outputs[j]);
            OutputArc {
                os: species_index[&(x.os, y.os)],
                ot: transition_index[&(x.ot, y.ot)],
            }
        })
        .collect();

    let proj = |side: fn(&(usize, usize)) -> usize| PetriMorphism {
        species_map: prov.species.iter().map(side).collect(),
        transition_map: prov.transitions.iter().map(side).collect(),
        input_map: prov.inputs.iter().map(side).collect(),
        output_map: prov.outputs.iter().map(side).collect(),
    };
    let proj_left = proj(|p| p.0);
    let proj_right = proj(|p| p.1);
    let typing = proj_left.then(fa);
    debug_assert_eq!(typing, proj_right.then(fb));
    debug_assert!(validate_morphism(&proj_left, &net, &a.net).is_empty());
    debug_assert!(validate_morphism(&proj_right, &net, &b.net).is_empty());
    debug_assert!(arcs_rederived_from_type_net(a, b, &prov));

    Ok(StratifiedNet {
        result: TypedPetriNet {
            net,
            type_net: a.type_net.clone(),
            typing,
        },
        proj_left,
        proj_right,
        provenance: prov,
    })
}

/// Arcs obtained by pairing, for each paired transition, the left and right
/// arcs lying over each arc of the type transition. Under etale typings this
/// reproduces the componentwise arc pairs exactly.
fn arcs_rederived_from_type_net(a: &TypedPetriNet, b: &TypedPetriNet, prov: &Provenance) -> bool {
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for &(ta, tb) in &prov.transitions {
        for ia in a.net.input_arcs_of(ta) {
            for ib in b.net.input_arcs_of(tb) {
                if a.typing.input_map[ia] == b.typing.input_map[ib] {
                    inputs.push((ia, ib));
                }
            }
        }
        for oa in a.net.output_arcs_of(ta) {
            for ob in b.net.output_arcs_of(tb) {
                if a.typing.output_map[oa] == b.typing.output_map[ob] {
                    outputs.push((oa, ob));
                }
            }
        }
    }
    inputs.sort_unstable();
    outputs.sort_unstable();
    inputs == prov.inputs && outputs == prov.outputs
}

/// DOT exports of both factors and the stratified net, colored by type.
#[derive(Debug, Clone, PartialEq)]
pub struct StratifiedDots {
    pub left: String,
    pub right: String,
    pub result: String,
}

const TYPE_PALETTE: [&str; 8] = [
    "#f2d13a", "#6fa8dc", "#b07cc6", "#93c47d", "#e06666", "#f6b26b", "#76a5af", "#c27ba0",
];

/// Fill colors keyed by name, chosen by type index.
pub fn typing_colors(t: &TypedPetriNet) -> DotOptions {
    let mut o = DotOptions::default();
    let pick = |k: usize| TYPE_PALETTE[k % TYPE_PALETTE.len()].to_string();
    let n_species_types = t.type_net.species.len();
    for (s, &ty) in t.net.species.iter().zip(&t.typing.species_map) {
        // species types are offset so single-species type nets stay neutral
        let color = if n_species_types > 1 {
            pick(ty + 3)
        } else {
            "#ffffff".to_string()
        };
        o.species_fill.insert(s.name.clone(), color);
    }
    for (tr, &ty) in t.net.transitions.iter().zip(&t.typing.transition_map) {
        o.transition_fill.insert(tr.name.clone(), pick(ty));
    }
    o
}

pub fn stratify_and_project(
    a: &TypedPetriNet,
    b: &TypedPetriNet,
) -> Result<(StratifiedNet, StratifiedDots), StratifyError> {
    let s = pullback(a, b)?;
    let dot = |t: &TypedPetriNet, name: &str| {
        let mut o = typing_colors(t);
        o.name = Some(name.to_string());
        to_dot(&t.net, &o)
    };
    let dots = StratifiedDots {
        left: dot(a, "left"),
        right: dot(b, "right"),
        result: dot(&s.result, "stratified"),
    };
    Ok((s, dots))
}

/// Number of elements over each type element, for the size law
/// `|pullback fiber| = |left fiber| * |right fiber|`.
pub fn fiber_sizes(map: &[usize]) -> BTreeMap<usize, usize> {
    let mut m = BTreeMap::new();
    for &x in map {
        *m.entry(x).or_insert(0) += 1;
    }
    m
}
