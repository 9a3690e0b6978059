//! Random generators and independent oracles shared by the integration
//! tests. Nothing here calls into the code paths it is used to check.

#![allow(dead_code)]

use std::collections::BTreeMap;

use opetri_core::compose::{Binding, Junction, OpenPetriNet, Uwd, UwdBox};
use opetri_core::morphism::{validate_morphism, PetriMorphism, TypedPetriNet};
use opetri_core::petri::{InputArc, OutputArc, PetriNet, Species, Transition};
use proptest::collection::{btree_set, vec};
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type ArcChoice = (Vec<(usize, usize)>, Vec<(usize, usize)>);

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `|a - b| <= rel * max(1, |a|, |b|)`.
pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * 1f64.max(a.abs()).max(b.abs())
}

pub fn random_state(r: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| r.random_range(0.0..2.0)).collect()
}

/// A net with `1..=max_species` species and up to `max_transitions`
/// transitions, each with up to three input and three output arcs.
pub fn random_net(r: &mut ChaCha8Rng, max_species: usize, max_transitions: usize) -> PetriNet {
    let mut net = PetriNet::new();
    let ns = r.random_range(1..=max_species);
    for i in 0..ns {
        net.add_species(format!("s{i}"));
    }
    for k in 0..r.random_range(0..=max_transitions) {
        let ins: Vec<usize> = (0..r.random_range(0..=3))
            .map(|_| r.random_range(0..ns))
            .collect();
        let outs: Vec<usize> = (0..r.random_range(0..=3))
            .map(|_| r.random_range(0..ns))
            .collect();
        net.add_transition(format!("t{k}"), r.random_range(0.01..1.0), &ins, &outs);
    }
    net
}

/// A random wiring diagram with up to `max_boxes` boxes, each filled with a
/// random open net of at most `max_species` species.
pub fn random_uwd_binding(
    r: &mut ChaCha8Rng,
    max_boxes: usize,
    max_species: usize,
) -> (Uwd, Binding<OpenPetriNet>) {
    let nj = r.random_range(1..=6);
    let junctions = (0..nj)
        .map(|j| Junction {
            name: format!("j{j}"),
        })
        .collect();
    let outer_ports = (0..r.random_range(0..=3))
        .map(|_| r.random_range(0..nj))
        .collect();
    let mut boxes = Vec::new();
    let mut binding = BTreeMap::new();
    for b in 0..r.random_range(0..=max_boxes) {
        let net = random_net(r, max_species, 5);
        let ns = net.species.len();
        let arity = r.random_range(0..=4);
        let legs: Vec<usize> = (0..arity).map(|_| r.random_range(0..ns)).collect();
        let ports = (0..arity).map(|_| r.random_range(0..nj)).collect();
        let name = format!("b{b}");
        boxes.push(UwdBox {
            name: name.clone(),
            ports,
        });
        binding.insert(name, OpenPetriNet::new(net, legs));
    }
    (
        Uwd {
            outer_ports,
            junctions,
            boxes,
        },
        binding,
    )
}

/// A net typed over `ty`, built so that the typing is valid by construction:
/// each transition copies the arc pattern of a random type transition.
pub fn random_typed(
    r: &mut ChaCha8Rng,
    ty: &PetriNet,
    max_species: usize,
    max_transitions: usize,
) -> TypedPetriNet {
    let mut net = PetriNet::new();
    let mut typing = PetriMorphism::default();
    for i in 0..r.random_range(0..=max_species) {
        net.add_species(format!("s{i}"));
        typing.species_map.push(r.random_range(0..ty.species.len()));
    }
    let n_trans = if ty.transitions.is_empty() {
        0
    } else {
        r.random_range(0..=max_transitions)
    };
    for k in 0..n_trans {
        let u = r.random_range(0..ty.transitions.len());
        let mut pick = |net: &mut PetriNet, typing: &mut PetriMorphism, want: usize| -> usize {
            let candidates: Vec<usize> = (0..net.species.len())
                .filter(|&s| typing.species_map[s] == want)
                .collect();
            match candidates.choose(r) {
                Some(&s) if r.random_bool(0.8) => s,
                _ => {
                    let s = net.add_species(format!("s{}", net.species.len()));
                    typing.species_map.push(want);
                    s
                }
            }
        };
        let ty_in: Vec<usize> = (0..ty.inputs.len())
            .filter(|&a| ty.inputs[a].it == u)
            .collect();
        let ty_out: Vec<usize> = (0..ty.outputs.len())
            .filter(|&a| ty.outputs[a].ot == u)
            .collect();
        let ins: Vec<usize> = ty_in
            .iter()
            .map(|&a| pick(&mut net, &mut typing, ty.inputs[a].is))
            .collect();
        let outs: Vec<usize> = ty_out
            .iter()
            .map(|&a| pick(&mut net, &mut typing, ty.outputs[a].os))
            .collect();
        net.add_transition(format!("t{k}"), r.random_range(0.1..1.0), &ins, &outs);
        typing.transition_map.push(u);
        typing.input_map.extend(&ty_in);
        typing.output_map.extend(&ty_out);
    }
    let t = TypedPetriNet {
        net,
        type_net: ty.clone(),
        typing,
    };
    assert!(
        t.validate().is_empty(),
        "generator produced an invalid typing"
    );
    t
}

/// Componentwise pairing of same-typed elements by nested loops, with the
/// product rate and `(a, b)` names.
pub fn oracle_pullback(a: &TypedPetriNet, b: &TypedPetriNet) -> (PetriNet, PetriMorphism) {
    let (x, y) = (&a.net, &b.net);
    let (fa, fb) = (&a.typing, &b.typing);
    let mut net = PetriNet::default();
    let mut typing = PetriMorphism::default();
    let mut sp = Vec::new();
    for i in 0..x.species.len() {
        for j in 0..y.species.len() {
            if fa.species_map[i] == fb.species_map[j] {
                sp.push((i, j));
                net.species.push(Species {
                    name: format!("({}, {})", x.species[i].name, y.species[j].name),
                });
                typing.species_map.push(fa.species_map[i]);
            }
        }
    }
    let mut tp = Vec::new();
    for i in 0..x.transitions.len() {
        for j in 0..y.transitions.len() {
            if fa.transition_map[i] == fb.transition_map[j] {
                tp.push((i, j));
                net.transitions.push(Transition {
                    name: format!("({}, {})", x.transitions[i].name, y.transitions[j].name),
                    rate: x.transitions[i].rate * y.transitions[j].rate,
                });
                typing.transition_map.push(fa.transition_map[i]);
            }
        }
    }
    let find = |v: &[(usize, usize)], p: (usize, usize)| v.iter().position(|&q| q == p).unwrap();
    for i in 0..x.inputs.len() {
        for j in 0..y.inputs.len() {
            if fa.input_map[i] == fb.input_map[j] {
                net.inputs.push(InputArc {
                    is: find(&sp, (x.inputs[i].is, y.inputs[j].is)),
                    it: find(&tp, (x.inputs[i].it, y.inputs[j].it)),
                });
                typing.input_map.push(fa.input_map[i]);
            }
        }
    }
    for i in 0..x.outputs.len() {
        for j in 0..y.outputs.len() {
            if fa.output_map[i] == fb.output_map[j] {
                net.outputs.push(OutputArc {
                    os: find(&sp, (x.outputs[i].os, y.outputs[j].os)),
                    ot: find(&tp, (x.outputs[i].ot, y.outputs[j].ot)),
                });
                typing.output_map.push(fa.output_map[i]);
            }
        }
    }
    (net, typing)
}

fn all_maps(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|m| {
                (0..k).map(move |x| {
                    let mut m = m.clone();
                    m.push(x);
                    m
                })
            })
            .collect();
    }
    out
}

fn permutations(v: &[usize]) -> Vec<Vec<usize>> {
    if v.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for i in 0..v.len() {
        let mut rest = v.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

fn arcs_of(ends: impl Iterator<Item = usize>, t: usize) -> Vec<usize> {
    ends.enumerate()
        .filter(|&(_, x)| x == t)
        .map(|(a, _)| a)
        .collect()
}

/// Every morphism `dom -> cod`: all species and transition maps, all
/// bijections between arc fibers, filtered by the morphism checker.
pub fn all_morphisms(dom: &PetriNet, cod: &PetriNet) -> Vec<PetriMorphism> {
    let mut found = Vec::new();
    let din: Vec<Vec<usize>> = (0..dom.transitions.len())
        .map(|t| arcs_of(dom.inputs.iter().map(|a| a.it), t))
        .collect();
    let dout: Vec<Vec<usize>> = (0..dom.transitions.len())
        .map(|t| arcs_of(dom.outputs.iter().map(|a| a.ot), t))
        .collect();
    for smap in all_maps(dom.species.len(), cod.species.len()) {
        'tmaps: for tmap in all_maps(dom.transitions.len(), cod.transitions.len()) {
            // Candidate arc assignments per transition, then their product.
            let mut choices: Vec<Vec<ArcChoice>> = Vec::new();
            for t in 0..dom.transitions.len() {
                let cin = arcs_of(cod.inputs.iter().map(|a| a.it), tmap[t]);
                let cout = arcs_of(cod.outputs.iter().map(|a| a.ot), tmap[t]);
                if cin.len() != din[t].len() || cout.len() != dout[t].len() {
                    continue 'tmaps;
                }
                let mut opts = Vec::new();
                for pi in permutations(&cin) {
                    for po in permutations(&cout) {
                        opts.push((
                            din[t].iter().copied().zip(pi.iter().copied()).collect(),
                            dout[t].iter().copied().zip(po.iter().copied()).collect(),
                        ));
                    }
                }
                choices.push(opts);
            }
            let mut idx = vec![0usize; choices.len()];
            loop {
                let mut m = PetriMorphism {
                    species_map: smap.clone(),
                    transition_map: tmap.clone(),
                    input_map: vec![0; dom.inputs.len()],
                    output_map: vec![0; dom.outputs.len()],
                };
                for (c, &i) in choices.iter().zip(&idx) {
                    for &(a, b) in &c[i].0 {
                        m.input_map[a] = b;
                    }
                    for &(a, b) in &c[i].1 {
                        m.output_map[a] = b;
                    }
                }
                if validate_morphism(&m, dom, cod).is_empty() {
                    found.push(m);
                }
                let mut k = 0;
                loop {
                    if k == idx.len() {
                        break;
                    }
                    idx[k] += 1;
                    if idx[k] < choices[k].len() {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == idx.len() {
                    break;
                }
            }
        }
    }
    found
}

/// Mass-action right-hand side as a sum of monomials per species:
/// `(net stoichiometric coefficient, rate, sorted input multiset)`.
pub fn symbolic_mass_action(net: &PetriNet) -> Vec<Vec<(i64, f64, Vec<usize>)>> {
    let ns = net.species.len();
    let mut poly = vec![Vec::new(); ns];
    for (t, tr) in net.transitions.iter().enumerate() {
        let mut monomial: Vec<usize> = net
            .inputs
            .iter()
            .filter(|a| a.it == t)
            .map(|a| a.is)
            .collect();
        monomial.sort_unstable();
        let mut coeff = vec![0i64; ns];
        for a in net.inputs.iter().filter(|a| a.it == t) {
            coeff[a.is] -= 1;
        }
        for a in net.outputs.iter().filter(|a| a.ot == t) {
            coeff[a.os] += 1;
        }
        for (s, &c) in coeff.iter().enumerate() {
            if c != 0 {
                poly[s].push((c, tr.rate, monomial.clone()));
            }
        }
    }
    poly
}

pub fn eval_symbolic(poly: &[Vec<(i64, f64, Vec<usize>)>], u: &[f64]) -> Vec<f64> {
    poly.iter()
        .map(|terms| {
            terms
                .iter()
                .map(|(c, rate, mono)| {
                    *c as f64 * rate * mono.iter().map(|&s| u[s]).product::<f64>()
                })
                .sum()
        })
        .collect()
}

/// Wiring diagrams with identifier names, for printer/parser roundtrips.
pub fn ident() -> impl Strategy<Value = String> {
    "[A-Za-z_][A-Za-z0-9_]{0,6}"
}

prop_compose! {
    pub fn arb_uwd()(
        jnames in btree_set(ident(), 0..7),
        bnames in btree_set(ident(), 0..5),
    )(
        outer in vec(0..jnames.len().max(1), if jnames.is_empty() { 0..1 } else { 0..5 }),
        ports in vec(vec(0..jnames.len().max(1), if jnames.is_empty() { 0..1 } else { 0..5 }), bnames.len()),
        jnames in Just(jnames),
        bnames in Just(bnames),
    ) -> Uwd {
        Uwd {
            outer_ports: outer,
            junctions: jnames.into_iter().map(|name| Junction { name }).collect(),
            boxes: bnames.into_iter().zip(ports).map(|(name, ports)| UwdBox { name, ports }).collect(),
        }
    }
}
