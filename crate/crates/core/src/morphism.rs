//! Morphisms of whole-grain Petri nets and typed nets.
//!
//! A morphism maps species, transitions, input arcs and output arcs so that
//! arc sources and targets are respected and, for every transition, the arcs
//! of that transition are mapped bijectively onto the arcs of its image
//! (the etale / arity-preserving condition). Rates play no role.

use serde::{Deserialize, Serialize};

use crate::petri::{validate_net, PetriNet, Violation};

/// Component maps of a morphism. The domain and codomain nets are supplied
/// separately to the operations that need them, which keeps the JSON typing
/// format to exactly these four arrays.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PetriMorphism {
    pub species_map: Vec<usize>,
    pub transition_map: Vec<usize>,
    pub input_map: Vec<usize>,
    pub output_map: Vec<usize>,
}

impl PetriMorphism {
    pub fn identity(net: &PetriNet) -> Self {
        Self {
            species_map: (0..net.species.len()).collect(),
            transition_map: (0..net.transitions.len()).collect(),
            input_map: (0..net.inputs.len()).collect(),
            output_map: (0..net.outputs.len()).collect(),
        }
    }

    /// Diagrammatic composite: first `self`, then `next`.
    pub fn then(&self, next: &PetriMorphism) -> PetriMorphism {
        let comp = |a: &[usize], b: &[usize]| a.iter().map(|&x| b[x]).collect();
        PetriMorphism {
            species_map: comp(&self.species_map, &next.species_map),
            transition_map: comp(&self.transition_map, &next.transition_map),
            input_map: comp(&self.input_map, &next.input_map),
            output_map: comp(&self.output_map, &next.output_map),
        }
    }

    /// Inverse of a bijective morphism, or `None` if some component map is
    /// not a bijection.
    pub fn inverse(&self) -> Option<PetriMorphism> {
        fn inv(m: &[usize]) -> Option<Vec<usize>> {
            let mut out = vec![usize::MAX; m.len()];
            for (i, &j) in m.iter().enumerate() {
                if j >= m.len() || out[j] != usize::MAX {
                    return None;
                }
                out[j] = i;
            }
            Some(out)
        }
        Some(PetriMorphism {
            species_map: inv(&self.species_map)?,
            transition_map: inv(&self.transition_map)?,
            input_map: inv(&self.input_map)?,
            output_map: inv(&self.output_map)?,
        })
    }
}

/// A net together with a morphism into a type net.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypedPetriNet {
    pub net: PetriNet,
    pub type_net: PetriNet,
    pub typing: PetriMorphism,
}

impl TypedPetriNet {
    pub fn validate(&self) -> Vec<Violation> {
        let mut v = validate_net(&self.net);
        v.extend(
            validate_net(&self.type_net)
                .into_iter()
                .map(|x| Violation::new(format!("type net {}", x.locus), x.message)),
        );
        if v.is_empty() {
            v.extend(validate_morphism(&self.typing, &self.net, &self.type_net));
        }
        v
    }

    /// Type species of each species of the net.
    pub fn species_type(&self, s: usize) -> usize {
        self.typing.species_map[s]
    }
}

/// Reports length mismatches, out-of-range images, failed commuting squares,
/// and transitions whose arcs are not mapped bijectively onto the arcs of
/// their image.
pub fn validate_morphism(f: &PetriMorphism, dom: &PetriNet, cod: &PetriNet) -> Vec<Violation> {
    let mut out = Vec::new();
    let lens = [
        (
            "species_map",
            f.species_map.len(),
            dom.species.len(),
            cod.species.len(),
        ),
        (
            "transition_map",
            f.transition_map.len(),
            dom.transitions.len(),
            cod.transitions.len(),
        ),
        (
            "input_map",
            f.input_map.len(),
            dom.inputs.len(),
            cod.inputs.len(),
        ),
        (
            "output_map",
            f.output_map.len(),
            dom.outputs.len(),
            cod.outputs.len(),
        ),
    ];
    let maps = [
        &f.species_map,
        &f.transition_map,
        &f.input_map,
        &f.output_map,
    ];
    for ((name, have, want, bound), map) in lens.iter().zip(maps) {
        if have != want {
            out.push(Violation::new(
                *name,
                format!("has {have} entries but the domain has {want} elements"),
            ));
        }
        for (k, &img) in map.iter().enumerate() {
            if img >= *bound {
                out.push(Violation::new(
                    format!("{name}[{k}]"),
                    format!("image {img} out of range (codomain has {bound})"),
                ));
            }
        }
    }
    if !out.is_empty() {
        return out;
    }

    let tname = |net: &PetriNet, t: usize| net.transitions[t].name.clone();
    let sname = |net: &PetriNet, s: usize| net.species[s].name.clone();

    for (i, arc) in dom.inputs.iter().enumerate() {
        let img = cod.inputs[f.input_map[i]];
        if img.is != f.species_map[arc.is] {
            out.push(Violation::new(
                format!("{} input arc {i}", dom.transition_label(arc.it)),
                format!(
                    "source '{}' maps to '{}' but the image arc starts at '{}'",
                    sname(dom, arc.is),
                    sname(cod, f.species_map[arc.is]),
                    sname(cod, img.is)
                ),
            ));
        }
        if img.it != f.transition_map[arc.it] {
            out.push(Violation::new(
                format!("{} input arc {i}", dom.transition_label(arc.it)),
                format!(
                    "image arc belongs to '{}' rather than '{}'",
                    tname(cod, img.it),
                    tname(cod, f.transition_map[arc.it])
                ),
            ));
        }
    }
    for (o, arc) in dom.outputs.iter().enumerate() {
        let img = cod.outputs[f.output_map[o]];
        if img.os != f.species_map[arc.os] {
            out.push(Violation::new(
                format!("{} output arc {o}", dom.transition_label(arc.ot)),
                format!(
                    "target '{}' maps to '{}' but the image arc ends at '{}'",
                    sname(dom, arc.os),
                    sname(cod, f.species_map[arc.os]),
                    sname(cod, img.os)
                ),
            ));
        }
        if img.ot != f.transition_map[arc.ot] {
            out.push(Violation::new(
                format!("{} output arc {o}", dom.transition_label(arc.ot)),
                format!(
                    "image arc belongs to '{}' rather than '{}'",
                    tname(cod, img.ot),
                    tname(cod, f.transition_map[arc.ot])
                ),
            ));
        }
    }

    for t in 0..dom.transitions.len() {
        let ft = f.transition_map[t];
        for (kind, dom_arcs, cod_arcs, map) in [
            (
                "input",
                dom.input_arcs_of(t),
                cod.input_arcs_of(ft),
                &f.input_map,
            ),
            (
                "output",
                dom.output_arcs_of(t),
                cod.output_arcs_of(ft),
                &f.output_map,
            ),
        ] {
            let mut images: Vec<usize> = dom_arcs.iter().map(|&a| map[a]).collect();
            images.sort_unstable();
            if images != cod_arcs {
                out.push(Violation::new(
                    dom.transition_label(t),
                    format!(
                        "{kind} arcs are not mapped bijectively onto the {kind} arcs of '{}' \
                         ({} {kind} arcs vs {})",
                        tname(cod, ft),
                        dom_arcs.len(),
                        cod_arcs.len()
                    ),
                ));
            }
        }
    }
    out
}

/// Given a species assignment into `cod`, the transitions of `cod` that
/// transition `t` of `dom` could be mapped to by some valid morphism
/// extending that assignment. An empty list means no typing of `t` exists.
pub fn admissible_transition_images(
    dom: &PetriNet,
    cod: &PetriNet,
    species_map: &[usize],
    t: usize,
) -> Vec<usize> {
    let sorted = |mut v: Vec<usize>| {
        v.sort_unstable();
        v
    };
    let ins = sorted(
        dom.input_arcs_of(t)
            .iter()
            .map(|&a| species_map[dom.inputs[a].is])
            .collect(),
    );
    let outs = sorted(
        dom.output_arcs_of(t)
            .iter()
            .map(|&a| species_map[dom.outputs[a].os])
            .collect(),
    );
    (0..cod.transitions.len())
        .filter(|&u| {
            let cins = sorted(
                cod.input_arcs_of(u)
                    .iter()
                    .map(|&a| cod.inputs[a].is)
                    .collect(),
            );
            let couts = sorted(
                cod.output_arcs_of(u)
                    .iter()
                    .map(|&a| cod.outputs[a].os)
                    .collect(),
            );
            cins == ins && couts == outs
        })
        .collect()
}

/// Completes a morphism from a species map and a transition map by pairing
/// each transition's arcs with the image transition's arcs in order of
/// matching species. Returns `None` if some transition admits no such pairing.
pub fn complete_morphism(
    dom: &PetriNet,
    cod: &PetriNet,
    species_map: &[usize],
    transition_map: &[usize],
) -> Option<PetriMorphism> {
    let mut input_map = vec![usize::MAX; dom.inputs.len()];
    let mut output_map = vec![usize::MAX; dom.outputs.len()];
    for (t, &ft) in transition_map.iter().enumerate() {
        let mut free: Vec<usize> = cod.input_arcs_of(ft);
        for a in dom.input_arcs_of(t) {
            let want = species_map[dom.inputs[a].is];
            let pos = free.iter().position(|&b| cod.inputs[b].is == want)?;
            input_map[a] = free.remove(pos);
        }
        if !free.is_empty() {
            return None;
        }
        let mut free: Vec<usize> = cod.output_arcs_of(ft);
        for a in dom.output_arcs_of(t) {
            let want = species_map[dom.outputs[a].os];
            let pos = free.iter().position(|&b| cod.outputs[b].os == want)?;
            output_map[a] = free.remove(pos);
        }
        if !free.is_empty() {
            return None;
        }
    }
    Some(PetriMorphism {
        species_map: species_map.to_vec(),
        transition_map: transition_map.to_vec(),
        input_map,
        output_map,
    })
}

/// Builds a typing from species and transition assignments given by name,
/// completing the arc maps. Panics on unknown names or if no completion
/// exists; intended for fixtures.
pub fn typing_by_names(
    net: &PetriNet,
    type_net: &PetriNet,
    species: &[(&str, &str)],
    transitions: &[(&str, &str)],
) -> PetriMorphism {
    let mut smap = vec![usize::MAX; net.species.len()];
    for (s, ty) in species {
        let i = net
            .species_index(s)
            .unwrap_or_else(|| panic!("unknown species {s}"));
        smap[i] = type_net
            .species_index(ty)
            .unwrap_or_else(|| panic!("unknown type species {ty}"));
    }
    let mut tmap = vec![usize::MAX; net.transitions.len()];
    for (t, ty) in transitions {
        let i = net
            .transition_index(t)
            .unwrap_or_else(|| panic!("unknown transition {t}"));
        tmap[i] = type_net
            .transition_index(ty)
            .unwrap_or_else(|| panic!("unknown type transition {ty}"));
    }
    assert!(
        !smap.contains(&usize::MAX) && !tmap.contains(&usize::MAX),
        "typing must cover every species and transition"
    );
    complete_morphism(net, type_net, &smap, &tmap)
        .unwrap_or_else(|| panic!("typing admits no arc completion"))
}
