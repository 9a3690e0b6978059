//! Open Petri nets, undirected wiring diagrams, and composition.
//!
//! A wiring diagram has boxes with ports; each port is wired to a junction,
//! and some junctions are exposed as outer ports. Filling each box with an
//! open Petri net whose legs match the box's ports, [`oapply`] glues the
//! components by identifying every place wired to the same junction.
//!
//! A junction no port is wired to becomes an isolated place of the
//! composite. Two legs of one box exposing the same place but wired to
//! different junctions merge those junctions.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gluing::{glue, uniquify, ComponentShape, Gluing};
use crate::morphism::{validate_morphism, PetriMorphism, TypedPetriNet};
use crate::petri::{validate_net, InputArc, OutputArc, PetriNet, Transition, Violation};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Junction {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UwdBox {
    pub name: String,
    /// Junction wired to each port, in port order.
    #[serde(default)]
    pub ports: Vec<usize>,
}

/// Undirected wiring diagram.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Uwd {
    #[serde(default)]
    pub outer_ports: Vec<usize>,
    #[serde(default)]
    pub junctions: Vec<Junction>,
    #[serde(default)]
    pub boxes: Vec<UwdBox>,
}

impl Uwd {
    pub fn port_count(&self) -> usize {
        self.boxes.iter().map(|b| b.ports.len()).sum()
    }

    pub fn junction_index(&self, name: &str) -> Option<usize> {
        self.junctions.iter().position(|j| j.name == name)
    }
}

/// A Petri net with one exposed place per leg.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OpenPetriNet {
    #[serde(flatten)]
    pub net: PetriNet,
    #[serde(default)]
    pub legs: Vec<usize>,
}

impl OpenPetriNet {
    pub fn new(net: PetriNet, legs: Vec<usize>) -> Self {
        Self { net, legs }
    }

    /// Exposes every species, in order.
    pub fn exposing_all(net: PetriNet) -> Self {
        let legs = (0..net.species.len()).collect();
        Self { net, legs }
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut v = validate_net(&self.net);
        v.extend(leg_violations(&self.legs, self.net.species.len()));
        v
    }
}

/// A typed net with exposed places.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypedOpenPetriNet {
    #[serde(flatten)]
    pub typed: TypedPetriNet,
    #[serde(default)]
    pub legs: Vec<usize>,
}

impl TypedOpenPetriNet {
    pub fn validate(&self) -> Vec<Violation> {
        let mut v = self.typed.validate();
        v.extend(leg_violations(&self.legs, self.typed.net.species.len()));
        v
    }

    pub fn open(&self) -> OpenPetriNet {
        OpenPetriNet::new(self.typed.net.clone(), self.legs.clone())
    }
}

fn leg_violations(legs: &[usize], n: usize) -> Vec<Violation> {
    legs.iter()
        .enumerate()
        .filter(|(_, &l)| l >= n)
        .map(|(k, &l)| {
            Violation::new(
                format!("leg {k}"),
                format!("species index {l} out of range (net has {n} species)"),
            )
        })
        .collect()
}

/// Assignment of a component model to each box, keyed by box name.
pub type Binding<T> = BTreeMap<String, T>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComposeError {
    #[error("invalid wiring diagram: {}", join(.0))]
    InvalidUwd(Vec<Violation>),
    #[error("box '{0}' has no bound model")]
    UnboundBox(String),
    #[error("binding entry '{0}' does not name a box of the diagram")]
    ExtraBinding(String),
    #[error("box '{name}' has {ports} ports but its model exposes {legs} legs")]
    ArityMismatch {
        name: String,
        ports: usize,
        legs: usize,
    },
    #[error("model bound to box '{name}' is invalid: {}", join(.violations))]
    InvalidComponent {
        name: String,
        violations: Vec<Violation>,
    },
    #[error("model bound to box '{0}' is typed over a different type net")]
    TypeNetMismatch(String),
    #[error("junction '{junction}' identifies places of type '{first}' and '{second}'")]
    TypeClash {
        junction: String,
        first: String,
        second: String,
    },
    #[error("junction '{0}' is wired to no port, so its place has no type")]
    UntypedJunction(String),
    #[error("component '{name}' has {found} variables but {expected} were expected")]
    DimensionMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("box '{0}' holds an ODE while another box holds a delayed model; coerce it first")]
    NotDelayCapable(String),
}

pub(crate) fn join(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Reports out-of-range junction references and duplicate names.
pub fn validate_uwd(u: &Uwd) -> Vec<Violation> {
    let mut out = Vec::new();
    let nj = u.junctions.len();
    for (k, &j) in u.outer_ports.iter().enumerate() {
        if j >= nj {
            out.push(Violation::new(
                format!("outer port {k}"),
                format!("junction index {j} out of range (diagram has {nj} junctions)"),
            ));
        }
    }
    for b in &u.boxes {
        for (k, &j) in b.ports.iter().enumerate() {
            if j >= nj {
                out.push(Violation::new(
                    format!("box '{}' port {k}", b.name),
                    format!("junction index {j} out of range (diagram has {nj} junctions)"),
                ));
            }
        }
    }
    let mut seen = HashSet::new();
    for (k, j) in u.junctions.iter().enumerate() {
        if !seen.insert(j.name.as_str()) {
            out.push(Violation::new(
                format!("junction {k}"),
                format!("duplicate junction name '{}'", j.name),
            ));
        }
    }
    let mut seen = HashSet::new();
    for (k, b) in u.boxes.iter().enumerate() {
        if !seen.insert(b.name.as_str()) {
            out.push(Violation::new(
                format!("box {k}"),
                format!("duplicate box name '{}'", b.name),
            ));
        }
    }
    out
}

/// Looks up the model for every box, in box order, rejecting unbound boxes
/// and binding entries that name no box.
pub(crate) fn resolve<'a, T>(u: &Uwd, binding: &'a Binding<T>) -> Result<Vec<&'a T>, ComposeError> {
    let v = validate_uwd(u);
    if !v.is_empty() {
        return Err(ComposeError::InvalidUwd(v));
    }
    let names: HashSet<&str> = u.boxes.iter().map(|b| b.name.as_str()).collect();
    if let Some(extra) = binding.keys().find(|k| !names.contains(k.as_str())) {
        return Err(ComposeError::ExtraBinding(extra.clone()));
    }
    u.boxes
        .iter()
        .map(|b| {
            binding
                .get(&b.name)
                .ok_or_else(|| ComposeError::UnboundBox(b.name.clone()))
        })
        .collect()
}

/// A composite net together with where each of its parts came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Composite {
    pub open: OpenPetriNet,
    pub gluing: Gluing,
    /// `(box, local transition)` for each composite transition.
    pub transition_origin: Vec<(usize, usize)>,
    /// `(box, local input arc)` for each composite input arc.
    pub input_origin: Vec<(usize, usize)>,
    /// `(box, local output arc)` for each composite output arc.
    pub output_origin: Vec<(usize, usize)>,
}

/// Composes open Petri nets along a wiring diagram.
pub fn oapply(u: &Uwd, binding: &Binding<OpenPetriNet>) -> Result<OpenPetriNet, ComposeError> {
    oapply_with_provenance(u, binding).map(|c| c.open)
}

pub fn oapply_with_provenance(
    u: &Uwd,
    binding: &Binding<OpenPetriNet>,
) -> Result<Composite, ComposeError> {
    let comps = resolve(u, binding)?;
    for (b, c) in u.boxes.iter().zip(&comps) {
        check_component(&b.name, b.ports.len(), c)?;
    }
    Ok(glue_nets(u, &comps))
}

fn check_component(name: &str, ports: usize, c: &OpenPetriNet) -> Result<(), ComposeError> {
    let v = c.validate();
    if !v.is_empty() {
        return Err(ComposeError::InvalidComponent {
            name: name.to_string(),
            violations: v,
        });
    }
    if c.legs.len() != ports {
        return Err(ComposeError::ArityMismatch {
            name: name.to_string(),
            ports,
            legs: c.legs.len(),
        });
    }
    Ok(())
}

fn glue_nets(u: &Uwd, comps: &[&OpenPetriNet]) -> Composite {
    let shapes: Vec<ComponentShape<'_>> = comps
        .iter()
        .map(|c| ComponentShape {
            names: c.net.species.iter().map(|s| s.name.as_str()).collect(),
            legs: &c.legs,
        })
        .collect();
    let gluing = glue(u, &shapes);

    let mut name_count: HashMap<&str, usize> = HashMap::new();
    for c in comps {
        for t in &c.net.transitions {
            *name_count.entry(t.name.as_str()).or_default() += 1;
        }
    }

    let mut net = PetriNet::new();
    net.species = gluing
        .class_names
        .iter()
        .map(|n| crate::petri::Species { name: n.clone() })
        .collect();
    let mut transition_origin = Vec::new();
    let mut input_origin = Vec::new();
    let mut output_origin = Vec::new();
    let mut t_offset = 0;
    for (b, c) in comps.iter().enumerate() {
        let box_name = &u.boxes[b].name;
        let classes = &gluing.local_to_class[b];
        for (k, t) in c.net.transitions.iter().enumerate() {
            let name = if name_count[t.name.as_str()] > 1 {
                format!("{box_name}.{}", t.name)
            } else {
                t.name.clone()
            };
            net.transitions.push(Transition { name, rate: t.rate });
            transition_origin.push((b, k));
        }
        for (k, a) in c.net.inputs.iter().enumerate() {
            net.inputs.push(InputArc {
                is: classes[a.is],
                it: t_offset + a.it,
            });
            input_origin.push((b, k));
        }
        for (k, a) in c.net.outputs.iter().enumerate() {
            net.outputs.push(OutputArc {
                os: classes[a.os],
                ot: t_offset + a.ot,
            });
            output_origin.push((b, k));
        }
        t_offset += c.net.transitions.len();
    }
    let mut tnames: Vec<String> = net.transitions.iter().map(|t| t.name.clone()).collect();
    uniquify(&mut tnames);
    for (t, n) in net.transitions.iter_mut().zip(tnames) {
        t.name = n;
    }

    Composite {
        open: OpenPetriNet::new(net, gluing.outer_legs.clone()),
        gluing,
        transition_origin,
        input_origin,
        output_origin,
    }
}

/// Composes typed open nets, requiring every junction to identify places of
/// a single type. The composite is typed by sending each place to that
/// common type and each transition and arc to the type of its original.
pub fn oapply_typed(
    u: &Uwd,
    binding: &Binding<TypedOpenPetriNet>,
    type_net: &PetriNet,
) -> Result<TypedOpenPetriNet, ComposeError> {
    let comps = resolve(u, binding)?;
    for (b, c) in u.boxes.iter().zip(&comps) {
        let v = c.validate();
        if !v.is_empty() {
            return Err(ComposeError::InvalidComponent {
                name: b.name.clone(),
                violations: v,
            });
        }
        if &c.typed.type_net != type_net {
            return Err(ComposeError::TypeNetMismatch(b.name.clone()));
        }
    }
    let opens: Vec<OpenPetriNet> = comps.iter().map(|c| c.open()).collect();
    for (b, c) in u.boxes.iter().zip(&opens) {
        check_component(&b.name, b.ports.len(), c)?;
    }
    let refs: Vec<&OpenPetriNet> = opens.iter().collect();
    let composite = glue_nets(u, &refs);
    let g = &composite.gluing;

    let mut class_type: Vec<Option<usize>> = vec![None; g.len()];
    for (b, c) in comps.iter().enumerate() {
        for (s, &cls) in g.local_to_class[b].iter().enumerate() {
            let ty = c.typed.typing.species_map[s];
            match class_type[cls] {
                None => class_type[cls] = Some(ty),
                Some(prev) if prev != ty => {
                    return Err(ComposeError::TypeClash {
                        junction: g.class_names[cls].clone(),
                        first: type_net.species[prev].name.clone(),
                        second: type_net.species[ty].name.clone(),
                    })
                }
                Some(_) => {}
            }
        }
    }
    let species_map = class_type
        .iter()
        .enumerate()
        .map(|(cls, t)| t.ok_or_else(|| ComposeError::UntypedJunction(g.class_names[cls].clone())))
        .collect::<Result<Vec<_>, _>>()?;

    let typing = PetriMorphism {
        species_map,
        transition_map: composite
            .transition_origin
            .iter()
            .map(|&(b, k)| comps[b].typed.typing.transition_map[k])
            .collect(),
        input_map: composite
            .input_origin
            .iter()
            .map(|&(b, k)| comps[b].typed.typing.input_map[k])
            .collect(),
        output_map: composite
            .output_origin
            .iter()
            .map(|&(b, k)| comps[b].typed.typing.output_map[k])
            .collect(),
    };
    debug_assert!(validate_morphism(&typing, &composite.open.net, type_net).is_empty());
    Ok(TypedOpenPetriNet {
        typed: TypedPetriNet {
            net: composite.open.net,
            type_net: type_net.clone(),
            typing,
        },
        legs: composite.open.legs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::iso::is_isomorphic;
    use crate::petri::conserves_population;

    fn binding<T: Clone>(v: &[(&str, T)]) -> Binding<T> {
        v.iter().map(|(k, x)| (k.to_string(), x.clone())).collect()
    }

    #[test]
    fn epi_uwd_shape() {
        let u = fixtures::epi_uwd();
        assert!(validate_uwd(&u).is_empty());
        assert_eq!(u.boxes.len(), 3);
        assert_eq!(u.port_count(), 10);
        assert_eq!(u.junctions.len(), 5);
    }

    #[test]
    fn empty_and_broken_uwd() {
        assert!(validate_uwd(&Uwd::default()).is_empty());
        let mut u = fixtures::epi_uwd();
        u.boxes[0].ports[1] = 9;
        let v = validate_uwd(&u);
        assert_eq!(v.len(), 1);
        assert!(v[0].locus.contains("sir"));
    }

    #[test]
    fn vaccination_composite() {
        let c = oapply(&fixtures::epi_uwd(), &fixtures::epi_binding()).unwrap();
        assert_eq!(c.net.species_names(), ["S", "I", "Iv", "R", "V"]);
        assert_eq!(c.net.transitions.len(), 7);
        assert_eq!(
            c.net.transition_names(),
            ["beta_uu", "gamma_u", "beta_vv", "gamma_v", "beta_uv", "beta_vu", "nu"]
        );
        assert_eq!(c.legs, [0, 1, 2, 3, 4]);
        assert!(validate_net(&c.net).is_empty());
        assert!(conserves_population(&c.net));
        assert!(is_isomorphic(&c.net, &fixtures::sviivr())
            .unwrap()
            .is_some());
        // the hand-encoded fixture uses the same presentation
        assert_eq!(c.net, fixtures::sviivr());
    }

    #[test]
    fn single_box_identity() {
        let sir = fixtures::sir();
        let u = Uwd {
            outer_ports: vec![0, 1, 2],
            junctions: ["a", "b", "c"]
                .iter()
                .map(|n| Junction {
                    name: n.to_string(),
                })
                .collect(),
            boxes: vec![UwdBox {
                name: "only".into(),
                ports: vec![0, 1, 2],
            }],
        };
        let c = oapply(
            &u,
            &binding(&[("only", OpenPetriNet::exposing_all(sir.clone()))]),
        )
        .unwrap();
        assert!(is_isomorphic(&c.net, &sir).unwrap().is_some());
    }

    #[test]
    fn two_sirs_sharing_recovered() {
        let sir = fixtures::sir();
        let u = Uwd {
            outer_ports: vec![],
            junctions: vec![Junction { name: "R".into() }],
            boxes: vec![
                UwdBox {
                    name: "a".into(),
                    ports: vec![0],
                },
                UwdBox {
                    name: "b".into(),
                    ports: vec![0],
                },
            ],
        };
        let open = OpenPetriNet::new(sir, vec![2]);
        let c = oapply(&u, &binding(&[("a", open.clone()), ("b", open)])).unwrap();
        assert_eq!(c.net.species.len(), 5);
        assert_eq!(c.net.transitions.len(), 4);
        assert_eq!(c.net.species_names(), ["R", "a.S", "a.I", "b.S", "b.I"]);
        assert_eq!(
            c.net.transition_names(),
            ["a.inf", "a.rec", "b.inf", "b.rec"]
        );
    }

    #[test]
    fn unwired_junction_is_isolated_place() {
        let u = Uwd {
            outer_ports: vec![0],
            junctions: vec![Junction { name: "J".into() }],
            boxes: vec![],
        };
        let c = oapply(&u, &Binding::new()).unwrap();
        assert_eq!(c.net.species_names(), ["J"]);
        assert_eq!(c.legs, [0]);
    }

    #[test]
    fn one_place_on_two_junctions_merges_them() {
        let net = PetriNet::from_names(&["X"], &[]);
        let u = Uwd {
            outer_ports: vec![0, 1],
            junctions: vec![Junction { name: "A".into() }, Junction { name: "B".into() }],
            boxes: vec![UwdBox {
                name: "x".into(),
                ports: vec![0, 1],
            }],
        };
        let c = oapply(&u, &binding(&[("x", OpenPetriNet::new(net, vec![0, 0]))])).unwrap();
        assert_eq!(c.net.species_names(), ["A"]);
        assert_eq!(c.legs, [0, 0]);
    }

    #[test]
    fn binding_errors() {
        let u = fixtures::epi_uwd();
        let mut b = fixtures::epi_binding();
        b.remove("cross");
        assert_eq!(
            oapply(&u, &b),
            Err(ComposeError::UnboundBox("cross".into()))
        );

        let mut b = fixtures::epi_binding();
        b.insert("extra".into(), fixtures::sir_open());
        assert_eq!(
            oapply(&u, &b),
            Err(ComposeError::ExtraBinding("extra".into()))
        );

        let mut b = fixtures::epi_binding();
        b.insert("cross".into(), fixtures::sir_open());
        assert!(matches!(
            oapply(&u, &b),
            Err(ComposeError::ArityMismatch {
                ports: 4,
                legs: 3,
                ..
            })
        ));
    }

    #[test]
    fn typed_vaccination_composite() {
        let b = fixtures::epi_typed_binding();
        let ty = fixtures::p_infectious();
        let c = oapply_typed(&fixtures::epi_uwd(), &b, &ty).unwrap();
        assert!(c.validate().is_empty(), "{:?}", c.validate());
        assert_eq!(c.typed.net, fixtures::sviivr());
    }

    #[test]
    fn typed_host_vector_clash() {
        let ty = fixtures::p_vector_borne();
        let host = crate::morphism::TypedPetriNet {
            net: PetriNet::from_names(&["I_H"], &[]),
            type_net: ty.clone(),
            typing: PetriMorphism {
                species_map: vec![0],
                ..Default::default()
            },
        };
        let vector = crate::morphism::TypedPetriNet {
            net: PetriNet::from_names(&["I_V"], &[]),
            type_net: ty.clone(),
            typing: PetriMorphism {
                species_map: vec![1],
                ..Default::default()
            },
        };
        let u = Uwd {
            outer_ports: vec![],
            junctions: vec![Junction { name: "X".into() }],
            boxes: vec![
                UwdBox {
                    name: "host".into(),
                    ports: vec![0],
                },
                UwdBox {
                    name: "vector".into(),
                    ports: vec![0],
                },
            ],
        };
        let b = binding(&[
            (
                "host",
                TypedOpenPetriNet {
                    typed: host,
                    legs: vec![0],
                },
            ),
            (
                "vector",
                TypedOpenPetriNet {
                    typed: vector,
                    legs: vec![0],
                },
            ),
        ]);
        assert_eq!(
            oapply_typed(&u, &b, &ty),
            Err(ComposeError::TypeClash {
                junction: "X".into(),
                first: "H".into(),
                second: "V".into()
            })
        );
    }

    #[test]
    fn typed_empty() {
        let ty = fixtures::p_infectious();
        let c = oapply_typed(&Uwd::default(), &Binding::new(), &ty).unwrap();
        assert!(c.typed.net.species.is_empty());
        assert!(c.validate().is_empty());
    }
}
