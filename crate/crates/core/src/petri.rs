//! Whole-grain Petri nets.
//!
//! A net is four finite sets (species, transitions, input arcs, output arcs)
//! together with the source/target functions of the arcs. Arc lists carry
//! multiplicity by repetition, so `S + I -> 2I` is two input arcs and two
//! output arcs. Each transition also carries a mass-action rate constant;
//! structural operations (morphisms, isomorphism, composition) ignore it.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Species {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub name: String,
    #[serde(default)]
    pub rate: f64,
}

/// Input arc: species `is` feeds transition `it`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InputArc {
    pub is: usize,
    pub it: usize,
}

/// Output arc: transition `ot` produces into species `os`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OutputArc {
    pub os: usize,
    pub ot: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PetriNet {
    #[serde(default)]
    pub species: Vec<Species>,
    #[serde(default)]
    pub transitions: Vec<Transition>,
    #[serde(default)]
    pub inputs: Vec<InputArc>,
    #[serde(default)]
    pub outputs: Vec<OutputArc>,
}

/// A single well-formedness problem, with a human-readable locus such as
/// `input arc 3` or `transition 'inf'`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub locus: String,
    pub message: String,
}

impl Violation {
    pub fn new(locus: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            locus: locus.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.locus, self.message)
    }
}

impl PetriNet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_species(&mut self, name: impl Into<String>) -> usize {
        self.species.push(Species { name: name.into() });
        self.species.len() - 1
    }

    /// Adds a transition together with its input and output arcs. Repeated
    /// species indices produce repeated arcs.
    pub fn add_transition(
        &mut self,
        name: impl Into<String>,
        rate: f64,
        inputs: &[usize],
        outputs: &[usize],
    ) -> usize {
        self.transitions.push(Transition {
            name: name.into(),
            rate,
        });
        let t = self.transitions.len() - 1;
        self.inputs
            .extend(inputs.iter().map(|&s| InputArc { is: s, it: t }));
        self.outputs
            .extend(outputs.iter().map(|&s| OutputArc { os: s, ot: t }));
        t
    }

    /// Builds a net from species names and `(name, rate, inputs, outputs)`
    /// transitions given by species name.
    ///
    /// Panics if a transition references an unknown species name; intended
    /// for fixtures and tests.
    pub fn from_names(species: &[&str], transitions: &[(&str, f64, &[&str], &[&str])]) -> Self {
        let mut net = Self::new();
        for s in species {
            net.add_species(*s);
        }
        for (name, rate, ins, outs) in transitions {
            let lookup = |n: &&str| {
                net.species_index(n)
                    .unwrap_or_else(|| panic!("unknown species '{n}' in transition '{name}'"))
            };
            let ins: Vec<usize> = ins.iter().map(lookup).collect();
            let outs: Vec<usize> = outs.iter().map(lookup).collect();
            net.add_transition(*name, *rate, &ins, &outs);
        }
        net
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s.name == name)
    }

    pub fn transition_index(&self, name: &str) -> Option<usize> {
        self.transitions.iter().position(|t| t.name == name)
    }

    pub fn species_names(&self) -> Vec<String> {
        self.species.iter().map(|s| s.name.clone()).collect()
    }

    pub fn transition_names(&self) -> Vec<String> {
        self.transitions.iter().map(|t| t.name.clone()).collect()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.transitions.iter().map(|t| t.rate).collect()
    }

    /// Indices of the input arcs of transition `t`, in arc order.
    pub fn input_arcs_of(&self, t: usize) -> Vec<usize> {
        (0..self.inputs.len())
            .filter(|&i| self.inputs[i].it == t)
            .collect()
    }

    /// Indices of the output arcs of transition `t`, in arc order.
    pub fn output_arcs_of(&self, t: usize) -> Vec<usize> {
        (0..self.outputs.len())
            .filter(|&o| self.outputs[o].ot == t)
            .collect()
    }

    /// Input and output arc counts for every transition.
    pub fn arities(&self) -> Vec<(usize, usize)> {
        let mut ar = vec![(0, 0); self.transitions.len()];
        for i in &self.inputs {
            if let Some(a) = ar.get_mut(i.it) {
                a.0 += 1;
            }
        }
        for o in &self.outputs {
            if let Some(a) = ar.get_mut(o.ot) {
                a.1 += 1;
            }
        }
        ar
    }

    /// Returns a copy with rates replaced; `rates` must have one entry per
    /// transition.
    pub fn with_rates(&self, rates: &[f64]) -> Self {
        assert_eq!(rates.len(), self.transitions.len(), "rate vector length");
        let mut net = self.clone();
        for (t, r) in net.transitions.iter_mut().zip(rates) {
            t.rate = *r;
        }
        net
    }

    pub fn transition_label(&self, t: usize) -> String {
        match self.transitions.get(t) {
            Some(tr) => format!("transition '{}'", tr.name),
            None => format!("transition #{t}"),
        }
    }

    pub fn species_label(&self, s: usize) -> String {
        match self.species.get(s) {
            Some(sp) => format!("species '{}'", sp.name),
            None => format!("species #{s}"),
        }
    }
}

/// Checks index ranges, name uniqueness, and rates. An empty result means
/// the net is well formed.
pub fn validate_net(net: &PetriNet) -> Vec<Violation> {
    let mut out = Vec::new();
    let ns = net.species.len();
    let nt = net.transitions.len();

    let mut seen = HashSet::new();
    for (k, s) in net.species.iter().enumerate() {
        if !seen.insert(s.name.as_str()) {
            out.push(Violation::new(
                format!("species {k}"),
                format!("duplicate species name '{}'", s.name),
            ));
        }
    }
    let mut seen = HashSet::new();
    for (k, t) in net.transitions.iter().enumerate() {
        if !seen.insert(t.name.as_str()) {
            out.push(Violation::new(
                format!("transition {k}"),
                format!("duplicate transition name '{}'", t.name),
            ));
        }
        if !t.rate.is_finite() || t.rate < 0.0 {
            out.push(Violation::new(
                format!("transition {k} ('{}')", t.name),
                format!("rate {} is not a finite nonnegative number", t.rate),
            ));
        }
    }
    for (k, a) in net.inputs.iter().enumerate() {
        if a.is >= ns {
            out.push(Violation::new(
                format!("input arc {k}"),
                format!(
                    "source species index {} out of range (net has {ns} species)",
                    a.is
                ),
            ));
        }
        if a.it >= nt {
            out.push(Violation::new(
                format!("input arc {k}"),
                format!(
                    "target transition index {} out of range (net has {nt} transitions)",
                    a.it
                ),
            ));
        }
    }
    for (k, a) in net.outputs.iter().enumerate() {
        if a.os >= ns {
            out.push(Violation::new(
                format!("output arc {k}"),
                format!(
                    "target species index {} out of range (net has {ns} species)",
                    a.os
                ),
            ));
        }
        if a.ot >= nt {
            out.push(Violation::new(
                format!("output arc {k}"),
                format!(
                    "source transition index {} out of range (net has {nt} transitions)",
                    a.ot
                ),
            ));
        }
    }
    out
}

/// True iff every transition has as many input arcs as output arcs, so that
/// mass-action dynamics preserve the total population.
pub fn conserves_population(net: &PetriNet) -> bool {
    net.arities().into_iter().all(|(i, o)| i == o)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn sir_is_valid() {
        let sir = fixtures::sir();
        assert!(validate_net(&sir).is_empty());
        assert_eq!(sir.species.len(), 3);
        assert_eq!(sir.transitions.len(), 2);
        assert_eq!(sir.arities(), vec![(2, 2), (1, 1)]);
    }

    #[test]
    fn empty_net_is_valid() {
        assert!(validate_net(&PetriNet::new()).is_empty());
    }

    #[test]
    fn out_of_range_input_arc_is_reported() {
        let mut sir = fixtures::sir();
        sir.inputs[0].is = 5;
        let v = validate_net(&sir);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].locus, "input arc 0");
        assert!(v[0].message.contains('5'));
    }

    #[test]
    fn duplicate_names_and_bad_rates() {
        let mut net = PetriNet::from_names(&["A", "A"], &[("t", -1.0, &[], &[])]);
        net.add_transition("t", f64::NAN, &[], &[]);
        let v = validate_net(&net);
        // duplicate species, duplicate transition, two bad rates
        assert_eq!(v.len(), 4, "{v:?}");
    }

    #[test]
    fn conservation_predicate() {
        assert!(conserves_population(&fixtures::sir()));
        let birth = PetriNet::from_names(&["X"], &[("birth", 1.0, &[], &["X"])]);
        assert!(!conserves_population(&birth));
        assert!(conserves_population(&PetriNet::new()));
    }

    #[test]
    fn json_shape() {
        let sir = fixtures::sir();
        let v = serde_json::to_value(&sir).unwrap();
        assert_eq!(v["inputs"][0], serde_json::json!({"is": 0, "it": 0}));
        assert_eq!(v["outputs"][0], serde_json::json!({"os": 1, "ot": 0}));
        assert_eq!(v["transitions"][1]["name"], "rec");
        let back: PetriNet = serde_json::from_value(v).unwrap();
        assert_eq!(back, sir);
    }
}
