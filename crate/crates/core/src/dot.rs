//! Graphviz export: species as circles, transitions as boxes, one edge per
//! arc, everything in declaration order.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::petri::PetriNet;

#[derive(Debug, Clone, Default)]
pub struct DotOptions {
    /// Graph name; defaults to `petri`.
    pub name: Option<String>,
    /// Fill colors for species, keyed by species name.
    pub species_fill: BTreeMap<String, String>,
    /// Fill colors for transitions, keyed by transition name.
    pub transition_fill: BTreeMap<String, String>,
    /// Show transition rates under their names.
    pub show_rates: bool,
    /// Lines emitted as `//` comments right after the header.
    pub comments: Vec<String>,
}

impl DotOptions {
    pub fn named(name: impl Into<String>) -> Self {
        Self {
            name: Some(name.into()),
            ..Default::default()
        }
    }
}

pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn to_dot(net: &PetriNet, opts: &DotOptions) -> String {
    let mut out = String::new();
    let name = opts.name.as_deref().unwrap_or("petri");
    let _ = writeln!(out, "digraph {} {{", quote(name));
    for c in &opts.comments {
        let _ = writeln!(out, "  // {c}");
    }
    out.push_str("  rankdir=LR;\n");
    for (k, s) in net.species.iter().enumerate() {
        let _ = write!(
            out,
            "  s{k} [shape=circle, color=\"#4a7fb5\", label={}",
            quote(&s.name)
        );
        if let Some(fill) = opts.species_fill.get(&s.name) {
            let _ = write!(out, ", style=filled, fillcolor={}", quote(fill));
        }
        out.push_str("];\n");
    }
    for (k, t) in net.transitions.iter().enumerate() {
        let label = if opts.show_rates {
            format!("{}\n{}", t.name, t.rate)
        } else {
            t.name.clone()
        };
        let _ = write!(
            out,
            "  t{k} [shape=box, color=\"#e8912d\", label={}",
            quote(&label)
        );
        if let Some(fill) = opts.transition_fill.get(&t.name) {
            let _ = write!(out, ", style=filled, fillcolor={}", quote(fill));
        }
        out.push_str("];\n");
    }
    for a in &net.inputs {
        let _ = writeln!(out, "  s{} -> t{};", a.is, a.it);
    }
    for a in &net.outputs {
        let _ = writeln!(out, "  t{} -> s{};", a.ot, a.os);
    }
    out.push_str("}\n");
    out
}
