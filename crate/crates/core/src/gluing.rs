//! Quotient of component variables along the junctions of a wiring diagram.
//!
//! Both Petri-net composition and ODE/DDE composition identify the exposed
//! variables of their components through the junctions they are wired to;
//! this module computes that identification once so the two semantics agree
//! on variable order and naming.

use crate::compose::Uwd;

#[derive(Debug, Clone)]
pub(crate) struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        match self.rank[a].cmp(&self.rank[b]) {
            std::cmp::Ordering::Less => self.parent[a] = b,
            std::cmp::Ordering::Greater => self.parent[b] = a,
            std::cmp::Ordering::Equal => {
                self.parent[b] = a;
                self.rank[a] = self.rank[a].saturating_add(1);
            }
        }
    }
}

/// Shape of one component as seen by the gluing: its variable names and the
/// variable exposed by each leg.
pub(crate) struct ComponentShape<'a> {
    pub names: Vec<&'a str>,
    pub legs: &'a [usize],
}

/// Result of identifying component variables through junctions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gluing {
    /// Name of each composite variable.
    pub class_names: Vec<String>,
    /// For each box, the composite variable of each local variable.
    pub local_to_class: Vec<Vec<usize>>,
    /// Composite variable of each junction.
    pub junction_class: Vec<usize>,
    /// Composite variable exposed by each outer port.
    pub outer_legs: Vec<usize>,
}

impl Gluing {
    pub fn len(&self) -> usize {
        self.class_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_names.is_empty()
    }
}

/// Elements are numbered junctions first, then each box's variables in box
/// order; classes are numbered by their smallest element, which gives the
/// (junction, box, variable) ordering of composite variables.
pub(crate) fn glue(uwd: &Uwd, comps: &[ComponentShape<'_>]) -> Gluing {
    let nj = uwd.junctions.len();
    let mut offsets = Vec::with_capacity(comps.len());
    let mut total = nj;
    for c in comps {
        offsets.push(total);
        total += c.names.len();
    }

    let mut dsu = DisjointSet::new(total);
    for ((bx, comp), &off) in uwd.boxes.iter().zip(comps).zip(&offsets) {
        for (&j, &leg) in bx.ports.iter().zip(comp.legs) {
            dsu.union(j, off + leg);
        }
    }

    let mut root_class = vec![usize::MAX; total];
    let mut element_class = vec![0; total];
    let mut class_names = Vec::new();
    for (e, slot) in element_class.iter_mut().enumerate() {
        let r = dsu.find(e);
        if root_class[r] == usize::MAX {
            root_class[r] = class_names.len();
            let name = if e < nj {
                uwd.junctions[e].name.clone()
            } else {
                let b = offsets.partition_point(|&o| o <= e) - 1;
                format!("{}.{}", uwd.boxes[b].name, comps[b].names[e - offsets[b]])
            };
            class_names.push(name);
        }
        *slot = root_class[r];
    }
    uniquify(&mut class_names);

    let local_to_class = offsets
        .iter()
        .zip(comps)
        .map(|(&off, c)| (0..c.names.len()).map(|k| element_class[off + k]).collect())
        .collect();
    let junction_class: Vec<usize> = element_class[..nj].to_vec();
    let outer_legs = uwd.outer_ports.iter().map(|&j| junction_class[j]).collect();
    Gluing {
        class_names,
        local_to_class,
        junction_class,
        outer_legs,
    }
}

/// Appends `#2`, `#3`, ... to later repeats of a name.
pub(crate) fn uniquify(names: &mut [String]) {
    use std::collections::HashSet;
    let mut seen: HashSet<String> = HashSet::new();
    for n in names.iter_mut() {
        if !seen.insert(n.clone()) {
            let mut k = 2;
            while seen.contains(&format!("{n}#{k}")) {
                k += 1;
            }
            *n = format!("{n}#{k}");
            seen.insert(n.clone());
        }
    }
}
