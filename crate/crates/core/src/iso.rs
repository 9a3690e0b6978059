//! Isomorphism testing of Petri nets, ignoring names and rates.
//!
//! Species and transitions are first colored by iterated degree refinement
//! over both nets at once. The search then assigns species within color
//! classes, pruning as soon as a transition whose species are all assigned
//! has no counterpart with the same mapped input/output multisets. Once all
//! species are placed, transitions and arcs are matched directly.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::morphism::{complete_morphism, PetriMorphism};
use crate::petri::PetriNet;

/// Default cap on backtracking nodes.
pub const DEFAULT_SEARCH_LIMIT: usize = 2_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IsoError {
    #[error("isomorphism search exceeded {0} nodes")]
    SearchLimit(usize),
}

pub fn is_isomorphic(p: &PetriNet, q: &PetriNet) -> Result<Option<PetriMorphism>, IsoError> {
    is_isomorphic_with_limit(p, q, DEFAULT_SEARCH_LIMIT)
}

pub fn is_isomorphic_with_limit(
    p: &PetriNet,
    q: &PetriNet,
    limit: usize,
) -> Result<Option<PetriMorphism>, IsoError> {
    if p.species.len() != q.species.len()
        || p.transitions.len() != q.transitions.len()
        || p.inputs.len() != q.inputs.len()
        || p.outputs.len() != q.outputs.len()
    {
        return Ok(None);
    }
    let (pc, qc) = refine(p, q);
    let hist = |c: &[usize]| {
        let mut m = BTreeMap::new();
        for &x in c {
            *m.entry(x).or_insert(0usize) += 1;
        }
        m
    };
    if hist(&pc.species) != hist(&qc.species) || hist(&pc.transitions) != hist(&qc.transitions) {
        return Ok(None);
    }

    let mut search = Search::new(p, q, &pc, &qc, limit);
    let Some(species_map) = search.run()? else {
        return Ok(None);
    };

    // Match transitions by (color, mapped signature).
    let mut pool: HashMap<Key, Vec<usize>> = HashMap::new();
    for u in (0..q.transitions.len()).rev() {
        pool.entry(key_of(q, u, qc.transitions[u], None))
            .or_default()
            .push(u);
    }
    let mut transition_map = vec![0; p.transitions.len()];
    for (t, slot) in transition_map.iter_mut().enumerate() {
        let k = key_of(p, t, pc.transitions[t], Some(&species_map));
        match pool.get_mut(&k).and_then(|v| v.pop()) {
            Some(u) => *slot = u,
            None => return Ok(None),
        }
    }
    Ok(complete_morphism(p, q, &species_map, &transition_map))
}

struct Colors {
    species: Vec<usize>,
    transitions: Vec<usize>,
}

/// Iterated color refinement shared between the two nets so that colors are
/// comparable.
fn refine(p: &PetriNet, q: &PetriNet) -> (Colors, Colors) {
    let init = |n: &PetriNet| Colors {
        species: vec![0; n.species.len()],
        transitions: n
            .arities()
            .into_iter()
            .map(|(i, o)| i * 1_000_003 + o)
            .collect(),
    };
    let (mut a, mut b) = (init(p), init(q));
    let mut classes = usize::MAX;
    loop {
        // species from incident transitions
        let mut table: BTreeMap<(usize, Vec<(u8, usize)>), usize> = BTreeMap::new();
        let sp_sig = |n: &PetriNet, c: &Colors| -> Vec<(usize, Vec<(u8, usize)>)> {
            let mut sig: Vec<Vec<(u8, usize)>> = vec![Vec::new(); n.species.len()];
            for a in &n.inputs {
                sig[a.is].push((0, c.transitions[a.it]));
            }
            for a in &n.outputs {
                sig[a.os].push((1, c.transitions[a.ot]));
            }
            sig.into_iter()
                .enumerate()
                .map(|(s, mut v)| {
                    v.sort_unstable();
                    (c.species[s], v)
                })
                .collect()
        };
        let (sa, sb) = (sp_sig(p, &a), sp_sig(q, &b));
        for s in sa.iter().chain(&sb) {
            let n = table.len();
            table.entry(s.clone()).or_insert(n);
        }
        a.species = sa.iter().map(|s| table[s]).collect();
        b.species = sb.iter().map(|s| table[s]).collect();
        let n_species = table.len();

        let mut table: BTreeMap<(usize, Vec<usize>, Vec<usize>), usize> = BTreeMap::new();
        let tr_sig = |n: &PetriNet, c: &Colors| -> Vec<(usize, Vec<usize>, Vec<usize>)> {
            let mut ins: Vec<Vec<usize>> = vec![Vec::new(); n.transitions.len()];
            let mut outs: Vec<Vec<usize>> = vec![Vec::new(); n.transitions.len()];
            for a in &n.inputs {
                ins[a.it].push(c.species[a.is]);
            }
            for a in &n.outputs {
                outs[a.ot].push(c.species[a.os]);
            }
            (0..n.transitions.len())
                .map(|t| {
                    ins[t].sort_unstable();
                    outs[t].sort_unstable();
                    (
                        c.transitions[t],
                        std::mem::take(&mut ins[t]),
                        std::mem::take(&mut outs[t]),
                    )
                })
                .collect()
        };
        let (ta, tb) = (tr_sig(p, &a), tr_sig(q, &b));
        for t in ta.iter().chain(&tb) {
            let n = table.len();
            table.entry(t.clone()).or_insert(n);
        }
        a.transitions = ta.iter().map(|t| table[t]).collect();
        b.transitions = tb.iter().map(|t| table[t]).collect();

        let now = n_species + table.len();
        if now == classes {
            return (a, b);
        }
        classes = now;
    }
}

type Key = (usize, Vec<usize>, Vec<usize>);

/// Transition color plus its input and output species multisets, mapped
/// through `map` when given.
fn key_of(n: &PetriNet, t: usize, color: usize, map: Option<&[usize]>) -> Key {
    let m = |s: usize| map.map_or(s, |m| m[s]);
    let mut ins: Vec<usize> = n
        .input_arcs_of(t)
        .iter()
        .map(|&a| m(n.inputs[a].is))
        .collect();
    let mut outs: Vec<usize> = n
        .output_arcs_of(t)
        .iter()
        .map(|&a| m(n.outputs[a].os))
        .collect();
    ins.sort_unstable();
    outs.sort_unstable();
    (color, ins, outs)
}

struct Search<'a> {
    p: &'a PetriNet,
    pc: &'a Colors,
    qc: &'a Colors,
    order: Vec<usize>,
    /// Transitions of `p` whose last species is assigned at each depth.
    completes_at: Vec<Vec<usize>>,
    available: HashMap<Key, usize>,
    used: HashMap<Key, usize>,
    map: Vec<usize>,
    taken: Vec<bool>,
    nodes: usize,
    limit: usize,
}

impl<'a> Search<'a> {
    fn new(p: &'a PetriNet, q: &'a PetriNet, pc: &'a Colors, qc: &'a Colors, limit: usize) -> Self {
        let ns = p.species.len();
        let mut class_size: HashMap<usize, usize> = HashMap::new();
        for &c in &pc.species {
            *class_size.entry(c).or_default() += 1;
        }
        let mut order: Vec<usize> = (0..ns).collect();
        order.sort_by_key(|&s| (class_size[&pc.species[s]], s));
        let mut depth_of = vec![0; ns];
        for (d, &s) in order.iter().enumerate() {
            depth_of[s] = d + 1;
        }
        let mut completes_at = vec![Vec::new(); ns + 1];
        for t in 0..p.transitions.len() {
            let last = p
                .inputs
                .iter()
                .filter(|a| a.it == t)
                .map(|a| depth_of[a.is])
                .chain(
                    p.outputs
                        .iter()
                        .filter(|a| a.ot == t)
                        .map(|a| depth_of[a.os]),
                )
                .max()
                .unwrap_or(0);
            completes_at[last].push(t);
        }
        let mut available = HashMap::new();
        for u in 0..q.transitions.len() {
            *available
                .entry(key_of(q, u, qc.transitions[u], None))
                .or_default() += 1;
        }
        Self {
            p,
            pc,
            qc,
            order,
            completes_at,
            available,
            used: HashMap::new(),
            map: vec![usize::MAX; ns],
            taken: vec![false; q.species.len()],
            nodes: 0,
            limit,
        }
    }

    fn run(&mut self) -> Result<Option<Vec<usize>>, IsoError> {
        if !self.admit(0) {
            return Ok(None);
        }
        if self.extend(0)? {
            Ok(Some(self.map.clone()))
        } else {
            Ok(None)
        }
    }

    /// Records the transitions completed at `depth`; false (with no net
    /// change to `used`) if any of them has no remaining counterpart.
    fn admit(&mut self, depth: usize) -> bool {
        let ts = self.completes_at[depth].clone();
        for (k, &t) in ts.iter().enumerate() {
            let key = key_of(self.p, t, self.pc.transitions[t], Some(&self.map));
            let have = self.available.get(&key).copied().unwrap_or(0);
            let used = self.used.entry(key).or_default();
            if *used >= have {
                self.retract(&ts[..k]);
                return false;
            }
            *used += 1;
        }
        true
    }

    fn retract(&mut self, ts: &[usize]) {
        for &t in ts {
            let key = key_of(self.p, t, self.pc.transitions[t], Some(&self.map));
            if let Some(u) = self.used.get_mut(&key) {
                *u -= 1;
            }
        }
    }

    fn extend(&mut self, depth: usize) -> Result<bool, IsoError> {
        if depth == self.order.len() {
            return Ok(true);
        }
        self.nodes += 1;
        if self.nodes > self.limit {
            return Err(IsoError::SearchLimit(self.limit));
        }
        let s = self.order[depth];
        let color = self.pc.species[s];
        for cand in 0..self.taken.len() {
            if self.taken[cand] || self.qc.species[cand] != color {
                continue;
            }
            self.map[s] = cand;
            self.taken[cand] = true;
            if self.admit(depth + 1) {
                if self.extend(depth + 1)? {
                    return Ok(true);
                }
                let ts = self.completes_at[depth + 1].clone();
                self.retract(&ts);
            }
            self.taken[cand] = false;
            self.map[s] = usize::MAX;
        }
        Ok(false)
    }
}
