//! Exhaustive generation of floor diagrams of a given degree and genus.
//!
//! Floors are generated in a topological order `0..F`: floor `i` picks its
//! divergence, then splits its outgoing weight `div(i) + in(i)` between
//! edges to later floors and sinks. Every acyclic diagram has such a
//! labeling, so every isomorphism class is reached; duplicates are removed
//! through [`canonicalize`].
//!
//! Edge weights never exceed the degree. For an edge `e` out of floor `v`,
//! let `U` be the set of floors with an oriented path to `v` (including
//! `v`). No edge enters `U` from outside, so the total weight leaving `U`
//! is the sum of the divergences in `U`, which is at most `d`; `e` leaves
//! `U` because the diagram is acyclic. The same argument bounds the total
//! outgoing weight of every floor by `d`, which is what prunes the search.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::canon::{canonicalize, CanonicalKey};
use crate::diagram::{Edge, FloorDiagram, UnionFind};
use crate::error::{FloorError, Result};

/// Default cap on the degree accepted by the enumerator.
pub const DEFAULT_MAX_DEGREE: u32 = 10;

#[derive(Clone, Copy, Debug)]
pub struct EnumOptions {
    pub max_degree: u32,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions {
            max_degree: DEFAULT_MAX_DEGREE,
        }
    }
}

/// All floor diagrams of degree `d` and genus `g`, one per isomorphism
/// class, sorted by canonical key. Each diagram is returned in canonical
/// labeling.
pub fn enumerate_floor_diagrams(d: u32, g: u32) -> Result<Vec<FloorDiagram>> {
    enumerate_floor_diagrams_with(d, g, EnumOptions::default())
}

pub fn enumerate_floor_diagrams_with(
    d: u32,
    g: u32,
    opts: EnumOptions,
) -> Result<Vec<FloorDiagram>> {
    if d == 0 {
        return Err(FloorError::InvalidArgument(
            "degree must be at least 1".into(),
        ));
    }
    if d > opts.max_degree {
        return Err(FloorError::InvalidArgument(format!(
            "degree {d} exceeds the configured cap {}",
            opts.max_degree
        )));
    }
    let mut seeds = Vec::new();
    for floors in 1..=d as usize {
        let shape = Shape {
            d,
            floors,
            internal_edges: floors - 1 + g as usize,
        };
        shape.first_floor_choices(&mut seeds);
    }
    let found: BTreeMap<CanonicalKey, FloorDiagram> = seeds
        .into_par_iter()
        .map(|(shape, state)| {
            let mut local = BTreeMap::new();
            shape.place_floor(1, state, &mut |edges: &[Edge]| {
                let diagram = FloorDiagram::new(shape.floors, edges.to_vec())
                    .expect("generated diagram is well formed");
                let (key, canon) = canonicalize(&diagram);
                local.entry(key).or_insert(canon);
            });
            local
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (k, v) in b {
                a.entry(k).or_insert(v);
            }
            a
        });
    Ok(found.into_values().collect())
}

#[derive(Clone, Copy, Debug)]
struct Shape {
    d: u32,
    floors: usize,
    internal_edges: usize,
}

#[derive(Clone, Debug)]
struct State {
    div_left: u32,
    edges_left: usize,
    in_weight: Vec<u32>,
    /// Internal edges `(tail, head, weight)` placed so far.
    internal: Vec<(usize, usize, u32)>,
    sinks: Vec<u32>,
}

impl Shape {
    fn initial(&self) -> State {
        State {
            div_left: self.d,
            edges_left: self.internal_edges,
            in_weight: vec![0; self.floors],
            internal: Vec::new(),
            sinks: vec![0; self.floors],
        }
    }

    fn first_floor_choices(&self, out: &mut Vec<(Shape, State)>) {
        let state = self.initial();
        self.floor_choices(0, &state, &mut |s| out.push((*self, s)));
    }

    /// Calls `f` with every state obtained by fixing floor `i`.
    fn floor_choices(&self, i: usize, state: &State, f: &mut dyn FnMut(State)) {
        let later = (self.floors - 1 - i) as u32;
        if state.div_left < later + 1 {
            return;
        }
        let max_div = state.div_left - later;
        let min_div = if later == 0 { max_div } else { 1 };
        for div in min_div..=max_div {
            let out = div + state.in_weight[i];
            if out > self.d {
                break;
            }
            let mut s = state.clone();
            s.div_left -= div;
            self.out_edges(i, i + 1, 1, out, &mut s, f);
        }
    }

    /// Chooses a nondecreasing multiset of `(head, weight)` edges out of
    /// floor `i`, starting at candidate `(head, min_w)`; the leftover weight
    /// goes to sinks.
    fn out_edges(
        &self,
        i: usize,
        head: usize,
        min_w: u32,
        budget: u32,
        s: &mut State,
        f: &mut dyn FnMut(State),
    ) {
        // Edges still owed must fit on floors i+1..F-1 (the last floor has
        // no outgoing internal edges).
        let last = i + 1 == self.floors;
        if !last || s.edges_left == 0 {
            let mut done = s.clone();
            done.sinks[i] = budget;
            f(done);
        }
        if s.edges_left == 0 {
            return;
        }
        for h in head..self.floors {
            let start_w = if h == head { min_w } else { 1 };
            for w in start_w..=budget {
                s.internal.push((i, h, w));
                s.in_weight[h] += w;
                s.edges_left -= 1;
                self.out_edges(i, h, w, budget - w, s, f);
                s.edges_left += 1;
                s.in_weight[h] -= w;
                s.internal.pop();
            }
        }
    }

    fn place_floor(&self, i: usize, state: State, emit: &mut dyn FnMut(&[Edge])) {
        if i == self.floors {
            if state.edges_left == 0 && state.div_left == 0 && self.connected(&state) {
                emit(&self.edges_of(&state));
            }
            return;
        }
        let mut next = Vec::new();
        self.floor_choices(i, &state, &mut |s| next.push(s));
        for s in next {
            self.place_floor(i + 1, s, emit);
        }
    }

    fn connected(&self, s: &State) -> bool {
        let mut uf = UnionFind::new(self.floors);
        for &(t, h, _) in &s.internal {
            uf.union(t, h);
        }
        (1..self.floors).all(|v| uf.find(v) == uf.find(0))
    }

    fn edges_of(&self, s: &State) -> Vec<Edge> {
        let mut edges: Vec<Edge> = s
            .internal
            .iter()
            .map(|&(t, h, w)| Edge::internal(t, h, w))
            .collect();
        let mut k = 0;
        for (v, &n) in s.sinks.iter().enumerate() {
            for _ in 0..n {
                edges.push(Edge::to_sink(v, k));
                k += 1;
            }
        }
        edges
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::canonical_form;

    #[test]
    fn degree_one_is_forced() {
        let ds = enumerate_floor_diagrams(1, 0).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds[0].num_floors(), 1);
        assert_eq!(ds[0].num_sinks(), 1);
    }

    #[test]
    fn degree_two_genus_zero() {
        let ds = enumerate_floor_diagrams(2, 0).unwrap();
        assert_eq!(ds.len(), 2);
        let mut floors: Vec<usize> = ds.iter().map(|d| d.num_floors()).collect();
        floors.sort();
        assert_eq!(floors, vec![1, 2]);
    }

    #[test]
    fn no_genus_one_in_degree_one_or_two() {
        assert!(enumerate_floor_diagrams(1, 1).unwrap().is_empty());
        assert!(enumerate_floor_diagrams(2, 1).unwrap().is_empty());
    }

    #[test]
    fn every_output_is_valid_and_unique() {
        for (d, g) in [(3, 0), (3, 1), (4, 0), (4, 1), (4, 2)] {
            let ds = enumerate_floor_diagrams(d, g).unwrap();
            let mut keys: Vec<_> = ds.iter().map(canonical_form).collect();
            let sorted = keys.clone();
            keys.dedup();
            assert_eq!(keys.len(), ds.len());
            let mut check = sorted.clone();
            check.sort();
            assert_eq!(check, sorted, "output sorted by canonical key");
            for diag in &ds {
                assert!(diag.validate(d, g).is_empty(), "{diag}");
                assert!(diag.num_floors() <= d as usize);
            }
        }
    }

    #[test]
    fn rejects_degree_zero_and_cap() {
        assert!(enumerate_floor_diagrams(0, 0).is_err());
        assert!(enumerate_floor_diagrams_with(4, 0, EnumOptions { max_degree: 3 }).is_err());
    }
}
