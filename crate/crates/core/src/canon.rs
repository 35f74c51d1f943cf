//! Canonical labeling and automorphisms of small labeled multigraphs.
//!
//! Canonical forms use color refinement followed by individualization of
//! the first non-singleton cell; the key is the lexicographically smallest
//! serialization over all discrete leaves. Twin vertices (whose
//! transposition is an automorphism) are branched on only once.

use std::collections::BTreeMap;

use num_bigint::BigUint;

use crate::diagram::{Edge, FloorDiagram, Head};

/// Byte string identifying an isomorphism class.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalKey(Vec<u8>);

impl CanonicalKey {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub(crate) fn from_bytes(bytes: Vec<u8>) -> Self {
        CanonicalKey(bytes)
    }

    fn from_words(words: &[u32]) -> Self {
        CanonicalKey(words.iter().flat_map(|w| w.to_be_bytes()).collect())
    }
}

/// Directed multigraph with vertex labels and a multiset of edge labels per
/// ordered vertex pair.
#[derive(Clone, Debug)]
pub(crate) struct LabeledGraph {
    vlabel: Vec<Vec<u32>>,
    adj: Vec<Vec<Vec<Vec<u32>>>>,
}

impl LabeledGraph {
    pub(crate) fn new(vlabel: Vec<Vec<u32>>) -> Self {
        let n = vlabel.len();
        LabeledGraph {
            vlabel,
            adj: vec![vec![Vec::new(); n]; n],
        }
    }

    pub(crate) fn add_edge(&mut self, u: usize, v: usize, label: Vec<u32>) {
        let cell = &mut self.adj[u][v];
        let pos = cell.partition_point(|l| *l <= label);
        cell.insert(pos, label);
    }

    fn len(&self) -> usize {
        self.vlabel.len()
    }

    fn initial_colors(&self) -> Vec<u32> {
        rank(&self.vlabel)
    }

    fn refine(&self, colors: &mut Vec<u32>) {
        let n = self.len();
        let mut classes = colors
            .iter()
            .collect::<std::collections::BTreeSet<_>>()
            .len();
        loop {
            let sigs: Vec<Vec<u32>> = (0..n)
                .map(|v| {
                    let mut out: Vec<(u32, &Vec<Vec<u32>>)> = (0..n)
                        .filter(|&w| !self.adj[v][w].is_empty())
                        .map(|w| (colors[w], &self.adj[v][w]))
                        .collect();
                    let mut inc: Vec<(u32, &Vec<Vec<u32>>)> = (0..n)
                        .filter(|&w| !self.adj[w][v].is_empty())
                        .map(|w| (colors[w], &self.adj[w][v]))
                        .collect();
                    out.sort();
                    inc.sort();
                    let mut sig = vec![colors[v], out.len() as u32];
                    for (c, ls) in out.iter().chain(inc.iter()) {
                        sig.push(*c);
                        push_labels(&mut sig, ls);
                    }
                    sig
                })
                .collect();
            *colors = rank(&sigs);
            let now = colors
                .iter()
                .collect::<std::collections::BTreeSet<_>>()
                .len();
            if now == classes {
                return;
            }
            classes = now;
        }
    }

    fn twins(&self, u: usize, v: usize) -> bool {
        if self.vlabel[u] != self.vlabel[v] || self.adj[u][v] != self.adj[v][u] {
            return false;
        }
        (0..self.len())
            .filter(|&x| x != u && x != v)
            .all(|x| self.adj[u][x] == self.adj[v][x] && self.adj[x][u] == self.adj[x][v])
    }

    fn serialize(&self, order: &[usize]) -> Vec<u32> {
        let mut s = vec![order.len() as u32];
        for &v in order {
            s.push(self.vlabel[v].len() as u32);
            s.extend_from_slice(&self.vlabel[v]);
        }
        for &u in order {
            for &v in order {
                push_labels(&mut s, &self.adj[u][v]);
            }
        }
        s
    }

    /// Returns the canonical serialization and `order`, where `order[i]` is
    /// the vertex placed at canonical position `i`.
    pub(crate) fn canonical(&self) -> (Vec<u32>, Vec<usize>) {
        let mut colors = self.initial_colors();
        self.refine(&mut colors);
        let mut best: Option<(Vec<u32>, Vec<usize>)> = None;
        self.search(colors, &mut best);
        best.expect("at least one leaf")
    }

    fn search(&self, colors: Vec<u32>, best: &mut Option<(Vec<u32>, Vec<usize>)>) {
        let n = self.len();
        let mut cells: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for v in 0..n {
            cells.entry(colors[v]).or_default().push(v);
        }
        let Some(cell) = cells.values().find(|c| c.len() > 1) else {
            let mut order = vec![0; n];
            for v in 0..n {
                order[colors[v] as usize] = v;
            }
            let ser = self.serialize(&order);
            if best.as_ref().is_none_or(|(b, _)| ser < *b) {
                *best = Some((ser, order));
            }
            return;
        };
        let mut tried: Vec<usize> = Vec::new();
        for &v in cell {
            if tried.iter().any(|&t| self.twins(t, v)) {
                continue;
            }
            tried.push(v);
            let target = colors[v];
            let mut next: Vec<u32> = colors
                .iter()
                .enumerate()
                .map(|(x, &c)| 2 * c + u32::from(c == target && x != v))
                .collect();
            self.refine(&mut next);
            self.search(next, best);
        }
    }
}

fn push_labels(s: &mut Vec<u32>, labels: &[Vec<u32>]) {
    s.push(labels.len() as u32);
    for l in labels {
        s.push(l.len() as u32);
        s.extend_from_slice(l);
    }
}

/// Dense ranks (0, 1, ...) of `items` in sorted order.
fn rank<T: Ord>(items: &[T]) -> Vec<u32> {
    let mut sorted: Vec<&T> = items.iter().collect();
    sorted.sort();
    sorted.dedup();
    items
        .iter()
        .map(|x| sorted.binary_search(&x).expect("present") as u32)
        .collect()
}

fn sinks_per_floor(d: &FloorDiagram) -> Vec<u32> {
    let mut sinks = vec![0u32; d.num_floors()];
    for e in d.edges().iter().filter(|e| e.is_sink_edge()) {
        sinks[e.tail] += 1;
    }
    sinks
}

fn floor_graph(d: &FloorDiagram) -> LabeledGraph {
    let sinks = sinks_per_floor(d);
    let mut g = LabeledGraph::new(
        d.divergences()
            .iter()
            .zip(&sinks)
            .map(|(&div, &s)| vec![div as u32, s])
            .collect(),
    );
    for e in d.edges() {
        if let Head::Floor(h) = e.head {
            g.add_edge(e.tail, h, vec![e.weight]);
        }
    }
    g
}

/// Isomorphism-invariant key of a diagram: equal keys iff the weighted
/// oriented multigraphs are isomorphic.
pub fn canonical_form(d: &FloorDiagram) -> CanonicalKey {
    let (ser, _) = floor_graph(d).canonical();
    CanonicalKey::from_words(&ser)
}

/// The canonical key together with the diagram relabeled into canonical
/// position: floors in canonical order, internal edges sorted by
/// `(tail, head, weight)`, then sink edges sorted by tail.
pub fn canonicalize(d: &FloorDiagram) -> (CanonicalKey, FloorDiagram) {
    let (ser, order) = floor_graph(d).canonical();
    let mut pos = vec![0; order.len()];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let mut internal: Vec<(usize, usize, u32)> = Vec::new();
    let mut sink_tails: Vec<usize> = Vec::new();
    for e in d.edges() {
        match e.head {
            Head::Floor(h) => internal.push((pos[e.tail], pos[h], e.weight)),
            Head::Sink(_) => sink_tails.push(pos[e.tail]),
        }
    }
    internal.sort_unstable();
    sink_tails.sort_unstable();
    let edges = internal
        .into_iter()
        .map(|(t, h, w)| Edge::internal(t, h, w))
        .chain(
            sink_tails
                .into_iter()
                .enumerate()
                .map(|(k, t)| Edge::to_sink(t, k)),
        )
        .collect();
    let relabeled =
        FloorDiagram::new(d.num_floors(), edges).expect("relabeling preserves validity");
    (CanonicalKey::from_words(&ser), relabeled)
}

/// A weight- and orientation-preserving self-map of a diagram. Sinks move
/// with their incoming edges.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Automorphism {
    /// `floors[v]` is the image of floor `v`.
    pub floors: Vec<usize>,
    /// `edges[e]` is the image of edge `e`.
    pub edges: Vec<usize>,
}

/// Weights between each ordered pair of floors, sorted.
fn weight_matrix(d: &FloorDiagram) -> Vec<Vec<Vec<u32>>> {
    let n = d.num_floors();
    let mut m = vec![vec![Vec::new(); n]; n];
    for e in d.edges() {
        if let Head::Floor(h) = e.head {
            m[e.tail][h].push(e.weight);
        }
    }
    for row in &mut m {
        for cell in row {
            cell.sort_unstable();
        }
    }
    m
}

/// Permutations of the floors induced by automorphisms of `d`, each given
/// as `perm[v] = image of v`, in lexicographic order.
pub fn floor_automorphisms(d: &FloorDiagram) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    visit_floor_automorphisms(d, &mut |p| out.push(p.to_vec()));
    out
}

/// Number of floor permutations induced by automorphisms.
pub fn floor_automorphism_count(d: &FloorDiagram) -> u64 {
    let mut count = 0;
    visit_floor_automorphisms(d, &mut |_| count += 1);
    count
}

fn visit_floor_automorphisms(d: &FloorDiagram, f: &mut dyn FnMut(&[usize])) {
    let n = d.num_floors();
    let sinks = sinks_per_floor(d);
    let label: Vec<(i64, u32)> = d.divergences().iter().copied().zip(sinks).collect();
    let m = weight_matrix(d);
    let mut perm = vec![usize::MAX; n];
    let mut used = vec![false; n];

    fn go(
        v: usize,
        label: &[(i64, u32)],
        m: &[Vec<Vec<u32>>],
        perm: &mut Vec<usize>,
        used: &mut Vec<bool>,
        f: &mut dyn FnMut(&[usize]),
    ) {
        let n = label.len();
        if v == n {
            f(perm);
            return;
        }
        for t in 0..n {
            if used[t] || label[t] != label[v] {
                continue;
            }
            let consistent = (0..v).all(|u| m[u][v] == m[perm[u]][t] && m[v][u] == m[t][perm[u]]);
            if !consistent {
                continue;
            }
            perm[v] = t;
            used[t] = true;
            go(v + 1, label, m, perm, used, f);
            used[t] = false;
        }
        perm[v] = usize::MAX;
    }

    go(0, &label, &m, &mut perm, &mut used, f);
}

/// Edge classes: edges sharing tail, head floor (or "some sink") and weight
/// are interchangeable by automorphisms that fix every floor.
pub(crate) fn edge_classes(d: &FloorDiagram) -> BTreeMap<(usize, Option<usize>, u32), Vec<usize>> {
    let mut classes: BTreeMap<(usize, Option<usize>, u32), Vec<usize>> = BTreeMap::new();
    for (i, e) in d.edges().iter().enumerate() {
        classes
            .entry((e.tail, e.head_floor(), e.weight))
            .or_default()
            .push(i);
    }
    classes
}

/// Order of the full automorphism group (floor permutations times the
/// permutations of interchangeable edges).
pub fn automorphism_count(d: &FloorDiagram) -> BigUint {
    let mut count = BigUint::from(floor_automorphism_count(d));
    for class in edge_classes(d).values() {
        for k in 2..=class.len() {
            count *= k as u32;
        }
    }
    count
}

/// Every automorphism of `d`. The group can be large (a floor with k sinks
/// alone contributes k!), so this is meant for small diagrams.
pub fn automorphisms(d: &FloorDiagram) -> Vec<Automorphism> {
    let classes = edge_classes(d);
    let mut out = Vec::new();
    for fp in floor_automorphisms(d) {
        // Pair each class with its image class under the floor permutation.
        let pairs: Vec<(&Vec<usize>, &Vec<usize>)> = classes
            .iter()
            .map(|(&(t, h, w), src)| {
                let img = &classes[&(fp[t], h.map(|h| fp[h]), w)];
                (src, img)
            })
            .collect();
        let mut edges = vec![usize::MAX; d.edges().len()];
        expand_edge_maps(&pairs, 0, &mut edges, &fp, &mut out);
    }
    out.sort();
    out
}

fn expand_edge_maps(
    pairs: &[(&Vec<usize>, &Vec<usize>)],
    i: usize,
    edges: &mut Vec<usize>,
    fp: &[usize],
    out: &mut Vec<Automorphism>,
) {
    if i == pairs.len() {
        out.push(Automorphism {
            floors: fp.to_vec(),
            edges: edges.clone(),
        });
        return;
    }
    let (src, img) = pairs[i];
    for p in permutations(img.len()) {
        for (k, &e) in src.iter().enumerate() {
            edges[e] = img[p[k]];
        }
        expand_edge_maps(pairs, i + 1, edges, fp, out);
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    heap_permute(n, &mut cur, &mut out);
    out
}

fn heap_permute(k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if k <= 1 {
        out.push(cur.clone());
        return;
    }
    for i in 0..k - 1 {
        heap_permute(k - 1, cur, out);
        if k.is_multiple_of(2) {
            cur.swap(i, k - 1);
        } else {
            cur.swap(0, k - 1);
        }
    }
    heap_permute(k - 1, cur, out);
}
