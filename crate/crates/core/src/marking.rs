//! Constraint lists, markings of floor diagrams, and their enumeration up
//! to equivalence and combinatorial type.
//!
//! A marking sends each constraint of the ordered list `P` to a floor or to
//! a position on an open edge. For a marked point `x` write `top(x)` for the
//! largest constraint sent to `x`. The third marking condition ("if
//! `q' > q` and `m(q') < m(q)` then some `q'' > q'` also marks `m(q)`") is
//! equivalent to `top` being strictly increasing along the orientation:
//! `x` strictly before `y` implies `top(x) < top(y)`. Edge positions are
//! separate points, so the constraints on one edge increase along it and
//! all of them exceed `top` of the tail floor.
//!
//! "Before" is strict precedence in [`FloorDiagram::precedes`]; marks at the
//! same floor sit at the same point and are never compared, and
//! incomparable points are unconstrained.
//!
//! The search places constraints from the largest down. A point is
//! *opened* when it receives its first (hence largest) constraint; the
//! monotonicity condition becomes "no opened point lies strictly before the
//! point being opened". Later constraints may join an opened floor only if
//! their dimension is positive (first marking condition).

use std::collections::BTreeMap;
use std::fmt;

use crate::canon::{edge_classes, CanonicalKey, LabeledGraph};
use crate::diagram::{
    content_lines, parse_diagram_lines, parse_num, DiagramPoint, FloorDiagram, Head, MarkLabels,
};
use crate::error::{FloorError, Result};

/// One constraint `x^(dim)_idx` of `P`; `idx` is 1-based within its
/// dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Constraint {
    pub dim: u32,
    pub idx: u32,
}

/// The ordered constraint list for an enumerative problem `(n, d, g, l)`.
/// Constraints are ordered by dimension, then by index.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConstraintSpec {
    n: u32,
    d: u32,
    g: u32,
    l: Vec<u32>,
    constraints: Vec<Constraint>,
}

/// Checks the dimension condition `sum_j l_j (n-1-j) = (n+1)d + (n-3)(1-g)`.
pub fn dimension_condition(n: u32, d: u32, g: u32, l: &[u32]) -> Result<()> {
    if n < 2 {
        return Err(FloorError::UnsupportedDimension(n));
    }
    if l.len() != (n - 1) as usize {
        return Err(FloorError::InvalidArgument(format!(
            "expected {} constraint counts for n = {n}, got {}",
            n - 1,
            l.len()
        )));
    }
    let (n, d, g) = (i64::from(n), i64::from(d), i64::from(g));
    let lhs: i64 = l
        .iter()
        .enumerate()
        .map(|(j, &c)| i64::from(c) * (n - 1 - j as i64))
        .sum();
    let rhs = (n + 1) * d + (n - 3) * (1 - g);
    if lhs != rhs {
        return Err(FloorError::DimensionMismatch { lhs, rhs });
    }
    Ok(())
}

impl ConstraintSpec {
    pub fn new(n: u32, d: u32, g: u32, l: &[u32]) -> Result<Self> {
        if n < 2 {
            return Err(FloorError::UnsupportedDimension(n));
        }
        if g > 0 && n > 2 {
            return Err(FloorError::UnsupportedGenus { n, g });
        }
        if d == 0 {
            return Err(FloorError::InvalidArgument(
                "degree must be at least 1".into(),
            ));
        }
        dimension_condition(n, d, g, l)?;
        let constraints = l
            .iter()
            .enumerate()
            .flat_map(|(j, &c)| (1..=c).map(move |idx| Constraint { dim: j as u32, idx }))
            .collect();
        Ok(ConstraintSpec {
            n,
            d,
            g,
            l: l.to_vec(),
            constraints,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn degree(&self) -> u32 {
        self.d
    }

    pub fn genus(&self) -> u32 {
        self.g
    }

    pub fn counts(&self) -> &[u32] {
        &self.l
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn dim(&self, rank: usize) -> u32 {
        self.constraints[rank].dim
    }

    /// Codimension `n - 1 - dim` of the constraint at `rank`.
    pub fn codim(&self, rank: usize) -> u32 {
        self.n - 1 - self.constraints[rank].dim
    }

    /// `true` when every constraint is a point.
    pub fn points_only(&self) -> bool {
        self.l.iter().skip(1).all(|&c| c == 0)
    }

    fn rank_of(&self, dim: u32, idx: u32) -> Option<usize> {
        if idx == 0 || dim as usize >= self.l.len() || idx > self.l[dim as usize] {
            return None;
        }
        let before: u32 = self.l[..dim as usize].iter().sum();
        Some((before + idx - 1) as usize)
    }
}

/// Builds the ordered constraint list, rejecting inputs that violate the
/// dimension condition or ask for positive genus in dimension above 2.
pub fn build_constraints(n: u32, d: u32, g: u32, l: &[u32]) -> Result<ConstraintSpec> {
    ConstraintSpec::new(n, d, g, l)
}

/// A clause of the marking definition violated by an assignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MarkingViolation {
    /// Two constraints share a point that is not a floor, or the smaller
    /// one is a point constraint.
    Coincidence { first: usize, second: usize },
    /// A floor carries no constraint.
    UnmarkedFloor(usize),
    /// `second > first` sits strictly before `first` and nothing above
    /// `second` marks the point of `first`.
    Order { first: usize, second: usize },
    /// Slots on an edge are not exactly `0..k`.
    Slots { edge: usize },
}

impl fmt::Display for MarkingViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarkingViolation::Coincidence { first, second } => {
                write!(f, "constraints {first} and {second} coincide illegally")
            }
            MarkingViolation::UnmarkedFloor(v) => write!(f, "floor {v} is not marked"),
            MarkingViolation::Order { first, second } => write!(
                f,
                "constraint {second} lies before constraint {first} without a larger mark there"
            ),
            MarkingViolation::Slots { edge } => write!(f, "slots on edge {edge} are not 0..k"),
        }
    }
}

/// A floor diagram together with an assignment of every constraint (by
/// rank in `P`) to a point of the diagram.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MarkedDiagram {
    diagram: FloorDiagram,
    spec: ConstraintSpec,
    assignment: Vec<DiagramPoint>,
}

/// Constraints grouped by the floor or edge carrying them. Edge lists are
/// in slot order; floor lists are ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkLayout {
    pub floor_marks: Vec<Vec<usize>>,
    pub edge_marks: Vec<Vec<usize>>,
}

impl MarkedDiagram {
    /// Wraps an assignment; checks that it covers `P` and names existing
    /// points. Marking conditions are reported by [`MarkedDiagram::violations`].
    pub fn new(
        diagram: FloorDiagram,
        spec: ConstraintSpec,
        assignment: Vec<DiagramPoint>,
    ) -> Result<Self> {
        if assignment.len() != spec.len() {
            return Err(FloorError::InvalidArgument(format!(
                "assignment has {} entries for {} constraints",
                assignment.len(),
                spec.len()
            )));
        }
        for p in &assignment {
            match *p {
                DiagramPoint::Floor(v) if v >= diagram.num_floors() => {
                    return Err(FloorError::InvalidPoint(format!("unknown floor {v}")))
                }
                DiagramPoint::EdgeSlot { edge, .. } if edge >= diagram.edges().len() => {
                    return Err(FloorError::InvalidPoint(format!("unknown edge {edge}")))
                }
                _ => {}
            }
        }
        Ok(MarkedDiagram {
            diagram,
            spec,
            assignment,
        })
    }

    pub fn diagram(&self) -> &FloorDiagram {
        &self.diagram
    }

    pub fn spec(&self) -> &ConstraintSpec {
        &self.spec
    }

    pub fn assignment(&self) -> &[DiagramPoint] {
        &self.assignment
    }

    pub fn layout(&self) -> MarkLayout {
        let mut floor_marks = vec![Vec::new(); self.diagram.num_floors()];
        let mut edge_slots: Vec<Vec<(usize, usize)>> = vec![Vec::new(); self.diagram.edges().len()];
        for (q, p) in self.assignment.iter().enumerate() {
            match *p {
                DiagramPoint::Floor(v) => floor_marks[v].push(q),
                DiagramPoint::EdgeSlot { edge, slot } => edge_slots[edge].push((slot, q)),
            }
        }
        let edge_marks = edge_slots
            .into_iter()
            .map(|mut s| {
                s.sort_unstable();
                s.into_iter().map(|(_, q)| q).collect()
            })
            .collect();
        MarkLayout {
            floor_marks,
            edge_marks,
        }
    }

    /// Every violated marking clause, checked directly from the definition
    /// using [`FloorDiagram::precedes`].
    pub fn violations(&self) -> Vec<MarkingViolation> {
        let mut out = Vec::new();
        let layout = self.layout();
        for e in 0..layout.edge_marks.len() {
            let mut slots: Vec<usize> = self
                .assignment
                .iter()
                .filter_map(|p| match *p {
                    DiagramPoint::EdgeSlot { edge, slot } if edge == e => Some(slot),
                    _ => None,
                })
                .collect();
            slots.sort_unstable();
            slots.dedup();
            if slots != (0..slots.len()).collect::<Vec<_>>() {
                out.push(MarkingViolation::Slots { edge: e });
            }
        }
        let m = &self.assignment;
        for q in 0..m.len() {
            for q2 in q + 1..m.len() {
                if m[q] == m[q2]
                    && (!matches!(m[q], DiagramPoint::Floor(_)) || self.spec.dim(q) == 0)
                {
                    out.push(MarkingViolation::Coincidence {
                        first: q,
                        second: q2,
                    });
                }
            }
        }
        for (v, marks) in layout.floor_marks.iter().enumerate() {
            if marks.is_empty() {
                out.push(MarkingViolation::UnmarkedFloor(v));
            }
        }
        for q in 0..m.len() {
            for q2 in q + 1..m.len() {
                if self.diagram.precedes(m[q2], m[q]).unwrap_or(false)
                    && !(q2 + 1..m.len()).any(|q3| m[q3] == m[q])
                {
                    out.push(MarkingViolation::Order {
                        first: q,
                        second: q2,
                    });
                }
            }
        }
        out
    }

    /// Key identifying the equivalence class of the marking: two markings
    /// of the same diagram get equal keys iff a diagram automorphism carries
    /// one to the other. Requires every floor to be marked.
    pub fn equivalence_key(&self) -> CanonicalKey {
        marked_key(&self.diagram, &self.layout())
    }

    /// Key identifying the combinatorial type: the marking with every
    /// constraint replaced by its dimension, up to isomorphism.
    pub fn type_key(&self) -> CanonicalKey {
        let layout = self.layout();
        let dims =
            |marks: &[usize]| -> Vec<u32> { marks.iter().map(|&q| self.spec.dim(q)).collect() };
        let mut vlabels = Vec::new();
        for v in 0..self.diagram.num_floors() {
            let mut fd = dims(&layout.floor_marks[v]);
            fd.sort_unstable();
            let mut sinks: Vec<Vec<u32>> = self
                .diagram
                .edges()
                .iter()
                .enumerate()
                .filter(|(_, e)| e.tail == v && e.is_sink_edge())
                .map(|(i, _)| dims(&layout.edge_marks[i]))
                .collect();
            sinks.sort();
            let mut label = vec![self.diagram.divergences()[v] as u32, fd.len() as u32];
            label.extend(fd);
            label.push(sinks.len() as u32);
            for s in sinks {
                label.push(s.len() as u32);
                label.extend(s);
            }
            vlabels.push(label);
        }
        let mut g = LabeledGraph::new(vlabels);
        for (i, e) in self.diagram.edges().iter().enumerate() {
            if let Head::Floor(h) = e.head {
                let mut label = vec![e.weight];
                label.extend(dims(&layout.edge_marks[i]));
                g.add_edge(e.tail, h, label);
            }
        }
        let (ser, _) = g.canonical();
        key_from_words(&ser)
    }

    /// Diagram text followed by one `mark` line per constraint in `P` order.
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        self.diagram.write_text(&mut s);
        for (q, p) in self.assignment.iter().enumerate() {
            let c = self.spec.constraints()[q];
            let _ = writeln!(s, "mark dim={} idx={} at={}", c.dim, c.idx, p);
        }
        s
    }

    /// Parses a marked diagram. The ambient dimension is not part of the
    /// format and must be supplied; the constraint counts are read off the
    /// mark lines.
    pub fn from_text(text: &str, n: u32) -> Result<Self> {
        let lines: Vec<(usize, &str)> = content_lines(text).collect();
        let (md, rest) = parse_marked_lines(&lines, n)?;
        if let Some((ln, _)) = rest.first() {
            return Err(FloorError::parse(*ln, "unexpected trailing record"));
        }
        Ok(md)
    }

    pub fn to_dot(&self) -> String {
        let layout = self.layout();
        let name = |q: usize| {
            let c = self.spec.constraints()[q];
            format!("x{}_{}", c.dim, c.idx)
        };
        let labels = MarkLabels {
            floors: layout
                .floor_marks
                .iter()
                .map(|ms| ms.iter().map(|&q| name(q)).collect())
                .collect(),
            edges: layout
                .edge_marks
                .iter()
                .map(|ms| ms.iter().map(|&q| name(q)).collect())
                .collect(),
        };
        self.diagram.dot_with_marks(Some(&labels))
    }
}

impl fmt::Display for MarkedDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Parses a stream of marked diagrams (each a `floordiagram` record
/// followed by its `mark` lines).
pub fn parse_marked_stream(text: &str, n: u32) -> Result<Vec<MarkedDiagram>> {
    let lines: Vec<(usize, &str)> = content_lines(text).collect();
    let mut rest: &[(usize, &str)] = &lines;
    let mut out = Vec::new();
    while !rest.is_empty() {
        let (md, r) = parse_marked_lines(rest, n)?;
        out.push(md);
        rest = r;
    }
    Ok(out)
}

/// Parses a stream of unmarked diagrams.
pub fn parse_diagram_stream(text: &str) -> Result<Vec<FloorDiagram>> {
    let lines: Vec<(usize, &str)> = content_lines(text).collect();
    let mut rest: &[(usize, &str)] = &lines;
    let mut out = Vec::new();
    while !rest.is_empty() {
        let (d, r) = parse_diagram_lines(rest)?;
        out.push(d);
        rest = r;
    }
    Ok(out)
}

fn parse_marked_lines<'a, 'b>(
    lines: &'b [(usize, &'a str)],
    n: u32,
) -> Result<(MarkedDiagram, &'b [(usize, &'a str)])> {
    let hl = lines.first().map(|(l, _)| *l).unwrap_or(0);
    let (diagram, mut rest) = parse_diagram_lines(lines)?;
    let mut marks: Vec<(usize, u32, u32, DiagramPoint)> = Vec::new();
    while let Some((&(ln, line), tail)) = rest.split_first() {
        let mut toks = line.split_whitespace();
        if toks.next() != Some("mark") {
            break;
        }
        let mut field = |key: &str| -> Result<&str> {
            toks.next()
                .and_then(|t| t.strip_prefix(key))
                .and_then(|t| t.strip_prefix('='))
                .ok_or_else(|| FloorError::parse(ln, format!("expected {key}=")))
        };
        let dim: u32 = parse_num(ln, field("dim")?)?;
        let idx: u32 = parse_num(ln, field("idx")?)?;
        let at = field("at")?;
        let parts: Vec<&str> = at.split(':').collect();
        let point = match parts.as_slice() {
            ["floor", v] => DiagramPoint::Floor(parse_num(ln, v)?),
            ["edge", e, "slot", s] => DiagramPoint::EdgeSlot {
                edge: parse_num(ln, e)?,
                slot: parse_num(ln, s)?,
            },
            _ => return Err(FloorError::parse(ln, format!("bad target {at:?}"))),
        };
        marks.push((ln, dim, idx, point));
        rest = tail;
    }
    if n < 2 {
        return Err(FloorError::UnsupportedDimension(n));
    }
    let mut l = vec![0u32; (n - 1) as usize];
    for &(ln, dim, _, _) in &marks {
        *l.get_mut(dim as usize).ok_or_else(|| {
            FloorError::parse(ln, format!("dimension {dim} too large for n = {n}"))
        })? += 1;
    }
    let g = diagram
        .first_betti()
        .map_err(|e| FloorError::parse(hl, e.to_string()))?;
    let spec = ConstraintSpec::new(n, diagram.degree(), g, &l)
        .map_err(|e| FloorError::parse(hl, e.to_string()))?;
    let mut assignment = vec![DiagramPoint::Floor(usize::MAX); spec.len()];
    for (pos, &(ln, dim, idx, point)) in marks.iter().enumerate() {
        let rank = spec
            .rank_of(dim, idx)
            .ok_or_else(|| FloorError::parse(ln, format!("no constraint x^({dim})_{idx}")))?;
        if rank != pos {
            return Err(FloorError::parse(
                ln,
                "mark lines must follow the constraint order",
            ));
        }
        assignment[rank] = point;
    }
    let md = MarkedDiagram::new(diagram, spec, assignment)
        .map_err(|e| FloorError::parse(hl, e.to_string()))?;
    Ok((md, rest))
}

fn key_from_words(words: &[u32]) -> CanonicalKey {
    let bytes: Vec<u8> = words.iter().flat_map(|w| w.to_be_bytes()).collect();
    CanonicalKey::from_bytes(bytes)
}

/// Floors are distinguished by their (disjoint, nonempty) mark sets, so
/// relabeling floors by their smallest mark is canonical; parallel edges
/// are then told apart only by their labels, which sorting handles.
fn marked_key(d: &FloorDiagram, layout: &MarkLayout) -> CanonicalKey {
    let nf = d.num_floors();
    let mut order: Vec<usize> = (0..nf).collect();
    order.sort_by_key(|&v| {
        (
            layout.floor_marks[v]
                .iter()
                .min()
                .copied()
                .unwrap_or(usize::MAX),
            v,
        )
    });
    let mut pos = vec![0u32; nf];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i as u32;
    }
    let mut words = vec![nf as u32];
    for &v in &order {
        let mut ms: Vec<u32> = layout.floor_marks[v].iter().map(|&q| q as u32).collect();
        ms.sort_unstable();
        words.push(d.divergences()[v] as u32);
        words.push(ms.len() as u32);
        words.extend(ms);
    }
    let mut edges: Vec<Vec<u32>> = d
        .edges()
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let head = match e.head {
                Head::Floor(h) => pos[h],
                Head::Sink(_) => u32::MAX,
            };
            let mut w = vec![
                pos[e.tail],
                head,
                e.weight,
                layout.edge_marks[i].len() as u32,
            ];
            w.extend(layout.edge_marks[i].iter().map(|&q| q as u32));
            w
        })
        .collect();
    edges.sort();
    for e in edges {
        words.extend(e);
    }
    key_from_words(&words)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum SearchMode {
    /// Every marking satisfying the marking conditions.
    All,
    /// Only markings that can have nonzero multiplicity: each edge carries
    /// total codimension at most `n - 1`, and sink edges (every edge, in
    /// positive genus) carry at least one mark.
    Viable,
}

/// Mutable state of the placement search. Mark lists are in placement
/// order, i.e. descending: the first entry of a floor list is its top mark
/// and edge lists run against the orientation.
pub(crate) struct SearchState {
    pub floor_marks: Vec<Vec<usize>>,
    pub edge_marks: Vec<Vec<usize>>,
    opened_floors: u64,
    opened_edges: u128,
    edge_load: Vec<u32>,
}

impl SearchState {
    pub(crate) fn layout(&self) -> MarkLayout {
        MarkLayout {
            floor_marks: self
                .floor_marks
                .iter()
                .map(|m| m.iter().rev().copied().collect())
                .collect(),
            edge_marks: self
                .edge_marks
                .iter()
                .map(|m| m.iter().rev().copied().collect())
                .collect(),
        }
    }
}

pub(crate) struct MarkingSearch<'a> {
    diagram: &'a FloorDiagram,
    spec: &'a ConstraintSpec,
    mode: SearchMode,
    /// Floors strictly before each floor.
    floors_before: Vec<u64>,
    /// Edges whose positions lie strictly before each floor.
    edges_before: Vec<u128>,
    /// Previous edge in the same interchangeable class, which must be
    /// opened first.
    class_prev: Vec<Option<usize>>,
    required_edges: u128,
}

impl<'a> MarkingSearch<'a> {
    pub(crate) fn new(
        diagram: &'a FloorDiagram,
        spec: &'a ConstraintSpec,
        mode: SearchMode,
    ) -> Result<Self> {
        let nf = diagram.num_floors();
        let ne = diagram.edges().len();
        if ne > 128 {
            return Err(FloorError::TooLarge(format!("{ne} edges (max 128)")));
        }
        let mut floors_before = vec![0u64; nf];
        for u in 0..nf {
            let mut m = diagram.below_mask(u);
            while m != 0 {
                let v = m.trailing_zeros() as usize;
                m &= m - 1;
                floors_before[v] |= 1u64 << u;
            }
        }
        let mut edges_before = vec![0u128; nf];
        for x in 0..nf {
            for (i, e) in diagram.edges().iter().enumerate() {
                if let Head::Floor(h) = e.head {
                    if h == x || floors_before[x] & (1u64 << h) != 0 {
                        edges_before[x] |= 1u128 << i;
                    }
                }
            }
        }
        let mut class_prev = vec![None; ne];
        for class in edge_classes(diagram).values() {
            for pair in class.windows(2) {
                class_prev[pair[1]] = Some(pair[0]);
            }
        }
        let positive_genus = spec.genus() > 0;
        let mut required_edges = 0u128;
        if mode == SearchMode::Viable {
            for (i, e) in diagram.edges().iter().enumerate() {
                if e.is_sink_edge() || positive_genus {
                    required_edges |= 1u128 << i;
                }
            }
        }
        Ok(MarkingSearch {
            diagram,
            spec,
            mode,
            floors_before,
            edges_before,
            class_prev,
            required_edges,
        })
    }

    fn floor_blocked(&self, s: &SearchState, x: usize) -> bool {
        s.opened_floors & self.floors_before[x] != 0 || s.opened_edges & self.edges_before[x] != 0
    }

    fn edge_blocked(&self, s: &SearchState, e: usize) -> bool {
        let t = self.diagram.edges()[e].tail;
        s.opened_floors & (1u64 << t) != 0 || self.floor_blocked(s, t)
    }

    /// Visits one marking per orbit of the automorphisms fixing every
    /// floor (permutations of interchangeable parallel or sink edges).
    /// Distinct visited markings may still be related by automorphisms
    /// that move floors; those act freely, since floors carry disjoint
    /// nonempty mark sets.
    pub(crate) fn run(&self, visit: &mut dyn FnMut(&SearchState)) {
        let nf = self.diagram.num_floors();
        let ne = self.diagram.edges().len();
        let mut s = SearchState {
            floor_marks: vec![Vec::new(); nf],
            edge_marks: vec![Vec::new(); ne],
            opened_floors: 0,
            opened_edges: 0,
            edge_load: vec![0; ne],
        };
        self.place(self.spec.len(), &mut s, visit);
    }

    /// Places constraint `remaining - 1` (constraints `0..remaining` are
    /// still unplaced).
    fn place(&self, remaining: usize, s: &mut SearchState, visit: &mut dyn FnMut(&SearchState)) {
        let nf = self.diagram.num_floors();
        let ne = self.diagram.edges().len();
        let all_floors = if nf == 64 { u64::MAX } else { (1u64 << nf) - 1 };
        let closed_floors = all_floors & !s.opened_floors;
        let closed_required = self.required_edges & !s.opened_edges;
        let owed = closed_floors.count_ones() + closed_required.count_ones();
        if owed as usize > remaining {
            return;
        }
        // A closed point with something opened before it can never open.
        let mut m = closed_floors;
        while m != 0 {
            let x = m.trailing_zeros() as usize;
            m &= m - 1;
            if self.floor_blocked(s, x) {
                return;
            }
        }
        let mut m = closed_required;
        while m != 0 {
            let e = m.trailing_zeros() as usize;
            m &= m - 1;
            if self.edge_blocked(s, e) {
                return;
            }
        }
        if remaining == 0 {
            visit(s);
            return;
        }
        let q = remaining - 1;
        let dim = self.spec.dim(q);
        let codim = self.spec.codim(q);

        for x in 0..nf {
            let bit = 1u64 << x;
            if s.opened_floors & bit != 0 {
                if dim == 0 {
                    continue;
                }
                s.floor_marks[x].push(q);
                self.place(q, s, visit);
                s.floor_marks[x].pop();
            } else if !self.floor_blocked(s, x) {
                s.opened_floors |= bit;
                s.floor_marks[x].push(q);
                self.place(q, s, visit);
                s.floor_marks[x].pop();
                s.opened_floors &= !bit;
            }
        }
        for e in 0..ne {
            let bit = 1u128 << e;
            let opened = s.opened_edges & bit != 0;
            if !opened {
                if let Some(p) = self.class_prev[e] {
                    if s.opened_edges & (1u128 << p) == 0 {
                        continue;
                    }
                }
            }
            if self.edge_blocked(s, e) {
                continue;
            }
            if self.mode == SearchMode::Viable && s.edge_load[e] + codim > self.spec.n() - 1 {
                continue;
            }
            s.opened_edges |= bit;
            s.edge_marks[e].push(q);
            s.edge_load[e] += codim;
            self.place(q, s, visit);
            s.edge_load[e] -= codim;
            s.edge_marks[e].pop();
            if !opened {
                s.opened_edges &= !bit;
            }
        }
    }
}

fn layout_to_assignment(layout: &MarkLayout, len: usize) -> Vec<DiagramPoint> {
    let mut assignment = vec![DiagramPoint::Floor(usize::MAX); len];
    for (v, marks) in layout.floor_marks.iter().enumerate() {
        for &q in marks {
            assignment[q] = DiagramPoint::Floor(v);
        }
    }
    for (e, marks) in layout.edge_marks.iter().enumerate() {
        for (slot, &q) in marks.iter().enumerate() {
            assignment[q] = DiagramPoint::EdgeSlot { edge: e, slot };
        }
    }
    assignment
}

/// One representative per equivalence class of markings of `d` by `spec`,
/// sorted by equivalence key.
pub fn enumerate_markings(d: &FloorDiagram, spec: &ConstraintSpec) -> Result<Vec<MarkedDiagram>> {
    collect_markings(d, spec, SearchMode::All)
}

/// Like [`enumerate_markings`], restricted to markings that pass the cheap
/// necessary conditions for nonzero multiplicity.
pub fn enumerate_viable_markings(
    d: &FloorDiagram,
    spec: &ConstraintSpec,
) -> Result<Vec<MarkedDiagram>> {
    collect_markings(d, spec, SearchMode::Viable)
}

fn collect_markings(
    d: &FloorDiagram,
    spec: &ConstraintSpec,
    mode: SearchMode,
) -> Result<Vec<MarkedDiagram>> {
    check_compatible(d, spec)?;
    let search = MarkingSearch::new(d, spec, mode)?;
    let mut found: BTreeMap<CanonicalKey, Vec<DiagramPoint>> = BTreeMap::new();
    search.run(&mut |s| {
        let layout = s.layout();
        found
            .entry(marked_key(d, &layout))
            .or_insert_with(|| layout_to_assignment(&layout, spec.len()));
    });
    Ok(found
        .into_values()
        .map(|a| MarkedDiagram {
            diagram: d.clone(),
            spec: spec.clone(),
            assignment: a,
        })
        .collect())
}

pub(crate) fn check_compatible(d: &FloorDiagram, spec: &ConstraintSpec) -> Result<()> {
    let violations = d.validate(spec.degree(), spec.genus());
    if let Some(v) = violations.first() {
        return Err(FloorError::ContractViolation(format!(
            "diagram is not a valid floor diagram of degree {} and genus {}: {v}",
            spec.degree(),
            spec.genus()
        )));
    }
    Ok(())
}

/// A combinatorial type: a representative marked diagram and the number of
/// inequivalent markings of that type.
#[derive(Clone, Debug)]
pub struct TypeCount {
    pub representative: MarkedDiagram,
    pub count: usize,
}

/// Groups the equivalence classes of markings of `d` by combinatorial type,
/// in order of type key.
pub fn count_marked_by_type(d: &FloorDiagram, spec: &ConstraintSpec) -> Result<Vec<TypeCount>> {
    Ok(group_by_type(enumerate_markings(d, spec)?))
}

pub(crate) fn group_by_type(markings: Vec<MarkedDiagram>) -> Vec<TypeCount> {
    let mut types: BTreeMap<CanonicalKey, TypeCount> = BTreeMap::new();
    for m in markings {
        types
            .entry(m.type_key())
            .and_modify(|t| t.count += 1)
            .or_insert(TypeCount {
                representative: m,
                count: 1,
            });
    }
    types.into_values().collect()
}
