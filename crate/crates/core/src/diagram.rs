//! Floor diagrams: weighted, oriented, acyclic multigraphs whose non-sink
//! vertices (floors) have positive divergence and whose sinks have
//! divergence exactly -1.
//!
//! Sinks are not stored as vertex records. Each sink is identified by the
//! edge pointing into it, so a [`FloorDiagram`] is a list of floors plus a
//! list of edges whose heads are either floors or sinks.

use std::fmt;

use crate::error::{FloorError, Result};

/// Largest number of floors a diagram may have (reachability is kept in a `u64`).
pub const MAX_FLOORS: usize = 64;

/// Head of a directed edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Head {
    Floor(usize),
    Sink(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub tail: usize,
    pub head: Head,
    pub weight: u32,
}

impl Edge {
    pub fn internal(tail: usize, head: usize, weight: u32) -> Self {
        Edge {
            tail,
            head: Head::Floor(head),
            weight,
        }
    }

    pub fn to_sink(tail: usize, sink: usize) -> Self {
        Edge {
            tail,
            head: Head::Sink(sink),
            weight: 1,
        }
    }

    pub fn is_sink_edge(&self) -> bool {
        matches!(self.head, Head::Sink(_))
    }

    pub fn head_floor(&self) -> Option<usize> {
        match self.head {
            Head::Floor(h) => Some(h),
            Head::Sink(_) => None,
        }
    }
}

/// A point of a diagram that can carry a constraint: a floor, or a
/// position on an open edge. Slots on one edge are numbered 0, 1, ...
/// along the orientation of the edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DiagramPoint {
    Floor(usize),
    EdgeSlot { edge: usize, slot: usize },
}

impl fmt::Display for DiagramPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagramPoint::Floor(v) => write!(f, "floor:{v}"),
            DiagramPoint::EdgeSlot { edge, slot } => write!(f, "edge:{edge}:slot:{slot}"),
        }
    }
}

/// One violated clause reported by [`FloorDiagram::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NoFloors,
    Cycle,
    Disconnected,
    FloorDivergence { floor: usize, div: i64 },
    SinkDivergence { sink: usize, div: i64 },
    SinkEdgeWeight { edge: usize, weight: u32 },
    WeightOutOfRange { edge: usize, weight: u32, max: u32 },
    Degree { expected: u32, found: u32 },
    Genus { expected: u32, found: i64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoFloors => write!(f, "diagram has no floors"),
            Violation::Cycle => write!(f, "oriented cycle present (not acyclic)"),
            Violation::Disconnected => write!(f, "diagram is not connected"),
            Violation::FloorDivergence { floor, div } => {
                write!(f, "div(v)>0 fails at floor {floor} (div = {div})")
            }
            Violation::SinkDivergence { sink, div } => {
                write!(f, "div(v)=-1 fails at sink {sink} (div = {div})")
            }
            Violation::SinkEdgeWeight { edge, weight } => {
                write!(f, "sink edge {edge} has weight {weight}, expected 1")
            }
            Violation::WeightOutOfRange { edge, weight, max } => {
                write!(f, "edge {edge} has weight {weight} outside 1..={max}")
            }
            Violation::Degree { expected, found } => {
                write!(f, "#sinks = {found}, expected degree {expected}")
            }
            Violation::Genus { expected, found } => {
                write!(f, "b1 = {found}, expected genus {expected}")
            }
        }
    }
}

/// Weighted oriented multigraph with floors and implicit sinks.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FloorDiagram {
    divs: Vec<i64>,
    edges: Vec<Edge>,
    sinks: usize,
    /// `below[v]`: floors reachable from floor `v` by a nonempty oriented path.
    below: Vec<u64>,
}

impl FloorDiagram {
    /// Builds a diagram with `floors` floors (ids `0..floors`) from its edge
    /// list. Sink ids must be `0..k` for some `k`. Parallel edges are kept;
    /// self-loops and zero weights are rejected. Everything else is left to
    /// [`FloorDiagram::validate`].
    pub fn new(floors: usize, edges: Vec<Edge>) -> Result<Self> {
        if floors > MAX_FLOORS {
            return Err(FloorError::TooLarge(format!(
                "{floors} floors (max {MAX_FLOORS})"
            )));
        }
        let mut sinks = 0;
        for (i, e) in edges.iter().enumerate() {
            if e.tail >= floors {
                return Err(FloorError::UnknownVertex(e.tail.to_string()));
            }
            if e.weight == 0 {
                return Err(FloorError::ZeroWeight { edge: i });
            }
            match e.head {
                Head::Floor(h) if h >= floors => {
                    return Err(FloorError::UnknownVertex(h.to_string()))
                }
                Head::Floor(h) if h == e.tail => return Err(FloorError::SelfLoop(h)),
                Head::Floor(_) => {}
                Head::Sink(k) => sinks = sinks.max(k + 1),
            }
        }
        let mut divs = vec![0i64; floors];
        for e in &edges {
            divs[e.tail] += i64::from(e.weight);
            if let Head::Floor(h) = e.head {
                divs[h] -= i64::from(e.weight);
            }
        }
        let below = reachability(floors, &edges);
        Ok(FloorDiagram {
            divs,
            edges,
            sinks,
            below,
        })
    }

    pub fn num_floors(&self) -> usize {
        self.divs.len()
    }

    pub fn num_sinks(&self) -> usize {
        self.sinks
    }

    pub fn num_vertices(&self) -> usize {
        self.divs.len() + self.sinks
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> Result<&Edge> {
        self.edges
            .get(e)
            .ok_or_else(|| FloorError::InvalidPoint(format!("unknown edge {e}")))
    }

    /// Cached divergences of all floors, indexed by floor id.
    pub fn divergences(&self) -> &[i64] {
        &self.divs
    }

    /// Degree of the diagram, i.e. its number of sinks.
    pub fn degree(&self) -> u32 {
        self.sinks as u32
    }

    /// Outgoing minus incoming weight at floor `v`.
    pub fn divergence(&self, v: usize) -> Result<i64> {
        self.divs
            .get(v)
            .copied()
            .ok_or_else(|| FloorError::UnknownVertex(v.to_string()))
    }

    /// Divergence of sink `k`: minus the total weight entering it.
    pub fn sink_divergence(&self, k: usize) -> Result<i64> {
        if k >= self.sinks {
            return Err(FloorError::UnknownVertex(format!("s{k}")));
        }
        Ok(-self
            .edges
            .iter()
            .filter(|e| e.head == Head::Sink(k))
            .map(|e| i64::from(e.weight))
            .sum::<i64>())
    }

    pub fn is_connected(&self) -> bool {
        let nv = self.num_vertices();
        if nv == 0 {
            return false;
        }
        let mut uf = UnionFind::new(nv);
        for e in &self.edges {
            let h = match e.head {
                Head::Floor(h) => h,
                Head::Sink(k) => self.divs.len() + k,
            };
            uf.union(e.tail, h);
        }
        let root = uf.find(0);
        (1..nv).all(|v| uf.find(v) == root)
    }

    pub fn is_acyclic(&self) -> bool {
        (0..self.num_floors()).all(|v| self.below[v] & (1u64 << v) == 0)
    }

    /// First Betti number `#edges - #vertices + 1` of a connected diagram.
    pub fn first_betti(&self) -> Result<u32> {
        if !self.is_connected() {
            return Err(FloorError::Disconnected);
        }
        Ok((self.edges.len() + 1 - self.num_vertices()) as u32)
    }

    /// Checks every defining clause of a floor diagram of degree `d` and
    /// genus `g`. An empty vector means the diagram is valid.
    pub fn validate(&self, d: u32, g: u32) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.divs.is_empty() {
            out.push(Violation::NoFloors);
        }
        if !self.is_acyclic() {
            out.push(Violation::Cycle);
        }
        let connected = self.is_connected();
        if !connected {
            out.push(Violation::Disconnected);
        }
        for (v, &div) in self.divs.iter().enumerate() {
            if div <= 0 {
                out.push(Violation::FloorDivergence { floor: v, div });
            }
        }
        for k in 0..self.sinks {
            let div = self.sink_divergence(k).expect("sink in range");
            if div != -1 {
                out.push(Violation::SinkDivergence { sink: k, div });
            }
        }
        for (i, e) in self.edges.iter().enumerate() {
            if e.is_sink_edge() && e.weight != 1 {
                out.push(Violation::SinkEdgeWeight {
                    edge: i,
                    weight: e.weight,
                });
            }
            if e.weight > d {
                out.push(Violation::WeightOutOfRange {
                    edge: i,
                    weight: e.weight,
                    max: d,
                });
            }
        }
        if self.sinks as u32 != d {
            out.push(Violation::Degree {
                expected: d,
                found: self.sinks as u32,
            });
        }
        if connected {
            let b1 = self.edges.len() as i64 - self.num_vertices() as i64 + 1;
            if b1 != i64::from(g) {
                out.push(Violation::Genus {
                    expected: g,
                    found: b1,
                });
            }
        }
        out
    }

    /// Bitmask of floors reachable from `v` by a nonempty oriented path.
    pub(crate) fn below_mask(&self, v: usize) -> u64 {
        self.below[v]
    }

    /// `u` strictly precedes `v` (nonempty oriented path from `u` to `v`).
    pub fn floor_precedes(&self, u: usize, v: usize) -> bool {
        self.below[u] & (1u64 << v) != 0
    }

    fn check_point(&self, p: DiagramPoint) -> Result<()> {
        match p {
            DiagramPoint::Floor(v) if v < self.num_floors() => Ok(()),
            DiagramPoint::Floor(v) => Err(FloorError::InvalidPoint(format!("unknown floor {v}"))),
            DiagramPoint::EdgeSlot { edge, .. } => self.edge(edge).map(|_| ()),
        }
    }

    /// Strict order on diagram points induced by the orientation: the tail
    /// of an edge precedes every slot on it, slots precede the head, slots on
    /// one edge are ordered by index, and floors are ordered by oriented
    /// paths.
    pub fn precedes(&self, p: DiagramPoint, q: DiagramPoint) -> Result<bool> {
        self.check_point(p)?;
        self.check_point(q)?;
        let at_or_before = |u: usize, v: usize| u == v || self.floor_precedes(u, v);
        Ok(match (p, q) {
            (DiagramPoint::Floor(u), DiagramPoint::Floor(v)) => self.floor_precedes(u, v),
            (DiagramPoint::Floor(u), DiagramPoint::EdgeSlot { edge, .. }) => {
                at_or_before(u, self.edges[edge].tail)
            }
            (DiagramPoint::EdgeSlot { edge, .. }, DiagramPoint::Floor(v)) => {
                match self.edges[edge].head {
                    Head::Floor(h) => at_or_before(h, v),
                    Head::Sink(_) => false,
                }
            }
            (
                DiagramPoint::EdgeSlot { edge: e, slot: s },
                DiagramPoint::EdgeSlot { edge: f, slot: t },
            ) => {
                if e == f {
                    s < t
                } else {
                    match self.edges[e].head {
                        Head::Floor(h) => at_or_before(h, self.edges[f].tail),
                        Head::Sink(_) => false,
                    }
                }
            }
        })
    }

    /// Serializes in the line-oriented diagram text format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        self.write_text(&mut s);
        s
    }

    pub(crate) fn write_text(&self, s: &mut String) {
        use std::fmt::Write;
        let g = self.edges.len() as i64 - self.num_vertices() as i64 + 1;
        let _ = writeln!(s, "floordiagram d={} g={}", self.sinks, g);
        for (v, div) in self.divs.iter().enumerate() {
            let _ = writeln!(s, "floor {v} div={div}");
        }
        for e in &self.edges {
            match e.head {
                Head::Floor(h) => {
                    let _ = writeln!(s, "edge {} -> {} w={}", e.tail, h, e.weight);
                }
                Head::Sink(k) => {
                    let _ = writeln!(s, "edge {} -> s{} w={}", e.tail, k, e.weight);
                }
            }
        }
    }

    /// Parses one diagram in the text format. Lines starting with `#` and
    /// blank lines are ignored.
    pub fn from_text(text: &str) -> Result<Self> {
        let lines: Vec<(usize, &str)> = content_lines(text).collect();
        let (diagram, rest) = parse_diagram_lines(&lines)?;
        if let Some((n, _)) = rest.first() {
            return Err(FloorError::parse(*n, "unexpected trailing record"));
        }
        Ok(diagram)
    }

    /// Graphviz rendering: floors as ellipses labeled by divergence, sinks
    /// as points, and edge weights shown only when they differ from 1.
    pub fn to_dot(&self) -> String {
        self.dot_with_marks(None)
    }

    pub(crate) fn dot_with_marks(&self, marks: Option<&MarkLabels>) -> String {
        use std::fmt::Write;
        let mut s = String::from("digraph floordiagram {\n  rankdir=TB;\n");
        for (v, div) in self.divs.iter().enumerate() {
            let xl = marks
                .and_then(|m| m.floors.get(v))
                .filter(|l| !l.is_empty())
                .map(|l| format!(", xlabel=\"{}\"", l.join(" ")))
                .unwrap_or_default();
            let _ = writeln!(s, "  f{v} [shape=ellipse, label=\"{div}\"{xl}];");
        }
        for k in 0..self.sinks {
            let _ = writeln!(s, "  s{k} [shape=point];");
        }
        for (i, e) in self.edges.iter().enumerate() {
            let head = match e.head {
                Head::Floor(h) => format!("f{h}"),
                Head::Sink(k) => format!("s{k}"),
            };
            let mut attrs = Vec::new();
            if e.weight != 1 {
                attrs.push(format!("label=\"{}\"", e.weight));
            }
            if let Some(l) = marks.and_then(|m| m.edges.get(i)).filter(|l| !l.is_empty()) {
                attrs.push(format!("xlabel=\"{}\"", l.join(" ")));
            }
            if attrs.is_empty() {
                let _ = writeln!(s, "  f{} -> {head};", e.tail);
            } else {
                let _ = writeln!(s, "  f{} -> {head} [{}];", e.tail, attrs.join(", "));
            }
        }
        s.push_str("}\n");
        s
    }
}

/// Mark names attached to floors and edges in DOT output.
pub(crate) struct MarkLabels {
    pub floors: Vec<Vec<String>>,
    pub edges: Vec<Vec<String>>,
}

impl fmt::Display for FloorDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

fn parse_kv<'a>(line: usize, tok: Option<&'a str>, key: &str) -> Result<&'a str> {
    let tok = tok.ok_or_else(|| FloorError::parse(line, format!("missing {key}=")))?;
    tok.strip_prefix(key)
        .and_then(|t| t.strip_prefix('='))
        .ok_or_else(|| FloorError::parse(line, format!("expected {key}=<value>, got {tok:?}")))
}

pub(crate) fn parse_num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| FloorError::parse(line, format!("not a number: {s:?}")))
}

/// Parses one `floordiagram` record from the front of `lines` and returns
/// the remaining lines.
pub(crate) fn parse_diagram_lines<'a, 'b>(
    lines: &'b [(usize, &'a str)],
) -> Result<(FloorDiagram, &'b [(usize, &'a str)])> {
    let (&(hl, header), mut rest) = lines
        .split_first()
        .ok_or_else(|| FloorError::parse(0, "empty input"))?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("floordiagram") {
        return Err(FloorError::parse(hl, "expected `floordiagram` header"));
    }
    let d: u32 = parse_num(hl, parse_kv(hl, toks.next(), "d")?)?;
    let g: i64 = parse_num(hl, parse_kv(hl, toks.next(), "g")?)?;

    let mut declared_divs = Vec::new();
    while let Some((&(ln, line), tail)) = rest.split_first() {
        let mut toks = line.split_whitespace();
        if toks.next() != Some("floor") {
            break;
        }
        let id: usize = parse_num(ln, toks.next().unwrap_or(""))?;
        if id != declared_divs.len() {
            return Err(FloorError::parse(
                ln,
                "floor ids must be 0-based and ascending",
            ));
        }
        let div: i64 = parse_num(ln, parse_kv(ln, toks.next(), "div")?)?;
        declared_divs.push((ln, div));
        rest = tail;
    }

    let mut edges = Vec::new();
    while let Some((&(ln, line), tail)) = rest.split_first() {
        let mut toks = line.split_whitespace();
        if toks.next() != Some("edge") {
            break;
        }
        let t: usize = parse_num(ln, toks.next().unwrap_or(""))?;
        if toks.next() != Some("->") {
            return Err(FloorError::parse(ln, "expected `->`"));
        }
        let h = toks.next().unwrap_or("");
        let head = match h.strip_prefix('s') {
            Some(k) => Head::Sink(parse_num(ln, k)?),
            None => Head::Floor(parse_num(ln, h)?),
        };
        let w: u32 = parse_num(ln, parse_kv(ln, toks.next(), "w")?)?;
        edges.push(Edge {
            tail: t,
            head,
            weight: w,
        });
        rest = tail;
    }

    let diagram = FloorDiagram::new(declared_divs.len(), edges).map_err(|e| match e {
        FloorError::Parse { .. } => e,
        other => FloorError::parse(hl, other.to_string()),
    })?;
    for (v, &(ln, div)) in declared_divs.iter().enumerate() {
        if diagram.divs[v] != div {
            return Err(FloorError::parse(
                ln,
                format!("declared div={div} but edges give {}", diagram.divs[v]),
            ));
        }
    }
    if diagram.degree() != d {
        return Err(FloorError::parse(
            hl,
            format!("declared d={d} but found {} sinks", diagram.sinks),
        ));
    }
    let b1 = diagram.edges.len() as i64 - diagram.num_vertices() as i64 + 1;
    if b1 != g {
        return Err(FloorError::parse(
            hl,
            format!("declared g={g} but b1 = {b1}"),
        ));
    }
    Ok((diagram, rest))
}

fn reachability(floors: usize, edges: &[Edge]) -> Vec<u64> {
    let mut succ = vec![0u64; floors];
    for e in edges {
        if let Head::Floor(h) = e.head {
            succ[e.tail] |= 1u64 << h;
        }
    }
    // Transitive closure; at most `floors` rounds even with cycles.
    let mut below = succ.clone();
    loop {
        let mut changed = false;
        for v in 0..floors {
            let mut acc = below[v];
            let mut m = below[v];
            while m != 0 {
                let u = m.trailing_zeros() as usize;
                m &= m - 1;
                acc |= below[u];
            }
            if acc != below[v] {
                below[v] = acc;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    below
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}
