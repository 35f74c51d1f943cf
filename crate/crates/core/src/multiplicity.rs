//! Heights, per-floor constraint dimensions and the complex and real
//! multiplicities of marked floor diagrams.
//!
//! Each floor of an `n`-dimensional diagram is a curve in dimension `n - 1`
//! with its own constraint list, so the complex multiplicity calls back into
//! Gromov-Witten numbers one dimension down through [`InvariantOracle`].

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use crate::diagram::{FloorDiagram, Head};
use crate::error::{FloorError, Result};
use crate::marking::{
    dimension_condition, enumerate_viable_markings, group_by_type, ConstraintSpec, MarkedDiagram,
};

/// Source of invariants in lower dimension, queried while evaluating
/// multiplicities. Implementations must tolerate concurrent calls.
pub trait InvariantOracle: Sync {
    /// Genus-0 Gromov-Witten number `N^(n)_{d,0}(l)` for `n >= 2`. Callers
    /// only pass `l` satisfying the dimension condition.
    fn rational_gw(&self, n: u32, d: u32, l: &[u32]) -> Result<BigUint>;

    /// Welschinger invariant `W^(n)_d`.
    fn welschinger(&self, n: u32, d: u32) -> Result<BigInt>;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiplicityResult {
    pub mu_complex: BigUint,
    /// Present only in genus 0 with point constraints only.
    pub mu_real: Option<BigInt>,
}

/// Dimensions of the linear spaces a floor has to pass through, or
/// `Degenerate` when one of them leaves `0..=n-2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FloorDims {
    Degenerate,
    /// Sorted dimensions.
    Dims(Vec<u32>),
}

impl FloorDims {
    /// `l^(v)_j` for `j = 0..=n-2`.
    pub fn counts(&self, n: u32) -> Option<Vec<u32>> {
        match self {
            FloorDims::Degenerate => None,
            FloorDims::Dims(ds) => {
                let mut c = vec![0u32; (n - 1) as usize];
                for &d in ds {
                    c[d as usize] += 1;
                }
                Some(c)
            }
        }
    }
}

/// Lower-dimensional values already fetched while evaluating markings of
/// one diagram, keyed by packed `(div, counts)`.
#[derive(Default)]
pub(crate) struct LowerMemo {
    gw: HashMap<u64, BigUint>,
    w: HashMap<u32, BigInt>,
}

/// Packs `div` and the counts into one word when every entry fits a byte.
fn pack(div: u32, counts: &[u32]) -> Option<u64> {
    if counts.len() > 7 || div > 255 || counts.iter().any(|&c| c > 255) {
        return None;
    }
    Some(
        counts
            .iter()
            .fold(u64::from(div), |acc, &c| (acc << 8) | u64::from(c)),
    )
}

/// Per-diagram data for evaluating multiplicities of many markings.
pub(crate) struct Evaluator<'a> {
    diagram: &'a FloorDiagram,
    spec: &'a ConstraintSpec,
    /// Floors of the component of `D \ e` containing the head of `e`.
    above_floors: Vec<u64>,
    /// Edges (other than `e`) of that component.
    above_edges: Vec<u128>,
    incoming: Vec<Vec<usize>>,
    outgoing: Vec<Vec<usize>>,
    any_even_weight: bool,
}

impl<'a> Evaluator<'a> {
    pub(crate) fn new(diagram: &'a FloorDiagram, spec: &'a ConstraintSpec) -> Result<Self> {
        let ne = diagram.edges().len();
        if ne > 128 {
            return Err(FloorError::TooLarge(format!("{ne} edges (max 128)")));
        }
        let nf = diagram.num_floors();
        let (mut above_floors, mut above_edges) = (vec![0u64; ne], vec![0u128; ne]);
        let (mut incoming, mut outgoing) = (vec![Vec::new(); nf], vec![Vec::new(); nf]);
        for (e, edge) in diagram.edges().iter().enumerate() {
            outgoing[edge.tail].push(e);
            if let Head::Floor(h) = edge.head {
                incoming[h].push(e);
                if spec.genus() == 0 {
                    let (f, es) = component_without(diagram, e, h);
                    above_floors[e] = f;
                    above_edges[e] = es;
                }
            }
        }
        Ok(Evaluator {
            diagram,
            spec,
            above_floors,
            above_edges,
            incoming,
            outgoing,
            any_even_weight: diagram.edges().iter().any(|e| e.weight % 2 == 0),
        })
    }

    fn codim_sum(&self, marks: &[usize]) -> i64 {
        marks.iter().map(|&q| i64::from(self.spec.codim(q))).sum()
    }

    /// Heights of all edges and codimension totals of all open edges.
    fn heights(
        &self,
        floor_marks: &[Vec<usize>],
        edge_marks: &[Vec<usize>],
    ) -> (Vec<i64>, Vec<i64>) {
        let edge_codim: Vec<i64> = edge_marks.iter().map(|m| self.codim_sum(m)).collect();
        let ne = edge_marks.len();
        if self.spec.genus() > 0 {
            return (vec![0; ne], edge_codim);
        }
        let floor_codim: Vec<i64> = floor_marks.iter().map(|m| self.codim_sum(m)).collect();
        let n = i64::from(self.spec.n());
        let divs = self.diagram.divergences();
        let mut heights = Vec::with_capacity(ne);
        for e in 0..ne {
            let mut marks = 0;
            let mut div = 0;
            let mut m = self.above_floors[e];
            while m != 0 {
                let v = m.trailing_zeros() as usize;
                m &= m - 1;
                marks += floor_codim[v];
                div += divs[v];
            }
            let mut m = self.above_edges[e];
            while m != 0 {
                let f = m.trailing_zeros() as usize;
                m &= m - 1;
                marks += edge_codim[f];
            }
            let w = i64::from(self.diagram.edges()[e].weight);
            heights.push(marks + 1 - w - (n + 1) * div);
        }
        (heights, edge_codim)
    }

    pub(crate) fn height(
        &self,
        e: usize,
        floor_marks: &[Vec<usize>],
        edge_marks: &[Vec<usize>],
    ) -> i64 {
        self.heights(floor_marks, edge_marks).0[e]
    }

    /// Calls `f` with each dimension imposed on floor `v`.
    fn each_floor_dim(
        &self,
        v: usize,
        floor_marks: &[Vec<usize>],
        heights: &[i64],
        edge_codim: &[i64],
        mut f: impl FnMut(i64),
    ) -> Result<()> {
        let marks = &floor_marks[v];
        let top = *marks.iter().max().ok_or(FloorError::UnmarkedFloor(v))?;
        for &q in marks {
            let dim = i64::from(self.spec.dim(q));
            f(if q == top { dim } else { dim - 1 });
        }
        for &e in &self.incoming[v] {
            f(heights[e]);
        }
        let n = i64::from(self.spec.n());
        for &e in &self.outgoing[v] {
            f(n - 1 - heights[e] - edge_codim[e]);
        }
        Ok(())
    }

    pub(crate) fn floor_dims(
        &self,
        v: usize,
        floor_marks: &[Vec<usize>],
        edge_marks: &[Vec<usize>],
    ) -> Result<FloorDims> {
        let (heights, edge_codim) = self.heights(floor_marks, edge_marks);
        let mut dims = Vec::new();
        self.each_floor_dim(v, floor_marks, &heights, &edge_codim, |x| dims.push(x))?;
        let n = i64::from(self.spec.n());
        if dims.iter().any(|&x| x < 0 || x > n - 2) {
            return Ok(FloorDims::Degenerate);
        }
        let mut dims: Vec<u32> = dims.into_iter().map(|x| x as u32).collect();
        dims.sort_unstable();
        Ok(FloorDims::Dims(dims))
    }

    pub(crate) fn evaluate(
        &self,
        floor_marks: &[Vec<usize>],
        edge_marks: &[Vec<usize>],
        oracle: &dyn InvariantOracle,
        want_real: bool,
        memo: &mut LowerMemo,
    ) -> Result<MultiplicityResult> {
        let n = self.spec.n();
        let width = (n - 1) as usize;
        let real_defined = want_real && self.spec.genus() == 0 && self.spec.points_only();
        let zero = MultiplicityResult {
            mu_complex: BigUint::zero(),
            mu_real: real_defined.then(BigInt::zero),
        };
        let nf = self.diagram.num_floors();
        let divs = self.diagram.divergences();
        let (heights, edge_codim) = self.heights(floor_marks, edge_marks);

        // Degenerate floors and dimension mismatches give 0 without
        // touching the oracle.
        let mut counts = vec![0u32; nf * width];
        for v in 0..nf {
            let row = &mut counts[v * width..(v + 1) * width];
            let mut in_range = true;
            self.each_floor_dim(v, floor_marks, &heights, &edge_codim, |x| {
                if x < 0 || x >= width as i64 {
                    in_range = false;
                } else {
                    row[x as usize] += 1;
                }
            })?;
            if !in_range || !lower_condition_holds(n - 1, divs[v] as u32, &row[..width - 1]) {
                return Ok(zero);
            }
        }

        let mut mu = BigUint::one();
        for v in 0..nf {
            let row = &counts[v * width..(v + 1) * width];
            let div = divs[v] as u32;
            let lower = match pack(div, &row[..width - 1]) {
                Some(key) => match memo.gw.get(&key) {
                    Some(x) => x.clone(),
                    None => {
                        let x = lower_gw(oracle, n - 1, div, &row[..width - 1])?;
                        memo.gw.insert(key, x.clone());
                        x
                    }
                },
                None => lower_gw(oracle, n - 1, div, &row[..width - 1])?,
            };
            if lower.is_zero() {
                return Ok(zero);
            }
            mu *= lower;
            if div > 1 && row[width - 1] > 0 {
                mu *= BigUint::from(div).pow(row[width - 1]);
            }
        }
        for (e, edge) in self.diagram.edges().iter().enumerate() {
            if edge.weight > 1 {
                mu *= BigUint::from(edge.weight).pow(1 + edge_marks[e].len() as u32);
            }
        }

        let mu_real = if !real_defined {
            None
        } else if self.any_even_weight {
            Some(BigInt::zero())
        } else {
            let mut r = BigInt::one();
            for &div in divs {
                let div = div as u32;
                let w = match memo.w.get(&div) {
                    Some(x) => x.clone(),
                    None => {
                        let x = lower_welschinger(oracle, n - 1, div)?;
                        memo.w.insert(div, x.clone());
                        x
                    }
                };
                r *= w;
                if r.is_zero() {
                    break;
                }
            }
            Some(r)
        };
        Ok(MultiplicityResult {
            mu_complex: mu,
            mu_real,
        })
    }
}

/// Floors and edges of the connected component of `D \ e` containing floor
/// `start`.
fn component_without(d: &FloorDiagram, removed: usize, start: usize) -> (u64, u128) {
    let mut floors = 1u64 << start;
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        for (i, e) in d.edges().iter().enumerate() {
            if i == removed {
                continue;
            }
            let other = match e.head {
                Head::Floor(h) if e.tail == v => Some(h),
                Head::Floor(h) if h == v => Some(e.tail),
                _ => None,
            };
            if let Some(u) = other {
                if floors & (1u64 << u) == 0 {
                    floors |= 1u64 << u;
                    stack.push(u);
                }
            }
        }
    }
    let mut edges = 0u128;
    for (i, e) in d.edges().iter().enumerate() {
        if i != removed && floors & (1u64 << e.tail) != 0 {
            edges |= 1u128 << i;
        }
    }
    (floors, edges)
}

/// Dimension condition for a genus-0 floor problem in dimension `m`;
/// dimension 1 admits only the line through nothing, `N^(1)_{1,0}`.
fn lower_condition_holds(m: u32, div: u32, l: &[u32]) -> bool {
    if m == 1 {
        return div == 1;
    }
    dimension_condition(m, div, 0, l).is_ok()
}

/// `N^(m)_{div,0}(l)`, with `N^(1)_{1,0} = 1` and `0` whenever the
/// dimension condition fails.
pub fn lower_gw(oracle: &dyn InvariantOracle, m: u32, div: u32, l: &[u32]) -> Result<BigUint> {
    if !lower_condition_holds(m, div, l) {
        return Ok(BigUint::zero());
    }
    if m == 1 {
        return Ok(BigUint::one());
    }
    oracle.rational_gw(m, div, l)
}

/// `W^(m)_div` with `W^(1)_1 = 1` and `W^(1)_d = 0` for `d > 1`.
pub fn lower_welschinger(oracle: &dyn InvariantOracle, m: u32, div: u32) -> Result<BigInt> {
    if m == 1 {
        return Ok(if div == 1 {
            BigInt::one()
        } else {
            BigInt::zero()
        });
    }
    oracle.welschinger(m, div)
}

/// Height of edge `e`: zero in positive genus; otherwise the codimension of
/// the marks beyond `e` plus `1 - w(e)` minus `n + 1` times the divergence
/// beyond `e`. Marks on `e` itself are not counted.
pub fn height(md: &MarkedDiagram, e: usize) -> Result<i64> {
    md.diagram().edge(e)?;
    let ev = Evaluator::new(md.diagram(), md.spec())?;
    let l = md.layout();
    Ok(ev.height(e, &l.floor_marks, &l.edge_marks))
}

/// Dimensions of the linear spaces imposed on floor `v`.
pub fn floor_constraint_dims(md: &MarkedDiagram, v: usize) -> Result<FloorDims> {
    md.diagram().divergence(v)?;
    let ev = Evaluator::new(md.diagram(), md.spec())?;
    let l = md.layout();
    ev.floor_dims(v, &l.floor_marks, &l.edge_marks)
}

pub fn multiplicities(
    md: &MarkedDiagram,
    oracle: &dyn InvariantOracle,
) -> Result<MultiplicityResult> {
    let ev = Evaluator::new(md.diagram(), md.spec())?;
    let l = md.layout();
    ev.evaluate(
        &l.floor_marks,
        &l.edge_marks,
        oracle,
        true,
        &mut LowerMemo::default(),
    )
}

pub fn complex_multiplicity(md: &MarkedDiagram, oracle: &dyn InvariantOracle) -> Result<BigUint> {
    let ev = Evaluator::new(md.diagram(), md.spec())?;
    let l = md.layout();
    Ok(ev
        .evaluate(
            &l.floor_marks,
            &l.edge_marks,
            oracle,
            false,
            &mut LowerMemo::default(),
        )?
        .mu_complex)
}

/// Real multiplicity; defined in genus 0 with point constraints only. It
/// vanishes with the complex multiplicity and whenever an edge has even
/// weight, and is otherwise the product of `W^(n-1)` over floor degrees.
pub fn real_multiplicity(md: &MarkedDiagram, oracle: &dyn InvariantOracle) -> Result<BigInt> {
    if md.spec().genus() != 0 || !md.spec().points_only() {
        return Err(FloorError::ContractViolation(
            "real multiplicity needs genus 0 and point constraints only".into(),
        ));
    }
    multiplicities(md, oracle)?
        .mu_real
        .ok_or_else(|| FloorError::ContractViolation("real multiplicity undefined".into()))
}

/// A combinatorial type with its number of marked diagrams and their
/// common multiplicities.
#[derive(Clone, Debug)]
pub struct TypeSummary {
    pub representative: MarkedDiagram,
    pub count: usize,
    pub multiplicity: MultiplicityResult,
}

/// Combinatorial types of markings of `diagrams` by `spec` with nonzero
/// complex multiplicity, diagram by diagram and in type-key order within a
/// diagram. Markings ruled out by the viable search have multiplicity zero
/// and are skipped without evaluation.
pub fn nonzero_types(
    diagrams: &[FloorDiagram],
    spec: &ConstraintSpec,
    oracle: &dyn InvariantOracle,
) -> Result<Vec<TypeSummary>> {
    let mut out = Vec::new();
    for d in diagrams {
        for t in group_by_type(enumerate_viable_markings(d, spec)?) {
            let multiplicity = multiplicities(&t.representative, oracle)?;
            if !multiplicity.mu_complex.is_zero() {
                out.push(TypeSummary {
                    representative: t.representative,
                    count: t.count,
                    multiplicity,
                });
            }
        }
    }
    Ok(out)
}

/// Square of the product of all edge weights: the complex multiplicity of a
/// plane marked diagram whenever that multiplicity is nonzero.
pub fn plane_closed_form(d: &FloorDiagram) -> BigUint {
    let p = d
        .edges()
        .iter()
        .fold(BigUint::one(), |acc, e| acc * BigUint::from(e.weight));
    &p * &p
}
