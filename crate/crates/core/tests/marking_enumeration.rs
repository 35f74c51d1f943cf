//! Marking enumeration against exhaustive assignment: every map from the
//! constraints to floors and edges, every order of the marks along each
//! edge, filtered by the definition and reduced modulo the automorphism
//! group of the diagram.

use std::collections::BTreeSet;

use floorcount::{
    automorphisms, build_constraints, count_marked_by_type, enumerate_floor_diagrams,
    enumerate_markings, enumerate_viable_markings, ConstraintSpec, DiagramPoint, Edge,
    FloorDiagram, MarkedDiagram,
};

type Encoded = Vec<(usize, usize, usize)>;

fn encode(a: &[DiagramPoint]) -> Encoded {
    a.iter()
        .map(|p| match *p {
            DiagramPoint::Floor(v) => (0, v, 0),
            DiagramPoint::EdgeSlot { edge, slot } => (1, edge, slot),
        })
        .collect()
}

/// Smallest image of `a` under the automorphisms of `d`.
fn orbit_min(d: &FloorDiagram, a: &[DiagramPoint]) -> Encoded {
    automorphisms(d)
        .iter()
        .map(|g| {
            let image: Vec<DiagramPoint> = a
                .iter()
                .map(|p| match *p {
                    DiagramPoint::Floor(v) => DiagramPoint::Floor(g.floors[v]),
                    DiagramPoint::EdgeSlot { edge, slot } => DiagramPoint::EdgeSlot {
                        edge: g.edges[edge],
                        slot,
                    },
                })
                .collect();
            encode(&image)
        })
        .min()
        .unwrap()
}

fn permutations(v: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permutations(v, k + 1, f);
        v.swap(k, i);
    }
}

/// Equivalence classes of valid markings, by exhaustive search.
fn brute_force(d: &FloorDiagram, spec: &ConstraintSpec) -> BTreeSet<Encoded> {
    let nf = d.num_floors();
    let ne = d.edges().len();
    let places = nf + ne;
    let q = spec.len();
    let mut out = BTreeSet::new();
    let mut loc = vec![0usize; q];
    loop {
        // marks per edge in constraint order; try every order along the edge
        let mut on_edge: Vec<Vec<usize>> = vec![Vec::new(); ne];
        for (i, &p) in loc.iter().enumerate() {
            if p >= nf {
                on_edge[p - nf].push(i);
            }
        }
        let mut assignment: Vec<DiagramPoint> = loc
            .iter()
            .map(|&p| DiagramPoint::Floor(p.min(nf)))
            .collect();
        order_edges(d, spec, &on_edge, 0, &mut assignment, &mut out);

        let mut i = 0;
        while i < q {
            loc[i] += 1;
            if loc[i] < places {
                break;
            }
            loc[i] = 0;
            i += 1;
        }
        if i == q {
            break;
        }
    }
    out
}

fn order_edges(
    d: &FloorDiagram,
    spec: &ConstraintSpec,
    on_edge: &[Vec<usize>],
    e: usize,
    assignment: &mut Vec<DiagramPoint>,
    out: &mut BTreeSet<Encoded>,
) {
    if e == on_edge.len() {
        let m = MarkedDiagram::new(d.clone(), spec.clone(), assignment.clone()).unwrap();
        if m.violations().is_empty() {
            out.insert(orbit_min(d, assignment));
        }
        return;
    }
    let mut order: Vec<usize> = (0..on_edge[e].len()).collect();
    permutations(&mut order, 0, &mut |perm| {
        let mut a = assignment.clone();
        for (slot, &k) in perm.iter().enumerate() {
            a[on_edge[e][k]] = DiagramPoint::EdgeSlot { edge: e, slot };
        }
        order_edges(d, spec, on_edge, e + 1, &mut a, out);
    });
}

fn enumerated(d: &FloorDiagram, spec: &ConstraintSpec) -> BTreeSet<Encoded> {
    let ms = enumerate_markings(d, spec).unwrap();
    let set: BTreeSet<Encoded> = ms.iter().map(|m| orbit_min(d, m.assignment())).collect();
    assert_eq!(
        set.len(),
        ms.len(),
        "two enumerated markings are equivalent"
    );
    set
}

fn check_all(n: u32, d: u32, g: u32, l: &[u32]) {
    let spec = build_constraints(n, d, g, l).unwrap();
    for diagram in enumerate_floor_diagrams(d, g).unwrap() {
        let places = diagram.num_floors() + diagram.edges().len();
        if (places as f64).powi(spec.len() as i32) > 2e6 {
            continue;
        }
        assert_eq!(
            enumerated(&diagram, &spec),
            brute_force(&diagram, &spec),
            "n={n} d={d} g={g} l={l:?}\n{diagram}"
        );
    }
}

#[test]
fn plane_markings_match_brute_force() {
    check_all(2, 1, 0, &[2]);
    check_all(2, 2, 0, &[5]);
}

#[test]
fn space_markings_match_brute_force() {
    check_all(3, 1, 0, &[0, 4]);
    check_all(3, 1, 0, &[1, 2]);
    check_all(3, 1, 0, &[2, 0]);
    check_all(3, 2, 0, &[4, 0]);
    check_all(3, 2, 0, &[3, 2]);
    check_all(3, 2, 0, &[2, 4]);
}

#[test]
fn four_space_line_through_two_points() {
    check_all(4, 1, 0, &[2, 0, 0]);
}

#[test]
fn examples_of_small_counts() {
    let spec = build_constraints(2, 1, 0, &[2]).unwrap();
    let line = FloorDiagram::new(1, vec![Edge::to_sink(0, 0)]).unwrap();
    assert_eq!(enumerate_markings(&line, &spec).unwrap().len(), 1);
}

#[test]
fn plane_point_markings_are_injective_and_increasing() {
    for d in 1..=4 {
        let spec = build_constraints(2, d, 0, &[3 * d - 1]).unwrap();
        for diagram in enumerate_floor_diagrams(d, 0).unwrap() {
            for m in enumerate_markings(&diagram, &spec).unwrap() {
                let a = m.assignment();
                let distinct: BTreeSet<_> = a.iter().collect();
                assert_eq!(distinct.len(), a.len());
                for v in 0..diagram.num_floors() {
                    assert!(a.contains(&DiagramPoint::Floor(v)));
                }
                for i in 0..a.len() {
                    for j in 0..a.len() {
                        if diagram.precedes(a[i], a[j]).unwrap() {
                            assert!(i < j, "{m}");
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn class_counts_do_not_depend_on_labeling() {
    let spec = build_constraints(3, 3, 0, &[6, 0]).unwrap();
    for diagram in enumerate_floor_diagrams(3, 0).unwrap() {
        // reverse the edge list and relabel sinks
        let nsinks = diagram.num_sinks();
        let edges: Vec<Edge> = diagram
            .edges()
            .iter()
            .rev()
            .map(|e| match e.head {
                floorcount::Head::Sink(k) => Edge::to_sink(e.tail, nsinks - 1 - k),
                _ => *e,
            })
            .collect();
        let copy = FloorDiagram::new(diagram.num_floors(), edges).unwrap();
        assert_eq!(
            enumerate_markings(&diagram, &spec).unwrap().len(),
            enumerate_markings(&copy, &spec).unwrap().len()
        );
    }
}

#[test]
fn viable_markings_are_a_subset() {
    for (n, d, l) in [(2, 3, vec![8]), (3, 3, vec![6, 0]), (3, 2, vec![0, 8])] {
        let spec = build_constraints(n, d, 0, &l).unwrap();
        for diagram in enumerate_floor_diagrams(d, 0).unwrap() {
            let all: BTreeSet<_> = enumerate_markings(&diagram, &spec)
                .unwrap()
                .iter()
                .map(|m| m.equivalence_key())
                .collect();
            for m in enumerate_viable_markings(&diagram, &spec).unwrap() {
                assert!(all.contains(&m.equivalence_key()));
            }
        }
    }
}

#[test]
fn marked_text_round_trip() {
    let spec = build_constraints(3, 2, 0, &[0, 8]).unwrap();
    for diagram in enumerate_floor_diagrams(2, 0).unwrap() {
        for t in count_marked_by_type(&diagram, &spec).unwrap() {
            let m = t.representative;
            let back = MarkedDiagram::from_text(&m.to_text(), 3).unwrap();
            assert_eq!(back.to_text(), m.to_text());
            assert_eq!(back.equivalence_key(), m.equivalence_key());
        }
    }
}
