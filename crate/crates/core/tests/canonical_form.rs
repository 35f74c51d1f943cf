use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;

use floorcount::{
    canonical_form, canonicalize, enumerate_floor_diagrams, DiagramPoint, Edge, FloorDiagram, Head,
};

/// Same diagram under a random renumbering of floors, sinks and edges.
fn relabel(d: &FloorDiagram, rng: &mut StdRng) -> FloorDiagram {
    let mut floors: Vec<usize> = (0..d.num_floors()).collect();
    floors.shuffle(rng);
    let mut sinks: Vec<usize> = (0..d.num_sinks()).collect();
    sinks.shuffle(rng);
    let mut edges: Vec<Edge> = d
        .edges()
        .iter()
        .map(|e| match e.head {
            Head::Floor(h) => Edge::internal(floors[e.tail], floors[h], e.weight),
            Head::Sink(k) => Edge::to_sink(floors[e.tail], sinks[k]),
        })
        .collect();
    edges.shuffle(rng);
    FloorDiagram::new(d.num_floors(), edges).unwrap()
}

fn all_small() -> Vec<FloorDiagram> {
    let mut out = Vec::new();
    for d in 1..=5 {
        for g in 0..=2 {
            out.extend(enumerate_floor_diagrams(d, g).unwrap());
        }
    }
    out
}

#[test]
fn hundred_relabelings_per_class() {
    let mut rng = StdRng::seed_from_u64(7);
    for d in all_small() {
        let key = canonical_form(&d);
        for _ in 0..100 {
            let r = relabel(&d, &mut rng);
            assert_eq!(canonical_form(&r), key, "{d}\n{r}");
        }
    }
}

#[test]
fn distinct_classes_have_distinct_keys() {
    let ds = all_small();
    let mut keys: Vec<_> = ds.iter().map(canonical_form).collect();
    keys.sort();
    keys.dedup();
    assert_eq!(keys.len(), ds.len());
}

fn points(d: &FloorDiagram) -> Vec<DiagramPoint> {
    let mut ps: Vec<DiagramPoint> = (0..d.num_floors()).map(DiagramPoint::Floor).collect();
    for edge in 0..d.edges().len() {
        for slot in 0..2 {
            ps.push(DiagramPoint::EdgeSlot { edge, slot });
        }
    }
    ps
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonicalization_ignores_labels(idx in 0usize..1000, seed in any::<u64>()) {
        let ds = enumerate_floor_diagrams(5, 0).unwrap();
        let d = &ds[idx % ds.len()];
        let r = relabel(d, &mut StdRng::seed_from_u64(seed));
        let (k1, c1) = canonicalize(d);
        let (k2, c2) = canonicalize(&r);
        prop_assert_eq!(k1, k2);
        prop_assert_eq!(c1, c2);
    }

    #[test]
    fn precedence_is_a_strict_partial_order(idx in 0usize..1000, g in 0u32..2) {
        let ds = enumerate_floor_diagrams(4, g).unwrap();
        let d = &ds[idx % ds.len()];
        let ps = points(d);
        for &p in &ps {
            prop_assert!(!d.precedes(p, p).unwrap());
            for &q in &ps {
                let pq = d.precedes(p, q).unwrap();
                if pq {
                    prop_assert!(!d.precedes(q, p).unwrap());
                    for &r in &ps {
                        if d.precedes(q, r).unwrap() {
                            prop_assert!(d.precedes(p, r).unwrap());
                        }
                    }
                }
            }
        }
    }
}
