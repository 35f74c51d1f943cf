use num_bigint::{BigInt, BigUint};

use floorcount::{
    build_constraints, complex_multiplicity, enumerate_floor_diagrams, enumerate_markings, Engine,
    FloorError, InvariantCache, InvariantKey,
};

/// Sum of complex multiplicities over explicitly enumerated equivalence
/// classes, with no orbit counting.
fn sum_over_classes(engine: &Engine, n: u32, d: u32, g: u32, l: &[u32]) -> BigUint {
    let spec = build_constraints(n, d, g, l).unwrap();
    let mut total = BigUint::default();
    for diagram in enumerate_floor_diagrams(d, g).unwrap() {
        for m in enumerate_markings(&diagram, &spec).unwrap() {
            total += complex_multiplicity(&m, engine).unwrap();
        }
    }
    total
}

#[test]
fn orbit_counting_matches_class_enumeration() {
    let engine = Engine::new();
    let cases: &[(u32, u32, u32, &[u32])] = &[
        (2, 3, 0, &[8]),
        (2, 3, 1, &[9]),
        (2, 4, 0, &[11]),
        (2, 4, 2, &[13]),
        (3, 1, 0, &[0, 4]),
        (3, 2, 0, &[0, 8]),
        (3, 3, 0, &[6, 0]),
        (3, 3, 0, &[3, 6]),
        (3, 4, 0, &[8, 0]),
        (4, 1, 0, &[2, 0, 0]),
        (4, 2, 0, &[3, 1, 0]),
    ];
    for &(n, d, g, l) in cases {
        assert_eq!(
            engine.gromov_witten(n, d, g, l).unwrap(),
            sum_over_classes(&engine, n, d, g, l),
            "n={n} d={d} g={g} l={l:?}"
        );
    }
}

#[test]
fn plane_rational_cubic_counts_by_diagram() {
    // Figure counts: 3 + 5 markings of multiplicity 1 and one of multiplicity 4.
    let engine = Engine::new();
    assert_eq!(
        sum_over_classes(&engine, 2, 3, 0, &[8]),
        BigUint::from(12u32)
    );
}

#[test]
fn known_values() {
    let e = Engine::new();
    assert_eq!(
        e.gromov_witten(2, 3, 0, &[8]).unwrap(),
        BigUint::from(12u32)
    );
    assert_eq!(
        e.gromov_witten(3, 5, 0, &[10, 0]).unwrap(),
        BigUint::from(105u32)
    );
    assert_eq!(
        e.gromov_witten(3, 2, 0, &[0, 8]).unwrap(),
        BigUint::from(92u32)
    );
    assert_eq!(e.gromov_witten(2, 3, 1, &[9]).unwrap(), BigUint::from(1u32));
    assert_eq!(
        e.gromov_witten(4, 1, 0, &[2, 0, 0]).unwrap(),
        BigUint::from(1u32)
    );
    assert_eq!(e.welschinger(3, 5).unwrap(), BigInt::from(45));
    assert_eq!(e.welschinger(3, 3).unwrap(), BigInt::from(-1));
    assert_eq!(e.welschinger(3, 4).unwrap(), BigInt::from(0));
    assert_eq!(e.welschinger(2, 3).unwrap(), BigInt::from(8));
}

#[test]
fn plane_welschinger_is_nonnegative() {
    let e = Engine::new();
    for d in 1..=5 {
        assert!(e.welschinger(2, d).unwrap() >= BigInt::from(0));
    }
}

#[test]
fn errors() {
    let e = Engine::new();
    assert!(matches!(
        e.gromov_witten(2, 3, 0, &[7]),
        Err(FloorError::DimensionMismatch { .. })
    ));
    assert!(matches!(
        e.gromov_witten(3, 2, 1, &[5, 0]),
        Err(FloorError::UnsupportedGenus { .. })
    ));
    assert!(matches!(
        e.welschinger(4, 3),
        Err(FloorError::UnsupportedDimension(4))
    ));
}

#[test]
fn cold_warm_and_reloaded_caches_agree() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cache.txt");
    let queries: Vec<(u32, u32, u32, Vec<u32>)> = vec![
        (2, 4, 0, vec![11]),
        (2, 4, 1, vec![12]),
        (3, 4, 0, vec![8, 0]),
        (3, 2, 0, vec![0, 8]),
    ];
    let cold = Engine::new();
    let a: Vec<BigUint> = queries
        .iter()
        .map(|(n, d, g, l)| cold.gromov_witten(*n, *d, *g, l).unwrap())
        .collect();
    let b: Vec<BigUint> = queries
        .iter()
        .map(|(n, d, g, l)| cold.gromov_witten(*n, *d, *g, l).unwrap())
        .collect();
    cold.cache().store(&path).unwrap();
    let reloaded = Engine::new().with_cache(InvariantCache::load(&path).unwrap());
    assert_eq!(reloaded.cache().entries(), cold.cache().entries());
    let c: Vec<BigUint> = queries
        .iter()
        .map(|(n, d, g, l)| reloaded.gromov_witten(*n, *d, *g, l).unwrap())
        .collect();
    assert_eq!(a, b);
    assert_eq!(a, c);
    // the recursion memoizes the plane values it used
    assert!(cold
        .cache()
        .get(&InvariantKey::GromovWitten {
            n: 2,
            d: 2,
            g: 0,
            l: vec![5]
        })
        .is_some());
}

#[test]
fn cache_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c");
    let empty = InvariantCache::new();
    empty.store(&path).unwrap();
    assert!(InvariantCache::load(&path).unwrap().is_empty());

    let c = InvariantCache::new();
    let key = InvariantKey::GromovWitten {
        n: 3,
        d: 5,
        g: 0,
        l: vec![10, 0],
    };
    c.insert(&key, BigInt::from(105)).unwrap();
    c.store(&path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    let back = InvariantCache::load(&path).unwrap();
    assert_eq!(back.get(&key), Some(BigInt::from(105)));
    back.store(&path).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), bytes);

    std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
    assert!(matches!(
        InvariantCache::load(&path),
        Err(FloorError::ChecksumMismatch)
    ));
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let one = Engine::new().with_jobs(1).unwrap();
    let four = Engine::new().with_jobs(4).unwrap();
    for d in 1..=5 {
        assert_eq!(
            one.gromov_witten(3, d, 0, &[2 * d, 0]).unwrap(),
            four.gromov_witten(3, d, 0, &[2 * d, 0]).unwrap()
        );
        assert_eq!(
            one.welschinger(3, d).unwrap(),
            four.welschinger(3, d).unwrap()
        );
    }
    assert_eq!(
        one.gromov_witten(2, 5, 3, &[17]).unwrap(),
        four.gromov_witten(2, 5, 3, &[17]).unwrap()
    );
}

#[test]
fn concurrent_queries_share_one_engine() {
    let e = Engine::new();
    let results: Vec<BigUint> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..4)
            .map(|_| s.spawn(|| e.gromov_witten(3, 4, 0, &[8, 0]).unwrap()))
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert!(results.iter().all(|r| *r == BigUint::from(4u32)));
}
