use std::collections::BTreeMap;

use compactness::boxes::{certify_no_root, root_search, VariableBox};
use compactness::corpus::{
    abian_family, abian_polynomial, abian_root, halving_vector, helly_prefix_solution, helly_rows,
    helly_system, helly_truncated_rows, planted_system, Family, FamilyDescriptor,
};
use compactness::linear::min_norm_solve;
use compactness::sequences::ConjugatePair;
use compactness::Error;

#[test]
fn helly_is_refused_for_every_exponent() {
    for p in [1.1, 1.5, 2.0, 3.0, 8.0] {
        let err = helly_system(ConjugatePair::from_p(p).unwrap()).unwrap_err();
        assert!(matches!(err, Error::NotPSummable { .. }));
        assert!(err.is_refutation());
    }
}

#[test]
fn helly_prefixes_force_the_last_coordinate() {
    for k in 1..=20 {
        let raw = helly_rows(k, k);
        // row i reads Σ_{n ≥ i} x_n = 1 on the first k coordinates
        for (i, (a, b)) in raw.iter().enumerate() {
            assert_eq!(*b, 1.0);
            assert!(a
                .iter()
                .enumerate()
                .all(|(n, &v)| v == if n >= i { 1.0 } else { 0.0 }));
        }
        let rows = helly_truncated_rows(2.0, k, k).unwrap();
        let x = min_norm_solve(&rows, k - 1, ConjugatePair::euclidean()).unwrap();
        let pattern = helly_prefix_solution(k);
        assert_eq!(pattern.iter().filter(|&&v| v == 1.0).count(), 1);
        assert_eq!(pattern[k - 1], 1.0);
        for (u, v) in x.iter().zip(&pattern) {
            assert!((u - v).abs() < 1e-9, "k = {k}");
        }
    }
}

#[test]
fn abian_least_roots() {
    let stream = abian_family(64).unwrap();
    for n in 1..=12 {
        let root = abian_root(n);
        for f in stream.prefix(n).unwrap() {
            assert!(f.eval_at(|v| root[v]).abs() < 1e-12);
        }
    }
    let x3 = abian_root(3);
    assert_eq!(x3[0], 3.0);
    assert!((x3[1] - 2f64.sqrt()).abs() < 1e-15 && x3[2] == 1.0 && x3[3] == 0.0);
}

#[test]
fn abian_boxes() {
    let stream = abian_family(64).unwrap();
    for n in 2..=7 {
        let fs = stream.prefix(n).unwrap();
        let wide = VariableBox::uniform(n as f64 + 3.0).unwrap();
        let out = root_search(&fs, &wide, 1e-6, 1_000_000).unwrap();
        assert!(out.found, "prefix {n}");
        let narrow = VariableBox::uniform(n as f64 - 1.0).unwrap();
        let f = compactness::boxes::FiniteSupportFunction::polynomial(abian_polynomial(n));
        assert!(certify_no_root(&f, &narrow, 200_000).unwrap(), "prefix {n}");
    }
}

#[test]
fn planted_right_hand_sides_are_exact_dots() {
    let x = halving_vector(10);
    let sys = planted_system(&x, &[7, 8, 9], ConjugatePair::euclidean(), 0.5).unwrap();
    let again = planted_system(&x, &[7, 8, 9], ConjugatePair::euclidean(), 0.5).unwrap();
    for i in 0..3 {
        let row = sys.row(i).unwrap();
        let dot: f64 = (0..10).map(|n| row.a.coeff(n) * x[n]).sum();
        assert_eq!(row.b, dot);
        assert_eq!(row.b, again.row(i).unwrap().b);
        let diag = row.a.coeff(i).abs();
        assert!((0.5..=1.0).contains(&diag));
        assert_eq!(row.a.coeff(i + 1), row.a.coeff(i) * 0.5);
    }
    assert!(
        (sys.norm_budget().unwrap() - 1.5 * (4.0f64 / 3.0 * (1.0 - 0.25f64.powi(10))).sqrt()).abs()
            < 1e-12
    );
}

#[test]
fn registry() {
    let params = |kv: &[(&str, f64)]| {
        kv.iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect::<BTreeMap<_, _>>()
    };
    assert!(FamilyDescriptor::new("nope", BTreeMap::new()).is_err());
    let bad = FamilyDescriptor::new("planted", params(&[("colour", 1.0)])).unwrap();
    assert!(matches!(bad.build(), Err(Error::InvalidArgument(_))));
    match FamilyDescriptor::new("planted", params(&[("rows", 3.0)]))
        .unwrap()
        .build()
        .unwrap()
    {
        Family::Linear(sys) => assert_eq!(sys.len(), Some(3)),
        Family::Box(_) => panic!("planted is linear"),
    }
    match FamilyDescriptor::new("abian", params(&[("n_max", 5.0)]))
        .unwrap()
        .build()
        .unwrap()
    {
        Family::Box(s) => assert_eq!(s.len(), Some(5)),
        Family::Linear(_) => panic!("abian is a function family"),
    }
    let helly = FamilyDescriptor::new("helly", BTreeMap::new()).unwrap();
    assert!(matches!(helly.build(), Err(Error::NotPSummable { .. })));
}
