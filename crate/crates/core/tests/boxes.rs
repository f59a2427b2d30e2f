use compactness::boxes::{
    box_compactness_extract, certify_no_root, finite_root_search, root_search,
    FiniteSupportFunction, FunctionStream, RealPolynomial, VariableBox,
};
use compactness::corpus::abian_family;
use compactness::stabilization::Status;
use compactness::Error;
use proptest::prelude::*;

fn poly(terms: &[(f64, &[usize])]) -> FiniteSupportFunction {
    let p = terms
        .iter()
        .fold(RealPolynomial::default(), |p, (c, vars)| {
            p.with_term(*c, vars)
        });
    FiniteSupportFunction::polynomial(p)
}

#[test]
fn circle_meets_diagonal_at_the_negative_pair() {
    let fs = vec![
        poly(&[(1.0, &[0, 0]), (1.0, &[1, 1]), (-1.0, &[])]),
        poly(&[(1.0, &[0]), (-1.0, &[1])]),
    ];
    let bx = VariableBox::uniform(2.0).unwrap();
    let root = finite_root_search(&fs, &bx, 1e-6, 1_000_000)
        .unwrap()
        .unwrap();
    let h = -std::f64::consts::FRAC_1_SQRT_2;
    assert!((root.get(0).unwrap() - h).abs() < 1e-5);
    assert!((root.get(1).unwrap() - h).abs() < 1e-5);
}

#[test]
fn anchored_chain_settles_at_one_half() {
    let stream = FunctionStream::from_fn(None, |k| match k {
        0 => poly(&[(1.0, &[0]), (-0.5, &[])]),
        k => poly(&[(1.0, &[k - 1]), (-1.0, &[k])]),
    });
    let bx = VariableBox::uniform(1.0).unwrap();
    let rep = box_compactness_extract(&stream, &bx, &[3, 5, 7, 9], 2, 1e-5, 1e-7).unwrap();
    assert_eq!(rep.verified_prefix, 9);
    for id in 0..4 {
        let c = rep.coordinate(id).unwrap();
        assert_eq!(c.status, Status::Stabilized, "x{id}");
        assert!((c.value.unwrap() - 0.5).abs() < 1e-5);
    }
}

#[test]
fn abian_prefix_seven_does_not_fit_in_five() {
    let stream = abian_family(64).unwrap();
    let bx = VariableBox::uniform(5.0).unwrap();
    match box_compactness_extract(&stream, &bx, &[3, 7], 2, 1e-6, 1e-6) {
        Err(Error::PrefixRootNotFound {
            prefix, certified, ..
        }) => {
            assert_eq!(prefix, 7);
            assert!(certified);
        }
        other => panic!("expected PrefixRootNotFound, got {other:?}"),
    }
}

#[test]
fn opaque_functions_are_never_certified() {
    let f = FiniteSupportFunction::new(vec![0], |x| x[0] * x[0] + 1.0).unwrap();
    let bx = VariableBox::uniform(1.0).unwrap();
    assert!(!certify_no_root(&f, &bx, 1000).unwrap());
    let g = f.with_modulus(2.0).unwrap();
    assert!(certify_no_root(&g, &bx, 100_000).unwrap());
}

#[test]
fn support_is_what_evaluation_reads() {
    let f = poly(&[(2.0, &[3]), (1.0, &[1, 3])]);
    assert_eq!(f.support(), &[1, 3]);
    let at = |bump: f64| f.eval_at(|v| if v == 1 || v == 3 { 0.7 } else { bump });
    assert_eq!(at(0.0), at(123.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// `x_i² − c_i²` for each `i`, with roots inside the box.
    #[test]
    fn found_roots_are_roots_in_the_box(c in prop::collection::vec(-0.9f64..0.9, 1..4), m in 1.0f64..3.0) {
        let fs: Vec<FiniteSupportFunction> = c
            .iter()
            .enumerate()
            .map(|(i, &ci)| poly(&[(1.0, &[i, i]), (-ci * ci, &[])]))
            .collect();
        let bx = VariableBox::uniform(m).unwrap();
        let out = root_search(&fs, &bx, 1e-6, 200_000).unwrap();
        let again = root_search(&fs, &bx, 1e-6, 200_000).unwrap();
        prop_assert_eq!(&out, &again);
        prop_assert!(out.point.values.iter().all(|v| v.abs() <= m));
        if out.found {
            for f in &fs {
                prop_assert!(f.eval_at(|v| out.point.get(v).unwrap_or(0.0)).abs() <= 1e-6);
            }
        }
    }

    /// `x² − c` has roots `±√c`: never certified rootless when `√c ≤ M`,
    /// and certification survives shrinking the box.
    #[test]
    fn certification_is_sound_and_monotone(c in 0.01f64..9.0, m in 0.1f64..4.0, shrink in 0.1f64..1.0) {
        let f = poly(&[(1.0, &[0, 0]), (-c, &[])]);
        let bx = VariableBox::uniform(m).unwrap();
        let certified = certify_no_root(&f, &bx, 20_000).unwrap();
        if c.sqrt() <= m {
            prop_assert!(!certified);
        }
        if certified {
            let smaller = VariableBox::uniform(m * shrink).unwrap();
            prop_assert!(certify_no_root(&f, &smaller, 20_000).unwrap());
        }
    }
}
