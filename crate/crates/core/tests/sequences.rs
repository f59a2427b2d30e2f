use std::collections::BTreeMap;

use compactness::corpus::helly_row_sequence;
use compactness::sequences::{
    certified_dot, head_coefficient_bound, p_norm, tail_norm_limit_check, truncate_tail,
    ConjugatePair, PSummableSequence,
};
use compactness::Error;
use proptest::prelude::*;

fn direct_norm(v: &[f64], p: f64) -> f64 {
    v.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

fn halves(p: f64) -> PSummableSequence {
    PSummableSequence::geometric(p, vec![1.0], 0.5).unwrap()
}

#[test]
fn geometric_norm_matches_closed_form() {
    let v = p_norm(&halves(2.0), 1e-12).unwrap();
    assert!((v - (4.0f64 / 3.0).sqrt()).abs() < 1e-12);
}

#[test]
fn dot_of_finite_pair_and_holder_bound() {
    let pair = ConjugatePair::euclidean();
    let a = PSummableSequence::finite(2.0, vec![3.0, 4.0]).unwrap();
    let x = PSummableSequence::finite(2.0, vec![1.0, 1.0]).unwrap();
    let d = certified_dot(&a, &x, pair, 1e-12).unwrap();
    assert!((d - 7.0).abs() < 1e-12);
    assert!(d <= 5.0 * 2f64.sqrt());
}

#[test]
fn truncation_keeps_the_tail() {
    let t = truncate_tail(&halves(2.0), 1);
    assert_eq!(t.head(4), vec![0.0, 0.0, 0.25, 0.125]);
    let z = truncate_tail(
        &PSummableSequence::finite(2.0, vec![1.0, 2.0, 3.0]).unwrap(),
        5,
    );
    assert!((0..10).all(|n| z.coeff(n) == 0.0));
    assert_eq!(p_norm(&z, 1e-12).unwrap(), 0.0);
}

#[test]
fn tail_witness_for_halves() {
    let n = tail_norm_limit_check(&halves(2.0), 0.1).unwrap();
    assert!(n <= 10);
    // ‖c^N‖_2 = (4/3)^{1/2} 2^{−(N+1)}
    let exact = |n: i32| (4.0f64 / 3.0).sqrt() * 0.5f64.powi(n + 1);
    assert!(exact(n as i32) < 0.1);
    let least = (0..).find(|&k| exact(k) < 0.1).unwrap();
    assert!(n >= least as usize);
}

#[test]
fn constant_rows_are_refused() {
    assert!(matches!(
        helly_row_sequence(2.0, 0),
        Err(Error::NotPSummable { .. })
    ));
    assert!(matches!(
        PSummableSequence::registered(2.0, "ones", &BTreeMap::new()),
        Err(Error::NotPSummable { .. })
    ));
    let slow: BTreeMap<String, f64> = [("s".to_string(), 0.5)].into();
    assert!(PSummableSequence::registered(2.0, "power", &slow).is_err());
}

#[test]
fn stalls_are_reported() {
    let params: BTreeMap<String, f64> = [("s".to_string(), 0.51)].into();
    let slow = PSummableSequence::registered(2.0, "power", &params).unwrap();
    assert!(matches!(
        compactness::sequences::TailSearch::new(1000).tail_norm_limit_check(&slow, 1e-6),
        Err(Error::EnvelopeStall { .. })
    ));
}

fn finite_vec() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, 1..24)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn holder(a in finite_vec(), x in finite_vec(), p in 1.01f64..10.0) {
        let pair = ConjugatePair::from_p(p).unwrap();
        let dot: f64 = a.iter().zip(&x).map(|(u, v)| u * v).sum();
        prop_assert!(dot.abs() <= direct_norm(&a, p) * direct_norm(&x, pair.q()) + 1e-9);
        let sa = PSummableSequence::finite(p, a.clone()).unwrap();
        let sx = PSummableSequence::finite(pair.q(), x.clone()).unwrap();
        let d = certified_dot(&sa, &sx, pair, 1e-9).unwrap();
        prop_assert!((d - dot).abs() <= 1e-9 * (1.0 + dot.abs()));
    }

    #[test]
    fn coefficient_below_norm(c in finite_vec(), n in 0usize..30, q in 1.01f64..10.0) {
        let s = PSummableSequence::finite(q, c.clone()).unwrap();
        let (cn, norm) = head_coefficient_bound(&s, n, 1e-12).unwrap();
        prop_assert!((norm - direct_norm(&c, q)).abs() <= 1e-9 * (1.0 + norm));
        prop_assert!(cn <= norm + 1e-9);
    }

    #[test]
    fn truncation_composes(head in finite_vec(), ratio in -0.95f64..0.95, n in 0usize..40, k in 0usize..40) {
        let c = PSummableSequence::geometric(2.0, head, ratio).unwrap();
        let twice = truncate_tail(&truncate_tail(&c, n), k);
        let once = truncate_tail(&c, n.max(k));
        for i in 0..80 {
            prop_assert_eq!(twice.coeff(i).to_bits(), once.coeff(i).to_bits());
        }
    }

    #[test]
    fn envelopes_bound_partial_tails(
        head in finite_vec(),
        ratio in -0.95f64..0.95,
        p in 1.1f64..6.0,
        cut in 0usize..30,
    ) {
        let c = PSummableSequence::geometric(p, head, ratio).unwrap();
        for s in [c.clone(), truncate_tail(&c, cut)] {
            let mut previous = f64::INFINITY;
            for n in 0..40 {
                let e = s.tail_envelope(n);
                prop_assert!(e <= previous);
                previous = e;
                let tail: Vec<f64> = (n + 1..n + 200).map(|i| s.coeff(i)).collect();
                prop_assert!(direct_norm(&tail, p) <= e + 1e-12 * (1.0 + e));
            }
        }
    }

    #[test]
    fn norms_are_reproducible(head in finite_vec(), ratio in -0.9f64..0.9) {
        let a = PSummableSequence::geometric(3.0, head.clone(), ratio).unwrap();
        let b = PSummableSequence::geometric(3.0, head, ratio).unwrap();
        prop_assert_eq!(p_norm(&a, 1e-9).unwrap().to_bits(), p_norm(&b, 1e-9).unwrap().to_bits());
    }
}
