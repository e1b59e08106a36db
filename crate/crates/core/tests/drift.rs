use proptest::prelude::*;
use stablesde::drift::{example1_drift, holder_seminorm_estimate, tanaka_drift, Drift, DriftSpec};

#[test]
fn tanaka_values_and_bounds() {
    let b = tanaka_drift(0.25, 1).unwrap();
    assert_eq!(b.eval_1d(0.0), 0.0);
    assert!((b.eval_1d(0.0625) - 0.5).abs() < 1e-15);
    assert!((b.eval_1d(-0.0625) + 0.5).abs() < 1e-15);
    assert_eq!(b.eval_1d(7.0), 1.0);
    assert_eq!(b.eval_1d(-1.0), -1.0);
    assert_eq!(b.sup_bound(), 1.0);
    assert!(tanaka_drift(0.25, 2).is_err());
    assert!(tanaka_drift(1.0, 1).is_err());
}

#[test]
fn example1_values() {
    let alpha = 0.5;
    let b = example1_drift(alpha, 2.0, 2).unwrap();
    // |x| = e^{−4}: r^{1/2}/4 = e^{−2}/4
    let r = (-4.0f64).exp();
    let v = b.eval(&[0.0, r]);
    assert!((v[0] - 2.0 * (-2.0f64).exp() / 4.0).abs() < 1e-15);
    assert_eq!(v[1], 0.0);
    assert_eq!(b.eval(&[1.0, 0.0]), vec![2.0, 0.0]);
    assert_eq!(b.eval(&[0.0, 0.0]), vec![0.0, 0.0]);
    // near |x| = 1 the logarithm blows up and the clamp is active
    assert_eq!(b.eval(&[1.01, 0.0])[0], 2.0);
    assert_eq!(b.sup_bound(), 2.0);
}

#[test]
fn tanaka_seminorm_is_attained_across_the_origin() {
    // |b(x) − b(−y)| = x^β + y^β ≤ 2^{1−β} (x + y)^β with equality at x = y
    for beta in [0.25, 0.5, 0.75] {
        let exact = 2f64.powf(1.0 - beta);
        let est = holder_seminorm_estimate(&tanaka_drift(beta, 1).unwrap(), beta, 3.0, 100_000).unwrap();
        assert!(est.global_estimate <= exact * (1.0 + 1e-12), "{}", est.global_estimate);
        assert!(est.global_estimate >= 0.99 * exact, "{} vs {exact}", est.global_estimate);
    }
}

#[test]
fn example1_is_holder_only_up_to_one_minus_alpha() {
    let alpha = 0.4;
    let b = example1_drift(alpha, 1.0, 1).unwrap();
    let at = |exponent: f64| {
        let est = holder_seminorm_estimate(&b, exponent, 2.0, 60_000).unwrap();
        (est.local_profile[2].1, est.local_profile[12].1)
    };
    // the profile is a sup over ever closer pairs, so it can only shrink as δ → 0;
    // at the critical exponent it decays like 1/|log δ|
    let (coarse, fine) = at(1.0 - alpha);
    assert!(fine < 0.5 * coarse, "{fine} vs {coarse}");
    assert!(fine < 1.5 / (1e-12f64).ln().abs(), "{fine}");
    // above it the ratio r^{−0.2}/|log r| is still large at δ = 1e−12
    let (coarse, fine) = at(1.0 - alpha + 0.2);
    assert!(fine > 5.0 && fine >= 0.5 * coarse, "{fine} vs {coarse}");
}

#[test]
fn estimates_grow_with_the_budget() {
    let b = Drift::power_clamp(2, 0.5, 1.5).unwrap();
    let small = holder_seminorm_estimate(&b, 0.5, 2.0, 1_000).unwrap();
    let large = holder_seminorm_estimate(&b, 0.5, 2.0, 10_000).unwrap();
    assert!(large.global_estimate >= small.global_estimate);
    assert!(large.global_estimate <= 1.5 * (1.0 + 1e-12));
    assert!(holder_seminorm_estimate(&b, 1.5, 2.0, 10).is_err());
}

#[test]
fn specs_build_and_round_trip() {
    let specs: Vec<DriftSpec> = serde_json::from_str(
        r#"[{"drift":"zero"},{"drift":"tanaka","beta":0.3},{"drift":"example1","alpha":0.5},
            {"drift":"constant","value":[1.0]},{"drift":"power_clamp","exponent":0.5,"scale":2.0}]"#,
    )
    .unwrap();
    for s in &specs {
        let again: DriftSpec = serde_json::from_str(&serde_json::to_string(s).unwrap()).unwrap();
        assert_eq!(&again, s);
        assert_eq!(s.build(1).unwrap().dim(), 1);
    }
    assert!(DriftSpec::Constant { value: vec![1.0, 2.0] }.build(1).is_err());
    assert!(serde_json::from_str::<DriftSpec>(r#"{"drift":"tanaka","beta":0.3,"extra":1}"#).is_err());
}

proptest! {
    #[test]
    fn drifts_are_bounded_by_their_sup(x in -50.0f64..50.0, y in -50.0f64..50.0, beta in 0.01f64..0.99) {
        for b in [tanaka_drift(beta, 1).unwrap(), example1_drift(beta, 1.3, 1).unwrap()] {
            prop_assert!(b.eval_1d(x).abs() <= b.sup_bound());
            prop_assert_eq!(b.eval_1d(x), b.eval(&[x])[0]);
        }
        let two = example1_drift(beta, 0.7, 2).unwrap().eval(&[x, y]);
        prop_assert!(two[0].abs() <= 0.7 && two[1] == 0.0);
        let t = tanaka_drift(beta, 1).unwrap();
        prop_assert_eq!(t.eval_1d(-x), -t.eval_1d(x));
    }
}
