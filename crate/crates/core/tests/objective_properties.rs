use proptest::prelude::*;
use tlfit::distributions::sample;
use tlfit::objectives::{self, wls_weight, ObjectiveKind};
use tlfit::{DistKind, DistParams, SortedSample, TleParams, TlqeParams};

fn log_scale(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.ln()..hi.ln()).prop_map(f64::exp)
}

fn objective() -> impl Strategy<Value = ObjectiveKind> {
    prop::sample::select(ObjectiveKind::ALL.to_vec())
}

fn data(seed: u64, n: usize) -> SortedSample {
    sample(n, &TlqeParams::new(1.5, 1.0, 1.3).unwrap().into(), seed)
}

/// Checks each analytic partial against a central difference with step
/// `1e-6 max(1, |theta|)`.
fn check_gradient(obj: ObjectiveKind, s: &SortedSample, p: &DistParams) -> Result<(), TestCaseError> {
    let g = objectives::gradient(obj, s, p).expect("feasible");
    let theta = p.to_vec();
    for (j, &gj) in g.iter().enumerate() {
        let h = 1e-6 * theta[j].abs().max(1.0);
        let at = |d: f64| {
            let mut v = theta.clone();
            v[j] += d;
            objectives::value(obj, s, &DistParams::from_slice(p.kind(), &v).unwrap())
        };
        let fd = (at(h) - at(-h)) / (2.0 * h);
        let err = (fd - gj).abs();
        prop_assert!(
            err <= 1e-8 || err <= 1e-5 * gj.abs().max(fd.abs()),
            "{obj:?} {p:?} partial {j}: analytic {gj}, difference {fd}"
        );
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn tle_gradients(obj in objective(), a in log_scale(0.3, 5.0), l in log_scale(0.2, 5.0),
                     seed in any::<u64>(), n in 5usize..60) {
        let s = data(seed, n);
        check_gradient(obj, &s, &TleParams::new(a, l).unwrap().into())?;
    }

    #[test]
    fn tlqe_gradients(obj in objective(), a in log_scale(0.3, 5.0), l in log_scale(0.2, 5.0),
                      q in -1.0f64..1.9, seed in any::<u64>(), n in 5usize..60) {
        let s = data(seed, n);
        prop_assume!(q >= 1.0 || (1.0 - q) * l * s.max() < 0.95);
        prop_assume!((q - 1.0).abs() > 1e-3);
        check_gradient(obj, &s, &TlqeParams::new(a, l, q).unwrap().into())?;
    }

    #[test]
    fn nonnegative(a in log_scale(0.05, 50.0), l in log_scale(0.05, 50.0), seed in any::<u64>(), n in 3usize..80) {
        let s = data(seed, n);
        let p: DistParams = TleParams::new(a, l).unwrap().into();
        prop_assert!(objectives::ls_value(&s, &p).value >= 0.0);
        prop_assert!(objectives::wls_value(&s, &p).value >= 0.0);
        prop_assert!(objectives::cvm_value(&s, &p).value >= 1.0 / (12.0 * n as f64));
        prop_assert!(objectives::ad_value(&s, &p).value.is_finite());
    }

    #[test]
    fn scale_coherence_for_powers_of_two(obj in objective(), a in log_scale(0.3, 5.0),
                                         l in log_scale(0.2, 5.0), e in -6i32..6, seed in any::<u64>()) {
        let c = 2f64.powi(e);
        let s = data(seed, 25);
        let scaled = s.scaled(c);
        let base = objectives::value(obj, &s, &TleParams::new(a, l).unwrap().into());
        let moved = objectives::value(obj, &scaled, &TleParams::new(a, l * c).unwrap().into());
        prop_assert_eq!(base.to_bits(), moved.to_bits());
    }

    #[test]
    fn scale_coherence_general(obj in objective(), a in log_scale(0.3, 5.0),
                               l in log_scale(0.2, 5.0), c in log_scale(0.01, 100.0), seed in any::<u64>()) {
        let s = data(seed, 25);
        let base = objectives::value(obj, &s, &TleParams::new(a, l).unwrap().into());
        let moved = objectives::value(obj, &s.scaled(c), &TleParams::new(a, l * c).unwrap().into());
        prop_assert!((base - moved).abs() <= 1e-10 * base.abs().max(1.0));
    }

    #[test]
    fn infeasible_points_are_flagged(obj in objective(), a in log_scale(0.3, 5.0),
                                     q in -2.0f64..0.99, excess in 1.0f64..3.0, seed in any::<u64>()) {
        let s = data(seed, 20);
        let l = excess / ((1.0 - q) * s.max());
        let v = objectives::evaluate(obj, &s, &TlqeParams::new(a, l, q).unwrap().into());
        prop_assert!(!v.feasible);
        prop_assert!(!v.value.is_nan());
        prop_assert!(v.gradient.is_none());
    }
}

#[test]
fn wls_weights_are_finite_and_positive() {
    for n in [3, 10, 1000] {
        for i in 1..=n {
            let w = wls_weight(i, n);
            assert!(w.is_finite() && w > 0.0, "w({i}, {n}) = {w}");
        }
    }
}

#[test]
fn gradient_absent_when_infeasible() {
    let s = SortedSample::new(vec![0.5, 1.0, 4.0]).unwrap();
    let p: DistParams = TlqeParams::new(1.0, 1.0, 0.5).unwrap().into();
    for obj in ObjectiveKind::ALL {
        assert!(objectives::gradient(obj, &s, &p).is_none());
    }
    assert_eq!(p.kind(), DistKind::Tlqe);
}
