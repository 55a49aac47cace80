use atlas_metrics::{detect_convergence, relative_error, ConvergenceTime};
use proptest::prelude::*;

fn pairs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0f64..1.0, 0.001f64..1.0), 1..50)
}

fn stream() -> impl Strategy<Value = (Vec<(f64, Vec<f64>)>, Vec<f64>)> {
    (1usize..6).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::collection::vec(0.0f64..1.0, n), 1..40),
            prop::collection::vec(0.0f64..1.0, n),
        )
            .prop_map(|(claims, oracle)| {
                let samples = claims
                    .into_iter()
                    .enumerate()
                    .map(|(k, c)| (k as f64 * 0.01, c))
                    .collect();
                (samples, oracle)
            })
    })
}

proptest! {
    #[test]
    fn error_is_scale_consistent(samples in pairs(), lambda in 0.01f64..100.0) {
        let base = relative_error(&samples);
        let scaled: Vec<(f64, f64)> = samples.iter().map(|&(p, s)| (p * lambda, s * lambda)).collect();
        let e = relative_error(&scaled);
        prop_assert!((base.excess - e.excess).abs() < 1e-9);
        prop_assert!((base.deficit - e.deficit).abs() < 1e-9);
    }

    #[test]
    fn errors_are_non_negative(samples in pairs()) {
        let e = relative_error(&samples);
        prop_assert!(e.excess >= 0.0 && e.deficit >= 0.0);
    }

    #[test]
    fn exact_samples_have_zero_error(targets in prop::collection::vec(0.001f64..1.0, 1..50)) {
        let samples: Vec<(f64, f64)> = targets.iter().map(|&s| (s, s)).collect();
        let e = relative_error(&samples);
        prop_assert_eq!(e.excess, 0.0);
        prop_assert_eq!(e.deficit, 0.0);
    }

    #[test]
    fn convergence_is_monotone_in_tolerance(
        (samples, oracle) in stream(),
        tol in 0.0f64..0.5,
        extra in 0.0f64..0.5,
    ) {
        let tight = detect_convergence(&samples, &oracle, tol, 0.0);
        let loose = detect_convergence(&samples, &oracle, tol + extra, 0.0);
        match (tight, loose) {
            (ConvergenceTime::At(a), ConvergenceTime::At(b)) => prop_assert!(b <= a),
            (ConvergenceTime::Never, _) => {}
            (ConvergenceTime::At(_), ConvergenceTime::Never) => prop_assert!(false, "looser tolerance never converged"),
        }
    }
}
