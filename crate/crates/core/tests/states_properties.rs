use proptest::prelude::*;
use qbstat_core::{generating_function, make_distribution, photon_moments, StateSpec};

fn catalog() -> Vec<StateSpec> {
    vec![
        StateSpec::coherent(0.3),
        StateSpec::coherent(4.0),
        StateSpec::coherent(10.0),
        StateSpec::thermal(0.5),
        StateSpec::thermal(5.0),
        StateSpec::fock(0),
        StateSpec::fock(7),
        StateSpec::squeezed_vacuum(0.5),
        StateSpec::squeezed_vacuum(1.5),
        StateSpec::explicit(vec![0.1, 0.2, 0.3, 0.4]),
        StateSpec::mixture([
            (0.3, StateSpec::coherent(2.0)),
            (
                0.7,
                StateSpec::mixture([(0.5, StateSpec::fock(3)), (0.5, StateSpec::thermal(1.0))]),
            ),
        ]),
    ]
}

#[test]
fn catalog_distributions_are_normalized() {
    for spec in catalog() {
        let d = make_distribution(&spec, 1e-12).unwrap();
        assert!(d.probs().iter().all(|&p| p >= 0.0), "{spec:?}");
        let total = d.total();
        assert!((1.0 - 2e-12..=1.0 + 1e-12).contains(&total), "{spec:?}: {total}");
        assert!(d.tail_bound() <= 1e-12);
    }
}

#[test]
fn generating_function_is_one_at_one_and_nondecreasing() {
    for spec in catalog() {
        assert!(
            (generating_function(&spec, 1.0).unwrap() - 1.0).abs() < 1e-12,
            "{spec:?}"
        );
        let mut prev = generating_function(&spec, 0.0).unwrap();
        for i in 1..100 {
            let g = generating_function(&spec, i as f64 / 99.0).unwrap();
            assert!(g >= prev, "{spec:?} at step {i}");
            prev = g;
        }
    }
}

#[test]
fn finite_difference_slope_at_one_is_the_mean() {
    let h = 1e-6;
    for spec in catalog() {
        let d = make_distribution(&spec, 1e-12).unwrap();
        if d.n_max() > 100 {
            continue;
        }
        let (mean, _) = photon_moments(&d);
        let slope = (generating_function(&spec, 1.0).unwrap() - generating_function(&spec, 1.0 - h).unwrap()) / h;
        assert!((slope - mean).abs() < 1e-4, "{spec:?}: {slope} vs {mean}");
    }
}

#[test]
fn truncated_sum_matches_closed_forms() {
    for spec in catalog() {
        let d = make_distribution(&spec, 1e-12).unwrap();
        for x in [0.0, 0.25, 0.6, 0.95] {
            let closed = generating_function(&spec, x).unwrap();
            assert!((closed - d.generating(x)).abs() < 2e-12, "{spec:?} x={x}");
        }
    }
}

#[test]
fn state_spec_json_schema() {
    let cases = [
        (r#"{"kind":"coherent","mean_photons":4.0}"#, StateSpec::coherent(4.0)),
        (r#"{"kind":"thermal","mean_photons":1.5}"#, StateSpec::thermal(1.5)),
        (r#"{"kind":"fock","n":3}"#, StateSpec::fock(3)),
        (r#"{"kind":"squeezed_vacuum","r":0.8}"#, StateSpec::squeezed_vacuum(0.8)),
        (
            r#"{"kind":"explicit","probs":[0.5,0.5]}"#,
            StateSpec::explicit(vec![0.5, 0.5]),
        ),
        (
            r#"{"kind":"mixture","components":[{"weight":0.5,"state":{"kind":"fock","n":1}},{"weight":0.5,"state":{"kind":"thermal","mean_photons":2.0}}]}"#,
            StateSpec::mixture([(0.5, StateSpec::fock(1)), (0.5, StateSpec::thermal(2.0))]),
        ),
    ];
    for (text, expected) in cases {
        let parsed: StateSpec = serde_json::from_str(text).unwrap();
        assert_eq!(parsed, expected);
        assert_eq!(serde_json::to_string(&parsed).unwrap(), text);
    }
    assert!(serde_json::from_str::<StateSpec>(r#"{"kind":"fock","n":3,"extra":1}"#).is_err());
}

fn leaf() -> impl Strategy<Value = StateSpec> {
    prop_oneof![
        (0.0..12.0f64).prop_map(StateSpec::coherent),
        (0.0..5.0f64).prop_map(StateSpec::thermal),
        (0u32..30).prop_map(StateSpec::fock),
        (0.0..1.5f64).prop_map(StateSpec::squeezed_vacuum),
    ]
}

proptest! {
    #[test]
    fn mixture_generating_function_is_linear(
        a in leaf(),
        b in leaf(),
        w in 0.0..1.0f64,
        x in 0.0..=1.0f64,
    ) {
        let mix = StateSpec::mixture([(w, a.clone()), (1.0 - w, b.clone())]);
        let lhs = generating_function(&mix, x).unwrap();
        let rhs = w * generating_function(&a, x).unwrap() + (1.0 - w) * generating_function(&b, x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }

    #[test]
    fn distributions_respect_tail_bound(spec in leaf(), exponent in 6i32..=12) {
        let tol = 10f64.powi(-exponent);
        let d = make_distribution(&spec, tol).unwrap();
        prop_assert!(d.tail_bound() <= tol);
        prop_assert!(d.probs().iter().all(|&p| p >= 0.0));
        let total = d.total();
        prop_assert!(total >= 1.0 - 1e-9 - d.tail_bound() && total <= 1.0 + 1e-12);
    }
}
