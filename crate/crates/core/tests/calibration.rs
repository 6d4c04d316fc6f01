use proptest::prelude::*;
use raodp::geometry::{rao_distance_location, rao_distance_location_with, Formula};
use raodp::mechanism::{calibrate, calibrate_with, MechanismKind};
use raodp::oracle::{geodesic_distance_numeric, privacy_loss_sweep, privacy_loss_sweep_family};
use raodp::{Family, MechanismSpec};

fn kind() -> impl Strategy<Value = MechanismKind> {
    prop_oneof![
        Just(MechanismKind::Laplace),
        Just(MechanismKind::Gaussian),
        (1.0f64..6.0).prop_map(|n| MechanismKind::gen_gaussian(n).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn calibrated_scale_is_tight(k in kind(), delta in 0.01f64..10.0, theta in 0.05f64..5.0) {
        let sigma = calibrate(k, delta, theta).unwrap();
        let d = rao_distance_location(k.family(sigma).unwrap(), 3.0, 3.0 + delta).unwrap().value;
        prop_assert!((d - theta).abs() <= 1e-10 * theta.max(1.0), "{} vs {}", d, theta);
    }

    #[test]
    fn calibration_is_monotone(k in kind(), delta in 0.01f64..10.0, theta in 0.05f64..5.0, f in 1.01f64..3.0) {
        let base = calibrate(k, delta, theta).unwrap();
        prop_assert!(calibrate(k, delta * f, theta).unwrap() > base);
        prop_assert!(calibrate(k, delta, theta * f).unwrap() < base);
    }

    #[test]
    fn spread_grows_with_shape(delta in 0.01f64..10.0, theta in 0.05f64..5.0) {
        let spread = |n: f64| calibrate(MechanismKind::gen_gaussian(n).unwrap(), delta, theta).unwrap().powf(1.0 / n);
        let shapes = [1.0, 1.5, 2.0, 3.0, 4.0];
        for w in shapes.windows(2) {
            prop_assert!(spread(w[1]) > spread(w[0]));
        }
    }

    #[test]
    fn scale_grows_with_shape_when_noise_dominates(delta in 1.0f64..10.0, theta in 0.05f64..1.0) {
        let sigma = |n: f64| calibrate(MechanismKind::gen_gaussian(n).unwrap(), delta, theta).unwrap();
        let shapes = [1.0, 1.5, 2.0, 3.0, 4.0];
        for w in shapes.windows(2) {
            prop_assert!(sigma(w[1]) > sigma(w[0]));
        }
    }

    #[test]
    fn laplace_sweep_recovers_theta(delta in 0.01f64..5.0, theta in 0.05f64..3.0) {
        let m = MechanismSpec::calibrated(MechanismKind::Laplace, delta, theta).unwrap();
        let s = privacy_loss_sweep(&m, 0.0, delta, 40.0 * m.scale() + delta, 4001).unwrap();
        prop_assert!((s.epsilon - theta).abs() <= 1e-9, "{} vs {}", s.epsilon, theta);
        prop_assert!(!s.unbounded_suspected);
    }
}

#[test]
fn gen_gaussian_calibration_checked_by_oracle() {
    let kind = MechanismKind::gen_gaussian(2.0).unwrap();
    let sigma = calibrate(kind, 1.0, 1.0).unwrap();
    assert!((sigma - 2.0).abs() < 1e-14);
    let f = kind.family(sigma).unwrap();
    let r = geodesic_distance_numeric(&f.at(0.0).unwrap(), &f.at(1.0).unwrap()).unwrap();
    assert!((r.distance.value - 1.0).abs() < 1e-4);
}

#[test]
fn literal_form_only_meets_budget_at_unit_scale() {
    let kind = MechanismKind::gen_gaussian(2.0).unwrap();
    let literal = calibrate_with(kind, 1.0, 1.0, Formula::Literal).unwrap();
    assert!((literal - 2f64.sqrt()).abs() < 1e-14);
    let d = rao_distance_location(kind.family(literal).unwrap(), 0.0, 1.0)
        .unwrap()
        .value;
    assert!(d > 1.0 + 1e-3, "literal scale under-noises: {d}");
    let d_lit =
        rao_distance_location_with(kind.family(literal).unwrap(), 0.0, 1.0, Formula::Literal)
            .unwrap()
            .value;
    assert!((d_lit - 1.0).abs() < 1e-12);
}

#[test]
fn gaussian_sweep_flags_unbounded_loss() {
    let f = Family::gaussian(1.0).unwrap();
    let narrow = privacy_loss_sweep_family(f, 0.0, 1.0, 10.0, 2001).unwrap();
    let wide = privacy_loss_sweep_family(f, 0.0, 1.0, 100.0, 2001).unwrap();
    assert!(narrow.unbounded_suspected && wide.unbounded_suspected);
    assert!(wide.epsilon > 9.0 * narrow.epsilon);
}
