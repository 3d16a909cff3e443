use proptest::prelude::*;
use shear_spectra::profiles::{sobolev_distance, validate};
use shear_spectra::{BaseProfile, PerturbationProfile, PerturbedFlow};

fn flow(m: f64, gamma: f64) -> PerturbedFlow {
    PerturbedFlow::new(BaseProfile::couette(), PerturbationProfile::gaussian(), m, gamma).unwrap()
}

#[test]
fn sine_potential_is_constant() {
    for b in [0.5, 1.0, 1.4] {
        let f = PerturbedFlow::new(BaseProfile::sine(b).unwrap(), PerturbationProfile::gaussian(), 0.0, 0.1).unwrap();
        for y in [-0.9, -0.3, 0.0, 0.2, 0.7] {
            assert!((f.potential(y) + b * b).abs() < 1e-10, "b = {b}, y = {y}");
        }
    }
}

#[test]
fn quadratic_base_fails_validation() {
    let base = BaseProfile::polynomial(vec![0.0, 0.0, 1.0]);
    let report = validate(&base, &PerturbationProfile::gaussian(), 0.0, 0.1);
    assert!(!report.all_pass());
    assert!(!report.get("monotonicity_floor").unwrap().passed);
}

#[test]
fn couette_gaussian_passes_validation() {
    assert!(validate(&BaseProfile::couette(), &PerturbationProfile::gaussian(), 3.0, 0.1).all_pass());
}

#[test]
fn sobolev_distance_of_identical_flows_vanishes() {
    let f = flow(2.0, 0.1);
    for s in [0.0, 1.0, 2.0] {
        assert!(sobolev_distance(&f, &f, s).unwrap() < 1e-14);
    }
}

#[test]
fn sobolev_distance_rejects_mismatched_gamma() {
    assert!(sobolev_distance(&flow(1.0, 0.1), &flow(1.0, 0.05), 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derivatives_match_finite_differences(m in 0.0..5.0f64, gamma in 0.02..0.3f64, y in -0.95..0.95f64) {
        let f = flow(m, gamma);
        let h = 1e-5 * gamma;
        for k in 0..3 {
            let fd = (f.eval_raw(y + h, k) - f.eval_raw(y - h, k)) / (2.0 * h);
            let exact = f.eval_raw(y, k + 1);
            prop_assert!((fd - exact).abs() <= 1e-5 * (1.0 + exact.abs()) / gamma, "k = {k}: {fd} vs {exact}");
        }
    }

    #[test]
    fn perturbation_keeps_the_origin_and_oddness(m in 0.0..5.0f64, gamma in 0.02..0.3f64, y in 0.0..1.0f64) {
        let f = flow(m, gamma);
        prop_assert!(f.u(0.0).abs() < 1e-14);
        prop_assert!((f.u(y) + f.u(-y)).abs() < 1e-12);
    }

    #[test]
    fn sobolev_distance_is_symmetric(m1 in 0.0..4.0f64, m2 in 0.0..4.0f64, s in 0usize..3) {
        let (a, b) = (flow(m1, 0.1), flow(m2, 0.1));
        let (ab, ba) = (sobolev_distance(&a, &b, s as f64).unwrap(), sobolev_distance(&b, &a, s as f64).unwrap());
        prop_assert!((ab - ba).abs() <= 1e-12 * (1.0 + ab));
    }
}
