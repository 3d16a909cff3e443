use proptest::prelude::*;
use shear_spectra::threshold::{
    convergence_order, find_mstar, lambda_m0, lambda_m0_fd, min_eigenvalue, threshold_function_m, threshold_map_jump,
};
use shear_spectra::{BaseProfile, PerturbationProfile, PerturbedFlow};
use std::f64::consts::PI;

fn coth(x: f64) -> f64 {
    1.0 / x.tanh()
}

#[test]
fn second_order_finite_differences() {
    let f = PerturbedFlow::new(BaseProfile::couette(), PerturbationProfile::gaussian(), 1.0, 0.2).unwrap();
    let p = convergence_order(&f, 512);
    assert!((p - 2.0).abs() < 0.1, "order {p}");
}

#[test]
fn jump_map_inverse_matches_direct_solve() {
    let m = 3.0;
    let a = lambda_m0(&BaseProfile::couette(), m).unwrap();
    let b = lambda_m0_fd(&BaseProfile::couette(), m, 4096);
    assert!((a - b).abs() < 1e-5, "{a} vs {b}");
}

#[test]
fn threshold_root_is_a_root() {
    let r = find_mstar(&BaseProfile::couette(), &PerturbationProfile::gaussian(), 0.1).unwrap();
    assert!(r.residual < 1e-10);
    assert!(r.trace_monotone());
    let f = PerturbedFlow::new(BaseProfile::couette(), PerturbationProfile::gaussian(), r.m_star, 0.1).unwrap();
    assert!((min_eigenvalue(&f).unwrap().lambda_min + 1.0).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sine_ground_state_shift(b in 0.1..1.5f64) {
        let f = PerturbedFlow::new(BaseProfile::sine(b).unwrap(), PerturbationProfile::gaussian(), 0.0, 0.1).unwrap();
        let l = min_eigenvalue(&f).unwrap().lambda_min;
        prop_assert!((l - (PI * PI / 4.0 - b * b)).abs() < 1e-8);
    }

    #[test]
    fn printed_map_couette_closed_form(a in 0.2..3.0f64) {
        let m = threshold_function_m(&BaseProfile::couette(), -a * a).unwrap();
        prop_assert!((m - 2.0 * (a * coth(a) - 1.0)).abs() < 1e-8);
    }

    #[test]
    fn jump_map_couette_closed_form(a in 0.2..3.0f64) {
        let m = threshold_map_jump(&BaseProfile::couette(), -a * a).unwrap();
        prop_assert!((m - 2.0 * a * coth(a)).abs() < 1e-8);
    }

    #[test]
    fn jump_map_inverse_round_trip(m in 2.2..8.0f64) {
        let l = lambda_m0(&BaseProfile::couette(), m).unwrap();
        prop_assert!((threshold_map_jump(&BaseProfile::couette(), l).unwrap() - m).abs() < 1e-8);
    }

    #[test]
    fn ground_state_decreases_in_amplitude(m in 0.0..4.0f64, dm in 0.05..1.0f64) {
        let at = |m: f64| {
            let f = PerturbedFlow::new(BaseProfile::couette(), PerturbationProfile::gaussian(), m, 0.1).unwrap();
            min_eigenvalue(&f).unwrap().lambda_min
        };
        prop_assert!(at(m + dm) < at(m));
    }
}
