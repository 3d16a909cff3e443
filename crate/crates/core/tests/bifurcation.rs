use proptest::prelude::*;
use shear_spectra::bifurcation::{barycentric, build_vorticity_map, chebyshev, clenshaw_curtis, kernel_mode, ChebGrid, Construction, MAP_SAMPLES};
use shear_spectra::threshold::min_eigenvalue;
use shear_spectra::{BaseProfile, PerturbationProfile, PerturbedFlow};

fn flow(m: f64) -> PerturbedFlow {
    PerturbedFlow::new(BaseProfile::couette(), PerturbationProfile::gaussian(), m, 0.1).unwrap()
}

#[test]
fn kernel_wavenumber_matches_ground_state() {
    let f = flow(3.3);
    let k = kernel_mode(&f, &ChebGrid::new(128)).unwrap();
    let l = min_eigenvalue(&f).unwrap().lambda_min;
    assert!(l < 0.0);
    assert!((k.k0_sq + l).abs() < 1e-6, "{} vs {}", k.k0_sq, -l);
}

#[test]
fn vorticity_map_reproduces_base_vorticity() {
    let f = flow(3.3);
    let map = build_vorticity_map(&f, Construction::Plain, MAP_SAMPLES).unwrap();
    assert!(map.c1_mismatch() < 1e-6);
    for (s, y) in map.s.iter().zip(&map.y).step_by(97) {
        let exact = f.eval_raw(*y, 1);
        assert!((map.eval(*s).0 - exact).abs() < 1e-8 * (1.0 + exact.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn chebyshev_differentiates_polynomials(c in prop::collection::vec(-1.0..1.0f64, 1..12)) {
        let (x, d) = chebyshev(16);
        let p = |t: f64| c.iter().rev().fold(0.0, |a, ci| a * t + ci);
        let dp = |t: f64| c.iter().enumerate().skip(1).rev().fold(0.0, |a, (i, ci)| a * t + i as f64 * ci);
        let f: Vec<f64> = x.iter().map(|&t| p(t)).collect();
        for (i, &t) in x.iter().enumerate() {
            let v: f64 = d[i].iter().zip(&f).map(|(a, b)| a * b).sum();
            prop_assert!((v - dp(t)).abs() < 1e-10);
        }
    }

    #[test]
    fn clenshaw_curtis_integrates_polynomials(c in prop::collection::vec(-1.0..1.0f64, 1..16)) {
        let n = 16;
        let (x, _) = chebyshev(n);
        let w = clenshaw_curtis(n);
        let p = |t: f64| c.iter().rev().fold(0.0, |a, ci| a * t + ci);
        let exact: f64 = c.iter().enumerate().map(|(i, ci)| if i % 2 == 0 { 2.0 * ci / (i as f64 + 1.0) } else { 0.0 }).sum();
        let q: f64 = x.iter().zip(&w).map(|(t, wi)| wi * p(*t)).sum();
        prop_assert!((q - exact).abs() < 1e-12);
    }

    #[test]
    fn barycentric_interpolates_polynomials(c in prop::collection::vec(-1.0..1.0f64, 1..12), t in -1.0..1.0f64) {
        let (x, _) = chebyshev(16);
        let p = |t: f64| c.iter().rev().fold(0.0, |a, ci| a * t + ci);
        let f: Vec<f64> = x.iter().map(|&s| p(s)).collect();
        prop_assert!((barycentric(&x, &f, t) - p(t)).abs() < 1e-12);
    }
}
