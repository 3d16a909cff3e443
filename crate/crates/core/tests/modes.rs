use num_complex::Complex64;
use proptest::prelude::*;
use shear_spectra::modes::{continue_branch, howard_region, refine_root, stability_scan, wronskian_anywhere, BranchOptions, ScanOptions};
use shear_spectra::threshold::find_mstar;
use shear_spectra::{BaseProfile, PerturbationProfile, PerturbedFlow};

fn flow(m: f64) -> shear_spectra::Result<PerturbedFlow> {
    PerturbedFlow::new(BaseProfile::couette(), PerturbationProfile::gaussian(), m, 0.1)
}

#[test]
fn branch_is_purely_imaginary_and_growing() {
    let ms = find_mstar(&BaseProfile::couette(), &PerturbationProfile::gaussian(), 0.1).unwrap().m_star;
    let b = continue_branch(&flow, ms, 1.1 * ms, 4, BranchOptions::default()).unwrap();
    let region = howard_region(&flow(1.1 * ms).unwrap());
    let mut prev = 0.0;
    for s in b.samples.iter().skip(1) {
        assert!(s.c.re.abs() < 1e-8);
        assert!(s.c.im > prev);
        assert!(region.contains(s.c));
        prev = s.c.im;
    }
    // Im c grows linearly off the threshold
    assert!(b.ratio_constant() > 0.0 && b.ratio_constant().is_finite());
}

#[test]
fn refined_root_zeroes_the_wronskian() {
    let ms = find_mstar(&BaseProfile::couette(), &PerturbationProfile::gaussian(), 0.1).unwrap().m_star;
    let f = flow(1.1 * ms).unwrap();
    let root = refine_root(&f, Complex64::new(0.0, 5e-3), -1.0).unwrap();
    let w = wronskian_anywhere(&f, root.c, -1.0).unwrap();
    let scale = wronskian_anywhere(&f, root.c + Complex64::new(0.0, 1e-3), -1.0).unwrap().norm();
    assert!(w.norm() < 1e-8 * scale, "{} vs {scale}", w.norm());
}

#[test]
fn couette_has_no_unstable_modes() {
    let z = stability_scan(&flow(0.0).unwrap(), &[-1.0, -4.0], ScanOptions::default()).unwrap();
    assert_eq!(z.total(), 0);
    assert!(z.integrality_defect() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn couette_wronskian_never_vanishes(re in -0.9..0.9f64, im in 0.01..0.5f64) {
        let w = wronskian_anywhere(&flow(0.0).unwrap(), Complex64::new(re, im), -1.0).unwrap();
        prop_assert!((w - 2.0f64.sinh()).norm() < 1e-8);
    }
}
