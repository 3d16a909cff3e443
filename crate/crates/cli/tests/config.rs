use proptest::prelude::*;
use workbench::Config;

#[test]
fn parses_comments_and_whitespace() {
    let c = Config::parse("# header\nbase.name = sine\n  base.params.b=0.5  \n\ngamma = 0.05\n").unwrap();
    assert_eq!(c.get("base.name"), Some("sine"));
    assert_eq!(c.gamma().unwrap(), 0.05);
    assert_eq!(c.base().unwrap(), shear_spectra::BaseProfile::sine(0.5).unwrap());
}

#[test]
fn rejects_duplicates_and_bad_keys() {
    assert!(Config::parse("m = 1\nm = 2\n").is_err());
    assert!(Config::parse("bad key = 1\n").is_err());
    assert!(Config::parse("no_equals_sign\n").is_err());
}

#[test]
fn unknown_profiles_and_tolerances_are_config_errors() {
    for text in ["base.name = parabola\n", "pert.name = box\n"] {
        let c = Config::parse(text).unwrap();
        assert!(c.flow().is_err(), "{text}");
    }
    assert!(Config::parse("tol.bogus = 1e-3\n").unwrap().tolerances().is_err());
    assert!(Config::parse("tol.mstar = -1\n").unwrap().tolerances().is_err());
    assert_eq!(Config::parse("tol.mstar = 1e-6\n").unwrap().tolerances().unwrap().get("mstar"), 1e-6);
}

proptest! {
    #[test]
    fn text_round_trip(entries in prop::collection::btree_map("[a-z][a-z0-9_]{0,6}(\\.[a-z0-9_]{1,6}){0,2}", "[A-Za-z0-9_.,+-]{1,16}", 0..12)) {
        let mut c = Config::default();
        for (k, v) in &entries {
            c.set(k, v).unwrap();
        }
        let back = Config::parse(&c.to_text()).unwrap();
        prop_assert_eq!(back.entries(), &entries);
    }

    #[test]
    fn float_values_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let c = Config::parse(&format!("m = {}\n", workbench::io::fmt_f64(x))).unwrap();
        prop_assert_eq!(c.m().unwrap().to_bits(), x.to_bits());
    }
}
