use proptest::prelude::*;

use rydsense::cli::config::format_float;
use rydsense::cli::{AxisSpec, ConfigError, Preset, RunConfig};

#[test]
fn out_of_range_values_name_key_and_bound() {
    let err = RunConfig::parse("scheme.r = -0.5\n").unwrap_err();
    match err {
        ConfigError::OutOfRange { key, .. } => assert_eq!(key, "scheme.r"),
        other => panic!("{other}"),
    }
    let err = RunConfig::parse("numeric.quadrature_points = 200\n").unwrap_err();
    assert!(
        err.to_string().contains("numeric.quadrature_points"),
        "{err}"
    );
}

#[test]
fn malformed_lines_carry_their_number() {
    match RunConfig::parse("preset = hot_default\n\nnot a pair\n").unwrap_err() {
        ConfigError::Parse { line, .. } => assert_eq!(line, 3),
        other => panic!("{other}"),
    }
    match RunConfig::parse("scheme.alpha = many\n").unwrap_err() {
        ConfigError::OutOfRange { key, value, .. } => {
            assert_eq!((key.as_str(), value.as_str()), ("scheme.alpha", "many"))
        }
        other => panic!("{other}"),
    }
}

#[test]
fn unknown_preset_is_rejected() {
    let err = RunConfig::parse("preset = lukewarm\n").unwrap_err();
    assert!(err.to_string().contains("preset"), "{err}");
}

#[test]
fn overrides_apply_on_top_of_the_preset_regardless_of_order() {
    let a = RunConfig::parse("scheme.r = 1.5\npreset = hot_default\n").unwrap();
    let b = RunConfig::parse("preset = hot_default\nscheme.r = 1.5\n").unwrap();
    assert_eq!(a, b);
    assert_eq!(a.r, 1.5);
    assert!(a.hot);
}

#[test]
fn echo_reparses_to_the_same_configuration() {
    for preset in Preset::ALL {
        let mut config = RunConfig::preset(preset);
        config.set("drive.delta_c_hz", "1.25e5").unwrap();
        config.set("sweep.r.count", "4").unwrap();
        let text = config.to_string();
        assert_eq!(RunConfig::parse(&text).unwrap(), config);
    }
}

#[test]
fn log_axes_hit_every_decade_exactly() {
    let v = AxisSpec::log(1e-6, 1e-2, 41).values();
    for (k, x) in v.iter().enumerate().step_by(10) {
        assert_eq!(*x, 10f64.powi(k as i32 / 10 - 6));
    }
}

proptest! {
    #[test]
    fn floats_round_trip_through_their_text(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let text = format_float(x);
        prop_assert_eq!(text.parse::<f64>().unwrap(), x);
    }

    #[test]
    fn linear_axes_are_mirror_symmetric(half in 1e-3f64..1e9, count in 2usize..400) {
        let v = AxisSpec::linear(-half, half, count).values();
        prop_assert_eq!(v.len(), count);
        prop_assert_eq!(v[0], -half);
        prop_assert_eq!(v[count - 1], half);
        for k in 0..count {
            prop_assert_eq!(v[k], -v[count - 1 - k]);
        }
    }
}
