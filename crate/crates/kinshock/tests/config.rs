use std::path::Path;

use approx::assert_relative_eq;
use kinshock::config::{load_config, preset, validation_errors, ConfigError, ConfigLayer, RunConfig, PRESETS};

fn layer(text: &str) -> ConfigLayer {
    ConfigLayer::from_toml_str(text, Path::new("test.toml")).expect("valid toml")
}

#[test]
fn defaults_are_the_reference_run() {
    let c = load_config(None, &ConfigLayer::default()).unwrap();
    assert_eq!(c, RunConfig::default());
    assert_eq!((c.epsilon, c.order, c.gamma, c.s, c.kappa), (0.05, 3, 0.5, 0.25, 0.05));
    assert_eq!((c.eta, c.domain, c.grid), (5e-4, 10.0, 801));
    assert!(validation_errors(&c).is_empty());
}

#[test]
fn inverse_power_presets() {
    let p10 = load_config(
        None,
        &ConfigLayer {
            preset: Some("p10".into()),
            ..ConfigLayer::default()
        },
    )
    .unwrap();
    assert_relative_eq!(p10.s, 1.0 / 9.0, max_relative = 1e-12);
    assert_relative_eq!(p10.gamma, 5.0 / 9.0, max_relative = 1e-12);
    assert_eq!(p10.preset.as_deref(), Some("p10"));

    let p7 = preset("p7").unwrap();
    assert_relative_eq!(p7.s.unwrap(), 1.0 / 6.0, max_relative = 1e-12);
    assert_relative_eq!(p7.gamma.unwrap(), 1.0 / 3.0, max_relative = 1e-12);
    for name in PRESETS {
        assert!(preset(name).is_some(), "{name}");
    }
}

#[test]
fn flag_overrides_file_which_overrides_preset() {
    let file = layer("preset = \"p10\"\nepsilon = 0.1\ngamma = 0.4\n");
    let flags = ConfigLayer {
        epsilon: Some(0.05),
        ..ConfigLayer::default()
    };
    let c = load_config(Some(&file), &flags).unwrap();
    assert_eq!(c.epsilon, 0.05);
    assert_eq!(c.gamma, 0.4);
    assert_relative_eq!(c.s, 1.0 / 9.0, max_relative = 1e-12);
}

#[test]
fn out_of_range_values_are_validation_errors() {
    let bad = ConfigLayer {
        s: Some(0.6),
        ..ConfigLayer::default()
    };
    match load_config(None, &bad) {
        Err(ConfigError::Validation(msgs)) => assert!(msgs.iter().any(|m| m.starts_with("s = 0.6"))),
        other => panic!("expected a validation error, got {other:?}"),
    }
    let many = layer("epsilon = 0.2\norder = 9\ngrid = 800\nkappa = -1.0\nstage_until = \"nowhere\"\n");
    match load_config(Some(&many), &ConfigLayer::default()) {
        Err(ConfigError::Validation(msgs)) => assert_eq!(msgs.len(), 5, "{msgs:?}"),
        other => panic!("expected a validation error, got {other:?}"),
    }
    let unknown = ConfigLayer {
        preset: Some("p11".into()),
        ..ConfigLayer::default()
    };
    assert!(matches!(load_config(None, &unknown), Err(ConfigError::Validation(_))));
}

#[test]
fn unknown_keys_and_missing_files() {
    assert!(matches!(
        ConfigLayer::from_toml_str("epsilonn = 0.05", Path::new("x.toml")),
        Err(ConfigError::Parse { .. })
    ));
    assert!(matches!(
        ConfigLayer::from_file(Path::new("/nonexistent/kinshock.toml")),
        Err(ConfigError::Io { .. })
    ));
}

#[test]
fn file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "order = 4\ndomain = 12.0\n[tolerances]\nfixed_point = 1e-9\nmax_iterations = 10\n").unwrap();
    let c = load_config(Some(&ConfigLayer::from_file(&path).unwrap()), &ConfigLayer::default()).unwrap();
    assert_eq!((c.order, c.domain), (4, 12.0));
    assert_eq!(c.tolerances.max_iterations, 10);
    let text = toml::to_string(&c).unwrap();
    let again = layer(&text);
    assert_eq!(load_config(Some(&again), &ConfigLayer::default()).unwrap(), c);
}
