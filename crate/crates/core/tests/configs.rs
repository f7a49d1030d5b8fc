use std::path::PathBuf;

use fiberair::harness::ExperimentConfig;

fn shipped(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.toml"));
    ExperimentConfig::load(&path).unwrap()
}

#[test]
fn shipped_configs_match_presets() {
    for name in ["desk", "paper"] {
        assert_eq!(shipped(name), ExperimentConfig::preset(name).unwrap(), "{name}");
    }
}

#[test]
fn presets_round_trip_through_toml() {
    for name in ["desk", "paper"] {
        let c = ExperimentConfig::preset(name).unwrap();
        let back = ExperimentConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.digest(), c.digest());
    }
}
