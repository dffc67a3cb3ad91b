//! The example configs shipped in `configs/` parse and validate.

use std::path::PathBuf;

use nlsv_core::experiments::Branch;
use nlsv_core::experiments::DataFamily;
use nlsv_core::io::{parse_config, GrowthSpec, SweepSpec};

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

#[test]
fn run_configs_validate() {
    for name in ["super.toml", "sub.toml", "modulate.toml", "conservation.toml"] {
        let spec = parse_config(&config(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(format!("{}.toml", spec.name), name);
    }
    let sup = parse_config(&config("super.toml")).unwrap();
    assert_eq!(sup.family, DataFamily::ScaledGroundstate { branch: Some(Branch::Super), c: None });
}

#[test]
fn study_configs_validate() {
    let sweep = SweepSpec::parse(&config("sweep.toml")).unwrap();
    assert_eq!(sweep.distances, vec![0.0, 3.0, 6.0, 9.0]);
    let growth = GrowthSpec::parse(&config("l5growth.toml")).unwrap();
    assert_eq!(growth.eps, vec![1.0, 0.5, 0.25, 0.125]);
    assert_eq!(growth.growth.m, 96);
}
