use std::path::PathBuf;

use infoplan_bench::config::{BenchConfig, Experiment};

fn config_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

#[test]
fn shipped_configs_equal_the_presets() {
    for e in Experiment::ALL {
        for (full, suffix) in [(false, ""), (true, ".full")] {
            let path = config_dir().join(format!("{}{suffix}.json", e.name()));
            let loaded = BenchConfig::load(e, full, Some(&path)).unwrap();
            assert_eq!(loaded, BenchConfig::preset(e, full), "{}", path.display());
            // A full file is self-contained: it also resolves from the other preset.
            assert_eq!(BenchConfig::load(e, !full, Some(&path)).unwrap(), loaded);
        }
    }
}

#[test]
fn missing_config_is_an_io_error() {
    let err = BenchConfig::load(Experiment::TimeVsK, false, Some(&config_dir().join("nope.json"))).unwrap_err();
    assert!(err.to_string().contains("nope.json"), "{err}");
}
