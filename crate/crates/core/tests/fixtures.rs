use std::path::PathBuf;
use std::time::Instant;

use dacex_core::harness::{load_fixtures, TaskFixture};
use dacex_core::sketch::synthesize_spec;
use dacex_core::synth::SynthConfig;

fn fixtures() -> Vec<TaskFixture> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    load_fixtures(&root).expect("fixtures load")
}

#[test]
fn every_fixture_completes_from_its_full_example_set() {
    let fxs = fixtures();
    assert!(fxs.len() >= 15);
    let mut failed = Vec::new();
    for fx in &fxs {
        let cfg = fx.config(&SynthConfig::default()).unwrap();
        let start = Instant::now();
        let res = synthesize_spec(&fx.grid, &fx.spec, &cfg).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let ok = res.is_complete() && fx.fills_match(&res.bindings);
        eprintln!("{:<24} {:>7.3}s {}", fx.name, secs, if ok { "ok" } else { "FAILED" });
        for (h, p) in &res.bindings {
            eprintln!("    ?{h} = {p}");
        }
        if !ok {
            failed.push(fx.name.clone());
        }
    }
    assert!(failed.is_empty(), "fixtures not reproduced: {failed:?}");
}

#[test]
fn fixture_specs_round_trip() {
    for fx in fixtures() {
        let again = dacex_core::sketch::CompletionSpec::from_value(fx.spec.to_json()).unwrap();
        assert_eq!(again, fx.spec, "{}", fx.name);
    }
}
