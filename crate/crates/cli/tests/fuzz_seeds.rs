// The fuzz seed corpora are valid inputs; each one goes through the same
// entry point its target drives.

use std::fs;
use std::path::Path;

use globinj::conditions::ConditionReport;
use globinj::expr::parse_map;
use globinj::scan::{RadialScan, Witness};
use globinj_cli::config::parse_combination;
use globinj_cli::{AnalysisConfig, Sidecar};

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(String, String)> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

fn all_ok<T, E: std::fmt::Debug>(target: &str, parse: impl Fn(&str) -> Result<T, E>) {
    for (name, text) in seeds(target) {
        if let Err(e) = parse(&text) {
            panic!("{target}/{name}: {e:?}");
        }
    }
}

#[test]
fn seeds_are_accepted() {
    all_ok("parse_map", parse_map);
    all_ok("config_toml", |t| AnalysisConfig::from_toml(t).and_then(|c| c.validate().map(|_| c)));
    all_ok("scan_csv", RadialScan::from_csv);
    all_ok("scan_json", RadialScan::from_json);
    all_ok("witness_csv", Witness::from_csv);
    all_ok("report_json", ConditionReport::from_json);
    all_ok("sidecar_json", Sidecar::from_json);
    all_ok("combination", parse_combination);
}

#[test]
fn written_scans_read_back() {
    for (name, text) in seeds("scan_csv") {
        let s = RadialScan::from_csv(&text).unwrap();
        assert_eq!(RadialScan::from_csv(&s.to_csv()).unwrap(), s, "{name}");
    }
    for (name, text) in seeds("witness_csv") {
        let w = Witness::from_csv(&text).unwrap();
        assert_eq!(Witness::from_csv(&w.to_csv()).unwrap(), w, "{name}");
    }
}
