use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn globinj(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_globinj")).args(args).output().expect("binary runs")
}

const QUICK: &str = "[checks.schedule]\nr_min = 1.0\nr_max = 1e4\npoints_per_decade = 8\n[checks.scan]\nstarts = 12\n";

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

/// Every file below `dir`, relative path to bytes.
fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn quadratic_triangular_is_bijective_evidence() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("b");
    let map = corpus().join("quadratic_triangular.map");
    let o = globinj(&["analyze", "--map", map.to_str().unwrap(), "--out", out.to_str().unwrap(), "--deterministic"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&out.join("verdict.json"));
    assert_eq!(v["content"]["conclusion"], "bijective-evidence");
    assert_eq!(v["schema"], 1);
    // every report embeds the configuration it ran with
    assert!(v["config"]["checks"]["schedule"]["r_max"].is_number());
    assert!(out.join("plots/spectral.svg").exists());
}

#[test]
fn king_rabier_only() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("k");
    let cfg = tmp.path().join("quick.toml");
    fs::write(&cfg, QUICK).unwrap();
    let map = corpus().join("king_h.map");
    let o = globinj(&[
        "analyze", "--map", map.to_str().unwrap(), "--config", cfg.to_str().unwrap(),
        "--condition", "rabier", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let reports: Vec<PathBuf> = fs::read_dir(out.join("reports")).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(reports.len(), 1, "{reports:?}");
    let r = read_json(&reports[0]);
    assert_eq!(r["content"]["condition"], "rabier");
    assert_eq!(r["content"]["verdict"], "fails");
    let cv = r["content"]["critical_value"][0].as_f64().unwrap();
    assert!(cv.abs() <= 0.05, "critical value {cv}");
    assert!(!out.join("verdict.json").exists());
    // non-deterministic runs stamp their plots
    let plot = fs::read_dir(out.join("plots")).unwrap().next().unwrap().unwrap().path();
    assert!(fs::read_to_string(plot).unwrap().contains("generated-unix-seconds"));
}

#[test]
fn empty_map_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let map = tmp.path().join("empty.map");
    fs::write(&map, "# nothing here\n").unwrap();
    let o = globinj(&["analyze", "--map", map.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
}

#[test]
fn bad_flags_are_rejected() {
    let o = globinj(&["analyze", "--map", "x.map", "--combination", "0,1"]);
    assert!(!o.status.success());
    let tmp = tempfile::tempdir().unwrap();
    let map = corpus().join("identity3.map");
    let o = globinj(&["analyze", "--map", map.to_str().unwrap(), "--condition", "nope", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn empty_corpus_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = globinj(&["corpus", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let table = String::from_utf8_lossy(&o.stdout);
    assert_eq!(table.lines().count(), 1, "{table}");
}

#[test]
fn flipped_sidecar_fails_the_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    fs::copy(corpus().join("identity3.map"), tmp.path().join("identity3.map")).unwrap();
    fs::write(tmp.path().join("identity3.toml"), QUICK).unwrap();
    fs::write(tmp.path().join("identity3.expect.json"), r#"{"conclusion": ["non-injective"]}"#).unwrap();
    let o = globinj(&["corpus", tmp.path().to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(table.contains("mismatch"), "{table}");

    fs::write(tmp.path().join("identity3.expect.json"), r#"{"conclusion": ["bijective-evidence"]}"#).unwrap();
    let o = globinj(&["corpus", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn deterministic_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("quick.toml");
    fs::write(&cfg, format!("seed = 11\n{QUICK}")).unwrap();
    let map = corpus().join("exp_pair_rotated.map");
    // the output path is part of the recorded configuration, so both runs share it
    let out = tmp.path().join("out");
    let run = || {
        let _ = fs::remove_dir_all(&out);
        let o = globinj(&[
            "analyze", "--map", map.to_str().unwrap(), "--config", cfg.to_str().unwrap(),
            "--out", out.to_str().unwrap(), "--deterministic",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        tree(&out)
    };
    let (a, b) = (run(), run());
    assert!(a.iter().any(|(p, _)| p.extension().is_some_and(|x| x == "csv")));
    assert_eq!(a.len(), b.len());
    for ((pa, da), (pb, db)) in a.iter().zip(&b) {
        assert_eq!(pa, pb);
        assert!(da == db, "{} differs", pa.display());
    }
}
