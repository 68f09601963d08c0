//! Regression over a directory of fixtures: `name.map`, its sidecar
//! `name.expect.json` and an optional `name.toml` configuration.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use globinj::conditions::Status;
use globinj::verdict::Conclusion;
use serde::{Deserialize, Serialize};

use crate::config::AnalysisConfig;
use crate::pipeline::{run_analyze, Bundle};
use crate::AnalyzeError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedCheck {
    pub condition: String,
    pub subject: String,
    /// Accepted verdicts.
    pub verdict: Vec<Status>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedTopology {
    /// Index into the configured topology jobs.
    #[serde(default)]
    pub job: usize,
    pub level: f64,
    pub components: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    /// Accepted conclusions; empty when the fixture has no verdict.
    #[serde(default)]
    pub conclusion: Vec<Conclusion>,
    /// Mismatches are reported but do not fail the run.
    #[serde(default)]
    pub optional: bool,
    #[serde(default)]
    pub checks: Vec<ExpectedCheck>,
    #[serde(default)]
    pub topology: Vec<ExpectedTopology>,
    #[serde(default)]
    pub note: Option<String>,
}

impl Sidecar {
    pub fn from_json(text: &str) -> Result<Self, AnalyzeError> {
        serde_json::from_str(text).map_err(|e| AnalyzeError::Config(format!("sidecar: {e}")))
    }

    /// Differences between the bundle and the expectations.
    pub fn compare(&self, b: &Bundle) -> Vec<String> {
        let mut out = Vec::new();
        match (&b.verdict, self.conclusion.is_empty()) {
            (Some(v), false) if !self.conclusion.contains(&v.conclusion) => {
                out.push(format!("conclusion {} not in {}", v.conclusion, list(&self.conclusion)))
            }
            (None, false) => out.push("no verdict produced".into()),
            _ => {}
        }
        for c in &self.checks {
            match b.find(&c.condition, &c.subject) {
                None => out.push(format!("{} {}: no report", c.subject, c.condition)),
                Some(r) if !c.verdict.contains(&r.verdict) => {
                    out.push(format!("{} {}: {} not in {}", c.subject, c.condition, r.verdict, list(&c.verdict)))
                }
                _ => {}
            }
        }
        for t in &self.topology {
            let found = b.topology.get(t.job).and_then(|j| j.curves.iter().find(|c| c.level == t.level));
            match found {
                None => out.push(format!("topology job {} level {}: not traced", t.job, t.level)),
                Some(c) if c.components != t.components => out.push(format!(
                    "topology job {} level {}: {} components, expected {}",
                    t.job, t.level, c.components, t.components
                )),
                _ => {}
            }
        }
        out
    }
}

fn list<T: std::fmt::Display>(v: &[T]) -> String {
    format!("{{{}}}", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowStatus {
    Match,
    Mismatch,
    OptionalMismatch,
    Skipped,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRow {
    pub fixture: String,
    pub status: RowStatus,
    pub produced: Option<Conclusion>,
    pub expected: Vec<Conclusion>,
    pub differences: Vec<String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub rows: Vec<CorpusRow>,
}

impl CorpusSummary {
    pub fn failed(&self) -> bool {
        self.rows.iter().any(|r| matches!(r.status, RowStatus::Mismatch | RowStatus::Error))
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<24} {:<18} {:<20} {:<36} {:>8}", "fixture", "status", "produced", "expected", "seconds");
        for r in &self.rows {
            let status = serde_json::to_value(r.status).unwrap().as_str().unwrap().to_string();
            let produced = r.produced.map(|c| c.to_string()).unwrap_or_else(|| "-".into());
            let expected = if r.expected.is_empty() { "-".into() } else { list(&r.expected) };
            let _ = writeln!(out, "{:<24} {:<18} {:<20} {:<36} {:>8.2}", r.fixture, status, produced, expected, r.seconds);
            for d in &r.differences {
                let _ = writeln!(out, "    {d}");
            }
        }
        out
    }
}

pub fn fixtures(dir: &Path) -> Result<Vec<PathBuf>, AnalyzeError> {
    let mut maps: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| AnalyzeError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "map"))
        .collect();
    maps.sort();
    Ok(maps)
}

/// Runs every fixture; `out`, when given, receives one bundle directory per fixture.
pub fn run_corpus(dir: &Path, out: Option<&Path>, deterministic: bool) -> Result<CorpusSummary, AnalyzeError> {
    let mut summary = CorpusSummary::default();
    for map_path in fixtures(dir)? {
        let stem = map_path.file_stem().and_then(|s| s.to_str()).unwrap_or("?").to_string();
        let sidecar_path = dir.join(format!("{stem}.expect.json"));
        let row = |status, produced, expected, differences, seconds| CorpusRow {
            fixture: stem.clone(),
            status,
            produced,
            expected,
            differences,
            seconds,
        };
        let Ok(side_text) = fs::read_to_string(&sidecar_path) else {
            log::warn!("{}: no sidecar, skipped", map_path.display());
            summary.rows.push(row(RowStatus::Skipped, None, Vec::new(), vec!["missing sidecar".into()], 0.0));
            continue;
        };
        let start = Instant::now();
        let result = (|| {
            let sidecar = Sidecar::from_json(&side_text)?;
            let toml_path = dir.join(format!("{stem}.toml"));
            let cfg = match fs::read_to_string(&toml_path) {
                Ok(t) => AnalysisConfig::from_toml(&t)?,
                Err(_) => AnalysisConfig::default(),
            };
            let source = fs::read_to_string(&map_path).map_err(|e| AnalyzeError::io(&map_path, e))?;
            let bundle = run_analyze(&source, &cfg)?;
            if let Some(o) = out {
                crate::output::write_bundle(&bundle, &o.join(&stem), deterministic)?;
            }
            Ok::<_, AnalyzeError>((sidecar, bundle))
        })();
        let seconds = start.elapsed().as_secs_f64();
        match result {
            Ok((sidecar, bundle)) => {
                let diffs = sidecar.compare(&bundle);
                let status = match (diffs.is_empty(), sidecar.optional) {
                    (true, _) => RowStatus::Match,
                    (false, true) => RowStatus::OptionalMismatch,
                    (false, false) => RowStatus::Mismatch,
                };
                let produced = bundle.verdict.as_ref().map(|v| v.conclusion);
                log::info!("{stem}: {status:?} in {seconds:.1} s");
                summary.rows.push(row(status, produced, sidecar.conclusion.clone(), diffs, seconds));
            }
            Err(e) => summary.rows.push(row(RowStatus::Error, None, Vec::new(), vec![e.to_string()], seconds)),
        }
    }
    Ok(summary)
}
