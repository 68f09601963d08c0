//! Writes a bundle to disk. Everything except the SVG timestamp is a pure
//! function of the bundle, so repeated runs give identical JSON and CSV.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use globinj::conditions::ConditionReport;
use globinj::scan::RadialScan;
use serde::Serialize;

use crate::config::AnalysisConfig;
use crate::pipeline::Bundle;
use crate::plot;
use crate::AnalyzeError;

pub const OUTPUT_SCHEMA: u32 = 1;

/// Every JSON output carries the map and the configuration it came from.
#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: u32,
    map: &'a str,
    config: &'a AnalysisConfig,
    #[serde(flatten)]
    body: T,
}

#[derive(Serialize)]
struct Named<'a, T: Serialize> {
    #[serde(rename = "kind")]
    kind: &'static str,
    content: &'a T,
}

/// Keeps `[A-Za-z0-9._=-]`, maps everything else to `_`.
pub fn file_safe(s: &str) -> String {
    let out: String = s
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '=' | '-') { c } else { '_' })
        .collect();
    out.trim_matches('_').to_string()
}

struct Writer {
    root: PathBuf,
    written: Vec<PathBuf>,
    stamp: Option<u64>,
}

impl Writer {
    fn put(&mut self, rel: &str, text: &str) -> Result<(), AnalyzeError> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| AnalyzeError::io(dir, e))?;
        }
        fs::write(&path, text).map_err(|e| AnalyzeError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, rel: &str, b: &Bundle, kind: &'static str, body: &T) -> Result<(), AnalyzeError> {
        let env = Envelope { schema: OUTPUT_SCHEMA, map: b.source.trim_end(), config: &b.config, body: Named { kind, content: body } };
        let mut text = serde_json::to_string_pretty(&env).expect("outputs serialize");
        text.push('\n');
        self.put(rel, &text)
    }
}

fn collect_scans<'a>(r: &'a ConditionReport, out: &mut Vec<&'a RadialScan>) {
    out.extend(r.scan_data.iter());
    for p in &r.parts {
        collect_scans(p, out);
    }
}

fn collect_witnesses<'a>(r: &'a ConditionReport, out: &mut Vec<&'a ConditionReport>) {
    if r.witness.is_some() {
        out.push(r);
    }
    for p in &r.parts {
        collect_witnesses(p, out);
    }
}

/// Unix seconds for SVG metadata, or `None` when deterministic output is asked for.
pub fn svg_stamp(deterministic: bool) -> Option<u64> {
    if deterministic {
        return None;
    }
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).ok().map(|d| d.as_secs())
}

pub fn write_bundle(b: &Bundle, dir: &Path, deterministic: bool) -> Result<Vec<PathBuf>, AnalyzeError> {
    let mut w = Writer { root: dir.to_path_buf(), written: Vec::new(), stamp: svg_stamp(deterministic) };
    w.put("config.toml", &b.config.to_toml())?;

    let mut summary = String::new();
    if let Some(v) = &b.verdict {
        w.json("verdict.json", b, "verdict", v)?;
        summary.push_str(&v.summary());
    } else {
        summary.push_str("no injectivity verdict for a non-square map\n");
    }
    for n in &b.notes {
        summary.push_str(&format!("note: {n}\n"));
    }
    for r in b.reports() {
        summary.push_str(&format!("{} {}: {} ({})\n", r.subject, r.condition, r.verdict, r.rationale));
    }
    for t in &b.topology {
        for c in &t.curves {
            summary.push_str(&format!(
                "level curves of {} at {}: {} components ({} clipped) in [-{}, {}]^2\n",
                c.function,
                c.level,
                c.components,
                c.clipped(),
                c.half_width,
                c.half_width
            ));
        }
    }
    w.put("verdict.txt", &summary)?;

    let mut scans: BTreeMap<String, &RadialScan> = BTreeMap::new();
    let mut witness_reports = Vec::new();
    for (k, r) in b.reports().enumerate() {
        let stem = format!("{k:03}_{}_{}", r.condition, file_safe(&r.subject));
        w.json(&format!("reports/{stem}.json"), b, "condition-report", r)?;
        let mut ss = Vec::new();
        collect_scans(r, &mut ss);
        for s in ss {
            let mut id = file_safe(&globinj::conditions::scan_id(s));
            // identical ids from different reports describe the same scan
            while scans.get(&id).is_some_and(|prev| *prev != s) {
                id.push('_');
            }
            scans.insert(id, s);
        }
        collect_witnesses(r, &mut witness_reports);
    }
    for (id, s) in &scans {
        w.put(&format!("scans/{id}.csv"), &s.to_csv())?;
        let pts: Vec<(f64, f64)> = s.valid().map(|(p, v)| (p.r, v)).collect();
        let svg = plot::profile_plot(&format!("{} {}", s.map, s.objective), &s.objective, &[(&s.objective, pts)], w.stamp);
        w.put(&format!("plots/{id}.svg"), &svg)?;
    }
    for (k, r) in witness_reports.iter().enumerate() {
        let wit = r.witness.as_ref().expect("filtered");
        w.put(&format!("witnesses/{k:03}_{}_{}.csv", r.condition, file_safe(&r.subject)), &wit.to_csv())?;
    }

    for r in &b.extra {
        if let Some(spec) = &r.spectral {
            let eig: Vec<[f64; 2]> = spec.samples.iter().flat_map(|s| s.eigenvalues.iter().copied()).collect();
            let svg = plot::spectrum_plot(&format!("sampled eigenvalues, verdict {}", r.verdict), &eig, spec.epsilon, w.stamp);
            w.put("plots/spectral.svg", &svg)?;
        }
    }
    if let Some(p) = &b.properness {
        w.json("properness.json", b, "properness", p)?;
        for (k, t) in p.witnesses.iter().enumerate() {
            w.put(&format!("witnesses/nonproper_{k:03}.csv"), &t.witness.to_csv())?;
        }
    }
    if let Some(c) = &b.collision {
        w.json("collision.json", b, "collision", c)?;
    }
    for (j, t) in b.topology.iter().enumerate() {
        w.json(&format!("topology/{j:02}.json"), b, "topology", t)?;
        for c in &t.curves {
            let stem = format!("topology/{j:02}_level_{}", file_safe(&format!("{:?}", c.level)));
            w.put(&format!("{stem}.csv"), &c.to_csv())?;
            w.put(&format!("{stem}.svg"), &c.to_svg())?;
        }
    }
    Ok(w.written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_names_are_tame() {
        assert_eq!(file_safe("f[1,2].g2|{g1=0.5}"), "f_1_2_.g2__g1=0.5");
        assert_eq!(file_safe("f1"), "f1");
    }
}
