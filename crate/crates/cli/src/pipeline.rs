use globinj::conditions::{
    self, build_restricted_chain, check_balreira, check_chain_integral, check_chain_rabier, check_rabier, check_spectral,
    fibration_from, integral_from, palais_smale_from, rabier_from, ChainScan, CheckConfig, ConditionReport, GradientScan,
    Status,
};
use globinj::expr::{parse_map, ExprMap};
use globinj::scan::{mix64, random_sphere_point};
use globinj::topology::{bifurcation_scan, trace_named, BifurcationScan, LevelCurveSet};
use globinj::verdict::{
    aggregate_verdict, collision_search, expected_subsets, nonproper_witness_search, CollisionPair, CombinationReports,
    Conclusion, PropernessEvidence, Verdict, VerdictInput,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{AnalysisConfig, TopologyJob, CHAIN_INTEGRAL, CHAIN_RABIER, COLLISION, NONPROPER, TOPOLOGY};
use crate::AnalyzeError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyResult {
    pub job: TopologyJob,
    pub curves: Vec<LevelCurveSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bifurcation: Option<BifurcationScan>,
}

/// Everything one analysis produced, before anything is written.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub source: String,
    pub map: ExprMap,
    /// The effective configuration (global seed applied).
    pub config: AnalysisConfig,
    pub combinations: Vec<CombinationReports>,
    /// Map-level reports: spectral, Balreira.
    pub extra: Vec<ConditionReport>,
    pub properness: Option<PropernessEvidence>,
    pub collision: Option<CollisionPair>,
    pub topology: Vec<TopologyResult>,
    /// Only square maps get a verdict.
    pub verdict: Option<Verdict>,
    pub notes: Vec<String>,
}

impl Bundle {
    /// Every report, combinations first, without nesting.
    pub fn reports(&self) -> impl Iterator<Item = &ConditionReport> {
        self.combinations.iter().flat_map(|c| c.reports.iter()).chain(self.extra.iter())
    }

    pub fn find(&self, condition: &str, subject: &str) -> Option<&ConditionReport> {
        self.reports().find(|r| r.condition == condition && r.subject == subject)
    }

    /// 0 on a conclusive run, 2 when nothing conclusive came out.
    pub fn exit_code(&self) -> i32 {
        let inconclusive = match &self.verdict {
            Some(v) => v.conclusion == Conclusion::Inconclusive,
            None => self.reports().all(|r| r.verdict == Status::Inconclusive) && self.topology.is_empty(),
        };
        if inconclusive {
            2
        } else {
            0
        }
    }
}

/// `f3` for single components, `f[1,3]` for larger selections.
pub fn subject_name(subset: &[usize]) -> String {
    match subset {
        [i] => format!("f{i}"),
        _ => format!("f[{}]", subset.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")),
    }
}

pub fn run_analyze(source: &str, cfg: &AnalysisConfig) -> Result<Bundle, AnalyzeError> {
    cfg.validate()?;
    let cfg = cfg.effective();
    let map = parse_map(source).map_err(|e| AnalyzeError::Parse(e.to_string()))?;
    let (n, m) = (map.n_in(), map.n_out());
    if m > n {
        return Err(AnalyzeError::Input(format!("map has {m} components but only {n} variables")));
    }
    let mut notes = Vec::new();
    let subsets: Vec<Vec<usize>> = if m == 1 {
        vec![vec![1]]
    } else if m == n {
        expected_subsets(n)
    } else {
        vec![(1..=m).collect()]
    };
    for s in &cfg.combinations {
        if !subsets.contains(s) {
            return Err(AnalyzeError::Config(format!("combination {s:?} is not one of {subsets:?}")));
        }
    }
    let selected: Vec<&Vec<usize>> = subsets.iter().filter(|s| cfg.wants_combination(s)).collect();
    if selected.len() < subsets.len() {
        notes.push(format!("combination filter: {} of {} checked", selected.len(), subsets.len()));
    }

    let batteries: Vec<Result<CombinationReports, AnalyzeError>> = selected
        .par_iter()
        .map(|s| {
            let idx: Vec<usize> = s.iter().map(|i| i - 1).collect();
            let g = map.select(&idx).map_err(|e| AnalyzeError::Input(e.to_string()))?;
            let subject = subject_name(s);
            let reports = if g.n_out() == 1 { scalar_battery(&g, &subject, &cfg)? } else { vector_battery(&g, &subject, &cfg) };
            Ok(CombinationReports { subset: s.to_vec(), reports })
        })
        .collect();
    let mut combinations = batteries.into_iter().collect::<Result<Vec<_>, _>>()?;
    for s in &subsets {
        if !combinations.iter().any(|c| &c.subset == s) {
            combinations.push(CombinationReports { subset: s.clone(), reports: Vec::new() });
        }
    }
    combinations.sort_by(|a, b| a.subset.cmp(&b.subset));

    let mut extra = Vec::new();
    let mut properness = None;
    let mut collision = None;
    if map.is_square() {
        if cfg.wants(conditions::SPECTRAL) {
            extra.push(check_spectral(&map, cfg.spectral_eps, &cfg.checks).map_err(check_err)?);
        }
        if cfg.wants(conditions::BALREIRA) && cfg.balreira_k > 0 {
            if cfg.balreira_k <= n {
                extra.push(check_balreira(&map, cfg.balreira_k, "f", &cfg.checks).map_err(check_err)?);
            } else {
                notes.push(format!("balreira_k = {} exceeds n = {n}; skipped", cfg.balreira_k));
            }
        }
        if cfg.wants(NONPROPER) {
            let targets = far_targets(&map, &combinations);
            properness = Some(
                nonproper_witness_search(&map, &targets, &cfg.properness, &cfg.checks.scan).map_err(check_err)?,
            );
        }
        if cfg.wants(COLLISION) {
            collision = collision_search(&map, cfg.seed, &cfg.collision);
        }
    }

    let mut topology = Vec::new();
    if cfg.wants(TOPOLOGY) {
        for job in &cfg.topology {
            topology.push(run_topology(job)?);
        }
    }

    let verdict = if map.is_square() {
        let empty = PropernessEvidence::default();
        let spectral = extra.iter().find(|r| r.condition == conditions::SPECTRAL);
        let v = aggregate_verdict(&VerdictInput {
            n,
            combinations: &combinations,
            properness: properness.as_ref().unwrap_or(&empty),
            assert_codim2: cfg.assert_codim2,
            spectral,
            collision: collision.as_ref(),
        })
        .map_err(|e| AnalyzeError::Input(e.to_string()))?;
        Some(v)
    } else {
        notes.push(format!("ℝ^{n} → ℝ^{m} is not square: conditions only, no injectivity verdict"));
        None
    };
    Ok(Bundle { source: source.to_string(), map, config: cfg, combinations, extra, properness, collision, topology, verdict, notes })
}

fn check_err(e: conditions::CheckError) -> AnalyzeError {
    AnalyzeError::Input(e.to_string())
}

/// PS, Rabier, integral and the inferred fibration for one scalar function,
/// all from a single gradient-norm scan.
fn scalar_battery(g: &ExprMap, subject: &str, cfg: &AnalysisConfig) -> Result<Vec<ConditionReport>, AnalyzeError> {
    let want_ps = cfg.wants(conditions::PALAIS_SMALE);
    let want_rabier = cfg.wants(conditions::RABIER);
    let want_int = cfg.wants(conditions::INTEGRAL);
    let want_fib = cfg.wants(conditions::FIBRATION);
    if !(want_ps || want_rabier || want_int || want_fib) {
        return Ok(Vec::new());
    }
    let gs = GradientScan::run(g, subject, &cfg.checks).map_err(check_err)?;
    let rabier = rabier_from(&gs, &cfg.checks);
    let mut out = Vec::new();
    if want_ps {
        out.push(palais_smale_from(&gs, &cfg.checks));
    }
    if want_fib {
        out.push(fibration_from(subject, &rabier, &gs.sing, &cfg.checks.thresholds));
    }
    if want_int {
        out.push(integral_from(&gs, &cfg.checks));
    }
    if want_rabier {
        out.push(rabier);
    }
    Ok(out)
}

/// Rabier on the whole submersion, the inferred fibration, and the
/// restricted chains `g₁, g₂|_{g₁=c₁}, …`.
fn vector_battery(g: &ExprMap, subject: &str, cfg: &AnalysisConfig) -> Vec<ConditionReport> {
    let mut out = Vec::new();
    let want_fib = cfg.wants(conditions::FIBRATION);
    if cfg.wants(conditions::RABIER) || want_fib {
        match check_rabier(g, subject, &cfg.checks) {
            Ok(r) => {
                if want_fib {
                    let sing = r.parts.iter().find(|p| p.condition == conditions::SING).cloned().unwrap_or_else(|| {
                        ConditionReport::new(conditions::SING, subject, Status::Inconclusive, &cfg.checks.thresholds)
                    });
                    out.push(fibration_from(subject, &r, &sing, &cfg.checks.thresholds));
                }
                if cfg.wants(conditions::RABIER) {
                    out.insert(0, r);
                }
            }
            Err(e) => log::warn!("{subject}: rabier check skipped: {e}"),
        }
    }
    let want_cr = cfg.wants(CHAIN_RABIER);
    let want_ci = cfg.wants(CHAIN_INTEGRAL);
    if want_cr || want_ci {
        let (cr, ci) = chain_reports(g, subject, cfg);
        if want_cr {
            out.push(cr);
        }
        if want_ci {
            out.push(ci);
        }
    }
    out
}

/// Origin first, then seeded points on spheres of radius 1, 2, …
pub fn chain_anchors(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..count.max(1))
        .map(|i| if i == 0 { vec![0.0; n] } else { random_sphere_point(n, i as f64, mix64(seed ^ (0xA5A5 + i as u64))) })
        .collect()
}

fn combine(condition: &str, subject: &str, parts: Vec<ConditionReport>, cfg: &CheckConfig) -> ConditionReport {
    let verdict = if parts.iter().any(|p| p.verdict == Status::Fails) {
        Status::Fails
    } else if !parts.is_empty() && parts.iter().all(|p| p.verdict == Status::Holds) {
        Status::Holds
    } else {
        Status::Inconclusive
    };
    let mut rep = ConditionReport::new(condition, subject, verdict, &cfg.thresholds);
    rep.rationale = format!(
        "{} links over the sampled constants: {}",
        parts.len(),
        parts.iter().map(|p| format!("{}={}", p.subject, p.verdict)).collect::<Vec<_>>().join(", ")
    );
    rep.scans = parts.iter().flat_map(|p| p.scans.clone()).collect();
    rep.parts = parts;
    rep
}

fn chain_reports(g: &ExprMap, subject: &str, cfg: &AnalysisConfig) -> (ConditionReport, ConditionReport) {
    let n = g.n_in();
    let m = g.n_out();
    let th = &cfg.checks.thresholds;
    let anchors = chain_anchors(n, cfg.chain_anchors, cfg.seed);
    // (constants, anchor) per link; the unrestricted first link once
    let mut specs: Vec<(Vec<f64>, Vec<f64>)> = vec![(Vec::new(), anchors[0].clone())];
    for k in 1..m {
        let prefix = g.select(&(0..k).collect::<Vec<_>>()).expect("k < m");
        for a in &anchors {
            match prefix.eval(a) {
                Ok(c) => specs.push((c, a.clone())),
                Err(e) => log::warn!("{subject}: anchor {a:?} skipped: {e}"),
            }
        }
    }
    let links: Vec<(ConditionReport, ConditionReport)> = specs
        .par_iter()
        .map(|(c, a)| match build_restricted_chain(g, c, a, th.tol_level) {
            Ok(ch) => {
                let cs = ChainScan::run(&ch, subject, &cfg.checks);
                (check_chain_rabier(&cs, &cfg.checks), check_chain_integral(&cs, &cfg.checks))
            }
            Err(e) => {
                let label = format!("{subject}|anchor={a:?}");
                let mut r = ConditionReport::new(CHAIN_RABIER, &label, Status::Inconclusive, th);
                r.rationale = format!("chain not built: {e}");
                let mut i = r.clone();
                i.condition = CHAIN_INTEGRAL.into();
                (r, i)
            }
        })
        .collect();
    let (rab, int): (Vec<_>, Vec<_>) = links.into_iter().unzip();
    (combine(CHAIN_RABIER, subject, rab, &cfg.checks), combine(CHAIN_INTEGRAL, subject, int, &cfg.checks))
}

/// Images of the far argmins of every scan: where `f` may come back from
/// infinity.
fn far_targets(f: &ExprMap, combos: &[CombinationReports]) -> Vec<Vec<f64>> {
    fn walk<'a>(r: &'a ConditionReport, out: &mut Vec<&'a globinj::scan::RadialScan>) {
        out.extend(r.scan_data.iter());
        for p in &r.parts {
            walk(p, out);
        }
    }
    let mut scans = Vec::new();
    for c in combos {
        for r in &c.reports {
            walk(r, &mut scans);
        }
    }
    let mut out: Vec<Vec<f64>> = Vec::new();
    for s in scans {
        let Some(p) = s.points.iter().rev().find(|p| p.value.is_some()) else { continue };
        if let Ok(y) = f.eval(&p.argmin) {
            if y.iter().all(|v| v.is_finite()) && !out.contains(&y) {
                out.push(y);
            }
        }
    }
    out
}

fn run_topology(job: &TopologyJob) -> Result<TopologyResult, AnalyzeError> {
    let g = globinj::expr::parse_map_in(&job.function, 2).map_err(|e| AnalyzeError::Parse(format!("topology: {e}")))?;
    let name = g.component(0).to_string();
    let curves = job
        .levels
        .par_iter()
        .map(|&c| trace_named(&g, &name, c, job.half_width, job.resolution))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| AnalyzeError::Input(e.to_string()))?;
    let bifurcation = if job.bifurcation && job.levels.len() > 1 {
        Some(bifurcation_scan(&g, &job.levels, job.half_width, job.resolution).map_err(|e| AnalyzeError::Input(e.to_string()))?)
    } else {
        None
    };
    Ok(TopologyResult { job: job.clone(), curves, bifurcation })
}
