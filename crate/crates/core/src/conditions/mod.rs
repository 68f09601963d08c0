//! The condition battery: Palais–Smale, Rabier (empty K∞), the radial
//! integral condition, the spectral condition, Balreira's wedge-ratio
//! condition, and restricted chains on level sets.
//!
//! Every check turns an asymptotic statement into a finite-sample decision
//! with explicit thresholds. A `fails` verdict always carries a replayable
//! witness or a finite numeric bound; `holds` is evidence, never proof.

mod chain;
mod spectral;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{ExprMap, MapDerivatives, MapError};
use crate::numlin;
use crate::sample;
use crate::scan::objectives::{GradientNorm, NuObjective, WedgeRatio};
use crate::scan::{
    profile_integral, radial_scan, tail_fit, Objective, RadialScan, RadiusSchedule, ScanOptions,
    ScanPoint, TailFit, Witness,
};

pub use chain::{build_restricted_chain, check_chain_integral, check_chain_rabier, ChainError, ChainScan, RestrictedChain};
pub use spectral::{check_spectral, SpectralReport, SpectralSample, SpectralSampling};

pub const REPORT_SCHEMA: u32 = 1;

pub const PALAIS_SMALE: &str = "palais_smale";
pub const RABIER: &str = "rabier";
pub const INTEGRAL: &str = "integral";
pub const SPECTRAL: &str = "spectral";
pub const BALREIRA: &str = "balreira";
pub const SING: &str = "sing_empty";
pub const FIBRATION: &str = "fibration";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Holds,
    Fails,
    Inconclusive,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Holds => "holds",
            Status::Fails => "fails",
            Status::Inconclusive => "inconclusive",
        })
    }
}

/// Decision thresholds shared by all checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub tol_ps: f64,
    pub floor_ps: f64,
    /// Largest range of `g(argmin)` still called bounded.
    pub bound_band: f64,
    pub tol_rabier: f64,
    pub floor_rabier: f64,
    pub cluster_eps: f64,
    /// Half-width of the undecided band around the exponent −1.
    pub margin: f64,
    pub gap_floor: f64,
    pub tol_level: f64,
    /// Radius beyond which floors must hold. Defaults to the geometric
    /// midpoint of the schedule.
    pub r_mid: Option<f64>,
    /// Largest RMS log-misfit of a tail fit that may decide a verdict.
    pub max_fit_residual: f64,
    /// Tail-fit window in decades.
    pub tail_window: f64,
    /// Shortest witness a failing verdict may rest on.
    pub min_witness: usize,
    /// `ν` at or below this counts as a critical point.
    pub sing_floor: f64,
    /// Imaginary parts up to this size count as real.
    pub real_tol: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            tol_ps: 1e-3,
            floor_ps: 1e-2,
            bound_band: 10.0,
            tol_rabier: 1e-3,
            floor_rabier: 1e-2,
            cluster_eps: 0.05,
            margin: 0.1,
            gap_floor: 1e-3,
            tol_level: 1e-9,
            r_mid: None,
            max_fit_residual: 0.5,
            tail_window: 2.0,
            min_witness: 3,
            sing_floor: 1e-10,
            real_tol: 1e-9,
        }
    }
}

impl Thresholds {
    pub fn r_mid(&self, schedule: &RadiusSchedule) -> f64 {
        self.r_mid.unwrap_or_else(|| (schedule.r_min * schedule.r_max).sqrt())
    }
}

/// Compact sample used to look for critical points, `Sing(g)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SingSampling {
    pub points: usize,
    pub radius: f64,
}

impl Default for SingSampling {
    fn default() -> Self {
        SingSampling { points: 2048, radius: 10.0 }
    }
}

/// Everything a check needs besides the map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    pub thresholds: Thresholds,
    pub schedule: RadiusSchedule,
    /// The wedge ratio may decay exponentially, so its scan stops early.
    pub balreira_schedule: RadiusSchedule,
    pub scan: ScanOptions,
    pub spectral: SpectralSampling,
    pub sing: SingSampling,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            thresholds: Thresholds::default(),
            schedule: RadiusSchedule::default(),
            balreira_schedule: RadiusSchedule { r_min: 1e-2, r_max: 50.0, points_per_decade: 32 },
            scan: ScanOptions::default(),
            spectral: SpectralSampling::default(),
            sing: SingSampling::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("{0}")]
    Shape(String),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// Outcome of one named condition on one subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub schema: u32,
    pub condition: String,
    /// What was checked, e.g. `f1` or `g2|{g1=0}`.
    pub subject: String,
    pub verdict: Status,
    pub evidence_not_proof: bool,
    pub rationale: String,
    /// Identifiers of the scans behind the verdict.
    pub scans: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<TailFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integral: Option<f64>,
    /// Finite bound backing a `fails` verdict without a witness.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    /// Cluster value of `g` along the witness (asymptotic critical value).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critical_value: Option<Vec<f64>>,
    /// Smallest profile value at radii beyond `r_mid`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_mid: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral: Option<SpectralReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parts: Vec<ConditionReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
    pub thresholds: Thresholds,
    /// The scans themselves; written out separately.
    #[serde(skip)]
    pub scan_data: Vec<RadialScan>,
}

impl ConditionReport {
    pub fn new(condition: &str, subject: &str, verdict: Status, th: &Thresholds) -> Self {
        ConditionReport {
            schema: REPORT_SCHEMA,
            condition: condition.into(),
            subject: subject.into(),
            verdict,
            evidence_not_proof: true,
            rationale: String::new(),
            scans: Vec::new(),
            witness: None,
            fit: None,
            integral: None,
            bound: None,
            critical_value: None,
            tail_min: None,
            r_mid: None,
            spectral: None,
            parts: Vec::new(),
            diagnostics: Vec::new(),
            thresholds: th.clone(),
            scan_data: Vec::new(),
        }
    }

    fn with_scan(mut self, scan: &RadialScan) -> Self {
        self.scans.push(scan_id(scan));
        self.scan_data.push(scan.clone());
        self
    }

    fn because(mut self, why: impl Into<String>) -> Self {
        self.rationale = why.into();
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Stable scan name: `<map>.<objective>`.
pub fn scan_id(scan: &RadialScan) -> String {
    format!("{}.{}", scan.map, scan.objective)
}

/// Minimum of `ν(Dg)` over a Halton cloud in a ball.
#[derive(Debug, Clone, PartialEq)]
pub struct SingSample {
    pub min_nu: f64,
    pub at: Vec<f64>,
    pub points: usize,
    pub skipped: usize,
}

pub fn sample_sing(d: &MapDerivatives, cfg: &SingSampling) -> SingSample {
    let mut best = SingSample { min_nu: f64::INFINITY, at: Vec::new(), points: 0, skipped: 0 };
    let mut pts = vec![vec![0.0; d.n_in()]];
    pts.extend(sample::halton_ball(d.n_in(), cfg.radius, cfg.points));
    for x in pts {
        best.points += 1;
        match d.jacobian(&x).map_err(|e| e.to_string()).and_then(|j| numlin::nu(&j).map_err(|e| e.to_string())) {
            Ok(v) if v < best.min_nu => {
                best.min_nu = v;
                best.at = x;
            }
            Ok(_) => {}
            Err(_) => best.skipped += 1,
        }
    }
    best
}

/// `Sing(g) = ∅` on the sampled ball and along a scan of `ν`.
pub fn check_sing(subject: &str, d: &MapDerivatives, scan: Option<&RadialScan>, cfg: &CheckConfig) -> ConditionReport {
    let th = &cfg.thresholds;
    let s = sample_sing(d, &cfg.sing);
    let mut min = s.min_nu;
    let mut at = s.at.clone();
    if let Some(scan) = scan {
        for (p, v) in scan.valid() {
            if v < min {
                min = v;
                at = p.argmin.clone();
            }
        }
    }
    let verdict = if !min.is_finite() {
        Status::Inconclusive
    } else if min <= th.sing_floor {
        Status::Fails
    } else {
        Status::Holds
    };
    let mut rep = ConditionReport::new(SING, subject, verdict, th).because(format!(
        "min nu(Dg) = {min:e} at {:?} over {} ball points (radius {}) and the scan",
        at, s.points, cfg.sing.radius
    ));
    rep.bound = Some(min);
    if s.skipped > 0 {
        rep.diagnostics.push(format!("{} sample points not evaluable", s.skipped));
    }
    rep
}

/// Points of a scan at radii `≥ r_mid`.
fn beyond(scan: &RadialScan, r_mid: f64) -> Vec<(&ScanPoint, f64)> {
    scan.valid().filter(|(p, _)| p.r >= r_mid * (1.0 - 1e-12)).collect()
}

/// Longest run of scan points ending at the last scheduled radius with
/// every value below `tol`.
fn decaying_suffix(scan: &RadialScan, tol: f64) -> Vec<&ScanPoint> {
    let mut out: Vec<&ScanPoint> = scan
        .points
        .iter()
        .rev()
        .take_while(|p| p.value.is_some_and(|v| v < tol))
        .collect();
    out.reverse();
    out
}

fn witness_from(obj: &dyn Objective, map: &ExprMap, pts: &[&ScanPoint]) -> Result<Witness, String> {
    let xs: Vec<Vec<f64>> = pts.iter().map(|p| p.argmin.clone()).collect();
    Witness::build(obj, map, &xs).map_err(|e| e.to_string())
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    numlin::norm2(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>())
}

/// The gradient-norm scan `m(r) = inf ‖∇g‖` of a scalar function; shared
/// by the PS, Rabier and integral checks.
pub struct GradientScan {
    pub subject: String,
    pub map: ExprMap,
    pub d: Arc<MapDerivatives>,
    pub scan: RadialScan,
    pub sing: ConditionReport,
}

impl GradientScan {
    pub fn run(g: &ExprMap, subject: &str, cfg: &CheckConfig) -> Result<Self, CheckError> {
        if g.n_out() != 1 {
            return Err(CheckError::Shape(format!("{subject}: expected a scalar function, got {} components", g.n_out())));
        }
        let d = Arc::new(MapDerivatives::second_order(g));
        let obj = GradientNorm::new(d.clone(), 0, "grad_norm");
        let scan = radial_scan(&obj, subject, &cfg.schedule, &cfg.scan);
        let sing = check_sing(subject, &d, Some(&scan), cfg);
        Ok(GradientScan { subject: subject.into(), map: g.clone(), d, scan, sing })
    }

    fn objective(&self) -> GradientNorm {
        GradientNorm::new(self.d.clone(), 0, "grad_norm")
    }

    /// `ρ(r) = r·m(r)`; for scalar maps `ν(Dg) = ‖∇g‖`.
    pub fn rabier_profile(&self) -> RadialScan {
        self.scan.times_radius("r_nu")
    }
}

pub fn check_palais_smale(g: &ExprMap, subject: &str, cfg: &CheckConfig) -> Result<ConditionReport, CheckError> {
    Ok(palais_smale_from(&GradientScan::run(g, subject, cfg)?, cfg))
}

pub fn palais_smale_from(gs: &GradientScan, cfg: &CheckConfig) -> ConditionReport {
    let th = &cfg.thresholds;
    let r_mid = th.r_mid(&cfg.schedule);
    let new = |v| ConditionReport::new(PALAIS_SMALE, &gs.subject, v, th).with_scan(&gs.scan);
    let tail = beyond(&gs.scan, r_mid);
    let tail_min = tail.iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
    let mut rep = if gs.sing.verdict != Status::Holds {
        new(Status::Inconclusive).because(format!("critical point suspected: {}", gs.sing.rationale))
    } else if tail.is_empty() {
        new(Status::Inconclusive).because("no scan values beyond r_mid")
    } else if tail_min >= th.floor_ps && tail.len() == beyond_count(&gs.scan, r_mid) {
        new(Status::Holds).because(format!("m(r) >= {} for all r >= {r_mid:.4e}", th.floor_ps))
    } else {
        let suffix = decaying_suffix(&gs.scan, th.tol_ps);
        let images: Vec<f64> = suffix.iter().filter_map(|p| gs.map.eval(&p.argmin).ok().map(|v| v[0])).collect();
        let lo = images.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = images.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if suffix.len() >= th.min_witness && images.len() == suffix.len() && hi - lo <= th.bound_band {
            match witness_from(&gs.objective(), &gs.map, &suffix) {
                Ok(w) => {
                    let mut r = new(Status::Fails).because(format!(
                        "m(r) < {} on the last {} radii while g stays in [{lo:.4e}, {hi:.4e}]",
                        th.tol_ps,
                        suffix.len()
                    ));
                    r.witness = Some(w);
                    r
                }
                Err(e) => new(Status::Inconclusive).because(format!("witness rebuild failed: {e}")),
            }
        } else {
            new(Status::Inconclusive).because(format!(
                "min m(r) beyond r_mid is {tail_min:.4e}; no bounded decaying tail of {} points",
                th.min_witness
            ))
        }
    };
    rep.r_mid = Some(r_mid);
    rep.tail_min = tail_min.is_finite().then_some(tail_min);
    rep
}

/// Rabier decision on a profile `ρ(r) = r·ν(r)` with images `g(argmin)`.
struct RabierInput<'a> {
    subject: &'a str,
    profile: &'a RadialScan,
    /// Evaluates the map whose asymptotic critical values are sought.
    map: &'a ExprMap,
    /// Objective whose value times `‖x‖` gives `ρ`; used for the witness.
    obj: &'a dyn Objective,
}

fn rabier_decision(inp: RabierInput, cfg: &CheckConfig) -> ConditionReport {
    let th = &cfg.thresholds;
    let r_mid = th.r_mid(&cfg.schedule);
    let new = |v| ConditionReport::new(RABIER, inp.subject, v, th).with_scan(inp.profile);
    let tail = beyond(inp.profile, r_mid);
    let tail_min = tail.iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
    let mut rep = if tail.is_empty() {
        new(Status::Inconclusive).because("no scan values beyond r_mid")
    } else if tail_min >= th.floor_rabier && tail.len() == beyond_count(inp.profile, r_mid) {
        new(Status::Holds).because(format!("r*nu(Dg) >= {} for all r >= {r_mid:.4e}", th.floor_rabier))
    } else {
        let suffix = decaying_suffix(inp.profile, th.tol_rabier);
        let images: Vec<Vec<f64>> = suffix.iter().filter_map(|p| inp.map.eval(&p.argmin).ok()).collect();
        let cluster = if images.len() == suffix.len() && !images.is_empty() {
            let last = images.last().unwrap();
            images.iter().rev().take_while(|y| dist(y, last) <= 0.5 * th.cluster_eps).count()
        } else {
            0
        };
        if cluster >= th.min_witness {
            let pts = &suffix[suffix.len() - cluster..];
            match witness_from(inp.obj, inp.map, pts) {
                Ok(w) => {
                    let y = images.last().unwrap().clone();
                    let mut r = new(Status::Fails).because(format!(
                        "r*nu(Dg) < {} on the last {cluster} radii with g(argmin) within {} of {:?}",
                        th.tol_rabier, th.cluster_eps, y
                    ));
                    r.critical_value = Some(y);
                    r.witness = Some(w);
                    r
                }
                Err(e) => new(Status::Inconclusive).because(format!("witness rebuild failed: {e}")),
            }
        } else {
            new(Status::Inconclusive).because(format!(
                "min r*nu beyond r_mid is {tail_min:.4e}; no decaying tail with clustered images"
            ))
        }
    };
    if inp.profile.errors() > 0 {
        rep.diagnostics.push(format!("{} radii without a value", inp.profile.errors()));
    }
    rep.r_mid = Some(r_mid);
    rep.tail_min = tail_min.is_finite().then_some(tail_min);
    rep
}

fn beyond_count(scan: &RadialScan, r_mid: f64) -> usize {
    scan.points.iter().filter(|p| p.r >= r_mid * (1.0 - 1e-12)).count()
}

/// Rabier check of a scalar function from its gradient-norm scan.
pub fn rabier_from(gs: &GradientScan, cfg: &CheckConfig) -> ConditionReport {
    let profile = gs.rabier_profile();
    let obj = gs.objective();
    let mut rep = rabier_decision(RabierInput { subject: &gs.subject, profile: &profile, map: &gs.map, obj: &obj }, cfg);
    rep.parts.push(gs.sing.clone());
    rep
}

/// Rabier check of `g: ℝⁿ → ℝᵐ`, `m ≤ n`.
pub fn check_rabier(g: &ExprMap, subject: &str, cfg: &CheckConfig) -> Result<ConditionReport, CheckError> {
    if g.n_out() > g.n_in() {
        return Err(CheckError::Shape(format!("{subject}: nu needs m <= n, got {}x{}", g.n_out(), g.n_in())));
    }
    if g.n_out() == 1 {
        return Ok(rabier_from(&GradientScan::run(g, subject, cfg)?, cfg));
    }
    let d = Arc::new(MapDerivatives::second_order(g));
    let obj = NuObjective::new(d.clone(), "nu");
    let scan = radial_scan(&obj, subject, &cfg.schedule, &cfg.scan);
    let profile = scan.times_radius("r_nu");
    let mut rep = rabier_decision(RabierInput { subject, profile: &profile, map: g, obj: &obj }, cfg);
    rep.parts.push(check_sing(subject, &d, Some(&scan), cfg));
    Ok(rep)
}

/// Integral classification of a positive profile by its tail exponent.
pub fn classify_integral(condition: &str, subject: &str, scan: &RadialScan, cfg: &CheckConfig) -> ConditionReport {
    let th = &cfg.thresholds;
    let fit = tail_fit(scan, th.tail_window);
    let integral = profile_integral(scan);
    let new = |v| ConditionReport::new(condition, subject, v, th).with_scan(scan);
    let mut rep = match &fit {
        TailFit::Inconclusive { reason } => new(Status::Inconclusive).because(format!("tail fit: {reason}")),
        TailFit::Fit { alpha, residual, .. } if *alpha >= -1.0 + th.margin => {
            if *residual <= th.max_fit_residual {
                new(Status::Holds)
                    .because(format!("tail exponent {alpha:.3} >= {}: integral diverges", -1.0 + th.margin))
            } else {
                new(Status::Inconclusive).because(format!(
                    "tail exponent {alpha:.3} but fit residual {residual:.3} exceeds {}",
                    th.max_fit_residual
                ))
            }
        }
        TailFit::Fit { alpha, c, r_to, .. } if *alpha <= -1.0 - th.margin => {
            let mut r = new(Status::Fails).because(format!(
                "tail exponent {alpha:.3} <= {}: integral converges",
                -1.0 - th.margin
            ));
            // scanned part plus the fitted power law beyond the last radius
            r.bound = integral.map(|i| i + c * r_to.powf(alpha + 1.0) / (-alpha - 1.0));
            r
        }
        TailFit::Fit { alpha, .. } => {
            new(Status::Inconclusive).because(format!("tail exponent {alpha:.3} is within {} of -1", th.margin))
        }
    };
    rep.fit = Some(fit);
    rep.integral = integral;
    rep
}

pub fn integral_from(gs: &GradientScan, cfg: &CheckConfig) -> ConditionReport {
    let mut rep = classify_integral(INTEGRAL, &gs.subject, &gs.scan, cfg);
    if gs.sing.verdict != Status::Holds && rep.verdict != Status::Fails {
        rep.verdict = Status::Inconclusive;
        rep.rationale = format!("critical point suspected: {}", gs.sing.rationale);
    }
    rep
}

pub fn check_integral(g: &ExprMap, subject: &str, cfg: &CheckConfig) -> Result<ConditionReport, CheckError> {
    Ok(integral_from(&GradientScan::run(g, subject, cfg)?, cfg))
}

/// Locally trivial fibration, inferred from Rabier holding with no
/// critical points (Rabier's inclusion of the bifurcation set). Never fails:
/// a failing Rabier check says nothing about the fibration.
pub fn fibration_from(subject: &str, rabier: &ConditionReport, sing: &ConditionReport, th: &Thresholds) -> ConditionReport {
    let ok = rabier.verdict == Status::Holds && sing.verdict == Status::Holds;
    ConditionReport::new(FIBRATION, subject, if ok { Status::Holds } else { Status::Inconclusive }, th).because(if ok {
        "inferred: K_inf empty and no critical points found, so the bifurcation set is empty".to_string()
    } else {
        format!("not inferred (rabier {}, sing {}); never checked directly", rabier.verdict, sing.verdict)
    })
}

/// Balreira's condition for the first `k` indices of a square map.
pub fn check_balreira(f: &ExprMap, k: usize, subject: &str, cfg: &CheckConfig) -> Result<ConditionReport, CheckError> {
    let n = f.n_in();
    if !f.is_square() {
        return Err(CheckError::Shape(format!("{subject}: Balreira's condition needs a square map")));
    }
    if k == 0 || k > n {
        return Err(CheckError::Shape(format!("{subject}: k = {k} outside 1..={n}")));
    }
    let th = &cfg.thresholds;
    let d = Arc::new(MapDerivatives::first_order(f));
    let mut parts = Vec::new();
    for i in 0..k {
        let obj = WedgeRatio::new(d.clone(), i, format!("wedge_ratio_{}", i + 1));
        let scan = radial_scan(&obj, subject, &cfg.balreira_schedule, &cfg.scan);
        let mut rep = classify_integral(BALREIRA, &format!("{subject} i={}", i + 1), &scan, cfg);
        let skipped: usize = scan.points.iter().map(|p| p.skipped).sum();
        if skipped > 0 {
            rep.diagnostics.push(format!("{skipped} starts dropped (vanishing denominator or evaluation failure)"));
        }
        if scan.errors() > 0 && rep.verdict == Status::Holds {
            rep.verdict = Status::Inconclusive;
            rep.rationale = format!("{} radii where the ratio is undefined", scan.errors());
        }
        parts.push(rep);
    }
    let verdict = if parts.iter().any(|p| p.verdict == Status::Fails) {
        Status::Fails
    } else if parts.iter().all(|p| p.verdict == Status::Holds) {
        Status::Holds
    } else {
        Status::Inconclusive
    };
    let mut rep = ConditionReport::new(BALREIRA, subject, verdict, th)
        .because(format!("k = {k}: {}", parts.iter().map(|p| p.verdict.to_string()).collect::<Vec<_>>().join(", ")));
    if verdict == Status::Fails {
        rep.bound = parts.iter().filter_map(|p| p.bound).reduce(f64::min);
    }
    rep.scans = parts.iter().flat_map(|p| p.scans.clone()).collect();
    rep.scan_data = parts.iter_mut().flat_map(|p| std::mem::take(&mut p.scan_data)).collect();
    rep.parts = parts;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_map;

    fn quick() -> CheckConfig {
        CheckConfig {
            schedule: RadiusSchedule { r_min: 1.0, r_max: 1e4, points_per_decade: 8 },
            scan: ScanOptions { starts: 8, ..Default::default() },
            sing: SingSampling { points: 256, radius: 10.0 },
            ..Default::default()
        }
    }

    #[test]
    fn linear_function_satisfies_everything() {
        let g = parse_map_in("f1 = x1", 3);
        let cfg = quick();
        let gs = GradientScan::run(&g, "x1", &cfg).unwrap();
        assert_eq!(palais_smale_from(&gs, &cfg).verdict, Status::Holds);
        assert_eq!(rabier_from(&gs, &cfg).verdict, Status::Holds);
        assert_eq!(integral_from(&gs, &cfg).verdict, Status::Holds);
    }

    fn parse_map_in(src: &str, n: usize) -> ExprMap {
        crate::expr::parse_map_in(src, n).unwrap()
    }

    #[test]
    fn boundary_exponent_is_inconclusive() {
        let prof: Vec<(f64, f64)> = RadiusSchedule::default().radii().iter().map(|&r| (r, 1.0 / r)).collect();
        let scan = RadialScan::from_profile("synthetic", &prof);
        let rep = classify_integral(INTEGRAL, "1/r", &scan, &CheckConfig::default());
        assert_eq!(rep.verdict, Status::Inconclusive);
    }

    #[test]
    fn convergent_profile_fails_with_a_bound() {
        let prof: Vec<(f64, f64)> = RadiusSchedule::default().radii().iter().map(|&r| (r, 10.0 / (r * r))).collect();
        let scan = RadialScan::from_profile("synthetic", &prof);
        let rep = classify_integral(INTEGRAL, "10/r^2", &scan, &CheckConfig::default());
        assert_eq!(rep.verdict, Status::Fails);
        // integral of 10/r^2 over [1, inf) is 10, plus the head term 10
        assert!((rep.bound.unwrap() - 20.0).abs() < 0.2, "{:?}", rep.bound);
    }

    #[test]
    fn king_fails_rabier_near_zero() {
        let g = parse_map("f1 = x2*(2*x1^2*x2^2 - 9*x1*x2 + 12)").unwrap();
        let cfg = quick();
        let gs = GradientScan::run(&g, "king", &cfg).unwrap();
        let rep = rabier_from(&gs, &cfg);
        assert_eq!(rep.verdict, Status::Fails, "{}", rep.rationale);
        assert!(rep.critical_value.as_ref().unwrap()[0].abs() <= 0.05);
        let w = rep.witness.as_ref().unwrap();
        assert!(w.last().unwrap().norm >= 1e3);
        assert_eq!(integral_from(&gs, &cfg).verdict, Status::Fails);
    }

    #[test]
    fn critical_point_makes_ps_inconclusive() {
        let g = parse_map("f1 = x1^2 + x2^2").unwrap();
        let cfg = quick();
        let gs = GradientScan::run(&g, "bowl", &cfg).unwrap();
        assert_eq!(gs.sing.verdict, Status::Fails);
        assert_eq!(palais_smale_from(&gs, &cfg).verdict, Status::Inconclusive);
    }

    #[test]
    fn report_json_round_trip() {
        let g = parse_map("f1 = x1 + x2").unwrap();
        let rep = check_palais_smale(&g, "sum", &quick()).unwrap();
        let back = ConditionReport::from_json(&rep.to_json()).unwrap();
        assert_eq!(back.verdict, rep.verdict);
        assert_eq!(back.to_json(), rep.to_json());
    }

    #[test]
    fn balreira_on_exponential_pair() {
        let f = parse_map("f1 = x1; f2 = exp(x2)").unwrap();
        let cfg = quick();
        let rep = check_balreira(&f, 1, "ex43", &cfg).unwrap();
        assert_eq!(rep.verdict, Status::Holds, "{}", rep.rationale);
        let g = f.compose_linear_left(&[vec![0.5f64.sqrt(), -(0.5f64.sqrt())], vec![0.5f64.sqrt(), 0.5f64.sqrt()]]).unwrap();
        let rep = check_balreira(&g, 1, "ex43_rot", &cfg).unwrap();
        assert_eq!(rep.verdict, Status::Fails, "{}", rep.rationale);
        // inf over the sphere is sqrt(2) e^-r / sqrt(1 + e^-2r), integral sqrt(2) asinh(1)
        let exact = 2f64.sqrt() * 1f64.asinh();
        let got = rep.parts[0].integral.unwrap();
        assert!((got - exact).abs() < 5e-3, "{got} vs {exact}");
    }
}
