//! Sampled spectrum of `Df` against the strip `[0, ε)`.

use serde::{Deserialize, Serialize};

use super::{CheckConfig, CheckError, ConditionReport, Status, SPECTRAL};
use crate::expr::{ExprMap, MapDerivatives};
use crate::numlin;
use crate::sample;

/// Radial shells with Halton directions on each, plus the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralSampling {
    pub shells: usize,
    pub per_shell: usize,
    pub r_min: f64,
    pub r_max: f64,
}

impl Default for SpectralSampling {
    fn default() -> Self {
        SpectralSampling { shells: 16, per_shell: 256, r_min: 1e-2, r_max: 1e2 }
    }
}

impl SpectralSampling {
    pub fn points(&self, n: usize) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; n]];
        let mut dirs = sample::halton_directions(n, 0);
        for s in 0..self.shells {
            let t = if self.shells > 1 { s as f64 / (self.shells - 1) as f64 } else { 0.0 };
            let r = self.r_min * (self.r_max / self.r_min).powf(t);
            for _ in 0..self.per_shell {
                let d = dirs.next().expect("infinite sequence");
                out.push(d.into_iter().map(|c| c * r).collect());
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSample {
    pub x: Vec<f64>,
    /// `[re, im]` pairs.
    pub eigenvalues: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub epsilon: f64,
    pub samples: Vec<SpectralSample>,
    pub skipped: usize,
    /// Smallest distance from a sampled eigenvalue to `[0, ε)`.
    pub min_distance: f64,
    /// Sample holding the closest eigenvalue, and that eigenvalue.
    pub closest: Option<(Vec<f64>, [f64; 2])>,
}

fn distance_to_strip(l: [f64; 2], eps: f64) -> f64 {
    let dx = if l[0] < 0.0 {
        -l[0]
    } else if l[0] >= eps {
        l[0] - eps
    } else {
        0.0
    };
    dx.hypot(l[1])
}

fn in_strip(l: [f64; 2], eps: f64, tol: f64) -> bool {
    l[1].abs() <= tol && l[0] >= -tol && l[0] < eps
}

impl SpectralReport {
    /// Recomputes every stored eigenvalue from its point.
    pub fn verify(&self, f: &ExprMap) -> Result<(), String> {
        let d = MapDerivatives::first_order(f);
        for (i, s) in self.samples.iter().enumerate() {
            let j = d.jacobian(&s.x).map_err(|e| format!("sample {i}: {e}"))?;
            let ev = numlin::eigenvalues(&j).map_err(|e| format!("sample {i}: {e}"))?;
            if ev.len() != s.eigenvalues.len() {
                return Err(format!("sample {i}: eigenvalue count changed"));
            }
            for (a, b) in ev.iter().zip(&s.eigenvalues) {
                if (a.re - b[0]).abs() > 1e-8 * (1.0 + a.norm()) || (a.im - b[1]).abs() > 1e-8 * (1.0 + a.norm()) {
                    return Err(format!("sample {i}: stored {:?}, recomputed {a}", b));
                }
            }
        }
        Ok(())
    }

    /// Whether an eigenvalue was sampled inside `[0, ε)`.
    pub fn hit(&self, tol: f64) -> Option<(&[f64], [f64; 2])> {
        self.samples.iter().find_map(|s| {
            s.eigenvalues.iter().find(|l| in_strip(**l, self.epsilon, tol)).map(|l| (s.x.as_slice(), *l))
        })
    }
}

/// Spectral condition `Spec(f) ∩ [0, ε) = ∅` on a sampled point cloud.
pub fn check_spectral(f: &ExprMap, epsilon: f64, cfg: &CheckConfig) -> Result<ConditionReport, CheckError> {
    if !f.is_square() {
        return Err(CheckError::Shape("spectral condition needs a square map".into()));
    }
    if !(epsilon > 0.0) {
        return Err(CheckError::Shape(format!("epsilon must be positive, got {epsilon}")));
    }
    let th = &cfg.thresholds;
    let d = MapDerivatives::first_order(f);
    let mut samples = Vec::new();
    let mut skipped = 0;
    for x in cfg.spectral.points(f.n_in()) {
        let ev = d.jacobian(&x).map_err(|e| e.to_string()).and_then(|j| numlin::eigenvalues(&j).map_err(|e| e.to_string()));
        match ev {
            Ok(ev) => samples.push(SpectralSample { x, eigenvalues: ev.iter().map(|l| [l.re, l.im]).collect() }),
            Err(e) => {
                log::debug!("spectral sample at {x:?} skipped: {e}");
                skipped += 1;
            }
        }
    }
    let mut min_distance = f64::INFINITY;
    let mut closest = None;
    for s in &samples {
        for &l in &s.eigenvalues {
            let dd = distance_to_strip(l, epsilon);
            if dd < min_distance {
                min_distance = dd;
                closest = Some((s.x.clone(), l));
            }
        }
    }
    let report = SpectralReport { epsilon, samples, skipped, min_distance, closest };
    let hit = report.hit(th.real_tol).map(|(x, l)| (x.to_vec(), l));
    let (verdict, why) = if let Some((x, l)) = hit {
        (Status::Fails, format!("eigenvalue {} + {}i in [0, {epsilon}) at {x:?}", l[0], l[1]))
    } else if report.samples.is_empty() {
        (Status::Inconclusive, "no sample could be evaluated".to_string())
    } else if min_distance > th.gap_floor {
        (
            Status::Holds,
            format!("sampled spectrum stays {min_distance:.4e} away from [0, {epsilon}) over {} points", report.samples.len()),
        )
    } else {
        (Status::Inconclusive, format!("sampled spectrum comes within {min_distance:.4e} of [0, {epsilon})"))
    };
    let mut rep = ConditionReport::new(SPECTRAL, "f", verdict, th).because(why);
    if verdict == Status::Fails {
        rep.bound = Some(0.0);
    }
    if skipped > 0 {
        rep.diagnostics.push(format!("{skipped} sample points skipped"));
    }
    rep.spectral = Some(report);
    Ok(rep)
}
