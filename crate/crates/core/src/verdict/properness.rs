//! Search for values reachable from infinity (the non-proper set `S_f`).
//!
//! For each target `y` the scan follows `inf_{‖x‖=r} ‖f(x) − y‖`; a target
//! whose profile stays below `witness_value` on every radius beyond
//! `witness_radius` is a witness. This can only falsify properness; the
//! apparent dimension of witness clusters is a heuristic.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditions::CheckError;
use crate::expr::{ExprMap, MapDerivatives};
use crate::numlin::{self, Matrix};
use crate::scan::objectives::Distance;
use crate::scan::{radial_scan, RadiusSchedule, ScanOptions, Witness};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProperConfig {
    /// Targets on the grid `{-w, …, w}ⁿ` with this spacing.
    pub half_width: f64,
    /// Grid spacing; `None` picks 1 for `n ≤ 3` and 2 above.
    pub step: Option<f64>,
    pub schedule: RadiusSchedule,
    pub starts: usize,
    pub witness_value: f64,
    pub witness_radius: f64,
    pub min_points: usize,
    /// Relative cut-off for the apparent dimension of a cluster.
    pub pca_threshold: f64,
}

impl Default for ProperConfig {
    fn default() -> Self {
        ProperConfig {
            half_width: 2.0,
            step: None,
            schedule: RadiusSchedule { r_min: 10.0, r_max: 1e4, points_per_decade: 4 },
            starts: 8,
            witness_value: 0.05,
            witness_radius: 1e3,
            min_points: 2,
            pca_threshold: 0.1,
        }
    }
}

impl ProperConfig {
    pub fn grid(&self, n: usize) -> Vec<Vec<f64>> {
        let step = self.step.unwrap_or(if n <= 3 { 1.0 } else { 2.0 });
        let k = (self.half_width / step).floor() as i64;
        let axis: Vec<f64> = (-k..=k).map(|i| i as f64 * step).collect();
        let mut out = vec![Vec::new()];
        for _ in 0..n {
            out = out
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&a| {
                        let mut q = p.clone();
                        q.push(a);
                        q
                    })
                })
                .collect();
        }
        out
    }

    fn link(&self, n: usize) -> f64 {
        1.5 * self.step.unwrap_or(if n <= 3 { 1.0 } else { 2.0 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetWitness {
    pub target: Vec<f64>,
    pub witness: Witness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessCluster {
    /// Indices into the witness list.
    pub members: Vec<usize>,
    pub centroid: Vec<f64>,
    /// Number of principal directions with singular value at least
    /// `pca_threshold` times the largest.
    pub apparent_dim: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PropernessEvidence {
    pub targets_scanned: usize,
    pub witnesses: Vec<TargetWitness>,
    pub clusters: Vec<WitnessCluster>,
    /// The search is a heuristic and never establishes properness.
    pub heuristic: bool,
}

pub fn nonproper_witness_search(
    f: &ExprMap,
    extra_targets: &[Vec<f64>],
    cfg: &ProperConfig,
    scan: &ScanOptions,
) -> Result<PropernessEvidence, CheckError> {
    if !f.is_square() {
        return Err(CheckError::Shape("non-properness search needs a square map".into()));
    }
    let n = f.n_in();
    let mut targets = cfg.grid(n);
    for t in extra_targets {
        if t.len() == n && t.iter().all(|v| v.is_finite()) && !targets.contains(t) {
            targets.push(t.clone());
        }
    }
    let d = Arc::new(MapDerivatives::first_order(f));
    let opts = ScanOptions { starts: cfg.starts, ..*scan };
    let found: Vec<Option<TargetWitness>> = targets
        .par_iter()
        .map(|y| {
            let obj = Distance::new(d.clone(), y.clone());
            let s = radial_scan(&obj, "f", &cfg.schedule, &opts);
            let far: Vec<_> = s.points.iter().filter(|p| p.r >= cfg.witness_radius * (1.0 - 1e-12)).collect();
            let ok = far.len() >= cfg.min_points && far.iter().all(|p| p.value.is_some_and(|v| v <= cfg.witness_value));
            if !ok {
                return None;
            }
            let xs: Vec<Vec<f64>> = far.iter().map(|p| p.argmin.clone()).collect();
            match Witness::build(&obj, f, &xs) {
                Ok(w) => Some(TargetWitness { target: y.clone(), witness: w }),
                Err(e) => {
                    log::warn!("witness for target {y:?} rejected: {e}");
                    None
                }
            }
        })
        .collect();
    let witnesses: Vec<TargetWitness> = found.into_iter().flatten().collect();
    let clusters = cluster(&witnesses, cfg.link(n), cfg.pca_threshold);
    Ok(PropernessEvidence { targets_scanned: targets.len(), witnesses, clusters, heuristic: true })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    numlin::norm2(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>())
}

/// Single-linkage clusters of witness targets.
fn cluster(ws: &[TargetWitness], link: f64, pca: f64) -> Vec<WitnessCluster> {
    let mut label: Vec<Option<usize>> = vec![None; ws.len()];
    let mut out = Vec::new();
    for i in 0..ws.len() {
        if label[i].is_some() {
            continue;
        }
        let id = out.len();
        let mut stack = vec![i];
        label[i] = Some(id);
        let mut members = Vec::new();
        while let Some(a) = stack.pop() {
            members.push(a);
            for b in 0..ws.len() {
                if label[b].is_none() && dist(&ws[a].target, &ws[b].target) <= link {
                    label[b] = Some(id);
                    stack.push(b);
                }
            }
        }
        members.sort_unstable();
        let pts: Vec<&[f64]> = members.iter().map(|&m| ws[m].target.as_slice()).collect();
        out.push(WitnessCluster { centroid: centroid(&pts), apparent_dim: apparent_dim(&pts, pca), members });
    }
    out
}

fn centroid(pts: &[&[f64]]) -> Vec<f64> {
    let n = pts[0].len();
    (0..n).map(|j| pts.iter().map(|p| p[j]).sum::<f64>() / pts.len() as f64).collect()
}

pub(crate) fn apparent_dim(pts: &[&[f64]], threshold: f64) -> usize {
    if pts.len() < 2 {
        return 0;
    }
    let c = centroid(pts);
    let rows: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().zip(&c).map(|(a, b)| a - b).collect()).collect();
    let mut m = Matrix::from_rows(&rows);
    if m.rows() > m.cols() {
        m = m.transpose();
    }
    let sv = numlin::singular_values(&m).unwrap_or_default();
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s >= threshold * top).count()
}
