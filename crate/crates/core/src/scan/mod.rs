//! Estimates of `inf_{‖x‖=r} φ(x)` over a geometric radius schedule.
//!
//! Each radius gets a multi-start local search on the sphere (or on the
//! sphere intersected with a level set). Objectives that can be written as
//! `φ = ‖R(x)‖` are minimized with Levenberg–Marquardt steps in a tangent
//! basis; all others with projected gradient descent and Armijo backtracking.
//! The per-radius result is the minimum over all starts, ties broken by the
//! lexicographically smallest argmin, so the outcome does not depend on how
//! the starts were scheduled across threads.

mod io;
pub mod objectives;

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{EvalError, MapDerivatives};
use crate::numlin::{self, LinalgError, Matrix};

pub use io::{ScanIoError, Witness, WitnessError, WitnessPoint};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObjectiveError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("objective is undefined here: {0}")]
    Undefined(String),
}

/// A scalar function on ℝⁿ to be minimized over spheres.
pub trait Objective: Send + Sync {
    fn id(&self) -> String;

    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> Result<f64, ObjectiveError>;

    /// Euclidean gradient. Defaults to central differences.
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>, ObjectiveError> {
        central_gradient(|y| self.value(y), x)
    }

    /// Whether `value(x) == ‖residual(x).0‖` holds, enabling least-squares steps.
    fn has_residual(&self) -> bool {
        false
    }

    /// Residual vector and its Jacobian.
    fn residual(&self, _x: &[f64]) -> Result<(Vec<f64>, Matrix), ObjectiveError> {
        Err(ObjectiveError::Undefined("no residual form".into()))
    }
}

fn fd_step(xi: f64) -> f64 {
    6e-6 * xi.abs().max(1.0)
}

pub fn central_gradient<F>(f: F, x: &[f64]) -> Result<Vec<f64>, ObjectiveError>
where
    F: Fn(&[f64]) -> Result<f64, ObjectiveError>,
{
    let mut y = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let h = fd_step(x[i]);
        y[i] = x[i] + h;
        let up = f(&y)?;
        y[i] = x[i] - h;
        let down = f(&y)?;
        y[i] = x[i];
        out.push((up - down) / (2.0 * h));
    }
    Ok(out)
}

/// Central-difference Jacobian of a vector residual.
pub fn central_jacobian<F>(f: F, x: &[f64]) -> Result<Matrix, ObjectiveError>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, ObjectiveError>,
{
    let n = x.len();
    let mut y = x.to_vec();
    let mut cols = Vec::with_capacity(n);
    for i in 0..n {
        let h = fd_step(x[i]);
        y[i] = x[i] + h;
        let up = f(&y)?;
        y[i] = x[i] - h;
        let down = f(&y)?;
        y[i] = x[i];
        cols.push(up.iter().zip(&down).map(|(a, b)| (a - b) / (2.0 * h)).collect::<Vec<_>>());
    }
    let m = cols.first().map_or(0, Vec::len);
    let mut jac = Matrix::zeros(m, n);
    for (j, col) in cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            jac.set(i, j, *v);
        }
    }
    Ok(jac)
}

/// 64-bit finalizer from splitmix64.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for radius `index` under a global seed.
pub fn radius_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index.wrapping_add(0x632B_E59B_D9B4_E019)))
}

/// Seed for random start `index` at a radius.
pub fn start_seed(radius_seed: u64, index: u64) -> u64 {
    mix64(radius_seed ^ mix64(index ^ 0xD1B5_4A32_D192_ED03))
}

/// Uniform random point on the sphere of radius `r` in ℝⁿ.
pub fn random_sphere_point(n: usize, r: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = numlin::norm2(&v);
        if norm > 1e-12 {
            return v.into_iter().map(|x| x * r / norm).collect();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
pub enum ScheduleError {
    #[error("radius schedule needs 0 < r_min < r_max, got [{0}, {1}]")]
    Range(f64, f64),
    #[error("points_per_decade must be at least 1")]
    Density,
}

/// Geometrically spaced radii from `r_min` to `r_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiusSchedule {
    pub r_min: f64,
    pub r_max: f64,
    pub points_per_decade: u32,
}

impl Default for RadiusSchedule {
    fn default() -> Self {
        RadiusSchedule { r_min: 1.0, r_max: 1e6, points_per_decade: 16 }
    }
}

impl RadiusSchedule {
    pub fn new(r_min: f64, r_max: f64, points_per_decade: u32) -> Result<Self, ScheduleError> {
        let s = RadiusSchedule { r_min, r_max, points_per_decade };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        if !(self.r_min > 0.0 && self.r_max > self.r_min && self.r_max.is_finite()) {
            return Err(ScheduleError::Range(self.r_min, self.r_max));
        }
        if self.points_per_decade == 0 {
            return Err(ScheduleError::Density);
        }
        Ok(())
    }

    pub fn radii(&self) -> Vec<f64> {
        let ratio = self.r_max / self.r_min;
        let steps = ((self.points_per_decade as f64) * ratio.log10()).round().max(1.0) as usize;
        let mut out: Vec<f64> = (0..steps)
            .map(|i| self.r_min * ratio.powf(i as f64 / steps as f64))
            .collect();
        out.push(self.r_max);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanOptions {
    /// Random starts per radius, in addition to the warm and axis starts.
    pub starts: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Also start from the 2n points ±r·eᵢ.
    pub axis_starts: bool,
    pub warm_start: bool,
    /// Distinct local minima carried to the next radius as warm starts.
    pub track: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { starts: 32, seed: 0, max_iter: 200, axis_starts: true, warm_start: true, track: 4 }
    }
}

/// Level set `{G(x) = c}` intersected with each scanned sphere.
#[derive(Debug, Clone)]
pub struct LevelSet {
    pub g: Arc<MapDerivatives>,
    pub c: Vec<f64>,
    /// Relative tolerance on `|gⱼ(x) − cⱼ|` and on the radius.
    pub tol: f64,
    pub max_iter: usize,
}

impl LevelSet {
    pub fn new(g: Arc<MapDerivatives>, c: Vec<f64>, tol: f64) -> Self {
        assert_eq!(g.n_out(), c.len(), "one level constant per constraint");
        LevelSet { g, c, tol, max_iter: 50 }
    }

    pub fn on_level(&self, x: &[f64]) -> Result<bool, EvalError> {
        let v = self.g.map().eval(x)?;
        Ok(v.iter().zip(&self.c).all(|(a, b)| (a - b).abs() <= self.tol * (1.0 + b.abs())))
    }

    /// Gauss–Newton projection of `x` onto `{G = c}` alone.
    pub fn project(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.gauss_newton(x, None)
    }

    fn gauss_newton(&self, x0: &[f64], r: Option<f64>) -> Option<Vec<f64>> {
        let mut x = x0.to_vec();
        for _ in 0..=self.max_iter {
            let v = self.g.map().eval(&x).ok()?;
            let mut res: Vec<f64> = v.iter().zip(&self.c).map(|(a, b)| a - b).collect();
            let mut ok = res
                .iter()
                .zip(&self.c)
                .all(|(d, c)| d.abs() <= self.tol * (1.0 + c.abs()));
            let jac = self.g.jacobian(&x).ok()?;
            let mut rows: Vec<Vec<f64>> = jac.to_rows();
            if let Some(r) = r {
                let nx = numlin::norm2(&x);
                let d = (nx * nx - r * r) / (2.0 * r);
                ok &= (nx - r).abs() <= self.tol * r;
                res.push(d);
                rows.push(x.iter().map(|xi| xi / r).collect());
            }
            if ok {
                return Some(x);
            }
            let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
            let step = numlin::min_norm_solve(&refs, &res).ok()?;
            for (xi, s) in x.iter_mut().zip(&step) {
                *xi -= s;
            }
            if x.iter().any(|v| !v.is_finite()) {
                return None;
            }
        }
        None
    }
}

/// Where candidates live at radius `r`.
#[derive(Debug, Clone)]
pub enum Domain {
    Sphere,
    Level(LevelSet),
}

impl Domain {
    /// Maps a point onto the domain at radius `r`, or `None` if that fails.
    pub fn retract(&self, x: &[f64], r: f64) -> Option<Vec<f64>> {
        match self {
            Domain::Sphere => {
                let nx = numlin::norm2(x);
                if nx == 0.0 || !nx.is_finite() {
                    return None;
                }
                Some(x.iter().map(|v| v * (r / nx)).collect())
            }
            Domain::Level(ls) => {
                let start = Domain::Sphere.retract(x, r)?;
                ls.gauss_newton(&start, Some(r))
            }
        }
    }

    /// Orthonormal basis of the tangent space at `x`.
    pub fn tangent_basis(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, ObjectiveError> {
        let mut normals = vec![x.to_vec()];
        if let Domain::Level(ls) = self {
            normals.extend(ls.g.jacobian(x)?.to_rows());
        }
        let refs: Vec<&[f64]> = normals.iter().map(Vec::as_slice).collect();
        Ok(numlin::complement_basis(&refs, x.len())?)
    }
}

/// Best point found on one sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereMin {
    pub value: f64,
    pub argmin: Vec<f64>,
    /// Candidates attempted, including warm and axis starts.
    pub starts: usize,
    /// Candidates dropped because the objective or projection failed.
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScanError {
    #[error("radius must be positive, got {0}")]
    Radius(f64),
    #[error("objective undefined at all {starts} starts on the sphere of radius {r}: {last}")]
    Undefined { r: f64, starts: usize, last: String },
    #[error("dimension mismatch: objective on R^{objective}, start in R^{start}")]
    Dimension { objective: usize, start: usize },
}

/// `a` is better than `b`: smaller value, then lexicographically smaller point.
fn better(a: (f64, &[f64]), b: (f64, &[f64])) -> bool {
    match a.0.total_cmp(&b.0) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => {
            for (x, y) in a.1.iter().zip(b.1) {
                match x.total_cmp(y) {
                    std::cmp::Ordering::Less => return true,
                    std::cmp::Ordering::Greater => return false,
                    _ => {}
                }
            }
            false
        }
    }
}

fn local_min(
    obj: &dyn Objective,
    domain: &Domain,
    r: f64,
    x0: &[f64],
    max_iter: usize,
) -> Result<(f64, Vec<f64>), ObjectiveError> {
    let x = domain
        .retract(x0, r)
        .ok_or_else(|| ObjectiveError::Undefined("start could not be placed on the domain".into()))?;
    if obj.has_residual() {
        levenberg_marquardt(obj, domain, r, x, max_iter)
    } else {
        projected_descent(obj, domain, r, x, max_iter)
    }
}

fn levenberg_marquardt(
    obj: &dyn Objective,
    domain: &Domain,
    r: f64,
    mut x: Vec<f64>,
    max_iter: usize,
) -> Result<(f64, Vec<f64>), ObjectiveError> {
    let (mut res, mut jac) = obj.residual(&x)?;
    let mut f = numlin::norm2(&res);
    if !f.is_finite() {
        return Err(ObjectiveError::Undefined("non-finite residual".into()));
    }
    let mut mu: f64 = 1e-3;
    for _ in 0..max_iter {
        if f == 0.0 {
            break;
        }
        let basis = match domain.tangent_basis(&x) {
            Ok(b) => b,
            Err(_) => break,
        };
        let (p, q) = (res.len(), basis.len());
        if q == 0 {
            break;
        }
        let mut a = Matrix::zeros(p, q);
        let mut colnorm = vec![0.0; q];
        for (k, t) in basis.iter().enumerate() {
            let col = jac.matvec(t);
            colnorm[k] = numlin::norm2(&col);
            for (i, v) in col.into_iter().enumerate() {
                a.set(i, k, v);
            }
        }
        // Marquardt scaling: damp each direction relative to its own column
        let scale = colnorm.iter().fold(0.0f64, |m, v| m.max(*v));
        if scale == 0.0 || !scale.is_finite() {
            break;
        }
        for c in colnorm.iter_mut() {
            if *c <= 1e-300 {
                *c = scale;
            }
        }
        let mut accepted = None;
        while mu < 1e16 {
            let lam = mu.sqrt();
            let mut aug = Matrix::zeros(p + q, q);
            for i in 0..p {
                for k in 0..q {
                    aug.set(i, k, a.get(i, k));
                }
            }
            for k in 0..q {
                aug.set(p + k, k, lam * colnorm[k]);
            }
            let mut rhs: Vec<f64> = res.iter().map(|v| -v).collect();
            rhs.extend(std::iter::repeat_n(0.0, q));
            let d = match numlin::lstsq(&aug, &rhs) {
                Ok(d) => d,
                Err(_) => {
                    mu *= 10.0;
                    continue;
                }
            };
            if numlin::norm2(&d) > r {
                mu *= 4.0;
                continue;
            }
            let mut trial = x.clone();
            for (dk, t) in d.iter().zip(&basis) {
                for (xi, ti) in trial.iter_mut().zip(t) {
                    *xi += dk * ti;
                }
            }
            let cand = domain
                .retract(&trial, r)
                .and_then(|c| obj.residual(&c).ok().map(|rj| (c, rj)));
            match cand {
                Some((c, (rn, jn))) => {
                    let fnew = numlin::norm2(&rn);
                    if fnew.is_finite() && fnew < f {
                        accepted = Some((c, rn, jn, fnew));
                        mu = (mu / 3.0).max(1e-24);
                        break;
                    }
                    mu *= 4.0;
                }
                None => mu *= 4.0,
            }
        }
        let Some((c, rn, jn, fnew)) = accepted else { break };
        let moved: f64 = numlin::norm2(&c.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>());
        let drop = f - fnew;
        x = c;
        res = rn;
        jac = jn;
        f = fnew;
        if moved <= 1e-15 * r || drop <= 1e-15 * f {
            break;
        }
    }
    // φ(x*) must equal the reported value exactly
    let v = obj.value(&x)?;
    Ok((v, x))
}

fn projected_descent(
    obj: &dyn Objective,
    domain: &Domain,
    r: f64,
    mut x: Vec<f64>,
    max_iter: usize,
) -> Result<(f64, Vec<f64>), ObjectiveError> {
    let mut f = obj.value(&x)?;
    if !f.is_finite() {
        return Err(ObjectiveError::Undefined("non-finite objective".into()));
    }
    let mut step: Option<f64> = None;
    for _ in 0..max_iter {
        let g = match obj.gradient(&x) {
            Ok(g) if g.iter().all(|v| v.is_finite()) => g,
            _ => break,
        };
        let basis = match domain.tangent_basis(&x) {
            Ok(b) => b,
            Err(_) => break,
        };
        let mut pg = vec![0.0; x.len()];
        for t in &basis {
            let c = numlin::dot(t, &g);
            for (p, ti) in pg.iter_mut().zip(t) {
                *p += c * ti;
            }
        }
        let pn = numlin::norm2(&pg);
        if pn == 0.0 || !pn.is_finite() {
            break;
        }
        let mut t = step.unwrap_or(0.1 * r / pn).min(r / pn);
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&pg).map(|(a, b)| a - t * b).collect();
            if let Some(c) = domain.retract(&trial, r) {
                if let Ok(fc) = obj.value(&c) {
                    if fc.is_finite() && fc <= f - 1e-4 * t * pn * pn {
                        accepted = Some((c, fc));
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        let Some((c, fc)) = accepted else { break };
        let moved: f64 = numlin::norm2(&c.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>());
        x = c;
        f = fc;
        step = Some(2.0 * t);
        if moved <= 1e-15 * r {
            break;
        }
    }
    Ok((f, x))
}

fn axis_points(n: usize, r: f64) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = s * r;
            out.push(e);
        }
    }
    out
}

/// Multi-start minimization of `obj` on the sphere of radius `r`.
pub fn sphere_min(
    obj: &dyn Objective,
    r: f64,
    opts: &ScanOptions,
) -> Result<SphereMin, ScanError> {
    sphere_min_on(obj, &Domain::Sphere, r, opts, radius_seed(opts.seed, 0), &[])
}

/// Multi-start minimization on `domain` at radius `r`, with extra starts
/// tried before the axis and random ones.
pub fn sphere_min_on(
    obj: &dyn Objective,
    domain: &Domain,
    r: f64,
    opts: &ScanOptions,
    seed: u64,
    extra: &[Vec<f64>],
) -> Result<SphereMin, ScanError> {
    multi_start(obj, domain, r, opts, seed, extra).map(|(m, _)| m)
}

/// Local minima reached from each start, tagged with the start index.
type Minima = Vec<(f64, Vec<f64>, usize)>;

fn multi_start(
    obj: &dyn Objective,
    domain: &Domain,
    r: f64,
    opts: &ScanOptions,
    seed: u64,
    extra: &[Vec<f64>],
) -> Result<(SphereMin, Minima), ScanError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(ScanError::Radius(r));
    }
    let n = obj.dim();
    if let Some(bad) = extra.iter().find(|x| x.len() != n) {
        return Err(ScanError::Dimension { objective: n, start: bad.len() });
    }
    let mut starts: Vec<Vec<f64>> = extra.to_vec();
    if opts.axis_starts {
        starts.extend(axis_points(n, r));
    }
    starts.extend((0..opts.starts).map(|i| random_sphere_point(n, r, start_seed(seed, i as u64))));

    let results: Vec<Result<(f64, Vec<f64>), ObjectiveError>> = starts
        .par_iter()
        .map(|x0| local_min(obj, domain, r, x0, opts.max_iter))
        .collect();

    let mut minima = Vec::new();
    let mut skipped = 0;
    let mut last_err = String::new();
    for (i, res) in results.into_iter().enumerate() {
        match res {
            Ok((v, x)) if v.is_finite() => minima.push((v, x, i)),
            Ok(_) => {
                skipped += 1;
                last_err = "non-finite objective value".into();
            }
            Err(e) => {
                skipped += 1;
                last_err = e.to_string();
            }
        }
    }
    minima.sort_by(|a, b| {
        if better((a.0, &a.1), (b.0, &b.1)) {
            std::cmp::Ordering::Less
        } else if better((b.0, &b.1), (a.0, &a.1)) {
            std::cmp::Ordering::Greater
        } else {
            a.2.cmp(&b.2)
        }
    });
    match minima.first() {
        Some((value, argmin, _)) => Ok((
            SphereMin { value: *value, argmin: argmin.clone(), starts: starts.len(), skipped },
            minima,
        )),
        None => Err(ScanError::Undefined { r, starts: starts.len(), last: last_err }),
    }
}

/// A local minimum followed from radius to radius.
#[derive(Debug, Clone)]
struct Branch {
    prev: Option<(f64, Vec<f64>)>,
    r: f64,
    x: Vec<f64>,
}

impl Branch {
    /// Predicted position at radius `r`: each coordinate follows the power law
    /// through its last two positions when both share a sign, and plain
    /// radial scaling otherwise.
    fn predict(&self, r: f64) -> Vec<f64> {
        let lift = (r / self.r).ln();
        self.x
            .iter()
            .enumerate()
            .map(|(i, &xi)| {
                let p = match &self.prev {
                    Some((pr, px)) if xi != 0.0 && px[i] != 0.0 && xi.signum() == px[i].signum() => {
                        ((xi / px[i]).ln() / (self.r / pr).ln()).clamp(-4.0, 4.0)
                    }
                    _ => 1.0,
                };
                xi * (p * lift).exp()
            })
            .collect()
    }
}

/// One scheduled radius of a [`RadialScan`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub r: f64,
    /// `None` when every start failed at this radius.
    pub value: Option<f64>,
    pub argmin: Vec<f64>,
    pub starts: usize,
    pub skipped: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialScan {
    pub objective: String,
    pub map: String,
    pub seed: u64,
    pub points: Vec<ScanPoint>,
}

impl RadialScan {
    /// Scan from a synthetic profile, without argmins.
    pub fn from_profile(objective: &str, profile: &[(f64, f64)]) -> Self {
        RadialScan {
            objective: objective.into(),
            map: String::new(),
            seed: 0,
            points: profile
                .iter()
                .map(|&(r, v)| ScanPoint {
                    r,
                    value: Some(v),
                    argmin: Vec::new(),
                    starts: 0,
                    skipped: 0,
                    seed: 0,
                    error: None,
                })
                .collect(),
        }
    }

    /// Points that produced a value.
    pub fn valid(&self) -> impl Iterator<Item = (&ScanPoint, f64)> {
        self.points.iter().filter_map(|p| p.value.map(|v| (p, v)))
    }

    pub fn errors(&self) -> usize {
        self.points.iter().filter(|p| p.value.is_none()).count()
    }

    /// Same scan with every value multiplied by its radius.
    pub fn times_radius(&self, objective: &str) -> RadialScan {
        let mut out = self.clone();
        out.objective = objective.into();
        for p in &mut out.points {
            p.value = p.value.map(|v| v * p.r);
        }
        out
    }
}

/// Runs [`sphere_min_on`] at every scheduled radius, warm-starting from the
/// previous argmin. Per-radius failures are recorded, not fatal.
pub fn radial_scan(
    obj: &dyn Objective,
    map_id: &str,
    schedule: &RadiusSchedule,
    opts: &ScanOptions,
) -> RadialScan {
    radial_scan_on(obj, map_id, &Domain::Sphere, schedule, opts)
}

pub fn radial_scan_on(
    obj: &dyn Objective,
    map_id: &str,
    domain: &Domain,
    schedule: &RadiusSchedule,
    opts: &ScanOptions,
) -> RadialScan {
    let mut points = Vec::new();
    let mut branches: Vec<Branch> = Vec::new();
    for (i, r) in schedule.radii().into_iter().enumerate() {
        let seed = radius_seed(opts.seed, i as u64);
        let mut warm = Vec::new();
        if opts.warm_start {
            // the rescaled previous argmin, then every tracked branch's prediction
            if let Some(b) = branches.first() {
                warm.push(b.x.iter().map(|v| v * (r / b.r)).collect());
            }
            warm.extend(branches.iter().map(|b| b.predict(r)));
        }
        match multi_start(obj, domain, r, opts, seed, &warm) {
            Ok((m, minima)) => {
                branches = select_branches(&branches, &minima, r, opts.track);
                points.push(ScanPoint {
                    r,
                    value: Some(m.value),
                    argmin: m.argmin,
                    starts: m.starts,
                    skipped: m.skipped,
                    seed,
                    error: None,
                });
            }
            Err(e) => {
                log::debug!("{} at r = {r}: {e}", obj.id());
                let starts = match &e {
                    ScanError::Undefined { starts, .. } => *starts,
                    _ => 0,
                };
                points.push(ScanPoint {
                    r,
                    value: None,
                    argmin: Vec::new(),
                    starts,
                    skipped: starts,
                    seed,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    RadialScan { objective: obj.id(), map: map_id.into(), seed: opts.seed, points }
}

/// Best `k` mutually distinct minima; those reached from a branch prediction
/// keep that branch's history.
fn select_branches(old: &[Branch], minima: &Minima, r: f64, k: usize) -> Vec<Branch> {
    let mut out: Vec<Branch> = Vec::new();
    for (_, x, src) in minima {
        if out.len() >= k {
            break;
        }
        let distinct = out.iter().all(|b| {
            let d: Vec<f64> = b.x.iter().zip(x).map(|(a, c)| a - c).collect();
            numlin::norm2(&d) > 1e-3 * r
        });
        if !distinct {
            continue;
        }
        // warm-start layout: [rescaled argmin, prediction of each branch, ...];
        // a minimum reached from a fresh start inherits the nearest old branch
        let prev = if !old.is_empty() && *src >= 1 && *src <= old.len() {
            Some((old[*src - 1].r, old[*src - 1].x.clone()))
        } else if !old.is_empty() && *src == 0 {
            Some((old[0].r, old[0].x.clone()))
        } else {
            old.iter()
                .map(|b| {
                    let d: Vec<f64> = b.x.iter().zip(x).map(|(a, c)| a * (r / b.r) - c).collect();
                    (numlin::norm2(&d), b)
                })
                .filter(|(d, _)| *d <= 0.05 * r)
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .map(|(_, b)| (b.r, b.x.clone()))
        };
        out.push(Branch { prev, r, x: x.clone() });
    }
    out
}

/// Result of a log-log power-law fit over the tail of a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailFit {
    Fit {
        alpha: f64,
        c: f64,
        /// RMS misfit in natural-log space.
        residual: f64,
        points: usize,
        r_from: f64,
        r_to: f64,
    },
    Inconclusive { reason: String },
}

pub const MIN_TAIL_POINTS: usize = 8;

/// Fits `log φ ≈ log c + α log r` over the last `window` decades of radii.
pub fn tail_fit(scan: &RadialScan, window: f64) -> TailFit {
    let Some(r_last) = scan.points.last().map(|p| p.r) else {
        return TailFit::Inconclusive { reason: "empty scan".into() };
    };
    let r_from = r_last / 10f64.powf(window);
    let tail: Vec<&ScanPoint> = scan.points.iter().filter(|p| p.r >= r_from * (1.0 - 1e-12)).collect();
    if tail.len() < MIN_TAIL_POINTS {
        return TailFit::Inconclusive {
            reason: format!("{} points in the fit window, need {MIN_TAIL_POINTS}", tail.len()),
        };
    }
    let mut xs = Vec::with_capacity(tail.len());
    let mut ys = Vec::with_capacity(tail.len());
    for p in &tail {
        match p.value {
            Some(v) if v > 0.0 && v.is_finite() => {
                xs.push(p.r.ln());
                ys.push(v.ln());
            }
            Some(v) => {
                return TailFit::Inconclusive {
                    reason: format!("nonpositive value {v} at r = {}", p.r),
                }
            }
            None => {
                return TailFit::Inconclusive { reason: format!("no value at r = {}", p.r) }
            }
        }
    }
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let alpha = sxy / sxx;
    let log_c = my - alpha * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - log_c - alpha * x).powi(2))
        .sum::<f64>()
        / k)
        .sqrt();
    TailFit::Fit {
        alpha,
        c: log_c.exp(),
        residual,
        points: xs.len(),
        r_from: tail[0].r,
        r_to: r_last,
    }
}

/// Trapezoid integral of the valid scan values over `[r_first, r_last]`, plus
/// `r_first · φ(r_first)` for the segment from 0.
pub fn profile_integral(scan: &RadialScan) -> Option<f64> {
    let pts: Vec<(f64, f64)> = scan.valid().map(|(p, v)| (p.r, v)).collect();
    let &(r0, v0) = pts.first()?;
    let mut total = r0 * v0;
    for w in pts.windows(2) {
        total += 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1);
    }
    Some(total)
}

#[cfg(test)]
mod tests {
    use super::objectives::FnObjective;
    use super::*;

    fn opts() -> ScanOptions {
        ScanOptions { starts: 8, seed: 7, ..Default::default() }
    }

    #[test]
    fn squared_norm_is_constant_on_sphere() {
        let obj = FnObjective::new("norm2", 3, |x: &[f64]| Ok(x.iter().map(|v| v * v).sum()));
        let m = sphere_min(&obj, 2.0, &opts()).unwrap();
        assert!((m.value - 4.0).abs() < 1e-12);
        assert!((numlin::norm2(&m.argmin) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn linear_functional_on_circle() {
        let obj = FnObjective::new("x1", 2, |x: &[f64]| Ok(x[0]));
        let m = sphere_min(&obj, 1.0, &opts()).unwrap();
        assert!((m.value + 1.0).abs() < 1e-9);
        assert!((m.argmin[0] + 1.0).abs() < 1e-6 && m.argmin[1].abs() < 1e-4);
    }

    #[test]
    fn undefined_everywhere_is_an_error() {
        let obj = FnObjective::new("bad", 2, |_: &[f64]| {
            Err(ObjectiveError::Undefined("always".into()))
        });
        assert!(matches!(sphere_min(&obj, 1.0, &opts()), Err(ScanError::Undefined { .. })));
    }

    #[test]
    fn partially_undefined_starts_are_skipped() {
        let obj = FnObjective::new("half", 2, |x: &[f64]| {
            if x[1] > 0.0 {
                Ok(x[0])
            } else {
                Err(ObjectiveError::Undefined("lower half".into()))
            }
        });
        let m = sphere_min(&obj, 1.0, &opts()).unwrap();
        assert!(m.skipped > 0 && m.skipped < m.starts);
    }

    #[test]
    fn schedule_is_strictly_increasing_and_hits_ends() {
        let s = RadiusSchedule::default();
        let r = s.radii();
        assert_eq!(r.len(), 97);
        assert_eq!(r[0], 1.0);
        assert_eq!(*r.last().unwrap(), 1e6);
        assert!(r.windows(2).all(|w| w[0] < w[1]));
        assert!(RadiusSchedule::new(2.0, 1.0, 4).is_err());
        assert!(RadiusSchedule::new(1.0, 2.0, 0).is_err());
    }

    #[test]
    fn norm_scan_returns_radius() {
        let obj = FnObjective::new("norm", 3, |x: &[f64]| Ok(numlin::norm2(x)));
        let sched = RadiusSchedule::new(1e-2, 1e4, 4).unwrap();
        let scan = radial_scan(&obj, "id", &sched, &opts());
        for p in &scan.points {
            assert!((p.value.unwrap() - p.r).abs() <= 1e-9 * p.r);
        }
    }

    #[test]
    fn tail_fit_constant_and_power_law() {
        let rs: Vec<f64> = (0..40).map(|i| 10f64.powf(1.0 + i as f64 / 10.0)).collect();
        let flat = RadialScan::from_profile("one", &rs.iter().map(|&r| (r, 1.0)).collect::<Vec<_>>());
        match tail_fit(&flat, 2.0) {
            TailFit::Fit { alpha, .. } => assert!(alpha.abs() <= 0.05),
            other => panic!("{other:?}"),
        }
        let pl = RadialScan::from_profile(
            "pl",
            &rs.iter().map(|&r| (r, 10.0 / (r * r))).collect::<Vec<_>>(),
        );
        match tail_fit(&pl, 2.0) {
            TailFit::Fit { alpha, c, residual, .. } => {
                assert!((alpha + 2.0).abs() <= 0.05);
                assert!((c - 10.0).abs() < 1e-6 && residual < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tail_fit_rejects_short_or_nonpositive_windows() {
        let short = RadialScan::from_profile("s", &[(1.0, 1.0), (10.0, 1.0)]);
        assert!(matches!(tail_fit(&short, 2.0), TailFit::Inconclusive { .. }));
        let rs: Vec<(f64, f64)> = (0..20).map(|i| (1.0 + i as f64, if i == 15 { 0.0 } else { 1.0 })).collect();
        assert!(matches!(
            tail_fit(&RadialScan::from_profile("z", &rs), 2.0),
            TailFit::Inconclusive { .. }
        ));
    }

    #[test]
    fn integral_of_constant_profile() {
        let scan = RadialScan::from_profile("one", &[(1.0, 1.0), (2.0, 1.0), (50.0, 1.0)]);
        assert!((profile_integral(&scan).unwrap() - 50.0).abs() < 1e-12);
    }

    #[test]
    fn seeds_differ_and_are_stable() {
        assert_ne!(radius_seed(0, 0), radius_seed(0, 1));
        assert_ne!(start_seed(5, 0), start_seed(5, 1));
        assert_eq!(radius_seed(42, 3), radius_seed(42, 3));
        let p = random_sphere_point(4, 3.0, 11);
        assert!((numlin::norm2(&p) - 3.0).abs() < 1e-12);
    }
}
