//! Direct search for `x ≠ x'` with `f(x) = f(x')`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::expr::{ExprMap, MapDerivatives};
use crate::numlin;
use crate::scan::mix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollisionConfig {
    pub attempts: usize,
    /// Starts are drawn uniformly from `[-scale, scale]ⁿ`.
    pub scale: f64,
    pub max_iter: usize,
    /// Smallest accepted `‖x − x'‖`.
    pub min_separation: f64,
    /// Accepted `‖f(x) − f(x')‖` relative to `1 + ‖f(x)‖`.
    pub tol: f64,
}

impl Default for CollisionConfig {
    fn default() -> Self {
        CollisionConfig { attempts: 2000, scale: 4.0, max_iter: 60, min_separation: 1e-3, tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionPair {
    pub x: Vec<f64>,
    pub x_prime: Vec<f64>,
    pub residual: f64,
    pub separation: f64,
    pub attempt: usize,
}

impl CollisionPair {
    /// Re-evaluates `f` at both points.
    pub fn verify(&self, f: &ExprMap, cfg: &CollisionConfig) -> bool {
        let (Ok(a), Ok(b)) = (f.eval(&self.x), f.eval(&self.x_prime)) else { return false };
        let res = numlin::norm2(&a.iter().zip(&b).map(|(p, q)| p - q).collect::<Vec<_>>());
        let sep = numlin::norm2(&self.x.iter().zip(&self.x_prime).map(|(p, q)| p - q).collect::<Vec<_>>());
        res <= cfg.tol * (1.0 + numlin::norm2(&a)) && sep >= cfg.min_separation
    }
}

/// Minimum-norm Gauss–Newton on `F(x, x') = f(x) − f(x')` over ℝ²ⁿ from
/// random separated starts. Minimum-norm steps move the pair no more than
/// needed, so starts that do not collapse onto the diagonal `x = x'` keep
/// their separation; pairs closer than `min_separation` are discarded.
/// Returns the verified pair of the lowest successful attempt.
pub fn collision_search(f: &ExprMap, seed: u64, cfg: &CollisionConfig) -> Option<CollisionPair> {
    assert!(f.is_square(), "collision search needs a square map");
    let d = MapDerivatives::first_order(f);
    let n = f.n_in();
    let found: Vec<Option<CollisionPair>> = (0..cfg.attempts)
        .into_par_iter()
        .map(|attempt| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ mix64(attempt as u64 + 0x9E3779B97F4A7C15)));
            let mut z: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-cfg.scale..=cfg.scale)).collect();
            for _ in 0..cfg.max_iter {
                let (x, xp) = z.split_at(n);
                let (a, b) = (f.eval(x).ok()?, f.eval(xp).ok()?);
                let res: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p - q).collect();
                let rn = numlin::norm2(&res);
                if !rn.is_finite() {
                    return None;
                }
                if rn <= 0.1 * cfg.tol * (1.0 + numlin::norm2(&a)) {
                    let pair = CollisionPair {
                        x: x.to_vec(),
                        x_prime: xp.to_vec(),
                        residual: rn,
                        separation: numlin::norm2(&x.iter().zip(xp).map(|(p, q)| p - q).collect::<Vec<_>>()),
                        attempt,
                    };
                    return pair.verify(f, cfg).then_some(pair);
                }
                let (ja, jb) = (d.jacobian(x).ok()?, d.jacobian(xp).ok()?);
                let rows: Vec<Vec<f64>> = (0..n)
                    .map(|i| ja.row(i).iter().copied().chain(jb.row(i).iter().map(|v| -v)).collect())
                    .collect();
                let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
                let step = numlin::min_norm_solve(&refs, &res).ok()?;
                for (zi, s) in z.iter_mut().zip(&step) {
                    *zi -= s;
                }
            }
            None
        })
        .collect();
    found.into_iter().flatten().next()
}
