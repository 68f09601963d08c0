//! Restricted chains: `g_{k+1}` restricted to the level set `G_k = c`.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use super::{classify_integral, rabier_decision, CheckConfig, ConditionReport, RabierInput, INTEGRAL, RABIER};
use crate::expr::{ExprMap, MapDerivatives};
use crate::numlin;
use crate::scan::objectives::ProjectedGradient;
use crate::scan::{radial_scan_on, Domain, LevelSet, RadialScan};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChainError {
    #[error("chain needs k < m: {k} constants for a map with {m} components")]
    TooManyConstants { k: usize, m: usize },
    #[error("anchor has {got} coordinates, map has {n} inputs")]
    Dimension { got: usize, n: usize },
    #[error("anchor is not on the level set: g{j}(anchor) = {value}, expected {c}")]
    OffLevel { j: usize, value: f64, c: f64 },
    #[error("constraint Jacobian is rank deficient at the anchor (nu = {nu:e})")]
    RankDeficient { nu: f64 },
    #[error("cannot evaluate the map at the anchor: {0}")]
    Eval(String),
}

/// `g_{k+1}` on `{x : gⱼ(x) = cⱼ, j ≤ k}`.
#[derive(Debug, Clone)]
pub struct RestrictedChain {
    pub base: ExprMap,
    pub constants: Vec<f64>,
    pub anchor: Vec<f64>,
    pub tol_level: f64,
    /// `(g₁, …, g_{k+1})`, first derivatives.
    stack: Arc<MapDerivatives>,
    level: Option<LevelSet>,
}

pub fn build_restricted_chain(
    g: &ExprMap,
    constants: &[f64],
    anchor: &[f64],
    tol_level: f64,
) -> Result<RestrictedChain, ChainError> {
    let k = constants.len();
    if k >= g.n_out() {
        return Err(ChainError::TooManyConstants { k, m: g.n_out() });
    }
    if anchor.len() != g.n_in() {
        return Err(ChainError::Dimension { got: anchor.len(), n: g.n_in() });
    }
    let idx: Vec<usize> = (0..=k).collect();
    let stack = Arc::new(MapDerivatives::first_order(&g.select(&idx).expect("k < m")));
    let level = if k == 0 {
        None
    } else {
        let prefix = g.select(&idx[..k]).expect("k < m");
        let v = prefix.eval(anchor).map_err(|e| ChainError::Eval(e.to_string()))?;
        for (j, (&a, &c)) in v.iter().zip(constants).enumerate() {
            if (a - c).abs() > tol_level * (1.0 + c.abs()) {
                return Err(ChainError::OffLevel { j: j + 1, value: a, c });
            }
        }
        let d = Arc::new(MapDerivatives::first_order(&prefix));
        let jac = d.jacobian(anchor).map_err(|e| ChainError::Eval(e.to_string()))?;
        let nu = numlin::nu(&jac).map_err(|e| ChainError::Eval(e.to_string()))?;
        if nu <= numlin::RANK_TOL {
            return Err(ChainError::RankDeficient { nu });
        }
        Some(LevelSet::new(d, constants.to_vec(), tol_level))
    };
    Ok(RestrictedChain { base: g.clone(), constants: constants.to_vec(), anchor: anchor.to_vec(), tol_level, stack, level })
}

impl RestrictedChain {
    pub fn k(&self) -> usize {
        self.constants.len()
    }

    pub fn domain(&self) -> Domain {
        match &self.level {
            None => Domain::Sphere,
            Some(ls) => Domain::Level(ls.clone()),
        }
    }

    /// The restricted function `g_{k+1}` as a scalar map.
    pub fn active(&self) -> ExprMap {
        self.base.select(&[self.k()]).expect("k < m")
    }

    pub fn label(&self, name: &str) -> String {
        let k = self.k();
        if k == 0 {
            return format!("{name}.g1");
        }
        let cs: Vec<String> = self.constants.iter().enumerate().map(|(j, c)| format!("g{}={c}", j + 1)).collect();
        format!("{name}.g{}|{{{}}}", k + 1, cs.join(","))
    }

    pub fn objective(&self) -> ProjectedGradient {
        ProjectedGradient::new(self.stack.clone(), "proj_grad")
    }

    /// Whether `x` satisfies every level constraint within `tol_level`.
    pub fn on_chain(&self, x: &[f64]) -> bool {
        match &self.level {
            None => true,
            Some(ls) => ls.on_level(x).unwrap_or(false),
        }
    }

    /// Random points near the anchor projected onto the level set. Returns
    /// the projected points and how many projections were discarded.
    pub fn sample(&self, count: usize, spread: f64, seed: u64) -> (Vec<Vec<f64>>, usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        let mut discarded = 0;
        while out.len() < count && discarded < 10 * count + 10 {
            let x: Vec<f64> = self
                .anchor
                .iter()
                .map(|a| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    a + spread * z
                })
                .collect();
            let p = match &self.level {
                None => Some(x),
                Some(ls) => ls.project(&x),
            };
            match p {
                Some(p) => out.push(p),
                None => discarded += 1,
            }
        }
        (out, discarded)
    }
}

/// The projected-gradient scan of a chain, shared by its Rabier and
/// integral checks.
pub struct ChainScan {
    pub subject: String,
    pub chain: RestrictedChain,
    pub scan: RadialScan,
}

impl ChainScan {
    pub fn run(chain: &RestrictedChain, name: &str, cfg: &CheckConfig) -> Self {
        let subject = chain.label(name);
        let obj = chain.objective();
        let scan = radial_scan_on(&obj, &subject, &chain.domain(), &cfg.schedule, &cfg.scan);
        ChainScan { subject, chain: chain.clone(), scan }
    }
}

/// `K∞` of the restricted function from `r·‖∇g_{k+1}|_X‖`.
pub fn check_chain_rabier(cs: &ChainScan, cfg: &CheckConfig) -> ConditionReport {
    let profile = cs.scan.times_radius("r_proj_grad");
    let obj = cs.chain.objective();
    let active = cs.chain.active();
    let mut rep = rabier_decision(RabierInput { subject: &cs.subject, profile: &profile, map: &active, obj: &obj }, cfg);
    rep.condition = format!("chain_{RABIER}");
    rep
}

/// Integral condition for one link: divergence of `∫ inf ‖∇g_{k+1}|_X‖ dr`.
pub fn check_chain_integral(cs: &ChainScan, cfg: &CheckConfig) -> ConditionReport {
    let mut rep = classify_integral(&format!("chain_{INTEGRAL}"), &cs.subject, &cs.scan, cfg);
    if cs.scan.errors() > 0 {
        rep.diagnostics.push(format!(
            "{} radii where the sphere misses the level set or every projection failed",
            cs.scan.errors()
        ));
    }
    rep
}
