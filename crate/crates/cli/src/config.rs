use std::path::PathBuf;

use globinj::conditions::{self, CheckConfig};
use globinj::verdict::{CollisionConfig, ProperConfig};
use serde::{Deserialize, Serialize};

use crate::AnalyzeError;

pub const CHAIN_RABIER: &str = "chain_rabier";
pub const CHAIN_INTEGRAL: &str = "chain_integral";
pub const NONPROPER: &str = "nonproper";
pub const COLLISION: &str = "collision";
pub const TOPOLOGY: &str = "topology";

/// Every name accepted by `--condition`.
pub const CONDITION_NAMES: [&str; 11] = [
    conditions::PALAIS_SMALE,
    conditions::RABIER,
    conditions::INTEGRAL,
    conditions::FIBRATION,
    CHAIN_RABIER,
    CHAIN_INTEGRAL,
    conditions::SPECTRAL,
    conditions::BALREIRA,
    NONPROPER,
    COLLISION,
    TOPOLOGY,
];

/// Level curves of an auxiliary function of two variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyJob {
    /// One-component DSL text in `x1, x2`.
    pub function: String,
    pub levels: Vec<f64>,
    pub half_width: f64,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    /// Also count components in the boxes `2R` and `4R`.
    #[serde(default)]
    pub bifurcation: bool,
}

fn default_resolution() -> usize {
    512
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Global seed; replaces `checks.scan.seed`.
    pub seed: u64,
    /// Conditions to run; empty runs all of them.
    pub conditions: Vec<String>,
    /// One-based combinations to check; empty checks all of them.
    pub combinations: Vec<Vec<usize>>,
    pub assert_codim2: bool,
    pub out: Option<PathBuf>,
    pub spectral_eps: f64,
    /// Balreira's condition for `i = 1..=k`; 0 skips it.
    pub balreira_k: usize,
    /// Points fixing the constants of restricted chains.
    pub chain_anchors: usize,
    pub checks: CheckConfig,
    pub properness: ProperConfig,
    pub collision: CollisionConfig,
    pub topology: Vec<TopologyJob>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            seed: 0,
            conditions: Vec::new(),
            combinations: Vec::new(),
            assert_codim2: false,
            out: None,
            spectral_eps: 0.5,
            balreira_k: 1,
            chain_anchors: 3,
            checks: CheckConfig::default(),
            properness: ProperConfig::default(),
            collision: CollisionConfig::default(),
            topology: Vec::new(),
        }
    }
}

impl AnalysisConfig {
    pub fn from_toml(text: &str) -> Result<Self, AnalyzeError> {
        let cfg: AnalysisConfig = toml::from_str(text).map_err(|e| AnalyzeError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), AnalyzeError> {
        for c in &self.conditions {
            if !CONDITION_NAMES.contains(&c.as_str()) {
                return Err(AnalyzeError::Config(format!(
                    "unknown condition {c:?}; expected one of {}",
                    CONDITION_NAMES.join(", ")
                )));
            }
        }
        for s in [&self.checks.schedule, &self.checks.balreira_schedule, &self.properness.schedule] {
            s.validate().map_err(|e| AnalyzeError::Config(e.to_string()))?;
        }
        if !(self.spectral_eps > 0.0 && self.spectral_eps.is_finite()) {
            return Err(AnalyzeError::Config(format!("spectral_eps must be positive, got {}", self.spectral_eps)));
        }
        for s in &self.combinations {
            if s.is_empty() || s.windows(2).any(|w| w[0] >= w[1]) || s[0] == 0 {
                return Err(AnalyzeError::Config(format!("combination {s:?} must be strictly increasing, one-based")));
            }
        }
        Ok(())
    }

    /// Copy with the global seed pushed into every seeded component.
    pub fn effective(&self) -> AnalysisConfig {
        let mut c = self.clone();
        c.checks.scan.seed = self.seed;
        c
    }

    pub fn wants(&self, condition: &str) -> bool {
        self.conditions.is_empty() || self.conditions.iter().any(|c| c == condition)
    }

    pub fn wants_combination(&self, subset: &[usize]) -> bool {
        self.combinations.is_empty() || self.combinations.iter().any(|c| c == subset)
    }
}

/// Parses `"1,3"` into `[1, 3]`.
pub fn parse_combination(text: &str) -> Result<Vec<usize>, String> {
    let mut out: Vec<usize> = text
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    out.sort_unstable();
    out.dedup();
    if out.first() == Some(&0) {
        return Err("combinations are one-based".into());
    }
    Ok(out)
}
