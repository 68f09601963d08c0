//! Aggregation of condition reports into an injectivity verdict.
//!
//! Bijectivity evidence needs, for every `(n-2)`-subset of components, at
//! least one sufficient condition that holds, together with properness
//! evidence (no non-properness witness, or a user assertion that the
//! non-proper set has codimension at least two). A verified collision pair
//! overrides everything.

mod collision;
mod properness;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conditions::{self, ConditionReport, Status};

pub use collision::{collision_search, CollisionConfig, CollisionPair};
pub use properness::{nonproper_witness_search, ProperConfig, PropernessEvidence, TargetWitness, WitnessCluster};

pub const VERDICT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerdictError {
    #[error("combinations need n >= 3, got {0}")]
    TooSmall(usize),
    #[error("no reports for combination {0:?}")]
    MissingCombination(Vec<usize>),
    #[error("reports for {0:?}, which is not a combination of this map")]
    UnknownCombination(Vec<usize>),
}

/// All sorted `(n-2)`-subsets of `{1, …, n}`, one-based, lexicographic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombinationSet {
    pub n: usize,
    pub subsets: Vec<Vec<usize>>,
}

pub fn enumerate_combinations(n: usize) -> Result<CombinationSet, VerdictError> {
    if n < 3 {
        return Err(VerdictError::TooSmall(n));
    }
    let k = n - 2;
    let mut subsets = Vec::new();
    let mut cur: Vec<usize> = (1..=k).collect();
    loop {
        subsets.push(cur.clone());
        // rightmost position that can still advance
        let Some(i) = (0..k).rev().find(|&i| cur[i] < n - (k - 1 - i)) else { break };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
    Ok(CombinationSet { n, subsets })
}

/// The subsets whose reports the aggregator expects: the `(n-2)`-subsets
/// for `n ≥ 3`, the single components when `n = 2`.
pub fn expected_subsets(n: usize) -> Vec<Vec<usize>> {
    match enumerate_combinations(n) {
        Ok(c) => c.subsets,
        Err(_) => (1..=n).map(|i| vec![i]).collect(),
    }
}

/// Conditions that, holding, make the foliation of a combination by planes.
pub const SUFFICIENT: [&str; 6] = [
    conditions::FIBRATION,
    conditions::RABIER,
    conditions::PALAIS_SMALE,
    conditions::INTEGRAL,
    "chain_rabier",
    "chain_integral",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinationReports {
    pub subset: Vec<usize>,
    pub reports: Vec<ConditionReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Properness {
    NoWitnessFound,
    WitnessFound,
    UserAssertedCodim2,
    /// No targets were scanned and nothing was asserted.
    NotSearched,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Conclusion {
    BijectiveEvidence,
    InjectiveEvidence,
    NonInjective,
    Inconclusive,
}

impl std::fmt::Display for Conclusion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Conclusion::BijectiveEvidence => "bijective-evidence",
            Conclusion::InjectiveEvidence => "injective-evidence",
            Conclusion::NonInjective => "non-injective",
            Conclusion::Inconclusive => "inconclusive",
        })
    }
}

impl std::str::FromStr for Conclusion {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "bijective-evidence" => Ok(Conclusion::BijectiveEvidence),
            "injective-evidence" => Ok(Conclusion::InjectiveEvidence),
            "non-injective" => Ok(Conclusion::NonInjective),
            "inconclusive" => Ok(Conclusion::Inconclusive),
            _ => Err(format!("unknown conclusion {s:?}")),
        }
    }
}

/// One row of the condition matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinationOutcome {
    pub subset: Vec<usize>,
    /// `(condition, subject, verdict)` for every report of the combination.
    pub statuses: Vec<(String, String, Status)>,
    /// Sufficient conditions that hold.
    pub satisfied: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub schema: u32,
    pub n: usize,
    pub combinations: Vec<CombinationOutcome>,
    pub properness: Properness,
    /// Witness targets and their clusters, summarized.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonproper: Option<PropernessEvidence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral: Option<Status>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collision: Option<CollisionPair>,
    pub conclusion: Conclusion,
    /// Which rule produced the conclusion.
    pub basis: String,
    pub gaps: Vec<String>,
    pub evidence_not_proof: bool,
}

pub struct VerdictInput<'a> {
    pub n: usize,
    pub combinations: &'a [CombinationReports],
    pub properness: &'a PropernessEvidence,
    pub assert_codim2: bool,
    pub spectral: Option<&'a ConditionReport>,
    /// A pair already verified against the map.
    pub collision: Option<&'a CollisionPair>,
}

pub fn aggregate_verdict(inp: &VerdictInput) -> Result<Verdict, VerdictError> {
    let expected = expected_subsets(inp.n);
    for c in inp.combinations {
        if !expected.contains(&c.subset) {
            return Err(VerdictError::UnknownCombination(c.subset.clone()));
        }
    }
    let mut rows = Vec::new();
    for s in &expected {
        let c = inp
            .combinations
            .iter()
            .find(|c| &c.subset == s)
            .ok_or_else(|| VerdictError::MissingCombination(s.clone()))?;
        let statuses: Vec<(String, String, Status)> =
            c.reports.iter().map(|r| (r.condition.clone(), r.subject.clone(), r.verdict)).collect();
        let mut satisfied: Vec<String> = c
            .reports
            .iter()
            .filter(|r| r.verdict == Status::Holds && SUFFICIENT.contains(&r.condition.as_str()))
            .map(|r| r.condition.clone())
            .collect();
        satisfied.dedup();
        rows.push(CombinationOutcome { subset: s.clone(), statuses, satisfied });
    }

    let properness = if inp.assert_codim2 {
        Properness::UserAssertedCodim2
    } else if inp.properness.targets_scanned == 0 {
        Properness::NotSearched
    } else if inp.properness.witnesses.is_empty() {
        Properness::NoWitnessFound
    } else {
        Properness::WitnessFound
    };
    let proper_ok = matches!(properness, Properness::NoWitnessFound | Properness::UserAssertedCodim2);
    let spectral = inp.spectral.map(|r| r.verdict);
    let mut gaps: Vec<String> = rows
        .iter()
        .filter(|r| r.satisfied.is_empty())
        .map(|r| format!("combination {:?}: no sufficient condition holds", r.subset))
        .collect();
    if properness == Properness::NotSearched {
        gaps.push("properness not searched and codim(S_f) >= 2 not asserted".into());
    } else if !proper_ok {
        gaps.push(format!(
            "non-properness witnesses at {} targets; codim(S_f) >= 2 not asserted",
            inp.properness.witnesses.len()
        ));
    }
    let all_covered = rows.iter().all(|r| !r.satisfied.is_empty());

    let (conclusion, basis) = if let Some(p) = inp.collision {
        (Conclusion::NonInjective, format!("verified collision f(x) = f(x') with |x - x'| = {:.4e}", p.separation))
    } else if inp.n == 2 {
        match rows.iter().find(|r| !r.satisfied.is_empty()) {
            Some(r) => (
                Conclusion::InjectiveEvidence,
                format!("n = 2: component {:?} satisfies {}", r.subset, r.satisfied.join(", ")),
            ),
            None => (Conclusion::Inconclusive, "n = 2: no component satisfies a sufficient condition".into()),
        }
    } else if all_covered && proper_ok {
        (Conclusion::BijectiveEvidence, "every combination has a sufficient condition and properness is not contradicted".into())
    } else if inp.n == 3 && spectral == Some(Status::Holds) && proper_ok {
        (Conclusion::InjectiveEvidence, "spectral condition holds and properness is not contradicted".into())
    } else {
        (Conclusion::Inconclusive, "hypotheses of the injectivity results not all met".into())
    };
    if conclusion != Conclusion::Inconclusive {
        gaps.clear();
    }
    Ok(Verdict {
        schema: VERDICT_SCHEMA,
        n: inp.n,
        combinations: rows,
        properness,
        nonproper: Some(inp.properness.clone()),
        spectral,
        collision: inp.collision.cloned(),
        conclusion,
        basis,
        gaps,
        evidence_not_proof: true,
    })
}

impl Verdict {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdicts serialize")
    }

    /// Human-readable summary carrying the same content as the JSON.
    pub fn summary(&self) -> String {
        let mut out = format!("conclusion: {}\nbasis: {}\nn: {}\n", self.conclusion, self.basis, self.n);
        out.push_str(&format!("properness: {}\n", serde_json::to_value(self.properness).unwrap().as_str().unwrap()));
        if let Some(np) = &self.nonproper {
            out.push_str(&format!("  targets scanned: {}, witnesses: {}\n", np.targets_scanned, np.witnesses.len()));
            for c in &np.clusters {
                out.push_str(&format!(
                    "  cluster of {} targets around {:?}, apparent dimension {}\n",
                    c.members.len(),
                    c.centroid,
                    c.apparent_dim
                ));
            }
        }
        if let Some(s) = self.spectral {
            out.push_str(&format!("spectral: {s}\n"));
        }
        if let Some(p) = &self.collision {
            out.push_str(&format!("collision: x = {:?}, x' = {:?}, |f(x) - f(x')| = {:e}\n", p.x, p.x_prime, p.residual));
        }
        for r in &self.combinations {
            out.push_str(&format!("combination {:?}:", r.subset));
            for (c, s, v) in &r.statuses {
                out.push_str(&format!(" {s}:{c}={v}"));
            }
            out.push('\n');
        }
        for g in &self.gaps {
            out.push_str(&format!("gap: {g}\n"));
        }
        out.push_str("all conclusions are numerical evidence, not proof\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditions::Thresholds;

    #[test]
    fn small_combination_sets() {
        assert_eq!(enumerate_combinations(3).unwrap().subsets, vec![vec![1], vec![2], vec![3]]);
        assert_eq!(
            enumerate_combinations(4).unwrap().subsets,
            vec![vec![1, 2], vec![1, 3], vec![1, 4], vec![2, 3], vec![2, 4], vec![3, 4]]
        );
        assert_eq!(enumerate_combinations(5).unwrap().subsets.len(), 10);
        assert!(enumerate_combinations(2).is_err());
    }

    fn report(cond: &str, v: Status) -> ConditionReport {
        ConditionReport::new(cond, "s", v, &Thresholds::default())
    }

    fn combos(v: &[Status]) -> Vec<CombinationReports> {
        v.iter()
            .enumerate()
            .map(|(i, &s)| CombinationReports { subset: vec![i + 1], reports: vec![report(conditions::PALAIS_SMALE, s)] })
            .collect()
    }

    #[test]
    fn bijective_needs_every_combination() {
        let none = PropernessEvidence { targets_scanned: 27, heuristic: true, ..Default::default() };
        let all = combos(&[Status::Holds; 3]);
        let inp = VerdictInput { n: 3, combinations: &all, properness: &none, assert_codim2: false, spectral: None, collision: None };
        assert_eq!(aggregate_verdict(&inp).unwrap().conclusion, Conclusion::BijectiveEvidence);
        let gap = combos(&[Status::Holds, Status::Inconclusive, Status::Holds]);
        let inp = VerdictInput { combinations: &gap, ..inp };
        let v = aggregate_verdict(&inp).unwrap();
        assert_eq!(v.conclusion, Conclusion::Inconclusive);
        assert_eq!(v.gaps.len(), 1);
        let unsearched = PropernessEvidence::default();
        let inp = VerdictInput { combinations: &all, properness: &unsearched, ..inp };
        let v = aggregate_verdict(&inp).unwrap();
        assert_eq!((v.properness, v.conclusion), (Properness::NotSearched, Conclusion::Inconclusive));
    }

    #[test]
    fn missing_combination_is_an_error() {
        let none = PropernessEvidence::default();
        let two = combos(&[Status::Holds; 2]);
        let inp = VerdictInput { n: 3, combinations: &two, properness: &none, assert_codim2: false, spectral: None, collision: None };
        assert_eq!(aggregate_verdict(&inp), Err(VerdictError::MissingCombination(vec![3])));
    }

    #[test]
    fn spectral_path_needs_properness() {
        let none = PropernessEvidence::default();
        let fails = combos(&[Status::Fails; 3]);
        let spec = report(conditions::SPECTRAL, Status::Holds);
        let inp = VerdictInput {
            n: 3,
            combinations: &fails,
            properness: &none,
            assert_codim2: true,
            spectral: Some(&spec),
            collision: None,
        };
        assert_eq!(aggregate_verdict(&inp).unwrap().conclusion, Conclusion::InjectiveEvidence);
    }
}
