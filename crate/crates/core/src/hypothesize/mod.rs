//! Team states over time windows, behavioral events, and invariant or
//! differentiated hypotheses drawn from pairs of linear segments.

mod cluster;
mod concepts;
mod delta;
mod events;
mod extract;
mod similarity;
mod state;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cluster::{abstract_ranges, cluster_report, cluster_segments, ClusterReport, ParamRange};
pub use concepts::{
    breadth, build_concept_network, depth, lemmatize, sentence_concepts, CoOccurrence, ConceptNetwork, Relatedness,
    MIN_RELATEDNESS,
};
pub use delta::{check_delta_hypothesis, delta_verdict, pearson, DeltaVerdict, Verdict};
pub use events::{detect_events, linear_segments, max_set_distance, Event, LinearSegment};
pub use extract::{eval_pair, extract_all, At, Hypothesis, HypothesisSets, Kind, PairOutcome, Relation, Scope, Term};
pub use similarity::{ig_similarity, magnitude_score, set_scores, sim_events, Param, SetScores, SimScore};
pub use state::{
    extract_team_state, window_states, Motivation, Observations, ResponseObs, SentenceObs, TeamState,
};

pub(crate) use extract::round6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("{name} must lie in {range}, got {value}")]
    OutOfRange { name: &'static str, range: &'static str, value: String },
    #[error("theta_dsim ({dsim}) must be below theta_sim ({sim})")]
    ThresholdOrder { sim: String, dsim: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HypothesisConfig {
    pub theta_sim: f64,
    pub theta_dsim: f64,
    /// Event threshold on the largest per-set distance.
    pub tau: f64,
    pub theta_cluster: f64,
    pub window_s: f64,
    /// Emit hypotheses for a segment paired with itself.
    pub include_self_pairs: bool,
}

impl Default for HypothesisConfig {
    fn default() -> Self {
        Self { theta_sim: 0.7, theta_dsim: 0.3, tau: 0.5, theta_cluster: 0.7, window_s: 120.0, include_self_pairs: false }
    }
}

impl HypothesisConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let open = |name, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(ConfigError::OutOfRange { name, range: "(0, 1)", value: v.to_string() })
            }
        };
        open("theta_sim", self.theta_sim)?;
        open("theta_dsim", self.theta_dsim)?;
        open("theta_cluster", self.theta_cluster)?;
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(ConfigError::OutOfRange { name: "tau", range: "(0, 1]", value: self.tau.to_string() });
        }
        if !(self.window_s > 0.0 && self.window_s.is_finite()) {
            return Err(ConfigError::OutOfRange { name: "window_s", range: "(0, inf)", value: self.window_s.to_string() });
        }
        if self.theta_dsim >= self.theta_sim {
            return Err(ConfigError::ThresholdOrder { sim: self.theta_sim.to_string(), dsim: self.theta_dsim.to_string() });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_checks() {
        assert!(HypothesisConfig::default().validate().is_ok());
        let bad = HypothesisConfig { theta_dsim: 0.8, ..HypothesisConfig::default() };
        assert!(matches!(bad.validate(), Err(ConfigError::ThresholdOrder { .. })));
        let bad = HypothesisConfig { tau: 0.0, ..HypothesisConfig::default() };
        assert!(bad.validate().is_err());
    }
}
