//! "Who spoke when": affinity-matrix spectral clustering of per-window
//! speaker embeddings, run merging, spike smoothing and roster labeling.

mod affinity;
mod kmeans;
mod segments;
mod spectral;

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::EigenError;
use crate::ParticipantId;

pub use affinity::{affinity, AffinityMatrix};
pub use kmeans::{kmeans, KMeansFit, MAX_LLOYD_ITERATIONS};
pub use segments::{
    assign_roster, chart_intervals, labels_to_utterances, read_utterances, temporal_smooth, write_utterances,
    ChartInterval, MIN_SPEECH_S,
};
pub use spectral::{spectral_cluster, spectral_embedding};

/// Tolerance for comparing times derived from 0.1 s window arithmetic.
pub const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DiarizeError {
    #[error("embedding {index} is the zero vector")]
    ZeroVector { index: usize },
    #[error("embedding {index} has {got} components, expected {expected}")]
    DimensionMismatch { index: usize, expected: usize, got: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("eigendecomposition failed: {0}")]
    EigenFailure(#[from] EigenError),
    #[error("{clusters} speakers detected but the roster lists only {roster}")]
    RosterTooSmall { clusters: usize, roster: usize },
    #[error("invalid roster: {0}")]
    InvalidRoster(String),
    #[error("utterances file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SpeakerLabel {
    Cluster(usize),
    Participant(ParticipantId),
}

impl SpeakerLabel {
    /// Key used by downstream modules and output files.
    pub fn id(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for SpeakerLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpeakerLabel::Cluster(i) => write!(f, "S{i}"),
            SpeakerLabel::Participant(id) => f.write_str(id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub speaker: SpeakerLabel,
    pub start_s: f64,
    pub end_s: f64,
}

impl Utterance {
    pub fn new(speaker: SpeakerLabel, start_s: f64, end_s: f64) -> Self {
        Self { speaker, start_s, end_s }
    }

    pub fn participant(id: &str, start_s: f64, end_s: f64) -> Self {
        Self::new(SpeakerLabel::Participant(id.to_string()), start_s, end_s)
    }

    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

/// Participant IDs in order of self-introduction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Roster {
    ids: Vec<ParticipantId>,
}

impl Roster {
    pub fn new(ids: Vec<ParticipantId>) -> Result<Self, DiarizeError> {
        if ids.is_empty() {
            return Err(DiarizeError::InvalidRoster("roster is empty".into()));
        }
        for (i, id) in ids.iter().enumerate() {
            if id.trim().is_empty() {
                return Err(DiarizeError::InvalidRoster(format!("entry {i} is blank")));
            }
            if ids[..i].contains(id) {
                return Err(DiarizeError::InvalidRoster(format!("duplicate id `{id}`")));
            }
        }
        Ok(Self { ids })
    }

    /// One ID per non-empty line.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, DiarizeError> {
        let body = std::fs::read_to_string(path)?;
        Self::new(body.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
    }

    pub fn ids(&self) -> &[ParticipantId] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Sorts utterances by start time, then end time, then speaker.
pub fn sort_utterances(utts: &mut [Utterance]) {
    utts.sort_by(|a, b| {
        a.start_s
            .total_cmp(&b.start_s)
            .then(a.end_s.total_cmp(&b.end_s))
            .then_with(|| a.speaker.cmp(&b.speaker))
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roster_rejects_duplicates_and_blanks() {
        assert!(Roster::new(vec!["A".into(), "B".into()]).is_ok());
        assert!(Roster::new(vec!["A".into(), "A".into()]).is_err());
        assert!(Roster::new(vec![" ".into()]).is_err());
        assert!(Roster::new(vec![]).is_err());
    }

    #[test]
    fn labels_display() {
        assert_eq!(SpeakerLabel::Cluster(2).to_string(), "S2");
        assert_eq!(SpeakerLabel::Participant("P7".into()).id(), "P7");
    }
}
