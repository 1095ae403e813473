//! Run configuration, stage orchestration and run manifests.

mod config;
mod manifest;
mod run;
mod stages;

use thiserror::Error;

use crate::diarize::DiarizeError;
use crate::emotion::EmotionError;
use crate::featureio::{FeatureError, ProviderError};
use crate::interact::InteractError;
use crate::text::TextError;

pub use config::{Inputs, RunConfig};
pub use manifest::{
    digest_tree, list_files, read_manifest, sha256_file, verify_manifest, InputDigest, RunManifest, StageRecord,
    StageStatus, MANIFEST_FILE,
};
pub use run::{load_utterances, run_pipeline, STAGES};
pub use stages::{
    audio_embeddings, cluster_windows, emit_charts, emit_clauses, emit_emotions, emit_hypotheses, emit_interactions,
    emit_transcript, emit_utterances, interval_count, recording_segments, speaker_list, Recording, CLAUSES_FILE,
    EMOTIONS_FILE, IG_ALL_JSON, TRANSCRIPT_EXT_FILE, UTTERANCES_FILE,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Diarize(#[from] DiarizeError),
    #[error(transparent)]
    Interact(#[from] InteractError),
    #[error(transparent)]
    Emotion(#[from] EmotionError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error("{0}")]
    Stage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
