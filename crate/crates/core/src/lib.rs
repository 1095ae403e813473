//! Conversation analytics for recorded team discussions.
//!
//! The pipeline turns speaker embeddings (or raw audio) into diarized
//! utterances, then derives interaction graphs, per-second emotion timelines,
//! speaker-attributed transcripts, rule-based speech clauses, and finally
//! invariant / differentiated hypotheses about team behavior computed over
//! linear segments between behavioral events.
//!
//! Numeric kernels (mel spectrograms, the symmetric eigensolver, k-means,
//! affinity and spectral clustering) are generic over [`Scalar`], which is
//! implemented for `f32` and `f64`. The aliases at the crate root pin the
//! `f64` instantiation used by the pipeline.

pub mod clauses;
pub mod diarize;
pub mod emotion;
pub mod featureio;
pub mod hypothesize;
pub mod interact;
pub mod linalg;
pub mod pipeline;
pub mod report;
pub mod text;

mod scalar;

pub use scalar::Scalar;

/// Participant identifier as listed in a roster file.
pub type ParticipantId = String;

pub type AudioBuffer = featureio::AudioBuffer<f64>;
pub type AudioBuffer32 = featureio::AudioBuffer<f32>;
pub type MelSpectrogram = featureio::MelSpectrogram<f64>;
pub type MelSpectrogram32 = featureio::MelSpectrogram<f32>;
pub type EmbeddingVector = featureio::EmbeddingVector<f64>;
pub type EmbeddingVector32 = featureio::EmbeddingVector<f32>;
pub type AffinityMatrix = diarize::AffinityMatrix<f64>;
pub type AffinityMatrix32 = diarize::AffinityMatrix<f32>;
pub type KMeansFit = diarize::KMeansFit<f64>;
pub type SymmetricEigen = linalg::SymmetricEigen<f64>;

pub use diarize::{Roster, SpeakerLabel, Utterance};
pub use emotion::{EmotionLabel, EmotionTimeline};
pub use interact::{Interaction, InteractionGraph};
