//! Audio decoding, fixed-shape mel feature windows, and the canonical
//! provider file formats (embeddings, emotions, texts, annotations).

mod mel;
mod provider;
mod wav;

use thiserror::Error;

use crate::Scalar;

pub use mel::{mel_mean_embedding, mel_spectrogram, MelExtractor, MelMode, FLOOR_DB};
pub use provider::{
    read_annotations, read_embeddings, read_emotions, read_provider_file, read_texts,
    write_annotations, write_embeddings, write_emotions, write_provider_file, write_texts,
    EmbeddingRecord, EmotionRecord, ProviderError, ProviderKind, ProviderRecords, TextRecord,
};
pub use wav::{load_wav, resample_linear, CANONICAL_SAMPLE_RATE};

/// Length of a diarization feature window.
pub const WINDOW_S: f64 = 1.0;
/// Offset between consecutive diarization window starts.
pub const WINDOW_HOP_S: f64 = 0.1;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("not a RIFF/WAVE file: {0}")]
    NotWav(String),
    #[error("unsupported wav encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("audio contains no samples")]
    EmptyAudio,
    #[error("audio is {duration_s:.3} s long, at least 1.0 s is required")]
    TooShort { duration_s: f64 },
    #[error("feature slice must hold exactly {expected} samples, got {got}")]
    BadLength { expected: usize, got: usize },
    #[error("sample rate must be positive")]
    BadSampleRate,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Mono audio with amplitudes in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer<T> {
    pub samples: Vec<T>,
    pub sample_rate: u32,
}

impl<T: Scalar> AudioBuffer<T> {
    pub fn new(samples: Vec<T>, sample_rate: u32) -> Result<Self, FeatureError> {
        if sample_rate == 0 {
            return Err(FeatureError::BadSampleRate);
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    /// Returns a copy with every sample multiplied by `gain`.
    pub fn scaled(&self, gain: T) -> Self {
        Self {
            samples: self.samples.iter().map(|&s| s * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }
}

/// A 1.0 s slice of audio starting at `start_s`.
#[derive(Debug, Clone, Copy)]
pub struct FeatureSlice<'a, T> {
    pub start_s: f64,
    pub samples: &'a [T],
}

/// A 1.0 s diarization window and its spectrogram.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureWindow<T> {
    pub start_s: f64,
    pub duration_s: f64,
    pub spectrogram: MelSpectrogram<T>,
}

/// Frames × bands matrix of log-mel energies in dB, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram<T> {
    pub values: Vec<T>,
    pub frames: usize,
    pub bands: usize,
    pub mode: MelMode,
}

impl<T: Scalar> MelSpectrogram<T> {
    pub fn shape(&self) -> (usize, usize) {
        (self.frames, self.bands)
    }

    pub fn get(&self, frame: usize, band: usize) -> T {
        self.values[frame * self.bands + band]
    }

    pub fn frame(&self, frame: usize) -> &[T] {
        &self.values[frame * self.bands..(frame + 1) * self.bands]
    }
}

/// A speaker embedding (d-vector) for one feature window.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector<T> {
    pub components: Vec<T>,
}

impl<T: Scalar> EmbeddingVector<T> {
    pub fn new(components: Vec<T>) -> Self {
        Self { components }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn norm(&self) -> T {
        self.components.iter().fold(T::zero(), |acc, &c| acc + c * c).sqrt()
    }

    /// Unit-length copy, or `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let norm = self.norm();
        if !(norm > T::zero()) || !norm.is_finite() {
            return None;
        }
        Some(Self { components: self.components.iter().map(|&c| c / norm).collect() })
    }
}

/// Splits audio into 1.0 s windows whose starts advance by 0.1 s.
///
/// The last window is the last full second of audio.
pub fn frame_windows<T: Scalar>(audio: &AudioBuffer<T>) -> Result<Vec<FeatureSlice<'_, T>>, FeatureError> {
    let rate = audio.sample_rate as usize;
    let window = rate;
    // sample rates that are not multiples of 10 Hz round the hop down
    let hop = (rate / 10).max(1);
    let n = audio.samples.len();
    if n < window {
        return Err(FeatureError::TooShort { duration_s: audio.duration_s() });
    }
    let count = (n - window) / hop + 1;
    Ok((0..count)
        .map(|k| {
            let offset = k * hop;
            FeatureSlice {
                start_s: offset as f64 / rate as f64,
                samples: &audio.samples[offset..offset + window],
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn silence(seconds: f64) -> AudioBuffer<f64> {
        AudioBuffer::new(vec![0.0; (seconds * 16000.0).round() as usize], 16000).unwrap()
    }

    #[test]
    fn one_second_gives_single_window() {
        let audio = silence(1.0);
        let w = frame_windows(&audio).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].start_s, 0.0);
    }

    #[test]
    fn two_seconds_give_eleven_windows() {
        let audio = silence(2.0);
        let w = frame_windows(&audio).unwrap();
        assert_eq!(w.len(), 11);
        assert!((w[10].start_s - 1.0).abs() < 1e-12);
        for pair in w.windows(2) {
            assert!((pair[1].start_s - pair[0].start_s - 0.1).abs() < 1e-12);
        }
        assert!(w.iter().all(|s| s.samples.len() == 16000));
    }

    #[test]
    fn half_second_is_too_short() {
        let audio = silence(0.5);
        assert!(matches!(frame_windows(&audio), Err(FeatureError::TooShort { .. })));
    }

    #[test]
    fn window_count_matches_closed_form() {
        for tenths in 10..80 {
            let dur = tenths as f64 / 10.0 + 0.05;
            let audio = silence(dur);
            let expected = ((dur - 1.0) / 0.1).floor() as usize + 1;
            assert_eq!(frame_windows(&audio).unwrap().len(), expected, "duration {dur}");
        }
    }

    #[test]
    fn zero_vector_has_no_normalization() {
        assert!(EmbeddingVector::new(vec![0.0f64, 0.0]).normalized().is_none());
        let v = EmbeddingVector::new(vec![3.0f32, 4.0]).normalized().unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-6);
    }
}
