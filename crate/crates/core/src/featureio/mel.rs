use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{EmbeddingVector, FeatureError, MelSpectrogram};
use crate::Scalar;

/// Log-power floor; silence maps exactly to this value.
pub const FLOOR_DB: f64 = -80.0;

const SAMPLE_RATE: usize = 16_000;
const F_MAX: f64 = 8_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MelMode {
    /// Diarization features: 100 frames × 40 bands.
    Diar,
    /// Emotion-recognition features: 126 frames × 128 bands.
    Ser,
}

#[derive(Debug, Clone, Copy)]
struct Framing {
    n_fft: usize,
    win_length: usize,
    hop: usize,
    pad: usize,
    n_mels: usize,
    frames: usize,
}

impl MelMode {
    fn framing(self) -> Framing {
        match self {
            // 25 ms frames, 10 ms hop; 120 samples of reflect padding per side
            // gives (16000 + 240 - 400) / 160 + 1 = 100 frames.
            MelMode::Diar => Framing { n_fft: 512, win_length: 400, hop: 160, pad: 120, n_mels: 40, frames: 100 },
            // 128 ms frames, 8 ms hop; (16000 + 2048 - 2048) / 128 + 1 = 126 frames.
            MelMode::Ser => Framing { n_fft: 2048, win_length: 2048, hop: 128, pad: 1024, n_mels: 128, frames: 126 },
        }
    }

    /// Output shape `(frames, bands)`.
    pub fn shape(self) -> (usize, usize) {
        let f = self.framing();
        (f.frames, f.n_mels)
    }
}

fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Reusable spectrogram computer: FFT plan, analysis window and filterbank
/// are built once per mode.
pub struct MelExtractor<T: Scalar> {
    mode: MelMode,
    framing: Framing,
    fft: Arc<dyn Fft<T>>,
    window: Vec<T>,
    /// `n_mels` rows of `n_fft / 2 + 1` weights.
    filters: Vec<Vec<T>>,
}

impl<T: Scalar> MelExtractor<T> {
    pub fn new(mode: MelMode) -> Self {
        let framing = mode.framing();
        let fft = FftPlanner::<T>::new().plan_fft_forward(framing.n_fft);
        let window = (0..framing.win_length)
            .map(|i| {
                let phase = 2.0 * std::f64::consts::PI * i as f64 / framing.win_length as f64;
                T::lit(0.5 - 0.5 * phase.cos())
            })
            .collect();
        Self { mode, framing, fft, window, filters: triangular_filters(framing) }
    }

    pub fn mode(&self) -> MelMode {
        self.mode
    }

    pub fn compute(&self, slice: &[T]) -> Result<MelSpectrogram<T>, FeatureError> {
        let f = self.framing;
        if slice.len() != SAMPLE_RATE {
            return Err(FeatureError::BadLength { expected: SAMPLE_RATE, got: slice.len() });
        }
        let n = slice.len() as isize;
        let reflect = |idx: isize| -> usize {
            let mut i = idx;
            if i < 0 {
                i = -i;
            }
            if i >= n {
                i = 2 * (n - 1) - i;
            }
            i as usize
        };

        let floor = T::lit(FLOOR_DB);
        let ten = T::lit(10.0);
        let bins = f.n_fft / 2 + 1;
        let mut buf = vec![Complex::new(T::zero(), T::zero()); f.n_fft];
        let mut power = vec![T::zero(); bins];
        let mut values = Vec::with_capacity(f.frames * f.n_mels);

        for frame in 0..f.frames {
            let origin = (frame * f.hop) as isize - f.pad as isize;
            for (i, slot) in buf.iter_mut().enumerate() {
                *slot = if i < f.win_length {
                    Complex::new(slice[reflect(origin + i as isize)] * self.window[i], T::zero())
                } else {
                    Complex::new(T::zero(), T::zero())
                };
            }
            self.fft.process(&mut buf);
            for (p, c) in power.iter_mut().zip(&buf[..bins]) {
                *p = c.re * c.re + c.im * c.im;
            }
            for filter in &self.filters {
                let energy = filter.iter().zip(&power).fold(T::zero(), |acc, (&w, &p)| acc + w * p);
                let db = if energy > T::zero() { ten * energy.log10() } else { floor };
                values.push(if db > floor { db } else { floor });
            }
        }

        Ok(MelSpectrogram { values, frames: f.frames, bands: f.n_mels, mode: self.mode })
    }
}

fn triangular_filters<T: Scalar>(f: Framing) -> Vec<Vec<T>> {
    let bins = f.n_fft / 2 + 1;
    let mel_max = hz_to_mel(F_MAX);
    let edges: Vec<f64> = (0..f.n_mels + 2)
        .map(|i| mel_to_hz(mel_max * i as f64 / (f.n_mels + 1) as f64))
        .collect();
    (0..f.n_mels)
        .map(|m| {
            let (lo, center, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..bins)
                .map(|k| {
                    let hz = k as f64 * SAMPLE_RATE as f64 / f.n_fft as f64;
                    let rising = (hz - lo) / (center - lo);
                    let falling = (hi - hz) / (hi - center);
                    T::lit(rising.min(falling).max(0.0))
                })
                .collect()
        })
        .collect()
}

/// Log-mel spectrogram of one 1.0 s slice at 16 kHz.
pub fn mel_spectrogram<T: Scalar>(slice: &[T], mode: MelMode) -> Result<MelSpectrogram<T>, FeatureError> {
    MelExtractor::new(mode).compute(slice)
}

/// Band-wise mean of a spectrogram with its overall mean removed.
///
/// Used as a stand-in speaker embedding when no embedding provider file is
/// supplied. Fully floored (silent) windows map to the first basis vector.
pub fn mel_mean_embedding<T: Scalar>(spec: &MelSpectrogram<T>) -> EmbeddingVector<T> {
    let frames = T::from_usize(spec.frames).expect("frame count fits");
    let mut means: Vec<T> = (0..spec.bands)
        .map(|b| (0..spec.frames).fold(T::zero(), |acc, f| acc + spec.get(f, b)) / frames)
        .collect();
    let bands = T::from_usize(spec.bands).expect("band count fits");
    let overall = means.iter().fold(T::zero(), |acc, &v| acc + v) / bands;
    for v in &mut means {
        *v = *v - overall;
    }
    let embedding = EmbeddingVector::new(means);
    if embedding.norm() > T::lit(1e-9) {
        embedding
    } else {
        let mut basis = vec![T::zero(); spec.bands];
        basis[0] = T::one();
        EmbeddingVector::new(basis)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tone(freq: f64, amp: f64) -> Vec<f64> {
        (0..16000).map(|t| amp * (2.0 * PI * freq * t as f64 / 16000.0).sin()).collect()
    }

    #[test]
    fn silence_hits_the_floor() {
        let spec = mel_spectrogram(&vec![0.0f64; 16000], MelMode::Diar).unwrap();
        assert_eq!(spec.shape(), (100, 40));
        assert!(spec.values.iter().all(|&v| v == FLOOR_DB));
    }

    #[test]
    fn ser_shape() {
        let spec = mel_spectrogram(&tone(300.0, 0.3), MelMode::Ser).unwrap();
        assert_eq!(spec.shape(), (126, 128));
        assert!(spec.values.iter().all(|v| v.is_finite() && *v >= FLOOR_DB));
    }

    #[test]
    fn bad_length_rejected() {
        assert!(matches!(
            mel_spectrogram(&vec![0.0f32; 15999], MelMode::Diar),
            Err(FeatureError::BadLength { expected: 16000, got: 15999 })
        ));
    }

    /// The band whose triangle has the largest weight at `hz`, from the
    /// analytic HTK mel formula.
    fn analytic_band(hz: f64, n_mels: usize) -> usize {
        let mel = |f: f64| 2595.0 * (1.0 + f / 700.0).log10();
        let inv = |m: f64| 700.0 * (10f64.powf(m / 2595.0) - 1.0);
        let top = mel(8000.0);
        let edge = |i: usize| inv(top * i as f64 / (n_mels + 1) as f64);
        (0..n_mels)
            .max_by(|&a, &b| {
                let w = |m: usize| {
                    let (lo, c, hi) = (edge(m), edge(m + 1), edge(m + 2));
                    ((hz - lo) / (c - lo)).min((hi - hz) / (hi - c)).max(0.0)
                };
                w(a).partial_cmp(&w(b)).unwrap()
            })
            .unwrap()
    }

    #[test]
    fn tone_peaks_in_its_band() {
        for mode in [MelMode::Diar, MelMode::Ser] {
            let spec = mel_spectrogram(&tone(1000.0, 0.5), mode).unwrap();
            let expected = analytic_band(1000.0, spec.bands);
            for f in 0..spec.frames {
                let row = spec.frame(f);
                let argmax = (0..row.len()).max_by(|&a, &b| row[a].partial_cmp(&row[b]).unwrap()).unwrap();
                assert_eq!(argmax, expected, "{mode:?} frame {f}");
            }
        }
    }

    #[test]
    fn doubling_amplitude_adds_six_db() {
        let base = tone(700.0, 0.2);
        let loud: Vec<f64> = base.iter().map(|s| s * 2.0).collect();
        let a = mel_spectrogram(&base, MelMode::Diar).unwrap();
        let b = mel_spectrogram(&loud, MelMode::Diar).unwrap();
        let shift = 20.0 * 2f64.log10();
        for (x, y) in a.values.iter().zip(&b.values) {
            if *x > FLOOR_DB {
                assert!((y - x - shift).abs() < 0.01);
            }
        }
    }

    #[test]
    fn deterministic_and_precision_generic() {
        let sig = tone(440.0, 0.4);
        let a = mel_spectrogram(&sig, MelMode::Diar).unwrap();
        let b = mel_spectrogram(&sig, MelMode::Diar).unwrap();
        assert_eq!(a, b);
        let sig32: Vec<f32> = sig.iter().map(|&s| s as f32).collect();
        let c = mel_spectrogram(&sig32, MelMode::Diar).unwrap();
        for (x, y) in a.values.iter().zip(&c.values) {
            if *x > -60.0 {
                assert!((x - f64::from(*y)).abs() < 1e-2);
            }
        }
    }

    #[test]
    fn silent_embedding_is_basis_vector() {
        let spec = mel_spectrogram(&vec![0.0f64; 16000], MelMode::Diar).unwrap();
        let e = mel_mean_embedding(&spec);
        assert_eq!(e.components[0], 1.0);
        assert_eq!(e.dim(), 40);
    }
}
