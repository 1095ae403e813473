use std::path::Path;

use hound::{SampleFormat, WavReader};

use super::{AudioBuffer, FeatureError};
use crate::Scalar;

/// Every decoded recording is brought to this rate.
pub const CANONICAL_SAMPLE_RATE: u32 = 16_000;

/// Decodes a PCM wav file into a mono buffer at 16 kHz.
///
/// Channels are averaged. 8/16-bit integer and 32-bit float encodings are
/// accepted; amplitudes are clamped to `[-1, 1]`.
pub fn load_wav<T: Scalar>(path: impl AsRef<Path>) -> Result<AudioBuffer<T>, FeatureError> {
    let path = path.as_ref();
    let mut reader = WavReader::open(path).map_err(|e| map_hound(e, path))?;
    let spec = reader.spec();
    let channels = usize::from(spec.channels);
    if channels == 0 {
        return Err(FeatureError::UnsupportedEncoding("zero channels".into()));
    }

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 8) => reader
            .samples::<i8>()
            .map(|s| s.map(|v| f64::from(v) / 128.0))
            .collect::<Result<_, _>>()
            .map_err(|e| map_hound(e, path))?,
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<Result<_, _>>()
            .map_err(|e| map_hound(e, path))?,
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(|e| map_hound(e, path))?,
        (format, bits) => {
            return Err(FeatureError::UnsupportedEncoding(format!("{format:?} {bits}-bit")));
        }
    };

    let mono: Vec<f64> = interleaved
        .chunks_exact(channels)
        .map(|frame| {
            let mean = frame.iter().sum::<f64>() / channels as f64;
            if mean.is_finite() {
                mean.clamp(-1.0, 1.0)
            } else {
                0.0
            }
        })
        .collect();
    if mono.is_empty() {
        return Err(FeatureError::EmptyAudio);
    }

    let resampled = resample_linear(&mono, spec.sample_rate, CANONICAL_SAMPLE_RATE);
    AudioBuffer::new(resampled.into_iter().map(T::lit).collect(), CANONICAL_SAMPLE_RATE)
}

/// Linear-interpolation resampler. Output length is `round(n * to / from)`.
pub fn resample_linear(samples: &[f64], from: u32, to: u32) -> Vec<f64> {
    if from == to || samples.is_empty() {
        return samples.to_vec();
    }
    let n = samples.len();
    let out_len = ((n as u64 * u64::from(to) + u64::from(from) / 2) / u64::from(from)) as usize;
    let step = f64::from(from) / f64::from(to);
    (0..out_len)
        .map(|i| {
            let pos = i as f64 * step;
            let left = pos.floor() as usize;
            if left + 1 >= n {
                return samples[n - 1];
            }
            let frac = pos - left as f64;
            samples[left] * (1.0 - frac) + samples[left + 1] * frac
        })
        .collect()
}

fn map_hound(err: hound::Error, path: &Path) -> FeatureError {
    match err {
        hound::Error::IoError(e) => FeatureError::Io(e),
        hound::Error::FormatError(msg) => FeatureError::NotWav(format!("{}: {msg}", path.display())),
        hound::Error::Unsupported => FeatureError::UnsupportedEncoding("unsupported wav variant".into()),
        hound::Error::TooWide | hound::Error::InvalidSampleFormat => {
            FeatureError::UnsupportedEncoding(err.to_string())
        }
        other => FeatureError::NotWav(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hound::{WavSpec, WavWriter};
    use std::f64::consts::PI;

    fn write_i16(path: &Path, rate: u32, channels: u16, frames: &[Vec<f64>]) {
        let spec = WavSpec { channels, sample_rate: rate, bits_per_sample: 16, sample_format: SampleFormat::Int };
        let mut w = WavWriter::create(path, spec).unwrap();
        for frame in frames {
            for &s in frame {
                w.write_sample((s * 32767.0).round() as i16).unwrap();
            }
        }
        w.finalize().unwrap();
    }

    /// Magnitude of DFT bin `k` computed directly.
    fn dft_mag(x: &[f64], k: usize) -> f64 {
        let n = x.len() as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for (t, &v) in x.iter().enumerate() {
            let ang = -2.0 * PI * k as f64 * t as f64 / n;
            re += v * ang.cos();
            im += v * ang.sin();
        }
        (re * re + im * im).sqrt()
    }

    fn peak_hz(x: &[f64], rate: f64, max_hz: usize) -> f64 {
        // bins are 1/duration Hz apart; scan the low band only
        let dur = x.len() as f64 / rate;
        let max_bin = (max_hz as f64 * dur) as usize;
        let best = (1..max_bin)
            .max_by(|&a, &b| dft_mag(x, a).partial_cmp(&dft_mag(x, b)).unwrap())
            .unwrap();
        best as f64 / dur
    }

    #[test]
    fn silence_decodes_to_zeros() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.wav");
        write_i16(&p, 16000, 1, &vec![vec![0.0]; 16000]);
        let a: AudioBuffer<f64> = load_wav(&p).unwrap();
        assert_eq!(a.samples.len(), 16000);
        assert_eq!(a.sample_rate, 16000);
        assert!(a.samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn stereo_is_averaged() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("st.wav");
        write_i16(&p, 16000, 2, &vec![vec![0.5, -0.5]; 1600]);
        let a: AudioBuffer<f64> = load_wav(&p).unwrap();
        assert_eq!(a.samples.len(), 1600);
        assert!(a.samples.iter().all(|&s| s.abs() < 1e-4));
    }

    #[test]
    fn resampled_tone_keeps_its_frequency() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("tone.wav");
        let src: Vec<f64> = (0..8000).map(|t| 0.5 * (2.0 * PI * 440.0 * t as f64 / 8000.0).sin()).collect();
        write_i16(&p, 8000, 1, &src.iter().map(|&s| vec![s]).collect::<Vec<_>>());
        let a: AudioBuffer<f64> = load_wav(&p).unwrap();
        assert_eq!(a.samples.len(), 16000);
        let src_peak = peak_hz(&src, 8000.0, 1000);
        let out_peak = peak_hz(&a.samples, 16000.0, 1000);
        assert!((src_peak - 440.0).abs() <= 1.0);
        assert!((out_peak - src_peak).abs() <= 1.0, "{out_peak} vs {src_peak}");
    }

    #[test]
    fn float_and_u8_encodings_decode() {
        let dir = tempfile::tempdir().unwrap();
        let pf = dir.path().join("f.wav");
        let spec = WavSpec { channels: 1, sample_rate: 16000, bits_per_sample: 32, sample_format: SampleFormat::Float };
        let mut w = WavWriter::create(&pf, spec).unwrap();
        for _ in 0..100 {
            w.write_sample(0.25f32).unwrap();
        }
        w.finalize().unwrap();
        let a: AudioBuffer<f32> = load_wav(&pf).unwrap();
        assert!(a.samples.iter().all(|&s| (s - 0.25).abs() < 1e-7));

        let p8 = dir.path().join("u8.wav");
        let spec = WavSpec { channels: 1, sample_rate: 16000, bits_per_sample: 8, sample_format: SampleFormat::Int };
        let mut w = WavWriter::create(&p8, spec).unwrap();
        for _ in 0..100 {
            w.write_sample(64i8).unwrap();
        }
        w.finalize().unwrap();
        let a: AudioBuffer<f64> = load_wav(&p8).unwrap();
        assert!(a.samples.iter().all(|&s| (s - 0.5).abs() < 1e-9));
    }

    #[test]
    fn rejects_non_wav_and_empty() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.wav");
        std::fs::write(&p, b"definitely not a riff header").unwrap();
        assert!(matches!(load_wav::<f64>(&p), Err(FeatureError::NotWav(_))));

        let pe = dir.path().join("e.wav");
        write_i16(&pe, 16000, 1, &[]);
        assert!(matches!(load_wav::<f64>(&pe), Err(FeatureError::EmptyAudio)));

        let p24 = dir.path().join("24.wav");
        let spec = WavSpec { channels: 1, sample_rate: 16000, bits_per_sample: 24, sample_format: SampleFormat::Int };
        let mut w = WavWriter::create(&p24, spec).unwrap();
        w.write_sample(5i32).unwrap();
        w.finalize().unwrap();
        assert!(matches!(load_wav::<f64>(&p24), Err(FeatureError::UnsupportedEncoding(_))));
    }

    #[test]
    fn resampler_length_rule() {
        assert_eq!(resample_linear(&[0.0; 441], 44100, 16000).len(), 160);
        assert_eq!(resample_linear(&[1.0; 10], 16000, 16000).len(), 10);
    }
}
