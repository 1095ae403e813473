use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::emotion::{DeviationUnit, EmotionLabel};
use crate::hypothesize::HypothesisConfig;

/// Provider and intermediate files a run may start from. Paths are
/// relative to the config file unless absolute.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    pub audio: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    /// A finished utterances file; diarization is skipped when present.
    pub utterances: Option<PathBuf>,
    pub emotions: Option<PathBuf>,
    pub texts: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
}

impl Inputs {
    pub fn named(&self) -> Vec<(&'static str, &Path)> {
        [
            ("audio", &self.audio),
            ("embeddings", &self.embeddings),
            ("utterances", &self.utterances),
            ("emotions", &self.emotions),
            ("texts", &self.texts),
            ("annotations", &self.annotations),
        ]
        .into_iter()
        .filter_map(|(name, p)| p.as_deref().map(|p| (name, p)))
        .collect()
    }
}

fn default_interval() -> f64 {
    120.0
}

fn default_trim() -> f64 {
    30.0
}

fn default_fallback() -> EmotionLabel {
    EmotionLabel::Sad
}

fn default_resume() -> f64 {
    2.0
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub recording_id: String,
    #[serde(default)]
    pub inputs: Inputs,
    /// One participant ID per line, in order of first speech.
    #[serde(default)]
    pub roster: Option<PathBuf>,
    /// Number of speakers to cluster into.
    pub speakers: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_interval")]
    pub interval_s: f64,
    #[serde(default = "default_trim")]
    pub trim_s: f64,
    #[serde(default = "default_fallback")]
    pub fallback_emotion: EmotionLabel,
    #[serde(default = "default_resume")]
    pub interruption_resume_s: f64,
    #[serde(default)]
    pub deviation_unit: DeviationUnit,
    #[serde(default)]
    pub hypothesize: HypothesisConfig,
    /// Parent of the run directory; runs land in `out/<recording_id>`.
    #[serde(default = "default_out", skip_serializing)]
    pub out: PathBuf,
    /// Store wall-clock stage durations in the manifest. Off by default so
    /// reruns stay byte-identical.
    #[serde(default)]
    pub record_timings: bool,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    /// Reads a JSON config. Relative paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let body = std::fs::read_to_string(path)?;
        let mut cfg: RunConfig =
            serde_json::from_str(&body).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn run_dir(&self) -> PathBuf {
        self.resolve(&self.out).join(&self.recording_id)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        let id = &self.recording_id;
        if id.is_empty() || id.starts_with('.') || id.contains(['/', '\\']) {
            return bad(format!("recording_id `{id}` must be a plain, non-hidden name"));
        }
        if self.speakers == 0 {
            return bad("speakers must be at least 1".into());
        }
        if !(self.interval_s > 0.0 && self.interval_s.is_finite()) {
            return bad(format!("interval_s must be positive, got {}", self.interval_s));
        }
        if !(self.trim_s >= 0.0 && self.trim_s.is_finite()) {
            return bad(format!("trim_s must be non-negative, got {}", self.trim_s));
        }
        if !(self.interruption_resume_s > 0.0 && self.interruption_resume_s.is_finite()) {
            return bad(format!("interruption_resume_s must be positive, got {}", self.interruption_resume_s));
        }
        self.hypothesize.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        let i = &self.inputs;
        if i.audio.is_none() && i.embeddings.is_none() && i.utterances.is_none() {
            return bad("inputs need audio, embeddings or utterances".into());
        }
        let mut paths = self.inputs.named();
        if let Some(r) = &self.roster {
            paths.push(("roster", r));
        }
        for (name, p) in paths {
            let full = self.resolve(p);
            if !full.is_file() {
                return bad(format!("{name} file {} does not exist", full.display()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn defaults_and_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "u.csv", "speaker,start_s,end_s\n");
        let p = write(
            dir.path(),
            "cfg.json",
            r#"{"recording_id":"r1","speakers":2,"inputs":{"utterances":"u.csv"}}"#,
        );
        let cfg = RunConfig::load(&p).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.interval_s, 120.0);
        assert_eq!(cfg.trim_s, 30.0);
        assert_eq!(cfg.fallback_emotion, EmotionLabel::Sad);
        assert_eq!(cfg.hypothesize, HypothesisConfig::default());
        assert_eq!(cfg.run_dir(), dir.path().join("out").join("r1"));
    }

    #[test]
    fn rejects_bad_values() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "u.csv", "speaker,start_s,end_s\n");
        let load = |body: &str| {
            let p = write(dir.path(), "cfg.json", body);
            RunConfig::load(&p).and_then(|c| c.validate())
        };
        assert!(load(r#"{"recording_id":"r","speakers":0,"inputs":{"utterances":"u.csv"}}"#).is_err());
        assert!(load(r#"{"recording_id":"r","speakers":1,"interval_s":0,"inputs":{"utterances":"u.csv"}}"#).is_err());
        assert!(load(r#"{"recording_id":"r","speakers":1,"inputs":{"utterances":"missing.csv"}}"#).is_err());
        assert!(load(r#"{"recording_id":"r","speakers":1}"#).is_err());
        assert!(load(r#"{"recording_id":"../x","speakers":1,"inputs":{"utterances":"u.csv"}}"#).is_err());
        assert!(load(
            r#"{"recording_id":"r","speakers":1,"inputs":{"utterances":"u.csv"},"hypothesize":{"theta_sim":0.2,"theta_dsim":0.3}}"#
        )
        .is_err());
        assert!(load(r#"{"recording_id":"r","speakers":1,"bogus":1,"inputs":{"utterances":"u.csv"}}"#).is_err());
    }
}
