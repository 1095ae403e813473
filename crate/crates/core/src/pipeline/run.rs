use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::manifest::{digest_tree, rel, sha256_file, InputDigest, RunManifest, StageRecord, StageStatus, MANIFEST_FILE};
use super::stages::*;
use super::{PipelineError, RunConfig};
use crate::diarize::{assign_roster, read_utterances, temporal_smooth, Roster, Utterance};
use crate::emotion::EmotionTimeline;
use crate::featureio::{load_wav, read_annotations, read_embeddings, read_emotions, read_texts, EmbeddingRecord};
use crate::text::TranscriptEntry;

pub const STAGES: [&str; 10] = [
    "features",
    "diarize",
    "smooth",
    "roster",
    "interact",
    "emotion",
    "transcript",
    "clauses",
    "hypothesize",
    "reports",
];

/// Why a stage did not run.
enum Gate {
    Skip(String),
    Upstream(&'static str),
}

struct Stager<'a> {
    dir: &'a Path,
    timings: bool,
}

impl Stager<'_> {
    fn run<T>(
        &self,
        name: &str,
        body: impl FnOnce() -> Result<(T, Vec<PathBuf>), PipelineError>,
    ) -> (StageRecord, Option<T>) {
        let clock = Instant::now();
        let result = body();
        let duration_ms = self.timings.then(|| clock.elapsed().as_secs_f64() * 1e3);
        match result {
            Ok((value, files)) => {
                let outputs = files.iter().map(|f| rel(self.dir, f)).collect();
                (StageRecord { name: name.into(), status: StageStatus::Ok, detail: None, outputs, duration_ms }, Some(value))
            }
            Err(e) => (
                StageRecord {
                    name: name.into(),
                    status: StageStatus::Failed,
                    detail: Some(e.to_string()),
                    outputs: Vec::new(),
                    duration_ms,
                },
                None,
            ),
        }
    }

    fn gated<T>(
        &self,
        name: &str,
        gate: Option<Gate>,
        body: impl FnOnce() -> Result<(T, Vec<PathBuf>), PipelineError>,
    ) -> (StageRecord, Option<T>) {
        match gate {
            None => self.run(name, body),
            Some(g) => {
                let detail = match g {
                    Gate::Skip(reason) => reason,
                    Gate::Upstream(stage) => format!("upstream stage `{stage}` did not complete"),
                };
                let record = StageRecord {
                    name: name.into(),
                    status: StageStatus::Skipped,
                    detail: Some(detail),
                    outputs: Vec::new(),
                    duration_ms: None,
                };
                (record, None)
            }
        }
    }
}

fn no_files<T>(value: T) -> Result<(T, Vec<PathBuf>), PipelineError> {
    Ok((value, Vec::new()))
}

/// Runs every stage the inputs allow and publishes the run directory
/// `out/<recording_id>` atomically, replacing an earlier run.
///
/// Stage failures are recorded in the returned manifest rather than
/// returned as errors; dependents of a failed stage are skipped while
/// independent branches still run.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunManifest, PipelineError> {
    cfg.validate()?;
    let out_root = cfg.resolve(&cfg.out);
    fs::create_dir_all(&out_root)?;
    let staging = out_root.join(format!(".{}.staging", cfg.recording_id));
    if staging.exists() {
        fs::remove_dir_all(&staging)?;
    }
    fs::create_dir_all(&staging)?;

    let stages = execute(cfg, &staging);
    let manifest = finish(cfg, &staging, stages)?;

    let final_dir = cfg.run_dir();
    if final_dir.exists() {
        fs::remove_dir_all(&final_dir)?;
    }
    fs::rename(&staging, &final_dir)?;
    Ok(manifest)
}

fn execute(cfg: &RunConfig, dir: &Path) -> Vec<StageRecord> {
    let st = Stager { dir, timings: cfg.record_timings };
    let input = |p: &Option<PathBuf>| p.as_deref().map(|p| cfg.resolve(p));
    let supplied = input(&cfg.inputs.utterances);
    let mut records = Vec::new();

    let features_gate = match (&cfg.inputs.audio, &supplied) {
        (_, Some(_)) => Some(Gate::Skip("utterances supplied".into())),
        (None, _) => Some(Gate::Skip("no audio input".into())),
        _ => None,
    };
    let (rec, features) = st.gated("features", features_gate, || {
        let audio = load_wav(input(&cfg.inputs.audio).expect("gated on audio"))?;
        no_files(audio_embeddings(&audio)?)
    });
    let features_failed = rec.status == StageStatus::Failed;
    records.push(rec);

    let diarize_gate = if supplied.is_some() {
        Some(Gate::Skip("utterances supplied".into()))
    } else if features_failed {
        Some(Gate::Upstream("features"))
    } else {
        None
    };
    let (rec, raw) = st.gated("diarize", diarize_gate, || {
        let embeddings: Vec<EmbeddingRecord> = match input(&cfg.inputs.embeddings) {
            Some(p) => {
                let rows = read_embeddings(p)?;
                if let Some(windows) = &features {
                    if windows.len() != rows.len() {
                        return Err(PipelineError::Stage(format!(
                            "embeddings file has {} rows but the audio has {} feature windows",
                            rows.len(),
                            windows.len()
                        )));
                    }
                }
                rows
            }
            None => features.expect("features ran"),
        };
        no_files(cluster_windows(&embeddings, cfg.speakers, cfg.seed)?)
    });
    records.push(rec);

    let smooth_gate = match (&supplied, &raw) {
        (Some(_), _) => Some(Gate::Skip("utterances supplied".into())),
        (None, None) => Some(Gate::Upstream("diarize")),
        _ => None,
    };
    let (rec, smoothed) = st.gated("smooth", smooth_gate, || no_files(temporal_smooth(raw.as_deref().expect("gated"))));
    records.push(rec);

    let roster_gate = (supplied.is_none() && smoothed.is_none()).then_some(Gate::Upstream("smooth"));
    let (rec, labelled) = st.gated("roster", roster_gate, || {
        let roster = cfg.roster.as_deref().map(|r| Roster::load(cfg.resolve(r))).transpose()?;
        let utts = match &supplied {
            Some(p) => read_utterances(p)?,
            None => {
                let smoothed = smoothed.as_deref().expect("gated");
                match &roster {
                    Some(r) => assign_roster(smoothed, r)?,
                    None => smoothed.to_vec(),
                }
            }
        };
        let speakers = speaker_list(roster.as_ref().map(|r| r.ids()), &utts);
        let files = emit_utterances(dir, &utts)?;
        Ok(((utts, speakers), files))
    });
    records.push(rec);

    let Some((utts, speakers)) = labelled else {
        for name in &STAGES[4..] {
            records.push(st.gated::<()>(name, Some(Gate::Upstream("roster")), || unreachable!()).0);
        }
        return records;
    };

    let interact = || {
        st.run("interact", || {
            let files =
                emit_interactions(dir, &cfg.recording_id, &utts, &speakers, cfg.interval_s, cfg.interruption_resume_s)?;
            Ok(((), files))
        })
    };
    let emotion = || -> (StageRecord, Option<EmotionTimeline>) {
        let gate = cfg.inputs.emotions.is_none().then(|| Gate::Skip("no emotions input".into()));
        st.gated("emotion", gate, || {
            let records = read_emotions(input(&cfg.inputs.emotions).expect("gated"))?;
            emit_emotions(dir, &utts, &records, cfg.fallback_emotion, cfg.deviation_unit, cfg.interval_s)
        })
    };
    let transcript = || -> (StageRecord, Option<Vec<TranscriptEntry>>) {
        let gate = cfg.inputs.texts.is_none().then(|| Gate::Skip("no texts input".into()));
        st.gated("transcript", gate, || {
            let texts = read_texts(input(&cfg.inputs.texts).expect("gated"), None)?;
            emit_transcript(dir, &cfg.recording_id, &utts, &texts, cfg.trim_s)
        })
    };
    let ((interact_rec, _), ((emotion_rec, timeline), (transcript_rec, entries))) =
        rayon::join(interact, || rayon::join(emotion, transcript));
    records.extend([interact_rec, emotion_rec, transcript_rec]);

    let clauses_gate = match (&cfg.inputs.annotations, &entries) {
        (None, _) => Some(Gate::Skip("no annotations input".into())),
        (_, None) => Some(Gate::Upstream("transcript")),
        _ => None,
    };
    let (rec, clauses) = st.gated("clauses", clauses_gate, || {
        let annotations = read_annotations(input(&cfg.inputs.annotations).expect("gated"))?;
        emit_clauses(dir, &annotations, entries.as_deref().expect("gated"), cfg.interval_s)
    });
    records.push(rec);

    let recording = Recording {
        id: cfg.recording_id.clone(),
        speakers: speakers.clone(),
        utterances: utts.clone(),
        timeline: timeline.clone(),
        transcript: entries,
        clauses,
    };
    let (rec, _) = st.run("hypothesize", || {
        let files = emit_hypotheses(
            dir,
            std::slice::from_ref(&recording),
            &cfg.hypothesize,
            cfg.interval_s,
            cfg.fallback_emotion,
            cfg.deviation_unit,
        )?;
        Ok(((), files))
    });
    records.push(rec);

    let (rec, _) = st.run("reports", || {
        let files = emit_charts(dir, &utts, timeline.as_ref(), &speakers, cfg.interval_s)?;
        Ok(((), files))
    });
    records.push(rec);
    records
}

fn finish(cfg: &RunConfig, dir: &Path, stages: Vec<StageRecord>) -> Result<RunManifest, PipelineError> {
    let mut named = cfg.inputs.named();
    if let Some(r) = &cfg.roster {
        named.push(("roster", r.as_path()));
    }
    let inputs: BTreeMap<String, InputDigest> = named
        .into_iter()
        .map(|(name, p)| {
            let sha256 = sha256_file(cfg.resolve(p))?;
            Ok((name.to_string(), InputDigest { path: p.to_string_lossy().into_owned(), sha256 }))
        })
        .collect::<Result<_, std::io::Error>>()?;
    let manifest = RunManifest {
        recording_id: cfg.recording_id.clone(),
        config: serde_json::to_value(cfg).expect("config serializes"),
        inputs,
        stages,
        files: digest_tree(dir)?,
    };
    fs::write(dir.join(MANIFEST_FILE), manifest.to_json())?;
    Ok(manifest)
}

/// Utterances of a finished run, for commands that resume from one.
pub fn load_utterances(run_dir: &Path) -> Result<Vec<Utterance>, PipelineError> {
    Ok(read_utterances(run_dir.join(UTTERANCES_FILE))?)
}
