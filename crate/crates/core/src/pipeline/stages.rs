//! Stage bodies shared by the full pipeline and the per-stage commands.
//! Each `emit_*` function writes into a run directory and returns the
//! files it created.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use super::PipelineError;
use crate::clauses::{analyze_annotations, clause_stats, read_clauses, write_clauses, AnnotatedSentence, SentenceClauses};
use crate::diarize::{
    affinity, chart_intervals, labels_to_utterances, read_utterances, spectral_cluster, write_utterances, Utterance,
    TIME_EPS,
};
use crate::emotion::{
    align_records, build_timeline, count_deviations, read_timeline, write_deviations, write_timeline, DeviationUnit,
    EmotionLabel, EmotionTimeline,
};
use crate::featureio::{
    frame_windows, mel_mean_embedding, EmbeddingRecord, EmotionRecord, MelExtractor, MelMode, TextRecord,
};
use crate::hypothesize::{
    check_delta_hypothesis, cluster_report, detect_events, extract_all, linear_segments, pearson, sentence_concepts,
    window_states, CoOccurrence, HypothesisConfig, LinearSegment, Observations, ResponseObs, SentenceObs,
};
use crate::interact::{
    build_ig, detect_interactions, interruption_stats, interval_igs, whole_recording_ig, write_interruptions,
};
use crate::report::{clusters_json, emotion_chart, hypotheses_json, speaker_chart, write_clause_stats, ClauseStatsRow, TeamFindings};
use crate::text::{
    assemble_transcript, avg_wpm, privacy_trim, read_transcript_ext, write_transcript, write_transcript_ext, write_wpm,
    TranscriptEntry,
};
use crate::AudioBuffer;

pub const UTTERANCES_FILE: &str = "utterances.csv";
pub const EMOTIONS_FILE: &str = "emotions.csv";
pub const TRANSCRIPT_EXT_FILE: &str = "transcript_ext.csv";
pub const CLAUSES_FILE: &str = "clauses.jsonl";
pub const IG_ALL_JSON: &str = "ig/ig_all.json";

/// Number of `interval_s` windows needed to cover `[0, end_s]`.
pub fn interval_count(end_s: f64, interval_s: f64) -> usize {
    if end_s <= 0.0 {
        return 0;
    }
    ((end_s / interval_s) - TIME_EPS).ceil().max(1.0) as usize
}

fn recording_end(utts: &[Utterance]) -> f64 {
    utts.iter().map(|u| u.end_s).fold(0.0, f64::max)
}

fn intervals(count: usize, interval_s: f64) -> Vec<(f64, f64)> {
    (0..count).map(|k| (k as f64 * interval_s, (k + 1) as f64 * interval_s)).collect()
}

fn write_text(dir: &Path, rel: &str, body: &str, files: &mut Vec<PathBuf>) -> std::io::Result<()> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&path, body)?;
    files.push(path);
    Ok(())
}

/// Speaker IDs: the roster when known, otherwise everyone who speaks.
pub fn speaker_list(roster: Option<&[String]>, utts: &[Utterance]) -> Vec<String> {
    match roster {
        Some(ids) => ids.to_vec(),
        None => utts.iter().map(|u| u.speaker.id()).collect::<BTreeSet<_>>().into_iter().collect(),
    }
}

/// DIAR spectrograms of every 1.0 s window, reduced to stand-in embeddings.
pub fn audio_embeddings(audio: &AudioBuffer) -> Result<Vec<EmbeddingRecord>, PipelineError> {
    let extractor = MelExtractor::new(MelMode::Diar);
    frame_windows(audio)?
        .iter()
        .map(|w| {
            let spec = extractor.compute(w.samples)?;
            Ok(EmbeddingRecord { start_s: w.start_s, embedding: mel_mean_embedding(&spec) })
        })
        .collect()
}

/// Spectral clustering of window embeddings into `speakers` clusters,
/// merged into cluster-labelled utterances.
pub fn cluster_windows(
    embeddings: &[EmbeddingRecord],
    speakers: usize,
    seed: u64,
) -> Result<Vec<Utterance>, PipelineError> {
    let vectors: Vec<_> = embeddings.iter().map(|r| r.embedding.clone()).collect();
    let starts: Vec<f64> = embeddings.iter().map(|r| r.start_s).collect();
    let labels = spectral_cluster(&affinity(&vectors)?, speakers, seed)?;
    Ok(labels_to_utterances(&labels, &starts))
}

pub fn emit_utterances(dir: &Path, utts: &[Utterance]) -> Result<Vec<PathBuf>, PipelineError> {
    let path = dir.join(UTTERANCES_FILE);
    write_utterances(&path, utts)?;
    Ok(vec![path])
}

/// Interaction graphs for the whole recording and per interval, plus the
/// interruption table.
pub fn emit_interactions(
    dir: &Path,
    recording_id: &str,
    utts: &[Utterance],
    speakers: &[String],
    interval_s: f64,
    resume_s: f64,
) -> Result<Vec<PathBuf>, PipelineError> {
    let mut files = Vec::new();
    let interactions = detect_interactions(utts);
    let all = whole_recording_ig(&interactions).with_nodes(speakers.iter().cloned());
    write_text(dir, "ig/ig_all.dot", &all.to_dot(), &mut files)?;
    write_text(dir, IG_ALL_JSON, &all.to_json(), &mut files)?;
    let count = interval_count(recording_end(utts), interval_s);
    for (k, ig) in interval_igs(&interactions, interval_s, count).into_iter().enumerate() {
        let ig = ig.with_nodes(speakers.iter().cloned());
        write_text(dir, &format!("ig/ig_{k:03}.dot"), &ig.to_dot(), &mut files)?;
        write_text(dir, &format!("ig/ig_{k:03}.json"), &ig.to_json(), &mut files)?;
    }
    let path = dir.join("interruptions.csv");
    write_interruptions(&path, &[(recording_id.to_string(), interruption_stats(utts, resume_s))])?;
    files.push(path);
    Ok(files)
}

/// Emotion timeline and per-interval deviation counts.
pub fn emit_emotions(
    dir: &Path,
    utts: &[Utterance],
    records: &[EmotionRecord],
    fallback: EmotionLabel,
    unit: DeviationUnit,
    interval_s: f64,
) -> Result<(EmotionTimeline, Vec<PathBuf>), PipelineError> {
    let labels = align_records(utts, records)?;
    let timeline = build_timeline(utts, &labels)?;
    let timeline_path = dir.join(EMOTIONS_FILE);
    write_timeline(&timeline_path, &timeline)?;
    let count = interval_count(recording_end(utts), interval_s);
    let reports: Vec<_> =
        intervals(count, interval_s).into_iter().map(|iv| count_deviations(&timeline, fallback, iv, unit)).collect();
    let deviations_path = dir.join("deviations.csv");
    write_deviations(&deviations_path, &reports)?;
    Ok((timeline, vec![timeline_path, deviations_path]))
}

/// Transcript of the utterances after the privacy trim, and speech rates.
pub fn emit_transcript(
    dir: &Path,
    recording_id: &str,
    utts: &[Utterance],
    texts: &[TextRecord],
    trim_s: f64,
) -> Result<(Vec<TranscriptEntry>, Vec<PathBuf>), PipelineError> {
    let trimmed = privacy_trim(utts, trim_s);
    if texts.len() != trimmed.len() {
        return Err(PipelineError::Stage(format!(
            "texts file has {} rows but {} utterances remain after the {trim_s} s trim",
            texts.len(),
            trimmed.len()
        )));
    }
    let transcript = assemble_transcript(&trimmed, texts)?;
    let stats = avg_wpm(&transcript.entries)?;
    let paths = [dir.join("transcript.csv"), dir.join(TRANSCRIPT_EXT_FILE), dir.join("wpm.csv")];
    write_transcript(&paths[0], &transcript)?;
    write_transcript_ext(&paths[1], &transcript)?;
    write_wpm(&paths[2], recording_id, &stats)?;
    Ok((transcript.entries, paths.to_vec()))
}

/// Clauses of every annotated sentence and per speaker, per interval counts.
pub fn emit_clauses(
    dir: &Path,
    annotations: &[AnnotatedSentence],
    transcript: &[TranscriptEntry],
    interval_s: f64,
) -> Result<(Vec<SentenceClauses>, Vec<PathBuf>), PipelineError> {
    let by_index: BTreeMap<usize, &TranscriptEntry> = transcript.iter().map(|e| (e.utt_index, e)).collect();
    if let Some(s) = annotations.iter().find(|s| !by_index.contains_key(&s.utt_index)) {
        return Err(PipelineError::Stage(format!(
            "annotated sentence `{}` references utterance {} absent from the transcript",
            s.sentence, s.utt_index
        )));
    }
    let sentences = analyze_annotations(annotations);
    let clauses_path = dir.join(CLAUSES_FILE);
    write_clauses(&clauses_path, &sentences)?;

    let mut groups: BTreeMap<(usize, &str), Vec<&SentenceClauses>> = BTreeMap::new();
    for s in &sentences {
        let entry = by_index[&s.utt_index];
        let k = (entry.start_s / interval_s + TIME_EPS).floor().max(0.0) as usize;
        groups.entry((k, entry.speaker.as_str())).or_default().push(s);
    }
    let rows: Vec<ClauseStatsRow> = groups
        .into_iter()
        .map(|((k, speaker), group)| ClauseStatsRow {
            interval_start_s: k as f64 * interval_s,
            speaker: speaker.to_string(),
            counts: clause_stats(group.iter().map(|s| &s.clauses)),
        })
        .collect();
    let stats_path = dir.join("clause_stats.csv");
    write_clause_stats(&stats_path, &rows)?;
    Ok((sentences, vec![clauses_path, stats_path]))
}

/// Speaker charts for every interval, and emotion charts when a timeline
/// exists.
pub fn emit_charts(
    dir: &Path,
    utts: &[Utterance],
    timeline: Option<&EmotionTimeline>,
    speakers: &[String],
    interval_s: f64,
) -> Result<Vec<PathBuf>, PipelineError> {
    let mut files = Vec::new();
    for chart in chart_intervals(utts, interval_s) {
        write_text(dir, &format!("charts/speakers_{:03}.svg", chart.index), &speaker_chart(&chart, speakers), &mut files)?;
        if let Some(t) = timeline {
            let svg = emotion_chart(t, (chart.start_s, chart.end_s), speakers);
            write_text(dir, &format!("charts/emotions_{:03}.svg", chart.index), &svg, &mut files)?;
        }
    }
    Ok(files)
}

/// Everything one recording contributes to hypothesis extraction.
#[derive(Debug, Clone, Default)]
pub struct Recording {
    pub id: String,
    pub speakers: Vec<String>,
    pub utterances: Vec<Utterance>,
    pub timeline: Option<EmotionTimeline>,
    pub transcript: Option<Vec<TranscriptEntry>>,
    pub clauses: Option<Vec<SentenceClauses>>,
}

impl Recording {
    /// Loads the outputs of an earlier run. Only the utterances file is
    /// required; the recording ID is the directory name.
    pub fn load(run_dir: &Path) -> Result<Self, PipelineError> {
        let id = run_dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .ok_or_else(|| PipelineError::Config(format!("{} has no directory name", run_dir.display())))?;
        let utterances = read_utterances(run_dir.join(UTTERANCES_FILE))?;
        let present = |name: &str| Some(run_dir.join(name)).filter(|p| p.is_file());
        let timeline = present(EMOTIONS_FILE).map(read_timeline).transpose()?;
        let transcript = present(TRANSCRIPT_EXT_FILE).map(read_transcript_ext).transpose()?;
        let clauses = present(CLAUSES_FILE).map(read_clauses).transpose()?;
        let roster = present(IG_ALL_JSON).map(|p| graph_nodes(&p)).transpose()?;
        let speakers = speaker_list(roster.as_deref(), &utterances);
        Ok(Self { id, speakers, utterances, timeline, transcript, clauses })
    }

    pub fn observations(&self) -> Observations {
        let entries = self.transcript.as_deref().unwrap_or_default();
        let by_index: BTreeMap<usize, &TranscriptEntry> = entries.iter().map(|e| (e.utt_index, e)).collect();
        let responses = entries
            .iter()
            .filter(|e| e.word_count > 0)
            .map(|e| ResponseObs { speaker: e.speaker.clone(), start_s: e.start_s, words: e.word_count })
            .collect();
        let sentences = self
            .clauses
            .as_deref()
            .unwrap_or_default()
            .iter()
            .filter_map(|s| {
                let e = by_index.get(&s.utt_index)?;
                Some(SentenceObs {
                    speaker: e.speaker.clone(),
                    start_s: e.start_s,
                    concepts: sentence_concepts(&s.clauses),
                    clauses: clause_stats([&s.clauses]),
                })
            })
            .collect();
        Observations {
            utterances: self.utterances.clone(),
            responses,
            sentences,
            emotions: self.timeline.clone().unwrap_or_default(),
        }
    }
}

fn graph_nodes(path: &Path) -> Result<Vec<String>, PipelineError> {
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)
        .map_err(|e| PipelineError::Stage(format!("{}: {e}", path.display())))?;
    doc.get("nodes")
        .and_then(|n| n.as_array())
        .map(|nodes| nodes.iter().filter_map(|n| n.as_str().map(String::from)).collect())
        .ok_or_else(|| PipelineError::Stage(format!("{}: missing `nodes`", path.display())))
}

/// Segments of one recording, each carrying the interaction graph over its
/// span.
pub fn recording_segments(rec: &Recording, cfg: &HypothesisConfig) -> Vec<LinearSegment> {
    let obs = rec.observations();
    let count = interval_count(obs.end_s(), cfg.window_s);
    let states = window_states(&obs, cfg.window_s, count, &CoOccurrence);
    let interactions = detect_interactions(&rec.utterances);
    linear_segments(&detect_events(&rec.id, &states, cfg.tau))
        .into_iter()
        .map(|mut seg| {
            seg.ig = Some(build_ig(&interactions, seg.span()).with_nodes(rec.speakers.iter().cloned()));
            seg
        })
        .collect()
}

const DIFF_NAMES: [&str; 4] = ["C", "E", "U", "M"];

fn team_findings(
    rec: &Recording,
    cfg: &HypothesisConfig,
    interval_s: f64,
    fallback: EmotionLabel,
    unit: DeviationUnit,
) -> TeamFindings {
    let mut findings = TeamFindings::default();
    let end = recording_end(&rec.utterances);
    if let Some(timeline) = &rec.timeline {
        let count = interval_count(end, interval_s);
        let ivs = intervals(count, interval_s);
        let igs: Vec<_> = interval_igs(&detect_interactions(&rec.utterances), interval_s, count)
            .into_iter()
            .map(|ig| ig.with_nodes(rec.speakers.iter().cloned()))
            .collect();
        findings.delta_checks = check_delta_hypothesis(&igs, timeline, fallback, unit, &ivs);
    }
    let obs = rec.observations();
    let states = window_states(&obs, cfg.window_s, interval_count(obs.end_s(), cfg.window_s), &CoOccurrence);
    // correlations over fewer than three changes are always +-1
    if states.len() > 3 {
        let series: Vec<Vec<f64>> = (0..4).map(|d| states[1..].iter().map(|s| s.diff[d]).collect()).collect();
        for a in 0..4 {
            for b in a + 1..4 {
                let key = format!("{}~{}", DIFF_NAMES[a], DIFF_NAMES[b]);
                findings.diff_correlations.insert(key, pearson(&series[a], &series[b]));
            }
        }
    }
    findings
}

/// Hypotheses over every segment of every recording, plus segment clusters.
pub fn emit_hypotheses(
    dir: &Path,
    recordings: &[Recording],
    cfg: &HypothesisConfig,
    interval_s: f64,
    fallback: EmotionLabel,
    unit: DeviationUnit,
) -> Result<Vec<PathBuf>, PipelineError> {
    let ids: BTreeSet<&str> = recordings.iter().map(|r| r.id.as_str()).collect();
    if ids.len() != recordings.len() {
        return Err(PipelineError::Config("recording IDs must be distinct".into()));
    }
    let segments: Vec<LinearSegment> = recordings.iter().flat_map(|r| recording_segments(r, cfg)).collect();
    let sets = extract_all(segments, cfg);
    let findings: BTreeMap<String, TeamFindings> = recordings
        .iter()
        .map(|r| (r.id.clone(), team_findings(r, cfg, interval_s, fallback, unit)))
        .collect();
    let mut files = Vec::new();
    write_text(dir, "hypotheses.json", &hypotheses_json(&sets, cfg, &findings), &mut files)?;
    write_text(dir, "clusters.json", &clusters_json(&cluster_report(&sets, cfg.theta_cluster)), &mut files)?;
    Ok(files)
}
