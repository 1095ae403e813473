//! Per-second emotion timelines and deviation counting.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diarize::Utterance;
use crate::featureio::EmotionRecord;
use crate::ParticipantId;

const SECOND_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EmotionLabel {
    Neutral,
    Anger,
    Boredom,
    Disgust,
    Fear,
    Happy,
    Sad,
}

impl EmotionLabel {
    pub const ALL: [EmotionLabel; 7] = [
        EmotionLabel::Neutral,
        EmotionLabel::Anger,
        EmotionLabel::Boredom,
        EmotionLabel::Disgust,
        EmotionLabel::Fear,
        EmotionLabel::Happy,
        EmotionLabel::Sad,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EmotionLabel::Neutral => "Neutral",
            EmotionLabel::Anger => "Anger",
            EmotionLabel::Boredom => "Boredom",
            EmotionLabel::Disgust => "Disgust",
            EmotionLabel::Fear => "Fear",
            EmotionLabel::Happy => "Happy",
            EmotionLabel::Sad => "Sad",
        }
    }

    /// Legend color used by emotion charts.
    pub fn color(self) -> &'static str {
        match self {
            EmotionLabel::Neutral => "#9e9e9e",
            EmotionLabel::Anger => "#d32f2f",
            EmotionLabel::Boredom => "#795548",
            EmotionLabel::Disgust => "#388e3c",
            EmotionLabel::Fear => "#7b1fa2",
            EmotionLabel::Happy => "#fbc02d",
            EmotionLabel::Sad => "#1976d2",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown emotion label `{0}`")]
pub struct UnknownEmotion(pub String);

impl FromStr for EmotionLabel {
    type Err = UnknownEmotion;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EmotionLabel::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownEmotion(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum EmotionError {
    #[error("emotion labels do not line up with speech seconds: {0}")]
    Alignment(String),
    #[error("output: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How deviations from the fallback emotion are counted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeviationUnit {
    /// Maximal runs of consecutive non-fallback seconds.
    #[default]
    Runs,
    /// Individual non-fallback seconds.
    Seconds,
}

/// Start times of the whole seconds of an utterance; the trailing fragment
/// is discarded.
pub fn segment_seconds(utt: &Utterance) -> Vec<f64> {
    let dur = utt.duration_s();
    if !(dur > 0.0) {
        return Vec::new();
    }
    let n = (dur + SECOND_EPS).floor() as usize;
    (0..n).map(|k| ((utt.start_s + k as f64) * 1e6).round() / 1e6).collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmotionTimeline {
    per_speaker: BTreeMap<ParticipantId, Vec<(f64, EmotionLabel)>>,
}

impl EmotionTimeline {
    pub fn speakers(&self) -> impl Iterator<Item = &str> {
        self.per_speaker.keys().map(String::as_str)
    }

    pub fn entries(&self, speaker: &str) -> &[(f64, EmotionLabel)] {
        self.per_speaker.get(speaker).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.per_speaker.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Labels of all speakers whose second starts in `[start_s, end_s)`.
    pub fn labels_between(&self, start_s: f64, end_s: f64) -> Vec<EmotionLabel> {
        self.per_speaker
            .values()
            .flatten()
            .filter(|(t, _)| *t >= start_s && *t < end_s)
            .map(|&(_, l)| l)
            .collect()
    }

    /// Rows ordered by time, then speaker.
    pub fn rows(&self) -> Vec<(&str, f64, EmotionLabel)> {
        let mut rows: Vec<(&str, f64, EmotionLabel)> = self
            .per_speaker
            .iter()
            .flat_map(|(s, v)| v.iter().map(move |&(t, l)| (s.as_str(), t, l)))
            .collect();
        rows.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(b.0)));
        rows
    }
}

/// Attaches one label per speech second, in utterance order.
pub fn build_timeline(utts: &[Utterance], labels: &[EmotionLabel]) -> Result<EmotionTimeline, EmotionError> {
    let slots: usize = utts.iter().map(|u| segment_seconds(u).len()).sum();
    if slots != labels.len() {
        return Err(EmotionError::Alignment(format!("{} speech seconds but {} labels", slots, labels.len())));
    }
    let mut per_speaker: BTreeMap<ParticipantId, Vec<(f64, EmotionLabel)>> = BTreeMap::new();
    let mut next = labels.iter();
    for u in utts {
        let lane = per_speaker.entry(u.speaker.id()).or_default();
        for t in segment_seconds(u) {
            lane.push((t, *next.next().expect("label count checked")));
        }
    }
    for lane in per_speaker.values_mut() {
        lane.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    per_speaker.retain(|_, v| !v.is_empty());
    Ok(EmotionTimeline { per_speaker })
}

/// Orders provider records by utterance and second, requiring exactly one
/// record per speech second.
pub fn align_records(utts: &[Utterance], records: &[EmotionRecord]) -> Result<Vec<EmotionLabel>, EmotionError> {
    let mut keyed: BTreeMap<(usize, usize), EmotionLabel> = BTreeMap::new();
    for r in records {
        let secs = utts.get(r.utt_index).map(|u| segment_seconds(u).len()).ok_or_else(|| {
            EmotionError::Alignment(format!("utterance {} does not exist", r.utt_index))
        })?;
        if r.second_index >= secs {
            return Err(EmotionError::Alignment(format!(
                "utterance {} has {secs} whole seconds, no second {}",
                r.utt_index, r.second_index
            )));
        }
        if keyed.insert((r.utt_index, r.second_index), r.label).is_some() {
            return Err(EmotionError::Alignment(format!(
                "duplicate label for utterance {} second {}",
                r.utt_index, r.second_index
            )));
        }
    }
    let expected: usize = utts.iter().map(|u| segment_seconds(u).len()).sum();
    if keyed.len() != expected {
        return Err(EmotionError::Alignment(format!("{expected} speech seconds but {} labels", keyed.len())));
    }
    Ok(keyed.into_values().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationReport {
    pub interval: (f64, f64),
    pub fallback: EmotionLabel,
    pub counts: BTreeMap<ParticipantId, usize>,
}

/// Counts deviations from `fallback` per speaker among seconds starting in
/// `[interval.0, interval.1)`. Every timeline speaker is listed.
pub fn count_deviations(
    timeline: &EmotionTimeline,
    fallback: EmotionLabel,
    interval: (f64, f64),
    unit: DeviationUnit,
) -> DeviationReport {
    let counts = timeline
        .per_speaker
        .iter()
        .map(|(speaker, lane)| {
            let mut count = 0;
            let mut prev: Option<(f64, bool)> = None;
            for &(t, label) in lane.iter().filter(|(t, _)| *t >= interval.0 && *t < interval.1) {
                let deviates = label != fallback;
                if deviates {
                    let continues = matches!(prev, Some((pt, true)) if (t - pt - 1.0).abs() < SECOND_EPS);
                    if unit == DeviationUnit::Seconds || !continues {
                        count += 1;
                    }
                }
                prev = Some((t, deviates));
            }
            (speaker.clone(), count)
        })
        .collect();
    DeviationReport { interval, fallback, counts }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaE {
    pub per_speaker: BTreeMap<ParticipantId, usize>,
    /// Speaker with the largest change; ties go to the smallest ID.
    pub argmax: Option<ParticipantId>,
}

/// Per-speaker absolute change in deviation count between two reports.
pub fn delta_e_from_reports(a: &DeviationReport, b: &DeviationReport) -> DeltaE {
    let speakers: BTreeSet<&ParticipantId> = a.counts.keys().chain(b.counts.keys()).collect();
    let per_speaker: BTreeMap<ParticipantId, usize> = speakers
        .into_iter()
        .map(|s| {
            let ca = a.counts.get(s).copied().unwrap_or(0);
            let cb = b.counts.get(s).copied().unwrap_or(0);
            (s.clone(), ca.abs_diff(cb))
        })
        .collect();
    let mut argmax: Option<(&ParticipantId, usize)> = None;
    for (s, &d) in &per_speaker {
        if argmax.is_none_or(|(_, best)| d > best) {
            argmax = Some((s, d));
        }
    }
    let argmax = argmax.map(|(s, _)| s.clone());
    DeltaE { per_speaker, argmax }
}

pub fn delta_e(
    timeline: &EmotionTimeline,
    fallback: EmotionLabel,
    unit: DeviationUnit,
    interval_a: (f64, f64),
    interval_b: (f64, f64),
) -> DeltaE {
    delta_e_from_reports(
        &count_deviations(timeline, fallback, interval_a, unit),
        &count_deviations(timeline, fallback, interval_b, unit),
    )
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>, EmotionError> {
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(File::create(path)?))
}

fn fmt_err(e: csv::Error) -> EmotionError {
    EmotionError::Format(e.to_string())
}

pub fn write_timeline(path: impl AsRef<Path>, timeline: &EmotionTimeline) -> Result<(), EmotionError> {
    let mut w = csv_writer(path.as_ref())?;
    w.write_record(["speaker", "second_start_s", "label"]).map_err(fmt_err)?;
    for (speaker, t, label) in timeline.rows() {
        w.write_record([speaker, &format!("{t:.3}"), label.as_str()]).map_err(fmt_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a timeline written by [`write_timeline`].
pub fn read_timeline(path: impl AsRef<Path>) -> Result<EmotionTimeline, EmotionError> {
    let mut r = csv::Reader::from_reader(File::open(path)?);
    let headers = r.headers().map_err(fmt_err)?.clone();
    if headers.iter().collect::<Vec<_>>() != ["speaker", "second_start_s", "label"] {
        return Err(EmotionError::Format("expected header `speaker,second_start_s,label`".into()));
    }
    let mut per_speaker: BTreeMap<ParticipantId, Vec<(f64, EmotionLabel)>> = BTreeMap::new();
    for (i, record) in r.records().enumerate() {
        let record = record.map_err(fmt_err)?;
        let bad = |what: &str| EmotionError::Format(format!("row {}: bad {what}", i + 2));
        let t: f64 = record.get(1).and_then(|v| v.trim().parse().ok()).ok_or_else(|| bad("second_start_s"))?;
        let label: EmotionLabel = record.get(2).and_then(|v| v.parse().ok()).ok_or_else(|| bad("label"))?;
        per_speaker.entry(record.get(0).unwrap_or_default().to_string()).or_default().push((t, label));
    }
    for lane in per_speaker.values_mut() {
        lane.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    Ok(EmotionTimeline { per_speaker })
}

pub fn write_deviations(path: impl AsRef<Path>, reports: &[DeviationReport]) -> Result<(), EmotionError> {
    let mut w = csv_writer(path.as_ref())?;
    w.write_record(["interval_start_s", "speaker", "deviations"]).map_err(fmt_err)?;
    for r in reports {
        for (speaker, count) in &r.counts {
            w.write_record([format!("{:.3}", r.interval.0), speaker.clone(), count.to_string()])
                .map_err(fmt_err)?;
        }
    }
    w.flush()?;
    Ok(())
}
