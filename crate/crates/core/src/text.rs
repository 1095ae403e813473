//! Speaker-attributed transcripts and speech-rate statistics.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::diarize::Utterance;
use crate::featureio::TextRecord;
use crate::ParticipantId;

#[derive(Debug, Error)]
pub enum TextError {
    #[error("text row {row} references utterance {utt_index}, but only {count} utterances exist")]
    Index { row: usize, utt_index: usize, count: usize },
    #[error("utterance {0} has more than one text row")]
    DuplicateIndex(usize),
    #[error("utterance {utt_index} has zero duration")]
    ZeroDuration { utt_index: usize },
    #[error("output: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Drops speech before `trim_s` and clips utterances straddling it.
pub fn privacy_trim(utts: &[Utterance], trim_s: f64) -> Vec<Utterance> {
    utts.iter()
        .filter(|u| u.end_s > trim_s)
        .map(|u| Utterance::new(u.speaker.clone(), u.start_s.max(trim_s), u.end_s))
        .collect()
}

/// Tokens separated by whitespace that contain a letter or digit.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().filter(|t| t.chars().any(char::is_alphanumeric)).count()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranscriptEntry {
    pub utt_index: usize,
    pub speaker: ParticipantId,
    pub text: String,
    pub start_s: f64,
    pub end_s: f64,
    pub word_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
    /// Utterances whose recognized text is empty.
    pub blank_count: usize,
    pub utterance_count: usize,
}

/// Pairs texts with the (trimmed) utterances they transcribe. Utterances
/// without a text row count as blank.
pub fn assemble_transcript(utts: &[Utterance], texts: &[TextRecord]) -> Result<Transcript, TextError> {
    let mut by_index: BTreeMap<usize, &str> = BTreeMap::new();
    for (row, t) in texts.iter().enumerate() {
        if t.utt_index >= utts.len() {
            return Err(TextError::Index { row, utt_index: t.utt_index, count: utts.len() });
        }
        if by_index.insert(t.utt_index, t.text.as_str()).is_some() {
            return Err(TextError::DuplicateIndex(t.utt_index));
        }
    }
    let entries: Vec<TranscriptEntry> = by_index
        .into_iter()
        .filter(|(_, text)| !text.trim().is_empty())
        .map(|(i, text)| {
            let u = &utts[i];
            TranscriptEntry {
                utt_index: i,
                speaker: u.speaker.id(),
                text: text.trim().to_string(),
                start_s: u.start_s,
                end_s: u.end_s,
                word_count: word_count(text),
            }
        })
        .collect();
    Ok(Transcript { blank_count: utts.len() - entries.len(), utterance_count: utts.len(), entries })
}

/// Words per minute of one entry.
pub fn wpm(entry: &TranscriptEntry) -> Result<f64, TextError> {
    let dur = entry.end_s - entry.start_s;
    if !(dur > 0.0) {
        return Err(TextError::ZeroDuration { utt_index: entry.utt_index });
    }
    Ok(entry.word_count as f64 / (dur / 60.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct WpmStats {
    pub per_speaker: BTreeMap<ParticipantId, u32>,
    pub per_utterance: Vec<(usize, f64)>,
}

/// Mean per-utterance rate for each speaker, rounded half up. Utterances
/// without words are left out of the means.
pub fn avg_wpm(entries: &[TranscriptEntry]) -> Result<WpmStats, TextError> {
    let mut sums: BTreeMap<ParticipantId, (f64, usize)> = BTreeMap::new();
    let mut per_utterance = Vec::with_capacity(entries.len());
    for e in entries {
        let rate = wpm(e)?;
        per_utterance.push((e.utt_index, rate));
        if e.word_count > 0 {
            let slot = sums.entry(e.speaker.clone()).or_default();
            slot.0 += rate;
            slot.1 += 1;
        }
    }
    let per_speaker = sums
        .into_iter()
        .map(|(s, (sum, n))| (s, round_half_up(sum / n as f64)))
        .collect();
    Ok(WpmStats { per_speaker, per_utterance })
}

fn round_half_up(x: f64) -> u32 {
    (x + 0.5).floor() as u32
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>, TextError> {
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(File::create(path)?))
}

fn fmt_err(e: csv::Error) -> TextError {
    TextError::Format(e.to_string())
}

pub fn write_transcript(path: impl AsRef<Path>, transcript: &Transcript) -> Result<(), TextError> {
    let mut w = csv_writer(path.as_ref())?;
    w.write_record(["speaker", "text"]).map_err(fmt_err)?;
    for e in &transcript.entries {
        w.write_record([e.speaker.as_str(), e.text.as_str()]).map_err(fmt_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_transcript_ext(path: impl AsRef<Path>, transcript: &Transcript) -> Result<(), TextError> {
    let mut w = csv_writer(path.as_ref())?;
    w.write_record(["utt_index", "speaker", "start_s", "end_s", "word_count", "wpm", "text"])
        .map_err(fmt_err)?;
    for e in &transcript.entries {
        w.write_record([
            e.utt_index.to_string(),
            e.speaker.clone(),
            format!("{:.3}", e.start_s),
            format!("{:.3}", e.end_s),
            e.word_count.to_string(),
            format!("{:.1}", wpm(e)?),
            e.text.clone(),
        ])
        .map_err(fmt_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an extended transcript written by [`write_transcript_ext`].
pub fn read_transcript_ext(path: impl AsRef<Path>) -> Result<Vec<TranscriptEntry>, TextError> {
    let mut r = csv::Reader::from_reader(File::open(path)?);
    let headers = r.headers().map_err(fmt_err)?.clone();
    if headers.iter().collect::<Vec<_>>() != ["utt_index", "speaker", "start_s", "end_s", "word_count", "wpm", "text"] {
        return Err(TextError::Format("unexpected extended transcript header".into()));
    }
    let mut out = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record.map_err(fmt_err)?;
        let bad = |col: usize| TextError::Format(format!("row {}: bad value in column {col}", i + 2));
        let field = |col: usize| record.get(col).map(str::trim).ok_or_else(|| bad(col));
        out.push(TranscriptEntry {
            utt_index: field(0)?.parse().map_err(|_| bad(0))?,
            speaker: field(1)?.to_string(),
            start_s: field(2)?.parse().map_err(|_| bad(2))?,
            end_s: field(3)?.parse().map_err(|_| bad(3))?,
            word_count: field(4)?.parse().map_err(|_| bad(4))?,
            text: record.get(6).unwrap_or_default().to_string(),
        });
    }
    Ok(out)
}

pub fn write_wpm(path: impl AsRef<Path>, video: &str, stats: &WpmStats) -> Result<(), TextError> {
    let mut w = csv_writer(path.as_ref())?;
    w.write_record(["speaker", "video", "average_wpm"]).map_err(fmt_err)?;
    for (speaker, avg) in &stats.per_speaker {
        w.write_record([speaker.as_str(), video, &avg.to_string()]).map_err(fmt_err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interact::pct_floor;
    use proptest::prelude::*;

    fn entry(words: usize, dur: f64) -> TranscriptEntry {
        TranscriptEntry {
            utt_index: 0,
            speaker: "A".into(),
            text: vec!["word"; words].join(" "),
            start_s: 10.0,
            end_s: 10.0 + dur,
            word_count: words,
        }
    }

    fn rec(i: usize, t: &str) -> TextRecord {
        TextRecord { utt_index: i, text: t.into() }
    }

    #[test]
    fn trim_rules() {
        let out = privacy_trim(
            &[
                Utterance::participant("A", 10.0, 20.0),
                Utterance::participant("A", 25.0, 40.0),
                Utterance::participant("B", 31.0, 40.0),
            ],
            30.0,
        );
        assert_eq!(out, vec![Utterance::participant("A", 30.0, 40.0), Utterance::participant("B", 31.0, 40.0)]);
    }

    #[test]
    fn blanks_are_counted() {
        let utts: Vec<Utterance> = (0..3).map(|i| Utterance::participant("A", i as f64, i as f64 + 1.0)).collect();
        let t = assemble_transcript(&utts, &[rec(0, "hi there"), rec(1, "  "), rec(2, "ok")]).unwrap();
        assert_eq!((t.entries.len(), t.blank_count), (2, 1));
        let t = assemble_transcript(&utts, &[rec(0, ""), rec(1, ""), rec(2, "")]).unwrap();
        assert_eq!((t.entries.len(), t.blank_count), (0, 3));
        assert!(matches!(assemble_transcript(&utts, &[rec(3, "x")]), Err(TextError::Index { .. })));
        assert_eq!(pct_floor(18, 379), 4);
    }

    #[test]
    fn rates() {
        assert_eq!(wpm(&entry(20, 6.0)).unwrap(), 200.0);
        assert_eq!(wpm(&entry(0, 6.0)).unwrap(), 0.0);
        assert!((wpm(&entry(7, 3.5)).unwrap() - 120.0).abs() < 1e-9);
        assert!(matches!(wpm(&entry(3, 0.0)), Err(TextError::ZeroDuration { .. })));
    }

    #[test]
    fn averages() {
        let stats = avg_wpm(&[entry(10, 6.0), entry(20, 6.0), entry(0, 3.0)]).unwrap();
        assert_eq!(stats.per_speaker["A"], 150);
        assert_eq!(stats.per_utterance.len(), 3);
        // 159.4 words per minute
        let stats = avg_wpm(&[entry(797, 300.0)]).unwrap();
        assert_eq!(stats.per_speaker["A"], 159);
        assert_eq!(round_half_up(159.5), 160);
        assert!(avg_wpm(&[]).unwrap().per_speaker.is_empty());
    }

    #[test]
    fn words_ignore_punctuation() {
        assert_eq!(word_count("Well , I  think - so."), 4);
        assert_eq!(word_count(""), 0);
    }

    proptest! {
        #[test]
        fn trim_never_lengthens(raw in prop::collection::vec((0u32..1000, 1u32..200), 0..30), trim in 0u32..600) {
            let utts: Vec<Utterance> =
                raw.iter().map(|&(s, l)| Utterance::participant("A", s as f64 / 10.0, (s + l) as f64 / 10.0)).collect();
            let out = privacy_trim(&utts, trim as f64 / 10.0);
            let mut j = 0;
            for u in &out {
                while utts[j].end_s != u.end_s || utts[j].start_s > u.start_s {
                    j += 1;
                }
                prop_assert!(u.duration_s() <= utts[j].duration_s());
                j += 1;
            }
        }

        #[test]
        fn wpm_scale_consistent(words in 1usize..200, tenths in 1u32..600) {
            let dur = tenths as f64 / 10.0;
            let a = wpm(&entry(words, dur)).unwrap();
            let b = wpm(&entry(2 * words, 2.0 * dur)).unwrap();
            prop_assert!((a - b).abs() < 1e-9 * a.max(1.0));
        }
    }
}
