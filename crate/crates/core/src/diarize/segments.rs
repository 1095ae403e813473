use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::path::Path;

use super::{sort_utterances, DiarizeError, Roster, SpeakerLabel, Utterance, TIME_EPS};
use crate::featureio::WINDOW_S;

/// Minimum length of genuine speech; shorter runs are spikes.
pub const MIN_SPEECH_S: f64 = 1.0;

fn round_us(t: f64) -> f64 {
    (t * 1e6).round() / 1e6
}

/// Merges runs of equal labels into utterances.
///
/// A run spans from its first window start to its last window start plus
/// 1.0 s, cut short where the next run begins.
pub fn labels_to_utterances(labels: &[usize], starts: &[f64]) -> Vec<Utterance> {
    let n = labels.len().min(starts.len());
    let mut runs: Vec<(usize, usize, usize)> = Vec::new();
    for i in 0..n {
        match runs.last_mut() {
            Some((label, _, last)) if *label == labels[i] => *last = i,
            _ => runs.push((labels[i], i, i)),
        }
    }
    runs.iter()
        .enumerate()
        .map(|(r, &(label, first, last))| {
            let mut end = round_us(starts[last] + WINDOW_S);
            if let Some(&(_, next_first, _)) = runs.get(r + 1) {
                end = end.min(starts[next_first]);
            }
            Utterance::new(SpeakerLabel::Cluster(label), starts[first], end)
        })
        .collect()
}

/// Removes sub-second speech spikes, per speaker, until nothing changes.
///
/// A spike followed by the same speaker's speech less than 1.0 s later is
/// merged with it into one utterance spanning the gap. Any other spike is
/// dropped.
pub fn temporal_smooth(utts: &[Utterance]) -> Vec<Utterance> {
    let mut by_speaker: BTreeMap<SpeakerLabel, Vec<(f64, f64)>> = BTreeMap::new();
    for u in utts {
        by_speaker.entry(u.speaker.clone()).or_default().push((u.start_s, u.end_s));
    }

    let mut out = Vec::with_capacity(utts.len());
    for (speaker, mut spans) in by_speaker {
        spans.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        loop {
            let mut changed = false;
            let mut next = Vec::with_capacity(spans.len());
            let mut i = 0;
            while i < spans.len() {
                let (start, end) = spans[i];
                if end - start < MIN_SPEECH_S - TIME_EPS {
                    changed = true;
                    match spans.get(i + 1) {
                        Some(&(ns, ne)) if ns - end < MIN_SPEECH_S - TIME_EPS => {
                            next.push((start, end.max(ne)));
                            i += 2;
                        }
                        _ => i += 1,
                    }
                    continue;
                }
                next.push((start, end));
                i += 1;
            }
            spans = next;
            if !changed {
                break;
            }
        }
        out.extend(spans.into_iter().map(|(s, e)| Utterance::new(speaker.clone(), s, e)));
    }
    sort_utterances(&mut out);
    out
}

/// Maps cluster indices to roster IDs by order of first speech.
///
/// Utterances already carrying participant IDs are left unchanged.
pub fn assign_roster(utts: &[Utterance], roster: &Roster) -> Result<Vec<Utterance>, DiarizeError> {
    let mut first: HashMap<usize, f64> = HashMap::new();
    for u in utts {
        if let SpeakerLabel::Cluster(c) = u.speaker {
            let slot = first.entry(c).or_insert(u.start_s);
            if u.start_s < *slot {
                *slot = u.start_s;
            }
        }
    }
    if first.len() > roster.len() {
        return Err(DiarizeError::RosterTooSmall { clusters: first.len(), roster: roster.len() });
    }
    let mut order: Vec<(usize, f64)> = first.into_iter().collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let mapping: HashMap<usize, &str> =
        order.iter().zip(roster.ids()).map(|(&(c, _), id)| (c, id.as_str())).collect();

    Ok(utts
        .iter()
        .map(|u| match u.speaker {
            SpeakerLabel::Cluster(c) => Utterance::new(SpeakerLabel::Participant(mapping[&c].to_string()), u.start_s, u.end_s),
            SpeakerLabel::Participant(_) => u.clone(),
        })
        .collect())
}

/// Speech of every speaker clipped to one chart interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartInterval {
    pub index: usize,
    pub start_s: f64,
    pub end_s: f64,
    pub lanes: BTreeMap<String, Vec<(f64, f64)>>,
}

impl ChartInterval {
    pub fn speech_s(&self) -> f64 {
        self.lanes.values().flatten().map(|(s, e)| e - s).sum()
    }
}

/// Splits utterances at multiples of `interval_s`. The final partial
/// interval is included; no intervals are produced for empty input.
pub fn chart_intervals(utts: &[Utterance], interval_s: f64) -> Vec<ChartInterval> {
    let max_end = utts.iter().map(|u| u.end_s).fold(0.0, f64::max);
    if utts.is_empty() || max_end <= 0.0 || interval_s <= 0.0 {
        return Vec::new();
    }
    let count = ((max_end / interval_s) - TIME_EPS).ceil().max(1.0) as usize;
    let mut charts: Vec<ChartInterval> = (0..count)
        .map(|index| ChartInterval {
            index,
            start_s: index as f64 * interval_s,
            end_s: (index + 1) as f64 * interval_s,
            lanes: BTreeMap::new(),
        })
        .collect();

    let mut sorted = utts.to_vec();
    sort_utterances(&mut sorted);
    for u in &sorted {
        let first = ((u.start_s / interval_s).floor().max(0.0) as usize).min(count - 1);
        for chart in charts.iter_mut().skip(first) {
            if chart.start_s >= u.end_s {
                break;
            }
            let s = u.start_s.max(chart.start_s);
            let e = u.end_s.min(chart.end_s);
            if e > s {
                chart.lanes.entry(u.speaker.id()).or_default().push((s, e));
            }
        }
    }
    charts
}

pub fn write_utterances(path: impl AsRef<Path>, utts: &[Utterance]) -> Result<(), DiarizeError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(File::create(path)?);
    let fmt = |e: csv::Error| DiarizeError::Format(e.to_string());
    w.write_record(["speaker", "start_s", "end_s"]).map_err(fmt)?;
    for u in utts {
        w.write_record([u.speaker.id(), format!("{:.3}", u.start_s), format!("{:.3}", u.end_s)])
            .map_err(fmt)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an utterances file; every speaker becomes a participant label.
pub fn read_utterances(path: impl AsRef<Path>) -> Result<Vec<Utterance>, DiarizeError> {
    let mut r = csv::Reader::from_reader(File::open(path)?);
    let fmt = |e: csv::Error| DiarizeError::Format(e.to_string());
    let headers = r.headers().map_err(fmt)?.clone();
    if headers.iter().collect::<Vec<_>>() != ["speaker", "start_s", "end_s"] {
        return Err(DiarizeError::Format("expected header `speaker,start_s,end_s`".into()));
    }
    let mut out = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record.map_err(fmt)?;
        let num = |idx: usize| -> Result<f64, DiarizeError> {
            record
                .get(idx)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| DiarizeError::Format(format!("row {}: bad time in column {idx}", i + 2)))
        };
        let (start, end) = (num(1)?, num(2)?);
        if !(end > start) {
            return Err(DiarizeError::Format(format!("row {}: end_s must exceed start_s", i + 2)));
        }
        out.push(Utterance::participant(record.get(0).unwrap_or_default(), start, end));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(label: usize, s: f64, e: f64) -> Utterance {
        Utterance::new(SpeakerLabel::Cluster(label), s, e)
    }

    fn close(a: &[Utterance], b: &[Utterance]) -> bool {
        a.len() == b.len()
            && a.iter().zip(b).all(|(x, y)| {
                x.speaker == y.speaker && (x.start_s - y.start_s).abs() < 1e-9 && (x.end_s - y.end_s).abs() < 1e-9
            })
    }

    #[test]
    fn single_run() {
        let u = labels_to_utterances(&[0, 0, 0], &[0.0, 0.1, 0.2]);
        assert!(close(&u, &[c(0, 0.0, 1.2)]));
    }

    #[test]
    fn overlapping_runs_yield() {
        let u = labels_to_utterances(&[0, 1], &[0.0, 0.1]);
        assert!(close(&u, &[c(0, 0.0, 0.1), c(1, 0.1, 1.1)]));
        assert!(labels_to_utterances(&[], &[]).is_empty());
    }

    #[test]
    fn spike_merges_with_close_speech() {
        let out = temporal_smooth(&[c(1, 0.0, 0.5), c(1, 0.9, 2.0)]);
        assert!(close(&out, &[c(1, 0.0, 2.0)]));
    }

    #[test]
    fn isolated_spike_is_dropped() {
        assert!(temporal_smooth(&[c(1, 0.0, 0.4)]).is_empty());
    }

    #[test]
    fn long_speech_untouched() {
        assert!(close(&temporal_smooth(&[c(1, 0.0, 2.0)]), &[c(1, 0.0, 2.0)]));
    }

    #[test]
    fn single_window_run_is_not_a_spike() {
        // 0.3 + 1.0 - 0.3 is not exactly 1.0 in binary
        let u = labels_to_utterances(&[0, 0, 0, 0, 1], &[0.0, 0.1, 0.2, 0.3, 0.4]);
        let smoothed = temporal_smooth(&u);
        assert_eq!(smoothed.len(), 1);
        assert_eq!(smoothed[0].speaker, SpeakerLabel::Cluster(1));
    }

    #[test]
    fn roster_follows_first_speech() {
        let utts = [c(2, 0.0, 3.0), c(0, 3.0, 5.0), c(1, 5.0, 7.0), c(2, 7.0, 9.0)];
        let roster = Roster::new(vec!["A".into(), "B".into(), "C".into()]).unwrap();
        let out = assign_roster(&utts, &roster).unwrap();
        let ids: Vec<String> = out.iter().map(|u| u.speaker.id()).collect();
        assert_eq!(ids, ["A", "B", "C", "A"]);
        for (a, b) in utts.iter().zip(&out) {
            assert_eq!((a.start_s, a.end_s), (b.start_s, b.end_s));
        }
    }

    #[test]
    fn roster_single_and_too_small() {
        let one = Roster::new(vec!["A".into()]).unwrap();
        let out = assign_roster(&[c(0, 0.0, 1.0), c(0, 2.0, 3.0)], &one).unwrap();
        assert!(out.iter().all(|u| u.speaker.id() == "A"));
        let two = Roster::new(vec!["A".into(), "B".into()]).unwrap();
        assert!(matches!(
            assign_roster(&[c(0, 0.0, 1.0), c(1, 1.0, 2.0), c(2, 2.0, 3.0)], &two),
            Err(DiarizeError::RosterTooSmall { clusters: 3, roster: 2 })
        ));
    }

    #[test]
    fn chart_splits_at_boundary() {
        let charts = chart_intervals(&[Utterance::participant("A", 110.0, 130.0)], 120.0);
        assert_eq!(charts.len(), 2);
        assert_eq!(charts[0].lanes["A"], vec![(110.0, 120.0)]);
        assert_eq!(charts[1].lanes["A"], vec![(120.0, 130.0)]);
        assert!(chart_intervals(&[], 120.0).is_empty());
        assert_eq!(chart_intervals(&[Utterance::participant("A", 5.0, 119.0)], 120.0).len(), 1);
        assert_eq!(chart_intervals(&[Utterance::participant("A", 5.0, 120.0)], 120.0).len(), 1);
    }

    #[test]
    fn utterance_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u.csv");
        let utts = vec![Utterance::participant("P 1", 0.0, 1.25), Utterance::participant("P2", 1.25, 3.0)];
        write_utterances(&p, &utts).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "speaker,start_s,end_s\nP 1,0.000,1.250\nP2,1.250,3.000\n");
        assert_eq!(read_utterances(&p).unwrap(), utts);
    }

    fn arb_utts() -> impl Strategy<Value = Vec<Utterance>> {
        prop::collection::vec((0usize..3, 0u32..600, 1u32..40), 0..30).prop_map(|raw| {
            raw.into_iter()
                .map(|(spk, start, len)| c(spk, start as f64 / 10.0, (start + len) as f64 / 10.0))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn smoothing_is_idempotent(utts in arb_utts()) {
            let once = temporal_smooth(&utts);
            let twice = temporal_smooth(&once);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn charts_conserve_speech(utts in arb_utts()) {
            let total: f64 = utts.iter().map(|u| u.duration_s()).sum();
            let charted: f64 = chart_intervals(&utts, 12.0).iter().map(|c| c.speech_s()).sum();
            prop_assert!((total - charted).abs() < 1e-6);
        }

        #[test]
        fn spectral_labels_permute_with_rows(perm_seed in 0u64..1000) {
            use crate::featureio::EmbeddingVector;
            use rand::{seq::SliceRandom, SeedableRng};
            let emb: Vec<EmbeddingVector<f64>> = (0..9)
                .map(|i| {
                    let mut v = vec![0.05; 3];
                    v[i % 3] = 1.0 + 0.01 * i as f64;
                    EmbeddingVector::new(v)
                })
                .collect();
            let a = crate::diarize::affinity(&emb).unwrap();
            let mut perm: Vec<usize> = (0..9).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed));
            let base = crate::diarize::spectral_cluster(&a, 3, 4).unwrap();
            let permuted = crate::diarize::spectral_cluster(&a.permuted(&perm), 3, 4).unwrap();
            for i in 0..9 {
                for j in 0..9 {
                    prop_assert_eq!(permuted[i] == permuted[j], base[perm[i]] == base[perm[j]]);
                }
            }
        }
    }
}
