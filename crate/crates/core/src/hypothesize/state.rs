use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::concepts::{build_concept_network, ConceptNetwork, Relatedness};
use super::similarity::set_scores;
use crate::clauses::ClauseCounts;
use crate::diarize::Utterance;
use crate::emotion::{EmotionLabel, EmotionTimeline};
use crate::ParticipantId;

/// Motivation indicators of one speaker over a window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Motivation {
    pub mean_words: f64,
    pub clause_types: usize,
    pub concepts: usize,
}

impl Motivation {
    pub fn as_array(&self) -> [f64; 3] {
        [self.mean_words, self.clause_types as f64, self.concepts as f64]
    }
}

/// Team state over one window: the concept, emotion, urgency, motivation
/// and change sets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TeamState {
    pub interval: (f64, f64),
    pub concepts: ConceptNetwork,
    /// Label counts indexed like [`EmotionLabel::ALL`].
    pub emotions: [usize; 7],
    /// Utterances per minute by speaker.
    pub urgency: BTreeMap<ParticipantId, f64>,
    pub motivation: BTreeMap<ParticipantId, Motivation>,
    /// Change of the concept, emotion, urgency and motivation sets since the
    /// previous window, each in `[0, 1]`.
    pub diff: [f64; 4],
}

impl TeamState {
    pub fn emotion_labels(&self) -> BTreeSet<EmotionLabel> {
        EmotionLabel::ALL.into_iter().filter(|l| self.emotions[l.index()] > 0).collect()
    }

    /// Team mean of each motivation indicator.
    pub fn mean_motivation(&self) -> [f64; 3] {
        let n = self.motivation.len();
        if n == 0 {
            return [0.0; 3];
        }
        let mut acc = [0.0; 3];
        for m in self.motivation.values() {
            for (a, v) in acc.iter_mut().zip(m.as_array()) {
                *a += v;
            }
        }
        acc.map(|a| a / n as f64)
    }
}

/// One transcribed sentence with its speaker, time and clause analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceObs {
    pub speaker: ParticipantId,
    pub start_s: f64,
    pub concepts: Vec<String>,
    pub clauses: ClauseCounts,
}

/// Word count of one transcribed utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseObs {
    pub speaker: ParticipantId,
    pub start_s: f64,
    pub words: usize,
}

/// Everything observed about one team, timed on the recording clock.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Observations {
    pub utterances: Vec<Utterance>,
    pub responses: Vec<ResponseObs>,
    pub sentences: Vec<SentenceObs>,
    pub emotions: EmotionTimeline,
}

impl Observations {
    /// End of the last utterance.
    pub fn end_s(&self) -> f64 {
        self.utterances.iter().map(|u| u.end_s).fold(0.0, f64::max)
    }
}

fn inside(t: f64, interval: (f64, f64)) -> bool {
    t >= interval.0 && t < interval.1
}

/// State of the window `interval`; `prev` is the preceding window's state.
pub fn extract_team_state(
    obs: &Observations,
    interval: (f64, f64),
    prev: Option<&TeamState>,
    relatedness: &dyn Relatedness,
) -> TeamState {
    let minutes = (interval.1 - interval.0) / 60.0;
    let sentences: Vec<&SentenceObs> = obs.sentences.iter().filter(|s| inside(s.start_s, interval)).collect();
    let concept_lists: Vec<Vec<String>> = sentences.iter().map(|s| s.concepts.clone()).collect();
    let concepts = build_concept_network(&concept_lists, relatedness);

    let mut emotions = [0usize; 7];
    for l in obs.emotions.labels_between(interval.0, interval.1) {
        emotions[l.index()] += 1;
    }

    let mut urgency: BTreeMap<ParticipantId, f64> = BTreeMap::new();
    for u in obs.utterances.iter().filter(|u| inside(u.start_s, interval)) {
        *urgency.entry(u.speaker.id()).or_default() += 1.0;
    }
    if minutes > 0.0 {
        urgency.values_mut().for_each(|v| *v /= minutes);
    }

    let mut words: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for r in obs.responses.iter().filter(|r| inside(r.start_s, interval)) {
        let slot = words.entry(r.speaker.as_str()).or_default();
        slot.0 += r.words;
        slot.1 += 1;
    }
    let mut clause_counts: BTreeMap<&str, (ClauseCounts, BTreeSet<&str>)> = BTreeMap::new();
    for s in &sentences {
        let slot = clause_counts.entry(s.speaker.as_str()).or_default();
        for (i, c) in s.clauses.0.iter().enumerate() {
            slot.0 .0[i] += c;
        }
        slot.1.extend(s.concepts.iter().map(String::as_str));
    }
    let speakers: BTreeSet<&str> = words.keys().chain(clause_counts.keys()).copied().collect();
    let motivation = speakers
        .into_iter()
        .map(|sp| {
            let mean_words = words.get(sp).map_or(0.0, |&(w, n)| w as f64 / n as f64);
            let (clause_types, concepts) =
                clause_counts.get(sp).map_or((0, 0), |(c, set)| (c.distinct_types(), set.len()));
            (sp.to_string(), Motivation { mean_words, clause_types, concepts })
        })
        .collect();

    let mut state = TeamState { interval, concepts, emotions, urgency, motivation, diff: [0.0; 4] };
    if let Some(prev) = prev {
        let s = set_scores(prev, &state);
        state.diff = [1.0 - s.c, 1.0 - s.e, 1.0 - s.u, 1.0 - s.m];
    }
    state
}

/// States of `count` consecutive windows of `window_s` seconds from time zero.
pub fn window_states(
    obs: &Observations,
    window_s: f64,
    count: usize,
    relatedness: &dyn Relatedness,
) -> Vec<TeamState> {
    let mut out: Vec<TeamState> = Vec::with_capacity(count);
    for k in 0..count {
        let interval = (k as f64 * window_s, (k + 1) as f64 * window_s);
        let state = extract_team_state(obs, interval, out.last(), relatedness);
        out.push(state);
    }
    out
}
