//! Interaction graphs, interruption statistics and interaction change.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diarize::{sort_utterances, Utterance, TIME_EPS};
use crate::ParticipantId;

#[derive(Debug, Error)]
pub enum InteractError {
    #[error("output: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One speaker handing the floor to another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub speaker: ParticipantId,
    pub receiver: ParticipantId,
    pub start_s: f64,
    pub end_s: f64,
    pub weight_s: f64,
}

/// Interactions between consecutive utterances of different speakers.
/// Each spans from the first utterance's start to the second's end.
pub fn detect_interactions(utts: &[Utterance]) -> Vec<Interaction> {
    let mut sorted = utts.to_vec();
    sort_utterances(&mut sorted);
    sorted
        .windows(2)
        .filter(|w| w[0].speaker != w[1].speaker)
        .map(|w| Interaction {
            speaker: w[0].speaker.id(),
            receiver: w[1].speaker.id(),
            start_s: w[0].start_s,
            end_s: w[1].end_s,
            weight_s: w[1].end_s - w[0].start_s,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionGraph {
    pub interval: (f64, f64),
    pub nodes: BTreeSet<ParticipantId>,
    pub edges: BTreeMap<(ParticipantId, ParticipantId), f64>,
}

impl InteractionGraph {
    pub fn empty(interval: (f64, f64)) -> Self {
        Self { interval, nodes: BTreeSet::new(), edges: BTreeMap::new() }
    }

    /// Adds nodes that may have no edges, such as silent roster members.
    pub fn with_nodes<I, S>(mut self, nodes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<ParticipantId>,
    {
        self.nodes.extend(nodes.into_iter().map(Into::into));
        self
    }

    pub fn weight(&self, from: &str, to: &str) -> f64 {
        self.edges.get(&(from.to_string(), to.to_string())).copied().unwrap_or(0.0)
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.values().sum()
    }

    /// Incoming plus outgoing weight of every node.
    pub fn strengths(&self) -> BTreeMap<&str, f64> {
        let mut out: BTreeMap<&str, f64> = self.nodes.iter().map(|n| (n.as_str(), 0.0)).collect();
        for ((a, b), w) in &self.edges {
            *out.entry(a.as_str()).or_default() += w;
            *out.entry(b.as_str()).or_default() += w;
        }
        out
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph IG {\n");
        let _ = writeln!(out, "  label={};", dot_id(&format!("{:.3}-{:.3} s", self.interval.0, self.interval.1)));
        for n in &self.nodes {
            let _ = writeln!(out, "  {};", dot_id(n));
        }
        for ((a, b), w) in &self.edges {
            let _ = writeln!(out, "  {} -> {} [label=\"{:.1}\"];", dot_id(a), dot_id(b), w);
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Edge<'a> {
            from: &'a str,
            to: &'a str,
            weight_s: f64,
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            interval: [f64; 2],
            nodes: Vec<&'a str>,
            edges: Vec<Edge<'a>>,
        }
        let round = |v: f64| (v * 1e6).round() / 1e6;
        let doc = Doc {
            interval: [round(self.interval.0), round(self.interval.1)],
            nodes: self.nodes.iter().map(String::as_str).collect(),
            edges: self
                .edges
                .iter()
                .map(|((a, b), w)| Edge { from: a, to: b, weight_s: round(*w) })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("graph serializes");
        s.push('\n');
        s
    }
}

fn dot_id(id: &str) -> String {
    let simple = id.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if simple {
        id.to_string()
    } else {
        format!("\"{}\"", id.replace('\\', "\\\\").replace('"', "\\\""))
    }
}

/// Sums the interactions starting inside `[interval.0, interval.1)`.
pub fn build_ig(interactions: &[Interaction], interval: (f64, f64)) -> InteractionGraph {
    let mut ig = InteractionGraph::empty(interval);
    for it in interactions.iter().filter(|i| i.start_s >= interval.0 && i.start_s < interval.1) {
        ig.nodes.insert(it.speaker.clone());
        ig.nodes.insert(it.receiver.clone());
        *ig.edges.entry((it.speaker.clone(), it.receiver.clone())).or_default() += it.weight_s;
    }
    ig
}

/// Graph over every interaction, spanning `[0, last end]`.
pub fn whole_recording_ig(interactions: &[Interaction]) -> InteractionGraph {
    let end = interactions.iter().map(|i| i.end_s).fold(0.0, f64::max);
    let mut ig = build_ig(interactions, (f64::NEG_INFINITY, f64::INFINITY));
    ig.interval = (0.0, end);
    ig
}

/// One graph per `interval_s` window, `count` windows from time zero.
pub fn interval_igs(interactions: &[Interaction], interval_s: f64, count: usize) -> Vec<InteractionGraph> {
    (0..count)
        .map(|k| build_ig(interactions, (k as f64 * interval_s, (k + 1) as f64 * interval_s)))
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct InterruptionStats {
    pub interactions: usize,
    pub interruptions: usize,
    pub adjusted_interruptions: usize,
    pub pct: u32,
    pub adjusted_pct: u32,
}

/// Integer percentage rounded down; zero when `total` is zero.
pub fn pct_floor(count: usize, total: usize) -> u32 {
    if total == 0 {
        0
    } else {
        (100 * count / total) as u32
    }
}

/// Counts interruptions among consecutive different-speaker utterance pairs.
///
/// The later utterance interrupts when it starts before the earlier one
/// ends. It counts as adjusted (disruptive) when the interrupted speaker
/// starts no new utterance within `resume_s` of the interruption.
pub fn interruption_stats(utts: &[Utterance], resume_s: f64) -> InterruptionStats {
    let mut sorted = utts.to_vec();
    sort_utterances(&mut sorted);
    let mut stats = InterruptionStats::default();
    for (i, w) in sorted.windows(2).enumerate() {
        let (prev, next) = (&w[0], &w[1]);
        if prev.speaker == next.speaker {
            continue;
        }
        stats.interactions += 1;
        if next.start_s < prev.end_s - TIME_EPS {
            stats.interruptions += 1;
            let resumes = sorted[i + 2..]
                .iter()
                .take_while(|u| u.start_s <= next.start_s + resume_s + TIME_EPS)
                .any(|u| u.speaker == prev.speaker && u.start_s > next.start_s);
            if !resumes {
                stats.adjusted_interruptions += 1;
            }
        }
    }
    stats.pct = pct_floor(stats.interruptions, stats.interactions);
    stats.adjusted_pct = pct_floor(stats.adjusted_interruptions, stats.interactions);
    stats
}

pub fn write_interruptions(path: impl AsRef<Path>, rows: &[(String, InterruptionStats)]) -> Result<(), InteractError> {
    let fmt = |e: csv::Error| InteractError::Format(e.to_string());
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(File::create(path)?);
    w.write_record(["video", "interactions", "interruptions", "adjusted_interruptions", "pct", "adjusted_pct"])
        .map_err(fmt)?;
    for (video, s) in rows {
        w.write_record([
            video.clone(),
            s.interactions.to_string(),
            s.interruptions.to_string(),
            s.adjusted_interruptions.to_string(),
            s.pct.to_string(),
            s.adjusted_pct.to_string(),
        ])
        .map_err(fmt)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaIg {
    pub total: f64,
    pub per_participant: BTreeMap<ParticipantId, f64>,
}

/// L1 difference of edge weights; missing edges weigh zero.
pub fn delta_ig(a: &InteractionGraph, b: &InteractionGraph) -> DeltaIg {
    let keys: BTreeSet<&(ParticipantId, ParticipantId)> = a.edges.keys().chain(b.edges.keys()).collect();
    let mut per_participant: BTreeMap<ParticipantId, f64> =
        a.nodes.iter().chain(b.nodes.iter()).map(|n| (n.clone(), 0.0)).collect();
    let mut total = 0.0;
    for key in keys {
        let wa = a.edges.get(key).copied().unwrap_or(0.0);
        let wb = b.edges.get(key).copied().unwrap_or(0.0);
        let d = (wb - wa).abs();
        total += d;
        *per_participant.entry(key.0.clone()).or_default() += d;
        *per_participant.entry(key.1.clone()).or_default() += d;
    }
    DeltaIg { total, per_participant }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn u(s: &str, a: f64, b: f64) -> Utterance {
        Utterance::participant(s, a, b)
    }

    fn it(a: &str, b: &str, start: f64, w: f64) -> Interaction {
        Interaction { speaker: a.into(), receiver: b.into(), start_s: start, end_s: start + w, weight_s: w }
    }

    #[test]
    fn consecutive_pairs() {
        let out = detect_interactions(&[u("A", 0.0, 3.0), u("B", 3.2, 6.0)]);
        assert_eq!(out.len(), 1);
        assert_eq!((out[0].speaker.as_str(), out[0].receiver.as_str(), out[0].weight_s), ("A", "B", 6.0));
        assert!(detect_interactions(&[u("A", 0.0, 3.0), u("A", 4.0, 6.0)]).is_empty());
        let out = detect_interactions(&[u("A", 0.0, 2.0), u("B", 2.0, 4.0), u("C", 4.0, 6.0)]);
        let w: Vec<f64> = out.iter().map(|i| i.weight_s).collect();
        // second end minus first start: 4 - 0 and 6 - 2
        assert_eq!(w, [4.0, 4.0]);
        assert_eq!(out[1].speaker, "B");
    }

    #[test]
    fn weights_add_and_bin_by_start() {
        let ig = build_ig(&[it("A", "B", 0.0, 2.0), it("A", "B", 5.0, 3.0)], (0.0, 120.0));
        assert_eq!(ig.weight("A", "B"), 5.0);
        assert!(build_ig(&[], (0.0, 120.0)).edges.is_empty());
        let igs = interval_igs(&[it("A", "B", 119.0, 4.0), it("B", "A", 121.0, 4.0)], 120.0, 2);
        assert_eq!(igs[0].edges.len(), 1);
        assert_eq!(igs[1].edges.len(), 1);
        assert_eq!(igs[1].weight("B", "A"), 4.0);
    }

    #[test]
    fn table_one_percentages() {
        assert_eq!(pct_floor(26, 207), 12);
        assert_eq!(pct_floor(28, 157), 17);
        assert_eq!(pct_floor(44, 208), 21);
        assert_eq!(pct_floor(0, 5), 0);
        assert_eq!(pct_floor(3, 0), 0);
    }

    #[test]
    fn interruption_counting() {
        let none = interruption_stats(&[u("A", 0.0, 2.0), u("B", 2.0, 4.0)], 2.0);
        assert_eq!((none.interactions, none.interruptions, none.pct), (1, 0, 0));

        // B cuts in at 2.0 and A never comes back
        let s = interruption_stats(&[u("A", 0.0, 3.0), u("B", 2.0, 5.0)], 2.0);
        assert_eq!((s.interruptions, s.adjusted_interruptions), (1, 1));

        // A picks up again at 3.5, within 2 s of the cut-in
        let s = interruption_stats(&[u("A", 0.0, 3.0), u("B", 2.0, 3.4), u("A", 3.5, 6.0)], 2.0);
        assert_eq!((s.interactions, s.interruptions, s.adjusted_interruptions), (2, 1, 0));
        assert_eq!(interruption_stats(&[], 2.0), InterruptionStats::default());
    }

    #[test]
    fn delta_ig_cases() {
        let mut a = InteractionGraph::empty((0.0, 120.0));
        let d = delta_ig(&a, &a);
        assert_eq!(d.total, 0.0);
        let b = build_ig(&[it("A", "B", 0.0, 4.0)], (0.0, 120.0));
        let d = delta_ig(&a, &b);
        assert_eq!(d.total, 4.0);
        assert_eq!(d.per_participant["A"], 4.0);
        assert_eq!(d.per_participant["B"], 4.0);
        a = build_ig(&[it("A", "B", 0.0, 5.0)], (0.0, 120.0));
        let c = build_ig(&[it("A", "B", 0.0, 2.0)], (0.0, 120.0));
        assert_eq!(delta_ig(&a, &c).total, 3.0);
    }

    #[test]
    fn dot_and_json_exports() {
        let ig = build_ig(&[it("A", "B", 0.0, 5.0)], (0.0, 120.0)).with_nodes(["C", "P 4"]);
        let dot = ig.to_dot();
        assert_eq!(dot.matches("->").count(), 1);
        assert!(dot.contains("  A -> B [label=\"5.0\"];\n"));
        assert!(dot.contains("  \"P 4\";\n"));
        assert!(dot.contains("  C;\n"));
        let v: serde_json::Value = serde_json::from_str(&ig.to_json()).unwrap();
        assert_eq!(v["interval"], serde_json::json!([0.0, 120.0]));
        assert_eq!(v["edges"][0]["from"], "A");
        assert_eq!(v["edges"][0]["weight_s"], 5.0);
        assert_eq!(v["nodes"].as_array().unwrap().len(), 4);
    }

    fn arb_graph() -> impl Strategy<Value = InteractionGraph> {
        prop::collection::vec((0usize..4, 0usize..4, 1u32..100), 0..10).prop_map(|raw| {
            let names = ["A", "B", "C", "D"];
            let its: Vec<Interaction> = raw
                .into_iter()
                .filter(|(a, b, _)| a != b)
                .map(|(a, b, w)| it(names[a], names[b], 0.0, w as f64 / 4.0))
                .collect();
            build_ig(&its, (0.0, 1.0))
        })
    }

    proptest! {
        #[test]
        fn delta_ig_is_a_metric(a in arb_graph(), b in arb_graph(), c in arb_graph()) {
            prop_assert_eq!(delta_ig(&a, &b).total, delta_ig(&b, &a).total);
            prop_assert!(delta_ig(&a, &c).total <= delta_ig(&a, &b).total + delta_ig(&b, &c).total + 1e-9);
        }

        #[test]
        fn stats_are_ordered(raw in prop::collection::vec((0usize..3, 0u32..300, 1u32..50), 0..40)) {
            let utts: Vec<Utterance> = raw
                .iter()
                .map(|&(s, a, l)| u(["A", "B", "C"][s], a as f64 / 10.0, (a + l) as f64 / 10.0))
                .collect();
            let s = interruption_stats(&utts, 2.0);
            prop_assert!(s.adjusted_interruptions <= s.interruptions);
            prop_assert!(s.interruptions <= s.interactions);
            prop_assert_eq!(s.interactions, detect_interactions(&utts).len());
            prop_assert!(s.pct <= 100);
        }
    }
}
