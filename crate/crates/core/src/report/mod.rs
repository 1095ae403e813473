//! Figures and tables written by the pipeline.

mod svg;

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use serde::Serialize;

use crate::clauses::{ClauseCounts, ClauseType};
use crate::hypothesize::{round6, ClusterReport, DeltaVerdict, Hypothesis, HypothesisConfig, HypothesisSets};

pub use svg::{emotion_chart, speaker_chart, LANE_H, PLOT_W, PLOT_X, WIDTH};

/// Clause counts of one speaker in one interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ClauseStatsRow {
    pub interval_start_s: f64,
    pub speaker: String,
    pub counts: ClauseCounts,
}

pub fn write_clause_stats(path: impl AsRef<Path>, rows: &[ClauseStatsRow]) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(File::create(path)?);
    let mut header = vec!["interval_start_s".to_string(), "speaker".to_string()];
    header.extend(ClauseType::ALL.iter().map(|t| t.as_str().to_string()));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![format!("{:.3}", r.interval_start_s), r.speaker.clone()];
        rec.extend(ClauseType::ALL.iter().map(|&t| r.counts.get(t).to_string()));
        w.write_record(&rec)?;
    }
    w.flush()
}

#[derive(Serialize)]
struct RenderedHypothesis<'a> {
    rendered: String,
    #[serde(flatten)]
    hypothesis: &'a Hypothesis,
}

#[derive(Serialize)]
struct SegmentRecord<'a> {
    index: usize,
    team: &'a str,
    #[serde(serialize_with = "round6")]
    start_s: f64,
    #[serde(serialize_with = "round6")]
    end_s: f64,
}

#[derive(Serialize)]
struct HypothesesDoc<'a> {
    config: &'a HypothesisConfig,
    pairs_evaluated: usize,
    segments: Vec<SegmentRecord<'a>>,
    #[serde(rename = "eq1S")]
    eq1s: BTreeMap<&'a str, Vec<RenderedHypothesis<'a>>>,
    #[serde(rename = "eq2S")]
    eq2s: BTreeMap<&'a str, Vec<RenderedHypothesis<'a>>>,
    #[serde(rename = "eq1All")]
    eq1_all: Vec<RenderedHypothesis<'a>>,
    #[serde(rename = "eq2All")]
    eq2_all: Vec<RenderedHypothesis<'a>>,
    delta_checks: BTreeMap<&'a str, &'a [DeltaVerdict]>,
    diff_correlations: BTreeMap<&'a str, BTreeMap<String, Option<f64>>>,
}

fn rendered(list: &[Hypothesis]) -> Vec<RenderedHypothesis<'_>> {
    list.iter().map(|h| RenderedHypothesis { rendered: h.render(), hypothesis: h }).collect()
}

/// Extra per-team findings reported next to the hypotheses.
#[derive(Debug, Clone, Default)]
pub struct TeamFindings {
    pub delta_checks: Vec<DeltaVerdict>,
    /// Correlations between pairs of change series, keyed like `C~E`.
    pub diff_correlations: BTreeMap<String, Option<f64>>,
}

pub fn hypotheses_json(sets: &HypothesisSets, cfg: &HypothesisConfig, findings: &BTreeMap<String, TeamFindings>) -> String {
    let round = |v: Option<f64>| v.map(|x| (x * 1e6).round() / 1e6);
    let doc = HypothesesDoc {
        config: cfg,
        pairs_evaluated: sets.pairs_evaluated,
        segments: sets
            .segments
            .iter()
            .enumerate()
            .map(|(index, s)| {
                let (start_s, end_s) = s.span();
                SegmentRecord { index, team: &s.team, start_s, end_s }
            })
            .collect(),
        eq1s: sets.eq1s.iter().map(|(t, v)| (t.as_str(), rendered(v))).collect(),
        eq2s: sets.eq2s.iter().map(|(t, v)| (t.as_str(), rendered(v))).collect(),
        eq1_all: rendered(&sets.eq1_all),
        eq2_all: rendered(&sets.eq2_all),
        delta_checks: findings.iter().map(|(t, f)| (t.as_str(), f.delta_checks.as_slice())).collect(),
        diff_correlations: findings
            .iter()
            .map(|(t, f)| (t.as_str(), f.diff_correlations.iter().map(|(k, v)| (k.clone(), round(*v))).collect()))
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("hypotheses serialize");
    s.push('\n');
    s
}

pub fn clusters_json(reports: &[ClusterReport]) -> String {
    let mut s = serde_json::to_string_pretty(reports).expect("clusters serialize");
    s.push('\n');
    s
}
