use std::collections::BTreeMap;
use std::fmt;

use serde::{Serialize, Serializer};

use super::concepts::{breadth, depth};
use super::state::TeamState;
use crate::interact::InteractionGraph;

/// Parameters that appear in rendered hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Param {
    Br,
    De,
    E,
    U,
    M,
    Diff,
    IG,
}

impl Param {
    pub const STATE: [Param; 6] = [Param::Br, Param::De, Param::E, Param::U, Param::M, Param::Diff];

    pub fn as_str(self) -> &'static str {
        match self {
            Param::Br => "Br",
            Param::De => "De",
            Param::E => "E",
            Param::U => "U",
            Param::M => "M",
            Param::Diff => "Diff",
            Param::IG => "IG",
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Param {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// Similarity of the five sets, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SetScores {
    pub c: f64,
    pub e: f64,
    pub u: f64,
    pub m: f64,
    pub diff: f64,
}

impl SetScores {
    pub fn aggregate(&self) -> f64 {
        (self.c + self.e + self.u + self.m + self.diff) / 5.0
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.c, self.e, self.u, self.m, self.diff]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimScore {
    pub sets: SetScores,
    pub aggregate: f64,
    /// Scores of the parameters with data on at least one side.
    pub params: BTreeMap<Param, f64>,
}

fn jaccard<T: Ord>(a: &std::collections::BTreeSet<T>, b: &std::collections::BTreeSet<T>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    a.intersection(b).count() as f64 / a.union(b).count() as f64
}

/// `1 - |x - y| / max(x, y, 1)`.
pub fn magnitude_score(x: f64, y: f64) -> f64 {
    1.0 - (x - y).abs() / x.max(y).max(1.0)
}

fn total_variation(a: &[usize; 7], b: &[usize; 7]) -> f64 {
    let (na, nb): (usize, usize) = (a.iter().sum(), b.iter().sum());
    match (na, nb) {
        (0, 0) => 0.0,
        (0, _) | (_, 0) => 1.0,
        _ => 0.5 * a.iter().zip(b).map(|(&x, &y)| (x as f64 / na as f64 - y as f64 / nb as f64).abs()).sum::<f64>(),
    }
}

/// `1 - sum|a - b| / sum max(a, b)` over zero-padded vectors of
/// non-negative values; 1 when both are all zero.
fn pooled_l1_score(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        num += (at(a, i) - at(b, i)).abs();
        den += at(a, i).max(at(b, i));
    }
    if den == 0.0 {
        1.0
    } else {
        1.0 - num / den
    }
}

/// One minus the mean relative difference of paired components.
fn relative_l1_score(a: &[f64], b: &[f64]) -> f64 {
    let rel: f64 = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| {
            let m = x.abs().max(y.abs());
            if m == 0.0 {
                0.0
            } else {
                (x - y).abs() / m
            }
        })
        .sum();
    1.0 - rel / a.len().max(1) as f64
}

fn sorted_rates(s: &TeamState) -> Vec<f64> {
    let mut r: Vec<f64> = s.urgency.values().copied().collect();
    r.sort_by(|a, b| b.total_cmp(a));
    r
}

/// Similarity of the concept, emotion, urgency, motivation and change sets.
pub fn set_scores(a: &TeamState, b: &TeamState) -> SetScores {
    let jac = jaccard(&a.concepts.concept_set(), &b.concepts.concept_set());
    let br = magnitude_score(breadth(&a.concepts) as f64, breadth(&b.concepts) as f64);
    SetScores {
        c: 0.5 * jac + 0.5 * br,
        e: 1.0 - total_variation(&a.emotions, &b.emotions),
        u: pooled_l1_score(&sorted_rates(a), &sorted_rates(b)),
        m: relative_l1_score(&a.mean_motivation(), &b.mean_motivation()),
        diff: 1.0 - a.diff.iter().zip(&b.diff).map(|(x, y)| (x - y).abs()).sum::<f64>() / 4.0,
    }
}

/// Similarity of two events' team states.
pub fn sim_events(a: &TeamState, b: &TeamState) -> SimScore {
    let sets = set_scores(a, b);
    let mut params = BTreeMap::new();
    if !(a.concepts.is_empty() && b.concepts.is_empty()) {
        params.insert(Param::Br, magnitude_score(breadth(&a.concepts) as f64, breadth(&b.concepts) as f64));
        params.insert(Param::De, magnitude_score(depth(&a.concepts), depth(&b.concepts)));
    }
    if a.emotions.iter().chain(&b.emotions).any(|&c| c > 0) {
        params.insert(Param::E, sets.e);
    }
    if a.urgency.values().chain(b.urgency.values()).any(|&r| r > 0.0) {
        params.insert(Param::U, sets.u);
    }
    if a.mean_motivation().iter().chain(&b.mean_motivation()).any(|&v| v > 0.0) {
        params.insert(Param::M, sets.m);
    }
    if a.diff.iter().chain(&b.diff).any(|&v| v > 0.0) {
        params.insert(Param::Diff, sets.diff);
    }
    SimScore { aggregate: sets.aggregate(), sets, params }
}

/// Compares interaction structure regardless of who holds which role:
/// each graph becomes its node strengths sorted in decreasing order and
/// normalized to sum to one; the score is one minus their total variation.
pub fn ig_similarity(a: &InteractionGraph, b: &InteractionGraph) -> f64 {
    let profile = |g: &InteractionGraph| {
        let mut v: Vec<f64> = g.strengths().into_values().filter(|&s| s > 0.0).collect();
        v.sort_by(|x, y| y.total_cmp(x));
        let total: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= total);
        v
    };
    let (pa, pb) = (profile(a), profile(b));
    match (pa.is_empty(), pb.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let n = pa.len().max(pb.len());
    let tv: f64 = (0..n)
        .map(|i| (pa.get(i).copied().unwrap_or(0.0) - pb.get(i).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
        * 0.5;
    1.0 - tv
}
