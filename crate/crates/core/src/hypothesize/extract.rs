use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use super::events::LinearSegment;
use super::similarity::{ig_similarity, sim_events, Param, SimScore};
use super::HypothesisConfig;

pub(crate) fn round6<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64((v * 1e6).round() / 1e6)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Kind {
    Invariant,
    Differentiated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Scope {
    SameTeam,
    CrossTeam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    Sim,
    DSim,
}

/// Which pair of events a term compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum At {
    Start,
    End,
    /// The whole segments, used for interaction graphs.
    Segment,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Term {
    pub param: Param,
    pub relation: Relation,
    pub at: At,
    #[serde(serialize_with = "round6")]
    pub score: f64,
}

impl Term {
    pub fn render(&self) -> String {
        let r = match self.relation {
            Relation::Sim => "Sim",
            Relation::DSim => "DSim",
        };
        format!("{r}({})", self.param)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypothesis {
    pub kind: Kind,
    pub scope: Scope,
    pub teams: (String, String),
    /// Positions of the two segments in the sorted segment list.
    pub segments: (usize, usize),
    pub spans: ((f64, f64), (f64, f64)),
    pub antecedent: Vec<Term>,
    /// Empty when the antecedent leads to no dissimilarity.
    pub consequent: Vec<Term>,
    pub conditioning: Vec<Term>,
    /// Interaction graph comparison, present when both segments carry one.
    pub auxiliary: Vec<Term>,
    #[serde(serialize_with = "round6")]
    pub start_similarity: f64,
    #[serde(serialize_with = "round6")]
    pub end_similarity: f64,
}

fn join(terms: &[Term], empty: &str) -> String {
    if terms.is_empty() {
        empty.to_string()
    } else {
        terms.iter().map(Term::render).collect::<Vec<_>>().join(" ^ ")
    }
}

impl Hypothesis {
    /// Implication form, e.g. `Sim(Br) => Sim(Br) ^ Sim(De) | Sim(IG)`.
    pub fn render(&self) -> String {
        let mut out = format!("{} => {}", join(&self.antecedent, "⊤"), join(&self.consequent, "⊥"));
        let given: Vec<Term> = self.conditioning.iter().chain(&self.auxiliary).copied().collect();
        if !given.is_empty() {
            out.push_str(" | ");
            out.push_str(&join(&given, ""));
        }
        out
    }
}

/// What one segment pair produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairOutcome {
    pub invariant: Option<Hypothesis>,
    pub differentiated: Option<Hypothesis>,
    /// Parameters dissimilar at the starts that became similar at the ends
    /// of an invariant pair, recorded as a differentiated hypothesis with an
    /// empty consequent.
    pub null_consequence: Option<Hypothesis>,
}

impl PairOutcome {
    pub fn hypotheses(&self) -> impl Iterator<Item = &Hypothesis> {
        [&self.invariant, &self.differentiated, &self.null_consequence].into_iter().flatten()
    }
}

fn split_terms(score: &SimScore, at: At, theta_sim: f64) -> (Vec<Term>, Vec<Term>) {
    let mut sim = Vec::new();
    let mut dsim = Vec::new();
    for (&param, &s) in &score.params {
        if s >= theta_sim {
            sim.push(Term { param, relation: Relation::Sim, at, score: s });
        } else {
            dsim.push(Term { param, relation: Relation::DSim, at, score: s });
        }
    }
    (sim, dsim)
}

/// Evaluates the invariant and differentiated schemata for two segments.
pub fn eval_pair(a: &LinearSegment, b: &LinearSegment, cfg: &HypothesisConfig) -> PairOutcome {
    let s0 = sim_events(&a.start.state, &b.start.state);
    let s1 = sim_events(&a.end.state, &b.end.state);
    let (sim0, dsim0) = split_terms(&s0, At::Start, cfg.theta_sim);
    let (sim1, dsim1) = split_terms(&s1, At::End, cfg.theta_sim);
    let auxiliary: Vec<Term> = match (&a.ig, &b.ig) {
        (Some(ga), Some(gb)) => {
            let score = ig_similarity(ga, gb);
            let relation = if score >= cfg.theta_sim { Relation::Sim } else { Relation::DSim };
            vec![Term { param: Param::IG, relation, at: At::Segment, score }]
        }
        _ => Vec::new(),
    };
    let scope = if a.team == b.team { Scope::SameTeam } else { Scope::CrossTeam };
    let make = |kind, antecedent, consequent, conditioning| Hypothesis {
        kind,
        scope,
        teams: (a.team.clone(), b.team.clone()),
        segments: (0, 0),
        spans: (a.span(), b.span()),
        antecedent,
        consequent,
        conditioning,
        auxiliary: auxiliary.clone(),
        start_similarity: s0.aggregate,
        end_similarity: s1.aggregate,
    };

    let mut out = PairOutcome::default();
    if s0.aggregate >= cfg.theta_sim && s1.aggregate >= cfg.theta_sim {
        let resolved: Vec<Term> = dsim0
            .iter()
            .filter(|t| sim1.iter().any(|u| u.param == t.param))
            .copied()
            .collect();
        if !resolved.is_empty() {
            out.null_consequence = Some(make(Kind::Differentiated, resolved, Vec::new(), sim0.clone()));
        }
        out.invariant = Some(make(Kind::Invariant, sim0, sim1, dsim1));
    } else if s0.aggregate <= cfg.theta_dsim && s1.aggregate <= cfg.theta_dsim {
        let mut conditioning = sim0;
        for t in sim1 {
            if !conditioning.iter().any(|c| c.param == t.param) {
                conditioning.push(t);
            }
        }
        out.differentiated = Some(make(Kind::Differentiated, dsim0, dsim1, conditioning));
    }
    out
}

/// Hypotheses grouped by team and scope.
#[derive(Debug, Clone, Default)]
pub struct HypothesisSets {
    /// All segments, ordered by team then start time.
    pub segments: Vec<LinearSegment>,
    pub eq1s: BTreeMap<String, Vec<Hypothesis>>,
    pub eq2s: BTreeMap<String, Vec<Hypothesis>>,
    pub eq1_all: Vec<Hypothesis>,
    pub eq2_all: Vec<Hypothesis>,
    /// Segment pairs evaluated, self-pairs included.
    pub pairs_evaluated: usize,
}

impl HypothesisSets {
    pub fn len(&self) -> usize {
        self.eq1s.values().chain(self.eq2s.values()).map(Vec::len).sum::<usize>() + self.eq1_all.len() + self.eq2_all.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Evaluates every unordered segment pair, self-pairs included, and files
/// the results by scope.
pub fn extract_all(mut segments: Vec<LinearSegment>, cfg: &HypothesisConfig) -> HypothesisSets {
    segments.sort_by(|x, y| {
        x.team.cmp(&y.team).then(x.start.time_s.total_cmp(&y.start.time_s)).then(x.end.time_s.total_cmp(&y.end.time_s))
    });
    let k = segments.len();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i..k).map(move |j| (i, j))).collect();
    let outcomes: Vec<((usize, usize), PairOutcome)> =
        pairs.par_iter().map(|&(i, j)| ((i, j), eval_pair(&segments[i], &segments[j], cfg))).collect();

    let mut sets = HypothesisSets { pairs_evaluated: outcomes.len(), ..HypothesisSets::default() };
    for ((i, j), outcome) in outcomes {
        if i == j && !cfg.include_self_pairs {
            continue;
        }
        for h in outcome.hypotheses() {
            let mut h = h.clone();
            h.segments = (i, j);
            let team = segments[i].team.clone();
            match (h.scope, h.kind) {
                (Scope::SameTeam, Kind::Invariant) => sets.eq1s.entry(team).or_default().push(h),
                (Scope::SameTeam, Kind::Differentiated) => sets.eq2s.entry(team).or_default().push(h),
                (Scope::CrossTeam, Kind::Invariant) => sets.eq1_all.push(h),
                (Scope::CrossTeam, Kind::Differentiated) => sets.eq2_all.push(h),
            }
        }
    }
    sets.segments = segments;
    sets
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypothesize::{ConceptNetwork, Event, TeamState};

    fn state(names: &[&str], emotions: [usize; 7]) -> TeamState {
        TeamState {
            concepts: ConceptNetwork {
                concepts: names.iter().map(|n| (n.to_string(), 1)).collect(),
                arcs: Default::default(),
            },
            emotions,
            ..TeamState::default()
        }
    }

    fn seg(team: &str, t: f64, start: TeamState, end: TeamState) -> LinearSegment {
        let ev = |w, s: TeamState| Event { team: team.into(), window: w, time_s: t + w as f64, state: s };
        LinearSegment { team: team.into(), start: ev(0, start), end: ev(1, end), ig: None }
    }

    #[test]
    fn self_pair_is_invariant() {
        let s = seg("T", 0.0, state(&["a"], [1, 0, 0, 0, 0, 0, 0]), state(&["b"], [0, 2, 0, 0, 0, 0, 0]));
        let out = eval_pair(&s, &s, &HypothesisConfig::default());
        let inv = out.invariant.unwrap();
        assert!(inv.conditioning.is_empty());
        assert!(out.differentiated.is_none() && out.null_consequence.is_none());
        assert_eq!(inv.render(), "Sim(Br) ^ Sim(De) ^ Sim(E) => Sim(Br) ^ Sim(De) ^ Sim(E)");
    }

    #[test]
    fn dissimilar_pair_is_differentiated() {
        let mut a0 = state(&["a"], [5, 0, 0, 0, 0, 0, 0]);
        a0.urgency.insert("P".into(), 10.0);
        a0.diff = [1.0; 4];
        let mut b0 = state(&["b", "c", "d", "e", "f", "g", "h", "i", "j", "k"], [0, 0, 0, 0, 0, 0, 5]);
        b0.motivation.insert("Q".into(), crate::hypothesize::Motivation { mean_words: 9.0, clause_types: 3, concepts: 2 });
        let out = eval_pair(&seg("X", 0.0, a0.clone(), a0.clone()), &seg("Y", 0.0, b0.clone(), b0), &HypothesisConfig::default());
        assert!(out.invariant.is_none());
        let d = out.differentiated.expect("differentiated");
        assert_eq!(d.scope, Scope::CrossTeam);
        assert!(d.antecedent.iter().all(|t| t.relation == Relation::DSim));
    }

    #[test]
    fn pair_count() {
        let s = seg("T", 0.0, TeamState::default(), TeamState::default());
        for k in 1..6 {
            let segs: Vec<LinearSegment> =
                (0..k).map(|i| seg("T", i as f64 * 10.0, TeamState::default(), TeamState::default())).collect();
            assert_eq!(extract_all(segs, &HypothesisConfig::default()).pairs_evaluated, k * (k - 1) / 2 + k);
        }
        let cfg = HypothesisConfig { include_self_pairs: true, ..HypothesisConfig::default() };
        let sets = extract_all(vec![s], &cfg);
        assert_eq!(sets.eq1s["T"].len(), 1);
        assert!(sets.eq1_all.is_empty());
    }

    #[test]
    fn two_teams_one_cross_pair() {
        let a = seg("A", 0.0, TeamState::default(), TeamState::default());
        let b = seg("B", 0.0, TeamState::default(), TeamState::default());
        let sets = extract_all(vec![b, a], &HypothesisConfig::default());
        assert_eq!(sets.pairs_evaluated, 3);
        assert_eq!(sets.eq1_all.len(), 1);
        assert_eq!(sets.eq1_all[0].teams, ("A".to_string(), "B".to_string()));
        assert!(sets.eq1s.is_empty());
    }
}
