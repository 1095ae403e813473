use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::concepts::{breadth, depth};
use super::events::LinearSegment;
use super::extract::{HypothesisSets, Relation};
use super::similarity::{sim_events, Param};
use super::state::TeamState;

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Single-linkage clusters: segments whose start events are at least
/// `theta` similar end up together, transitively. Clusters hold segment
/// positions, each sorted, and are ordered by their first member.
pub fn cluster_segments(segments: &[LinearSegment], theta: f64) -> Vec<Vec<usize>> {
    let n = segments.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if sim_events(&segments[i].start.state, &segments[j].start.state).aggregate >= theta {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort_by_key(|g| g[0]);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ParamRange {
    Numeric { min: f64, max: f64 },
    Categorical(BTreeSet<String>),
}

fn numeric_value(param: Param, s: &TeamState) -> Option<f64> {
    let mean = |v: &mut dyn Iterator<Item = f64>| {
        let (sum, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    };
    Some(match param {
        Param::Br => breadth(&s.concepts) as f64,
        Param::De => depth(&s.concepts),
        Param::U => mean(&mut s.urgency.values().copied()),
        Param::M => s.mean_motivation()[0],
        Param::Diff => mean(&mut s.diff.iter().copied()),
        Param::E | Param::IG => return None,
    })
}

/// Value ranges of `params` over the start and end states of a cluster.
/// Emotions are reported as the union of labels seen.
pub fn abstract_ranges(cluster: &[&LinearSegment], params: &BTreeSet<Param>) -> BTreeMap<Param, ParamRange> {
    let states: Vec<&TeamState> = cluster.iter().flat_map(|s| [&s.start.state, &s.end.state]).collect();
    let mut out = BTreeMap::new();
    for &p in params {
        if p == Param::E {
            let labels = states.iter().flat_map(|s| s.emotion_labels()).map(|l| l.to_string()).collect();
            out.insert(p, ParamRange::Categorical(labels));
            continue;
        }
        let values: Vec<f64> = states.iter().filter_map(|s| numeric_value(p, s)).collect();
        if let (Some(min), Some(max)) = (
            values.iter().copied().reduce(f64::min),
            values.iter().copied().reduce(f64::max),
        ) {
            out.insert(p, ParamRange::Numeric { min, max });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterReport {
    /// Team ID, or `*` for clusters over all teams.
    pub scope: String,
    /// Positions in [`HypothesisSets::segments`].
    pub members: Vec<usize>,
    pub ranges: BTreeMap<Param, ParamRange>,
}

/// Clusters each team's segments and all segments together, abstracting the
/// parameters that were dissimilar in the cluster's invariant hypotheses.
pub fn cluster_report(sets: &HypothesisSets, theta: f64) -> Vec<ClusterReport> {
    let teams: BTreeSet<&str> = sets.segments.iter().map(|s| s.team.as_str()).collect();
    let mut scopes: Vec<(String, Vec<usize>)> = teams
        .iter()
        .map(|t| (t.to_string(), (0..sets.segments.len()).filter(|&i| sets.segments[i].team == *t).collect()))
        .collect();
    if teams.len() > 1 {
        scopes.push(("*".to_string(), (0..sets.segments.len()).collect()));
    }

    let mut out = Vec::new();
    for (scope, idx) in scopes {
        let subset: Vec<LinearSegment> = idx.iter().map(|&i| sets.segments[i].clone()).collect();
        let hyps: Vec<_> = if scope == "*" {
            sets.eq1_all.iter().chain(sets.eq1s.values().flatten()).collect()
        } else {
            sets.eq1s.get(&scope).map(|v| v.iter().collect()).unwrap_or_default()
        };
        for group in cluster_segments(&subset, theta) {
            let members: Vec<usize> = group.iter().map(|&g| idx[g]).collect();
            let params: BTreeSet<Param> = hyps
                .iter()
                .filter(|h| members.contains(&h.segments.0) && members.contains(&h.segments.1))
                .flat_map(|h| h.conditioning.iter())
                .filter(|t| t.relation == Relation::DSim)
                .map(|t| t.param)
                .collect();
            let refs: Vec<&LinearSegment> = members.iter().map(|&m| &sets.segments[m]).collect();
            out.push(ClusterReport { scope: scope.clone(), ranges: abstract_ranges(&refs, &params), members });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emotion::EmotionLabel;
    use crate::hypothesize::{ConceptNetwork, Event};

    fn state(names: &[&str]) -> TeamState {
        TeamState {
            concepts: ConceptNetwork {
                concepts: names.iter().map(|n| (n.to_string(), 1)).collect(),
                arcs: Default::default(),
            },
            ..TeamState::default()
        }
    }

    fn seg(id: f64, start: TeamState, end: TeamState) -> LinearSegment {
        let ev = |s: TeamState| Event { team: "T".into(), window: 0, time_s: id, state: s };
        LinearSegment { team: "T".into(), start: ev(start.clone()), end: ev(end), ig: None }
    }

    fn names(n: usize, prefix: &str) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    fn with(v: &[String]) -> TeamState {
        state(&v.iter().map(String::as_str).collect::<Vec<_>>())
    }

    #[test]
    fn identical_segments_one_cluster() {
        let s = seg(0.0, state(&["a"]), state(&["a"]));
        assert_eq!(cluster_segments(&[s.clone(), s.clone(), s], 0.7), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn unrelated_groups_stay_apart() {
        let a = seg(0.0, state(&["a"]), state(&["a"]));
        let mut far = with(&names(30, "z"));
        far.emotions[3] = 4;
        far.urgency.insert("P".into(), 9.0);
        far.diff = [1.0; 4];
        let b = seg(1.0, far.clone(), far);
        assert_eq!(cluster_segments(&[a.clone(), b.clone(), a, b], 0.7), vec![vec![0, 2], vec![1, 3]]);
    }

    #[test]
    fn single_linkage_chains() {
        // a~b and b~c share most concepts; a and c share fewer
        let base = names(10, "c");
        let b: Vec<String> = base[2..].iter().cloned().chain(names(2, "x")).collect();
        let c: Vec<String> = base[4..].iter().cloned().chain(names(4, "x")).collect();
        let sa = with(&base);
        let sb = with(&b);
        let sc = with(&c);
        let link = |x: &TeamState, y: &TeamState| sim_events(x, y).aggregate;
        let theta = link(&sa, &sb).min(link(&sb, &sc)) - 1e-9;
        assert!(link(&sa, &sc) < theta);
        let segs = [seg(0.0, sa.clone(), sa), seg(1.0, sb.clone(), sb), seg(2.0, sc.clone(), sc)];
        assert_eq!(cluster_segments(&segs, theta), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn ranges() {
        let params: BTreeSet<Param> = [Param::Br, Param::E].into();
        let mut s9 = with(&names(9, "a"));
        s9.emotions[EmotionLabel::Sad.index()] = 1;
        let single = seg(0.0, s9.clone(), s9.clone());
        let r = abstract_ranges(&[&single], &params);
        assert_eq!(r[&Param::Br], ParamRange::Numeric { min: 9.0, max: 9.0 });

        let mut s16 = with(&names(16, "b"));
        s16.emotions[EmotionLabel::Happy.index()] = 2;
        s16.emotions[EmotionLabel::Sad.index()] = 1;
        let s22 = with(&names(22, "c"));
        let a = seg(0.0, s22, s9);
        let b = seg(1.0, s16.clone(), s16);
        let r = abstract_ranges(&[&a, &b], &params);
        assert_eq!(r[&Param::Br], ParamRange::Numeric { min: 9.0, max: 22.0 });
        assert_eq!(r[&Param::E], ParamRange::Categorical(["Happy".to_string(), "Sad".to_string()].into()));
    }
}
