use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::emotion::{delta_e, DeviationUnit, EmotionLabel, EmotionTimeline};
use crate::interact::{delta_ig, InteractionGraph};
use crate::ParticipantId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Holds,
    Fails,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaVerdict {
    pub intervals: ((f64, f64), (f64, f64)),
    /// Everyone except the participant whose interactions changed most.
    pub least_delta_ig: Vec<ParticipantId>,
    pub max_delta_e: Option<ParticipantId>,
    pub verdict: Verdict,
}

/// Judges whether the participant whose emotions changed most stands apart
/// from those whose interactions changed least.
///
/// Participants are ranked by interaction change, ties by ID; all but the
/// last form the least-change group. The emotion argmax takes the smallest
/// ID among ties. The verdict holds when the argmax is outside the group.
pub fn delta_verdict(
    delta_ig: &BTreeMap<ParticipantId, f64>,
    delta_e: &BTreeMap<ParticipantId, f64>,
) -> (Vec<ParticipantId>, Option<ParticipantId>, Verdict) {
    let people: BTreeSet<&ParticipantId> = delta_ig.keys().chain(delta_e.keys()).collect();
    let mut ranked: Vec<(&ParticipantId, f64)> =
        people.iter().map(|&p| (p, delta_ig.get(p).copied().unwrap_or(0.0))).collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(b.0)));
    let least: Vec<ParticipantId> =
        ranked.iter().take(ranked.len().saturating_sub(1)).map(|(p, _)| (*p).clone()).collect();

    let mut best: Option<(&ParticipantId, f64)> = None;
    for &p in &people {
        let v = delta_e.get(p).copied().unwrap_or(0.0);
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((p, v));
        }
    }
    let max_e = best.map(|(p, _)| p.clone());
    let verdict = match &max_e {
        Some(p) if !least.contains(p) => Verdict::Holds,
        _ => Verdict::Fails,
    };
    (least, max_e, verdict)
}

/// Verdicts for each pair of consecutive intervals. `igs[k]` is the
/// interaction graph of `intervals[k]`.
pub fn check_delta_hypothesis(
    igs: &[InteractionGraph],
    timeline: &EmotionTimeline,
    fallback: EmotionLabel,
    unit: DeviationUnit,
    intervals: &[(f64, f64)],
) -> Vec<DeltaVerdict> {
    let n = igs.len().min(intervals.len());
    (1..n)
        .map(|k| {
            let dig = delta_ig(&igs[k - 1], &igs[k]).per_participant;
            let de: BTreeMap<ParticipantId, f64> = delta_e(timeline, fallback, unit, intervals[k - 1], intervals[k])
                .per_speaker
                .into_iter()
                .map(|(p, v)| (p, v as f64))
                .collect();
            let (least_delta_ig, max_delta_e, verdict) = delta_verdict(&dig, &de);
            DeltaVerdict { intervals: (intervals[k - 1], intervals[k]), least_delta_ig, max_delta_e, verdict }
        })
        .collect()
}

/// Pearson correlation; `None` when either series is constant or the
/// lengths differ.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn map(pairs: &[(&str, f64)]) -> BTreeMap<ParticipantId, f64> {
        pairs.iter().map(|&(p, v)| (p.to_string(), v)).collect()
    }

    #[test]
    fn holds_when_mover_is_outside() {
        let (least, max_e, v) =
            delta_verdict(&map(&[("P1", 1.0), ("P2", 9.0), ("P3", 2.0)]), &map(&[("P1", 0.0), ("P2", 3.0), ("P3", 1.0)]));
        assert_eq!(least, ["P1", "P3"]);
        assert_eq!(max_e.as_deref(), Some("P2"));
        assert_eq!(v, Verdict::Holds);
    }

    #[test]
    fn fails_when_mover_is_inside() {
        let (_, _, v) =
            delta_verdict(&map(&[("P1", 1.0), ("P2", 9.0), ("P3", 2.0)]), &map(&[("P1", 5.0), ("P2", 3.0), ("P3", 1.0)]));
        assert_eq!(v, Verdict::Fails);
    }

    #[test]
    fn equal_emotion_change_picks_smallest_id() {
        let (_, max_e, v) =
            delta_verdict(&map(&[("P1", 1.0), ("P2", 9.0)]), &map(&[("P1", 2.0), ("P2", 2.0)]));
        assert_eq!(max_e.as_deref(), Some("P1"));
        assert_eq!(v, Verdict::Fails);
    }

    #[test]
    fn correlation() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(pearson(&[1.0, 1.0], &[1.0, 2.0]), None);
    }

    proptest! {
        #[test]
        fn verdict_ignores_emotion_scale(
            ig in prop::collection::vec(0.0f64..10.0, 3),
            de in prop::collection::vec(0u32..10, 3),
            k in 1u32..50,
        ) {
            let names = ["P1", "P2", "P3"];
            let dig: BTreeMap<_, _> = names.iter().zip(&ig).map(|(n, v)| (n.to_string(), *v)).collect();
            let de1: BTreeMap<_, _> = names.iter().zip(&de).map(|(n, v)| (n.to_string(), *v as f64)).collect();
            let dek: BTreeMap<_, _> = de1.iter().map(|(n, v)| (n.clone(), v * k as f64)).collect();
            prop_assert_eq!(delta_verdict(&dig, &de1), delta_verdict(&dig, &dek));
        }
    }
}
