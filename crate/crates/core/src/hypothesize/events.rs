use super::similarity::set_scores;
use super::state::TeamState;
use crate::interact::InteractionGraph;

/// A window whose state differs significantly from the one before it, or
/// the first or last window of a recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub team: String,
    pub window: usize,
    /// End of the event's window.
    pub time_s: f64,
    pub state: TeamState,
}

/// The stretch between two consecutive events of one team.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSegment {
    pub team: String,
    pub start: Event,
    pub end: Event,
    /// Interactions over the windows the segment spans, when available.
    pub ig: Option<InteractionGraph>,
}

impl LinearSegment {
    /// Recording time covered, from the start window's beginning to the end
    /// window's end.
    pub fn span(&self) -> (f64, f64) {
        (self.start.state.interval.0, self.end.state.interval.1)
    }
}

/// Largest per-set distance (one minus similarity) between two states.
pub fn max_set_distance(a: &TeamState, b: &TeamState) -> f64 {
    set_scores(a, b).as_array().iter().map(|s| 1.0 - s).fold(0.0, f64::max)
}

/// Marks window `t + 1` as an event when any set moved by more than `tau`
/// since window `t`. The first and last windows are always events.
pub fn detect_events(team: &str, states: &[TeamState], tau: f64) -> Vec<Event> {
    let Some(last) = states.len().checked_sub(1) else {
        return Vec::new();
    };
    let mut windows = vec![0];
    for t in 0..last {
        if max_set_distance(&states[t], &states[t + 1]) > tau {
            windows.push(t + 1);
        }
    }
    if *windows.last().expect("non-empty") != last {
        windows.push(last);
    }
    windows
        .into_iter()
        .map(|w| Event { team: team.to_string(), window: w, time_s: states[w].interval.1, state: states[w].clone() })
        .collect()
}

/// Segments between consecutive events, without interaction data.
pub fn linear_segments(events: &[Event]) -> Vec<LinearSegment> {
    events
        .windows(2)
        .map(|w| LinearSegment { team: w[0].team.clone(), start: w[0].clone(), end: w[1].clone(), ig: None })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypothesize::ConceptNetwork;

    fn st(k: usize, names: &[&str]) -> TeamState {
        TeamState {
            interval: (k as f64 * 120.0, (k + 1) as f64 * 120.0),
            concepts: ConceptNetwork {
                concepts: names.iter().map(|n| (n.to_string(), 1)).collect(),
                arcs: Default::default(),
            },
            ..TeamState::default()
        }
    }

    #[test]
    fn identical_states_only_bound() {
        let states: Vec<TeamState> = (0..5).map(|k| st(k, &["a", "b"])).collect();
        let ev = detect_events("T", &states, 0.5);
        assert_eq!(ev.iter().map(|e| e.window).collect::<Vec<_>>(), [0, 4]);
        assert_eq!(ev[1].time_s, 600.0);
        assert_eq!(linear_segments(&ev).len(), 1);
    }

    #[test]
    fn disjoint_concepts_trigger() {
        let states = vec![st(0, &["a"]), st(1, &["b", "c", "d", "e"]), st(2, &["b", "c", "d", "e"])];
        let ev = detect_events("T", &states, 0.5);
        assert_eq!(ev.iter().map(|e| e.window).collect::<Vec<_>>(), [0, 1, 2]);
    }

    #[test]
    fn tau_one_keeps_boundaries() {
        let states = vec![st(0, &["a"]), st(1, &["b", "c", "d", "e"]), st(2, &[]), st(3, &["q"])];
        let ev = detect_events("T", &states, 1.0);
        assert_eq!(ev.iter().map(|e| e.window).collect::<Vec<_>>(), [0, 3]);
        assert!(detect_events("T", &[], 0.5).is_empty());
        assert_eq!(detect_events("T", &states[..1], 0.5).len(), 1);
    }
}
