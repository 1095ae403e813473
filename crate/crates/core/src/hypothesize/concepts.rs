use std::collections::{BTreeMap, BTreeSet};

use crate::clauses::{ClauseSet, ClauseWord};

/// Arcs below this relatedness are not kept.
pub const MIN_RELATEDNESS: f64 = 0.5;

/// Source of semantic relatedness between two concepts, in `[0, 1]`.
/// Returning `None` defers to same-sentence co-occurrence.
pub trait Relatedness: Sync {
    fn relatedness(&self, a: &str, b: &str) -> Option<f64>;
}

/// Uses co-occurrence for every pair.
#[derive(Debug, Clone, Copy, Default)]
pub struct CoOccurrence;

impl Relatedness for CoOccurrence {
    fn relatedness(&self, _a: &str, _b: &str) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConceptNetwork {
    /// Lemma to number of mentions.
    pub concepts: BTreeMap<String, usize>,
    /// Undirected arcs keyed with the smaller lemma first.
    pub arcs: BTreeMap<(String, String), f64>,
}

impl ConceptNetwork {
    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn concept_set(&self) -> BTreeSet<&str> {
        self.concepts.keys().map(String::as_str).collect()
    }
}

/// Lowercases, strips surrounding punctuation and a regular plural ending.
pub fn lemmatize(word: &str) -> String {
    let w = word.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase();
    let n = w.chars().count();
    if n > 4 && w.ends_with("ies") {
        format!("{}y", &w[..w.len() - 3])
    } else if w.ends_with("ss") || w.ends_with("us") || w.ends_with("is") {
        w
    } else if n > 3 && w.ends_with('s') {
        w[..w.len() - 1].to_string()
    } else {
        w
    }
}

/// Concepts of one sentence: lemmas of its recorded What, When and Where
/// words. Who and For Who name people and are not concepts.
pub fn sentence_concepts(set: &ClauseSet) -> Vec<String> {
    let mut out: Vec<String> = [&set.what, &set.when, &set.where_]
        .into_iter()
        .flatten()
        .map(|w: &ClauseWord| lemmatize(&w.word))
        .filter(|l| !l.is_empty())
        .collect();
    out.dedup();
    out
}

/// Builds a network from per-sentence concept lists.
///
/// Pairs the provider does not score are related by how often they share a
/// sentence, relative to the most frequent pair.
pub fn build_concept_network(sentences: &[Vec<String>], provider: &dyn Relatedness) -> ConceptNetwork {
    let mut concepts: BTreeMap<String, usize> = BTreeMap::new();
    let mut cooc: BTreeMap<(String, String), usize> = BTreeMap::new();
    for s in sentences {
        for c in s {
            *concepts.entry(c.clone()).or_default() += 1;
        }
        let distinct: BTreeSet<&String> = s.iter().collect();
        let distinct: Vec<&String> = distinct.into_iter().collect();
        for (i, a) in distinct.iter().enumerate() {
            for b in &distinct[i + 1..] {
                *cooc.entry(((*a).clone(), (*b).clone())).or_default() += 1;
            }
        }
    }
    let max_cooc = cooc.values().copied().max().unwrap_or(0);
    let names: Vec<&String> = concepts.keys().collect();
    let mut arcs = BTreeMap::new();
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            let key = ((*a).clone(), (*b).clone());
            let score = provider.relatedness(a, b).unwrap_or_else(|| {
                let c = cooc.get(&key).copied().unwrap_or(0);
                if max_cooc == 0 {
                    0.0
                } else {
                    c as f64 / max_cooc as f64
                }
            });
            if score >= MIN_RELATEDNESS && score > 0.0 {
                arcs.insert(key, score.min(1.0));
            }
        }
    }
    ConceptNetwork { concepts, arcs }
}

/// Breadth: number of distinct concepts.
pub fn breadth(n: &ConceptNetwork) -> usize {
    n.concepts.len()
}

/// Depth: mean mentions per concept plus mean arc degree.
pub fn depth(n: &ConceptNetwork) -> f64 {
    if n.concepts.is_empty() {
        return 0.0;
    }
    let k = n.concepts.len() as f64;
    let mentions: usize = n.concepts.values().sum();
    mentions as f64 / k + 2.0 * n.arcs.len() as f64 / k
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    struct Fixed;

    impl Relatedness for Fixed {
        fn relatedness(&self, a: &str, b: &str) -> Option<f64> {
            (a == "cat" && b == "dog").then_some(0.9)
        }
    }

    #[test]
    fn empty_window() {
        let n = build_concept_network(&[], &CoOccurrence);
        assert!(n.is_empty());
        assert_eq!((breadth(&n), depth(&n)), (0, 0.0));
    }

    #[test]
    fn co_occurring_pair() {
        let n = build_concept_network(&[s(&["budget", "plan"])], &CoOccurrence);
        assert_eq!(breadth(&n), 2);
        assert_eq!(n.arcs.len(), 1);
        assert_eq!(depth(&n), 2.0);
    }

    #[test]
    fn depth_counts_mentions() {
        let n = build_concept_network(&[s(&["a1"]), s(&["b1"]), s(&["c1"])], &CoOccurrence);
        assert_eq!(depth(&n), 1.0);
        let n = build_concept_network(&[s(&["x1"]), s(&["x1"]), s(&["x1"])], &CoOccurrence);
        assert_eq!(depth(&n), 3.0);
    }

    #[test]
    fn weak_co_occurrence_dropped() {
        let sentences = [s(&["a1", "b1"]), s(&["a1", "b1"]), s(&["a1", "b1"]), s(&["c1", "d1"])];
        let n = build_concept_network(&sentences, &CoOccurrence);
        assert_eq!(n.arcs.keys().collect::<Vec<_>>(), [&("a1".to_string(), "b1".to_string())]);
    }

    #[test]
    fn provider_overrides() {
        let n = build_concept_network(&[s(&["cat"]), s(&["dog"])], &Fixed);
        assert_eq!(n.arcs[&("cat".to_string(), "dog".to_string())], 0.9);
    }

    #[test]
    fn lemmas() {
        assert_eq!(lemmatize("Companies,"), "company");
        assert_eq!(lemmatize("courses"), "course");
        assert_eq!(lemmatize("business"), "business");
        assert_eq!(lemmatize("DEA"), "dea");
        assert_eq!(lemmatize("bus"), "bus");
    }
}
