//! Rule-based clause detection over POS / named-entity annotated sentences.
//!
//! Each sentence yields at most one word for Who, For Who, What, When and
//! Where, a descriptor per verb for How, and per-verb Why and Consequences
//! phrases built from the recorded words around each verb.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pos {
    Noun,
    Verb,
    Adj,
    Adv,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Category {
    Person,
    Organization,
    Misc,
    Date,
    Time,
    Duration,
    Set,
    Location,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown tag `{0}`")]
pub struct UnknownTag(pub String);

impl Pos {
    pub fn as_str(self) -> &'static str {
        match self {
            Pos::Noun => "NOUN",
            Pos::Verb => "VERB",
            Pos::Adj => "ADJ",
            Pos::Adv => "ADV",
            Pos::Other => "OTHER",
        }
    }
}

impl FromStr for Pos {
    type Err = UnknownTag;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "NOUN" => Pos::Noun,
            "VERB" => Pos::Verb,
            "ADJ" => Pos::Adj,
            "ADV" => Pos::Adv,
            "OTHER" => Pos::Other,
            _ => return Err(UnknownTag(s.to_string())),
        })
    }
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Person => "PERSON",
            Category::Organization => "ORGANIZATION",
            Category::Misc => "MISC",
            Category::Date => "DATE",
            Category::Time => "TIME",
            Category::Duration => "DURATION",
            Category::Set => "SET",
            Category::Location => "LOCATION",
            Category::None => "NONE",
        }
    }
}

impl FromStr for Category {
    type Err = UnknownTag;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "PERSON" => Category::Person,
            "ORGANIZATION" => Category::Organization,
            "MISC" => Category::Misc,
            "DATE" => Category::Date,
            "TIME" => Category::Time,
            "DURATION" => Category::Duration,
            "SET" => Category::Set,
            "LOCATION" => Category::Location,
            "NONE" => Category::None,
            _ => return Err(UnknownTag(s.to_string())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedToken {
    pub word: String,
    pub pos: Pos,
    pub category: Category,
}

impl AnnotatedToken {
    pub fn new(word: &str, pos: Pos, category: Category) -> Self {
        Self { word: word.to_string(), pos, category }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedSentence {
    pub utt_index: usize,
    pub sentence: String,
    pub tokens: Vec<AnnotatedToken>,
}

impl AnnotatedSentence {
    pub fn has_verb(&self) -> bool {
        self.tokens.iter().any(|t| t.pos == Pos::Verb)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClauseError {
    #[error("sentence `{0}` has no verb")]
    NoVerb(String),
}

/// Splits at `.`, `?` or `!` followed by whitespace or the end of text.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '?' | '!') {
            let at_break = chars.peek().is_none_or(|&(_, n)| n.is_whitespace());
            if at_break {
                let end = i + c.len_utf8();
                out.push(text[start..end].trim().to_string());
                start = end;
            }
        }
    }
    out.push(text[start..].trim().to_string());
    out.retain(|s| !s.is_empty());
    out
}

fn concat(a: &AnnotatedSentence, b: &AnnotatedSentence) -> AnnotatedSentence {
    AnnotatedSentence {
        utt_index: a.utt_index,
        sentence: format!("{} {}", a.sentence, b.sentence),
        tokens: a.tokens.iter().chain(&b.tokens).cloned().collect(),
    }
}

/// Folds verbless sentences of one utterance into a neighbor.
///
/// Verbless sentences are appended to the preceding sentence; those before
/// the first sentence with a verb are prepended to it instead. An utterance
/// without any verb yields nothing.
pub fn merge_verbless(sentences: &[AnnotatedSentence]) -> Vec<AnnotatedSentence> {
    let Some(first_verb) = sentences.iter().position(AnnotatedSentence::has_verb) else {
        return Vec::new();
    };
    let mut head = sentences[first_verb].clone();
    for lead in sentences[..first_verb].iter().rev() {
        head = concat(lead, &head);
    }
    let mut out = vec![head];
    for s in &sentences[first_verb + 1..] {
        if s.has_verb() {
            out.push(s.clone());
        } else {
            let last = out.last_mut().expect("at least one sentence");
            *last = concat(last, s);
        }
    }
    out
}

/// A clause word and its token position in the sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClauseWord {
    pub word: String,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HowEntry {
    pub descriptor: ClauseWord,
    pub verb: ClauseWord,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClauseSet {
    pub who: Option<ClauseWord>,
    pub for_who: Option<ClauseWord>,
    pub what: Option<ClauseWord>,
    pub when: Option<ClauseWord>,
    pub where_: Option<ClauseWord>,
    pub how: Vec<HowEntry>,
    pub why: Vec<String>,
    pub consequences: Vec<String>,
}

impl ClauseSet {
    /// Recorded nouns (Who through Where) in sentence order.
    pub fn recorded_nouns(&self) -> Vec<&ClauseWord> {
        let mut nouns: Vec<&ClauseWord> =
            [&self.who, &self.for_who, &self.what, &self.when, &self.where_].into_iter().flatten().collect();
        nouns.sort_by_key(|w| w.index);
        nouns.dedup_by_key(|w| w.index);
        nouns
    }
}

fn word_at(s: &AnnotatedSentence, index: usize) -> ClauseWord {
    ClauseWord { word: s.tokens[index].word.clone(), index }
}

fn verb_positions(s: &AnnotatedSentence) -> Vec<usize> {
    s.tokens.iter().enumerate().filter(|(_, t)| t.pos == Pos::Verb).map(|(i, _)| i).collect()
}

/// Fills Who, For Who, What, When, Where and How.
pub fn detect_clauses(s: &AnnotatedSentence) -> Result<ClauseSet, ClauseError> {
    let verbs = verb_positions(s);
    let Some(&first_verb) = verbs.first() else {
        return Err(ClauseError::NoVerb(s.sentence.clone()));
    };
    let nouns = || s.tokens.iter().enumerate().filter(|(_, t)| t.pos == Pos::Noun);
    let first_of = |cats: &[Category]| nouns().find(|(_, t)| cats.contains(&t.category)).map(|(i, _)| word_at(s, i));

    let mut set = ClauseSet {
        who: nouns()
            .find(|(i, t)| *i < first_verb && t.category == Category::Person)
            .map(|(i, _)| word_at(s, i)),
        for_who: nouns()
            .find(|(i, t)| *i > first_verb && t.category == Category::Person)
            .map(|(i, _)| word_at(s, i)),
        what: first_of(&[Category::Organization, Category::Misc]),
        when: first_of(&[Category::Date, Category::Time, Category::Duration, Category::Set]),
        where_: first_of(&[Category::Location]),
        ..ClauseSet::default()
    };

    for (k, &v) in verbs.iter().enumerate() {
        let next_verb = verbs.get(k + 1).copied().unwrap_or(s.tokens.len());
        if let Some(d) = (v + 1..next_verb).find(|&i| matches!(s.tokens[i].pos, Pos::Adj | Pos::Adv)) {
            set.how.push(HowEntry { descriptor: word_at(s, d), verb: word_at(s, v) });
        }
    }
    Ok(set)
}

fn blanks<'a>(set: &'a ClauseSet, verb: usize) -> (Option<&'a ClauseWord>, Option<&'a ClauseWord>) {
    let nouns = set.recorded_nouns();
    let before = nouns.iter().rev().find(|w| w.index < verb).copied();
    let after = nouns.iter().find(|w| w.index > verb).copied();
    (before, after)
}

/// One `Because [blank] [verb] [blank] [descriptor]` phrase per verb with
/// at least one filled blank. Empty slots are left out of the phrase.
pub fn build_why(s: &AnnotatedSentence, set: &ClauseSet) -> Vec<String> {
    verb_positions(s)
        .into_iter()
        .filter_map(|v| {
            let (before, after) = blanks(set, v);
            if before.is_none() && after.is_none() {
                return None;
            }
            let descriptor = set.how.iter().find(|h| h.verb.index == v).map(|h| h.descriptor.word.as_str());
            let parts = [Some("Because"), before.map(|w| w.word.as_str()), Some(s.tokens[v].word.as_str())]
                .into_iter()
                .chain([after.map(|w| w.word.as_str()), descriptor]);
            Some(parts.flatten().collect::<Vec<_>>().join(" "))
        })
        .collect()
}

/// One `verb noun` phrase per verb, using the recorded noun after the verb
/// or, failing that, the one before it.
pub fn build_consequences(s: &AnnotatedSentence, set: &ClauseSet) -> Vec<String> {
    verb_positions(s)
        .into_iter()
        .filter_map(|v| {
            let (before, after) = blanks(set, v);
            after.or(before).map(|n| format!("{} {}", s.tokens[v].word, n.word))
        })
        .collect()
}

/// Runs every rule on one sentence.
pub fn analyze_sentence(s: &AnnotatedSentence) -> Result<ClauseSet, ClauseError> {
    let mut set = detect_clauses(s)?;
    set.why = build_why(s, &set);
    set.consequences = build_consequences(s, &set);
    Ok(set)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentenceClauses {
    pub utt_index: usize,
    pub sentence: String,
    pub clauses: ClauseSet,
}

/// Groups sentences by utterance, merges verbless ones and analyzes the rest.
pub fn analyze_annotations(sentences: &[AnnotatedSentence]) -> Vec<SentenceClauses> {
    let mut by_utt: BTreeMap<usize, Vec<AnnotatedSentence>> = BTreeMap::new();
    for s in sentences {
        by_utt.entry(s.utt_index).or_default().push(s.clone());
    }
    by_utt
        .values()
        .flat_map(|group| merge_verbless(group))
        .map(|s| {
            let clauses = analyze_sentence(&s).expect("merged sentences contain a verb");
            SentenceClauses { utt_index: s.utt_index, sentence: s.sentence, clauses }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClauseType {
    Who,
    ForWho,
    What,
    When,
    Where,
    How,
    Why,
    Consequences,
}

impl ClauseType {
    pub const ALL: [ClauseType; 8] = [
        ClauseType::Who,
        ClauseType::ForWho,
        ClauseType::What,
        ClauseType::When,
        ClauseType::Where,
        ClauseType::How,
        ClauseType::Why,
        ClauseType::Consequences,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClauseType::Who => "who",
            ClauseType::ForWho => "for_who",
            ClauseType::What => "what",
            ClauseType::When => "when",
            ClauseType::Where => "where",
            ClauseType::How => "how",
            ClauseType::Why => "why",
            ClauseType::Consequences => "consequences",
        }
    }
}

impl fmt::Display for ClauseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Clause counts indexed like [`ClauseType::ALL`]. Single-word slots count
/// once per sentence; list slots count every entry.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClauseCounts(pub [usize; 8]);

impl ClauseCounts {
    pub fn get(&self, t: ClauseType) -> usize {
        self.0[t as usize]
    }

    /// Number of clause types seen at least once.
    pub fn distinct_types(&self) -> usize {
        self.0.iter().filter(|&&c| c > 0).count()
    }

    pub fn add(&mut self, set: &ClauseSet) {
        let single = [&set.who, &set.for_who, &set.what, &set.when, &set.where_];
        for (slot, w) in single.iter().enumerate() {
            self.0[slot] += usize::from(w.is_some());
        }
        self.0[ClauseType::How as usize] += set.how.len();
        self.0[ClauseType::Why as usize] += set.why.len();
        self.0[ClauseType::Consequences as usize] += set.consequences.len();
    }
}

pub fn clause_stats<'a>(sets: impl IntoIterator<Item = &'a ClauseSet>) -> ClauseCounts {
    let mut counts = ClauseCounts::default();
    for s in sets {
        counts.add(s);
    }
    counts
}

#[derive(Serialize)]
struct HowRecord<'a> {
    descriptor: &'a str,
    verb: &'a str,
}

#[derive(Serialize)]
struct ClauseRecord<'a> {
    utt_index: usize,
    sentence: &'a str,
    who: Option<&'a str>,
    for_who: Option<&'a str>,
    what: Option<&'a str>,
    when: Option<&'a str>,
    #[serde(rename = "where")]
    where_: Option<&'a str>,
    how: Vec<HowRecord<'a>>,
    why: &'a [String],
    consequences: &'a [String],
}

/// One JSON object per sentence.
pub fn clause_json_line(s: &SentenceClauses) -> String {
    fn w(o: &Option<ClauseWord>) -> Option<&str> {
        o.as_ref().map(|c| c.word.as_str())
    }
    let c = &s.clauses;
    let record = ClauseRecord {
        utt_index: s.utt_index,
        sentence: &s.sentence,
        who: w(&c.who),
        for_who: w(&c.for_who),
        what: w(&c.what),
        when: w(&c.when),
        where_: w(&c.where_),
        how: c.how.iter().map(|h| HowRecord { descriptor: &h.descriptor.word, verb: &h.verb.word }).collect(),
        why: &c.why,
        consequences: &c.consequences,
    };
    serde_json::to_string(&record).expect("clause record serializes")
}

#[derive(Deserialize)]
struct OwnedHow {
    descriptor: String,
    verb: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OwnedClauseRecord {
    utt_index: usize,
    sentence: String,
    who: Option<String>,
    for_who: Option<String>,
    what: Option<String>,
    when: Option<String>,
    #[serde(rename = "where")]
    where_: Option<String>,
    how: Vec<OwnedHow>,
    why: Vec<String>,
    consequences: Vec<String>,
}

/// Reads a clause file written by [`write_clauses`].
///
/// Token positions are not stored, so each word gets its position in the
/// sentence's whitespace tokens when found there, and 0 otherwise.
pub fn read_clauses(path: impl AsRef<Path>) -> std::io::Result<Vec<SentenceClauses>> {
    let body = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: OwnedClauseRecord = serde_json::from_str(line)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, format!("line {}: {e}", i + 1)))?;
        let tokens: Vec<&str> = r
            .sentence
            .split_whitespace()
            .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric() && c != '\''))
            .collect();
        let cw = |word: String| {
            let index = tokens.iter().position(|t| *t == word).unwrap_or(0);
            ClauseWord { word, index }
        };
        let clauses = ClauseSet {
            who: r.who.map(cw),
            for_who: r.for_who.map(cw),
            what: r.what.map(cw),
            when: r.when.map(cw),
            where_: r.where_.map(cw),
            how: r.how.into_iter().map(|h| HowEntry { descriptor: cw(h.descriptor), verb: cw(h.verb) }).collect(),
            why: r.why,
            consequences: r.consequences,
        };
        out.push(SentenceClauses { utt_index: r.utt_index, sentence: r.sentence, clauses });
    }
    Ok(out)
}

pub fn write_clauses(path: impl AsRef<Path>, sentences: &[SentenceClauses]) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for s in sentences {
        writeln!(w, "{}", clause_json_line(s))?;
    }
    w.flush()
}
