//! Readers and canonical writers for the files produced by external model
//! providers.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::EmbeddingVector;
use crate::clauses::{AnnotatedSentence, AnnotatedToken, Category, Pos};
use crate::emotion::EmotionLabel;

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("line {line}, field `{field}`: {message}")]
    SchemaError { line: u64, field: String, message: String },
    #[error("line {line}: embedding has {got} components, expected {expected}")]
    DimensionMismatch { line: u64, expected: usize, got: usize },
    #[error("line {line}: unknown emotion label `{label}`")]
    UnknownLabel { line: u64, label: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ProviderError {
    fn schema(line: u64, field: &str, message: impl Into<String>) -> Self {
        ProviderError::SchemaError { line, field: field.to_string(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProviderKind {
    Embeddings,
    Emotions,
    Texts,
    Annotations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub start_s: f64,
    pub embedding: EmbeddingVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmotionRecord {
    pub utt_index: usize,
    pub second_index: usize,
    pub label: EmotionLabel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextRecord {
    pub utt_index: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProviderRecords {
    Embeddings(Vec<EmbeddingRecord>),
    Emotions(Vec<EmotionRecord>),
    Texts(Vec<TextRecord>),
    Annotations(Vec<AnnotatedSentence>),
}

impl ProviderRecords {
    pub fn kind(&self) -> ProviderKind {
        match self {
            ProviderRecords::Embeddings(_) => ProviderKind::Embeddings,
            ProviderRecords::Emotions(_) => ProviderKind::Emotions,
            ProviderRecords::Texts(_) => ProviderKind::Texts,
            ProviderRecords::Annotations(_) => ProviderKind::Annotations,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ProviderRecords::Embeddings(r) => r.len(),
            ProviderRecords::Emotions(r) => r.len(),
            ProviderRecords::Texts(r) => r.len(),
            ProviderRecords::Annotations(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Reads and validates a provider file of the given kind. Row order is kept.
pub fn read_provider_file(path: impl AsRef<Path>, kind: ProviderKind) -> Result<ProviderRecords, ProviderError> {
    let path = path.as_ref();
    Ok(match kind {
        ProviderKind::Embeddings => ProviderRecords::Embeddings(read_embeddings(path)?),
        ProviderKind::Emotions => ProviderRecords::Emotions(read_emotions(path)?),
        ProviderKind::Texts => ProviderRecords::Texts(read_texts(path, None)?),
        ProviderKind::Annotations => ProviderRecords::Annotations(read_annotations(path)?),
    })
}

pub fn write_provider_file(path: impl AsRef<Path>, records: &ProviderRecords) -> Result<(), ProviderError> {
    let path = path.as_ref();
    match records {
        ProviderRecords::Embeddings(r) => write_embeddings(path, r),
        ProviderRecords::Emotions(r) => write_emotions(path, r),
        ProviderRecords::Texts(r) => write_texts(path, r),
        ProviderRecords::Annotations(r) => write_annotations(path, r),
    }
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>, ProviderError> {
    Ok(csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(File::open(path)?))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>, ProviderError> {
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(File::create(path)?))
}

fn csv_err(e: csv::Error) -> ProviderError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => ProviderError::Io(io),
        other => ProviderError::schema(line, "record", format!("{other:?}")),
    }
}

fn io_err(e: csv::Error) -> ProviderError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => ProviderError::Io(io),
        other => ProviderError::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

fn expect_header(headers: &csv::StringRecord, expected: &[&str]) -> Result<(), ProviderError> {
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(ProviderError::schema(1, "header", format!("expected `{}`, got `{}`", expected.join(","), got.join(","))));
    }
    Ok(())
}

fn parse_field<V: std::str::FromStr>(record: &csv::StringRecord, idx: usize, field: &str) -> Result<V, ProviderError> {
    let line = record.position().map(|p| p.line()).unwrap_or(0);
    let raw = record.get(idx).ok_or_else(|| ProviderError::schema(line, field, "missing"))?;
    raw.trim().parse().map_err(|_| ProviderError::schema(line, field, format!("cannot parse `{raw}`")))
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<Vec<EmbeddingRecord>, ProviderError> {
    let mut reader = csv_reader(path.as_ref())?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    if headers.get(0) != Some("start_s") || headers.len() < 2 {
        return Err(ProviderError::schema(1, "header", "expected `start_s,e0,...`"));
    }
    let dim = headers.len() - 1;
    for (i, name) in headers.iter().skip(1).enumerate() {
        if name != format!("e{i}") {
            return Err(ProviderError::schema(1, "header", format!("column {} must be `e{i}`, got `{name}`", i + 1)));
        }
    }

    let mut out: Vec<EmbeddingRecord> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != dim + 1 {
            return Err(ProviderError::DimensionMismatch { line, expected: dim, got: record.len().saturating_sub(1) });
        }
        let start_s: f64 = parse_field(&record, 0, "start_s")?;
        if !start_s.is_finite() || start_s < 0.0 {
            return Err(ProviderError::schema(line, "start_s", "must be finite and >= 0"));
        }
        if let Some(prev) = out.last() {
            if start_s <= prev.start_s {
                return Err(ProviderError::schema(line, "start_s", "rows must be in ascending start_s order"));
            }
        }
        let mut components = Vec::with_capacity(dim);
        for d in 0..dim {
            let v: f64 = parse_field(&record, d + 1, &format!("e{d}"))?;
            if !v.is_finite() {
                return Err(ProviderError::schema(line, &format!("e{d}"), "not finite"));
            }
            components.push(v);
        }
        out.push(EmbeddingRecord { start_s, embedding: EmbeddingVector::new(components) });
    }
    Ok(out)
}

pub fn write_embeddings(path: impl AsRef<Path>, records: &[EmbeddingRecord]) -> Result<(), ProviderError> {
    let mut w = csv_writer(path.as_ref())?;
    let dim = records.first().map_or(0, |r| r.embedding.dim());
    let mut header = vec!["start_s".to_string()];
    header.extend((0..dim).map(|d| format!("e{d}")));
    w.write_record(&header).map_err(io_err)?;
    for r in records {
        let mut row = vec![r.start_s.to_string()];
        row.extend(r.embedding.components.iter().map(|c| c.to_string()));
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_emotions(path: impl AsRef<Path>) -> Result<Vec<EmotionRecord>, ProviderError> {
    let mut reader = csv_reader(path.as_ref())?;
    expect_header(reader.headers().map_err(csv_err)?, &["utt_index", "second_index", "label"])?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 3 {
            return Err(ProviderError::schema(line, "record", "expected 3 fields"));
        }
        let utt_index = parse_field(&record, 0, "utt_index")?;
        let second_index = parse_field(&record, 1, "second_index")?;
        let raw = record.get(2).unwrap_or_default().trim();
        let label = raw
            .parse::<EmotionLabel>()
            .map_err(|_| ProviderError::UnknownLabel { line, label: raw.to_string() })?;
        out.push(EmotionRecord { utt_index, second_index, label });
    }
    Ok(out)
}

pub fn write_emotions(path: impl AsRef<Path>, records: &[EmotionRecord]) -> Result<(), ProviderError> {
    let mut w = csv_writer(path.as_ref())?;
    w.write_record(["utt_index", "second_index", "label"]).map_err(io_err)?;
    for r in records {
        w.write_record([r.utt_index.to_string(), r.second_index.to_string(), r.label.to_string()])
            .map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a texts file. When `expected_rows` is given, the row count must
/// equal it (one row per utterance, blanks included).
pub fn read_texts(path: impl AsRef<Path>, expected_rows: Option<usize>) -> Result<Vec<TextRecord>, ProviderError> {
    let mut reader = csv_reader(path.as_ref())?;
    expect_header(reader.headers().map_err(csv_err)?, &["utt_index", "text"])?;
    let mut out = Vec::new();
    let mut last_line = 1;
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        last_line = record.position().map(|p| p.line()).unwrap_or(last_line);
        if record.len() != 2 {
            return Err(ProviderError::schema(last_line, "record", "expected 2 fields"));
        }
        let utt_index = parse_field(&record, 0, "utt_index")?;
        out.push(TextRecord { utt_index, text: record.get(1).unwrap_or_default().to_string() });
    }
    if let Some(expected) = expected_rows {
        if out.len() != expected {
            return Err(ProviderError::schema(
                last_line,
                "utt_index",
                format!("texts file has {} rows but there are {expected} utterances", out.len()),
            ));
        }
    }
    Ok(out)
}

pub fn write_texts(path: impl AsRef<Path>, records: &[TextRecord]) -> Result<(), ProviderError> {
    let mut w = csv_writer(path.as_ref())?;
    w.write_record(["utt_index", "text"]).map_err(io_err)?;
    for r in records {
        w.write_record([r.utt_index.to_string(), r.text.clone()]).map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct RawSentence {
    utt_index: Option<usize>,
    sentence: Option<String>,
    tokens: Option<Vec<RawToken>>,
}

#[derive(Deserialize)]
struct RawToken {
    word: Option<String>,
    pos: Option<String>,
    category: Option<String>,
}

#[derive(Serialize)]
struct CanonicalSentence<'a> {
    utt_index: usize,
    sentence: &'a str,
    tokens: Vec<CanonicalToken<'a>>,
}

#[derive(Serialize)]
struct CanonicalToken<'a> {
    word: &'a str,
    pos: &'static str,
    category: &'static str,
}

pub fn read_annotations(path: impl AsRef<Path>) -> Result<Vec<AnnotatedSentence>, ProviderError> {
    let reader = BufReader::new(File::open(path.as_ref())?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawSentence = serde_json::from_str(&line)
            .map_err(|e| ProviderError::schema(line_no, "json", e.to_string()))?;
        let utt_index = raw.utt_index.ok_or_else(|| ProviderError::schema(line_no, "utt_index", "missing"))?;
        let sentence = raw.sentence.ok_or_else(|| ProviderError::schema(line_no, "sentence", "missing"))?;
        let raw_tokens = raw.tokens.ok_or_else(|| ProviderError::schema(line_no, "tokens", "missing"))?;
        if raw_tokens.is_empty() {
            return Err(ProviderError::schema(line_no, "tokens", "sentence has no tokens"));
        }
        let mut tokens = Vec::with_capacity(raw_tokens.len());
        for (t, tok) in raw_tokens.into_iter().enumerate() {
            let field = |name: &str| format!("tokens[{t}].{name}");
            let word = tok.word.ok_or_else(|| ProviderError::schema(line_no, &field("word"), "missing"))?;
            let pos_raw = tok.pos.ok_or_else(|| ProviderError::schema(line_no, &field("pos"), "missing"))?;
            let pos: Pos = pos_raw
                .parse()
                .map_err(|_| ProviderError::schema(line_no, &field("pos"), format!("unknown tag `{pos_raw}`")))?;
            let cat_raw = tok.category.unwrap_or_else(|| "NONE".to_string());
            let category: Category = cat_raw
                .parse()
                .map_err(|_| ProviderError::schema(line_no, &field("category"), format!("unknown category `{cat_raw}`")))?;
            if category != Category::None && pos != Pos::Noun {
                return Err(ProviderError::schema(line_no, &field("category"), "only nouns carry a category"));
            }
            tokens.push(AnnotatedToken { word, pos, category });
        }
        out.push(AnnotatedSentence { utt_index, sentence, tokens });
    }
    Ok(out)
}

pub fn write_annotations(path: impl AsRef<Path>, sentences: &[AnnotatedSentence]) -> Result<(), ProviderError> {
    let mut w = BufWriter::new(File::create(path.as_ref())?);
    for s in sentences {
        let canonical = CanonicalSentence {
            utt_index: s.utt_index,
            sentence: &s.sentence,
            tokens: s
                .tokens
                .iter()
                .map(|t| CanonicalToken { word: &t.word, pos: t.pos.as_str(), category: t.category.as_str() })
                .collect(),
        };
        let line = serde_json::to_string(&canonical).map_err(std::io::Error::other)?;
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn reads_embeddings() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "e.csv", "start_s,e0,e1,e2,e3\n0,1,0,0,0\n0.1,0,1,0,0\n0.2,0.5,0.5,0,0\n");
        let recs = read_embeddings(&p).unwrap();
        assert_eq!(recs.len(), 3);
        assert!(recs.iter().all(|r| r.embedding.dim() == 4));
        assert_eq!(recs[2].start_s, 0.2);
    }

    #[test]
    fn ragged_embedding_row_is_dimension_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "e.csv", "start_s,e0,e1\n0,1,0\n0.1,1\n");
        assert!(matches!(read_embeddings(&p), Err(ProviderError::DimensionMismatch { line: 3, expected: 2, got: 1 })));
    }

    #[test]
    fn unsorted_embeddings_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "e.csv", "start_s,e0\n0.2,1\n0.1,1\n");
        assert!(matches!(read_embeddings(&p), Err(ProviderError::SchemaError { line: 3, .. })));
    }

    #[test]
    fn calm_is_not_an_emotion() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "m.csv", "utt_index,second_index,label\n0,0,Sad\n0,1,Calm\n");
        match read_emotions(&p) {
            Err(ProviderError::UnknownLabel { line, label }) => {
                assert_eq!(line, 3);
                assert_eq!(label, "Calm");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn texts_cardinality_checked() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "t.csv", "utt_index,text\n0,\"hello, there\"\n1,\n");
        let recs = read_texts(&p, Some(2)).unwrap();
        assert_eq!(recs[0].text, "hello, there");
        assert_eq!(recs[1].text, "");
        assert!(matches!(read_texts(&p, Some(3)), Err(ProviderError::SchemaError { .. })));
    }

    #[test]
    fn annotation_validation() {
        let dir = tempfile::tempdir().unwrap();
        let good = r#"{"utt_index":0,"sentence":"I got one","tokens":[{"word":"I","pos":"NOUN","category":"PERSON"},{"word":"got","pos":"VERB","category":"NONE"},{"word":"one","pos":"OTHER","category":"NONE"}]}"#;
        let p = write(&dir, "a.jsonl", &format!("{good}\n"));
        let a = read_annotations(&p).unwrap();
        assert_eq!(a[0].tokens[0].category, Category::Person);

        let bad_pos = good.replace("\"VERB\"", "\"VRB\"");
        let p = write(&dir, "b.jsonl", &format!("{bad_pos}\n"));
        match read_annotations(&p) {
            Err(ProviderError::SchemaError { line: 1, field, .. }) => assert_eq!(field, "tokens[1].pos"),
            other => panic!("unexpected {other:?}"),
        }

        let bad_cat = good.replace(r#""pos":"VERB","category":"NONE""#, r#""pos":"VERB","category":"DATE""#);
        let p = write(&dir, "c.jsonl", &format!("{bad_cat}\n"));
        assert!(matches!(read_annotations(&p), Err(ProviderError::SchemaError { .. })));
    }

    #[test]
    fn canonical_annotation_file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let body = "{\"utt_index\":3,\"sentence\":\"We met \\\"him\\\".\",\"tokens\":[{\"word\":\"We\",\"pos\":\"NOUN\",\"category\":\"PERSON\"},{\"word\":\"met\",\"pos\":\"VERB\",\"category\":\"NONE\"}]}\n";
        let p = write(&dir, "a.jsonl", body);
        let recs = read_provider_file(&p, ProviderKind::Annotations).unwrap();
        let q = dir.path().join("b.jsonl");
        write_provider_file(&q, &recs).unwrap();
        assert_eq!(std::fs::read_to_string(q).unwrap(), body);
    }

    proptest! {
        #[test]
        fn canonical_csv_files_round_trip(
            rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 3), 1..12),
            texts in prop::collection::vec("[a-zA-Z ,\"\n.]{0,20}", 1..8),
            labels in prop::collection::vec(0usize..7, 1..10),
        ) {
            let dir = tempfile::tempdir().unwrap();
            let emb = ProviderRecords::Embeddings(rows.iter().enumerate().map(|(i, r)| EmbeddingRecord {
                start_s: i as f64 / 10.0,
                embedding: EmbeddingVector::new(r.clone()),
            }).collect());
            let txt = ProviderRecords::Texts(texts.iter().enumerate().map(|(i, t)| TextRecord { utt_index: i, text: t.clone() }).collect());
            let emo = ProviderRecords::Emotions(labels.iter().enumerate().map(|(i, &l)| EmotionRecord {
                utt_index: i / 3, second_index: i % 3, label: EmotionLabel::ALL[l],
            }).collect());
            for recs in [emb, txt, emo] {
                let a = dir.path().join("a");
                let b = dir.path().join("b");
                write_provider_file(&a, &recs).unwrap();
                let back = read_provider_file(&a, recs.kind()).unwrap();
                prop_assert_eq!(&back, &recs);
                write_provider_file(&b, &back).unwrap();
                prop_assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
            }
        }
    }
}
