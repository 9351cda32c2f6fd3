use std::collections::{BTreeSet, HashMap};
use std::io::BufRead;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::{AnnotationUnit, Corpus, Document, TermBag, Vocabulary};
use crate::annotations::{parse_day, EntityCatalog, EntityId, GeoScope, TimeInterval};
use crate::text::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    #[default]
    Sentence,
    /// Records sharing `(doc_id, paragraph)` are merged into one unit.
    Paragraph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestConfig {
    pub corpus_id: String,
    pub granularity: Granularity,
    /// Use a geographic entity's catalog coordinates when a record has no geo annotation.
    pub geo_from_entities: bool,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            corpus_id: "default".into(),
            granularity: Granularity::Sentence,
            geo_from_entities: true,
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read annotated corpus stream: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestWarning {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestReport {
    pub records_read: usize,
    pub records_skipped: usize,
    pub documents: usize,
    pub units: usize,
    pub warnings: Vec<IngestWarning>,
}

impl IngestReport {
    fn warn(&mut self, line: usize, message: impl Into<String>) {
        self.warnings.push(IngestWarning {
            line,
            message: message.into(),
        });
    }
}

struct Record {
    line: usize,
    position: u32,
    paragraph: Option<u32>,
    text: String,
    tokens: Vec<String>,
    entities: Vec<EntityId>,
    geos: Vec<GeoScope>,
    times: Vec<TimeInterval>,
    publication_date: Option<NaiveDate>,
    corpus_id: Option<String>,
}

fn one_or_many(v: &Value) -> Vec<&Value> {
    match v {
        Value::Array(items) => items.iter().collect(),
        Value::Null => Vec::new(),
        other => vec![other],
    }
}

fn parse_time(v: &Value) -> Result<TimeInterval, String> {
    let field = |k: &str| {
        v.get(k)
            .and_then(Value::as_str)
            .ok_or_else(|| format!("time annotation missing {k:?}"))
    };
    TimeInterval::parse(field("begin")?, field("end")?).map_err(|e| e.to_string())
}

fn parse_record(
    line_no: usize,
    line: &str,
    catalog: &EntityCatalog,
    config: &IngestConfig,
    report: &mut IngestReport,
) -> Result<(String, Record), String> {
    let v: Value = serde_json::from_str(line).map_err(|e| format!("malformed record: {e}"))?;
    let doc_id = v
        .get("doc_id")
        .and_then(Value::as_str)
        .filter(|s| !s.is_empty())
        .ok_or("missing doc_id")?
        .to_string();
    let position = v
        .get("position")
        .and_then(Value::as_u64)
        .and_then(|p| u32::try_from(p).ok())
        .ok_or("missing or invalid position")?;
    let paragraph = v
        .get("paragraph")
        .and_then(Value::as_u64)
        .and_then(|p| u32::try_from(p).ok());
    let text = v.get("text").and_then(Value::as_str).ok_or("missing text")?.to_string();
    let tokens = tokenize(&text);
    if tokens.is_empty() {
        return Err("record has no terms".into());
    }

    let mut entities = BTreeSet::new();
    let mut ordered_entities = Vec::new();
    for e in v.get("entities").map(one_or_many).unwrap_or_default() {
        match e.as_str().and_then(|k| catalog.resolve(k)) {
            Some(id) => {
                if entities.insert(id) {
                    ordered_entities.push(id);
                }
            }
            None => report.warn(line_no, format!("unresolvable entity {e}; dropped")),
        }
    }

    let mut geos = Vec::new();
    for g in v.get("geo").map(one_or_many).unwrap_or_default() {
        match serde_json::from_value::<GeoScope>(g.clone()) {
            Ok(scope) => geos.push(scope),
            Err(e) => report.warn(line_no, format!("malformed geo {g}: {e}; dropped")),
        }
    }
    if geos.is_empty() && config.geo_from_entities {
        let from_entity = ordered_entities
            .iter()
            .find_map(|&id| catalog.get(id).and_then(|e| e.coords));
        if let Some((lat, lon)) = from_entity {
            geos.push(GeoScope::Point { lat, lon });
        }
    }

    let mut times = Vec::new();
    for t in v.get("time").map(one_or_many).unwrap_or_default() {
        match parse_time(t) {
            Ok(iv) => times.push(iv),
            Err(e) => report.warn(line_no, format!("malformed interval {t}: {e}; dropped")),
        }
    }

    let publication_date = match v.get("publication_date").and_then(Value::as_str) {
        Some(s) => match parse_day(s) {
            Ok(d) => Some(d),
            Err(e) => {
                report.warn(line_no, format!("{e}; publication date dropped"));
                None
            }
        },
        None => None,
    };

    Ok((
        doc_id,
        Record {
            line: line_no,
            position,
            paragraph,
            text,
            tokens,
            entities: entities.into_iter().collect(),
            geos,
            times,
            publication_date,
            corpus_id: v.get("corpus").and_then(Value::as_str).map(str::to_string),
        },
    ))
}

fn merge_paragraph(records: Vec<Record>) -> Record {
    let mut it = records.into_iter();
    let mut acc = it.next().expect("non-empty group");
    acc.position = acc.paragraph.unwrap_or(acc.position);
    for r in it {
        acc.text.push(' ');
        acc.text.push_str(&r.text);
        acc.tokens.extend(r.tokens);
        acc.entities.extend(r.entities);
        acc.geos.extend(r.geos);
        acc.times.extend(r.times);
        acc.publication_date = acc.publication_date.or(r.publication_date);
    }
    acc.entities.sort_unstable();
    acc.entities.dedup();
    acc
}

/// Loads newline-delimited annotated records into a corpus.
///
/// Invalid records are skipped and counted; an unresolvable entity or a
/// malformed geo/time annotation only drops that annotation.
pub fn ingest(
    source: impl BufRead,
    catalog: &EntityCatalog,
    config: &IngestConfig,
) -> Result<(Corpus, IngestReport), IngestError> {
    let mut report = IngestReport::default();
    let mut doc_order: Vec<String> = Vec::new();
    let mut by_doc: HashMap<String, Vec<Record>> = HashMap::new();

    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        report.records_read += 1;
        match parse_record(i + 1, trimmed, catalog, config, &mut report) {
            Ok((doc_id, rec)) => {
                by_doc
                    .entry(doc_id.clone())
                    .or_insert_with(|| {
                        doc_order.push(doc_id);
                        Vec::new()
                    })
                    .push(rec);
            }
            Err(msg) => {
                report.records_skipped += 1;
                report.warn(i + 1, msg);
            }
        }
    }

    let mut corpus = Corpus {
        id: config.corpus_id.clone(),
        documents: Vec::with_capacity(doc_order.len()),
        vocabulary: Vocabulary::default(),
    };

    for doc_id in doc_order {
        let mut records = by_doc.remove(&doc_id).expect("grouped");
        records.sort_by_key(|r| (r.paragraph.unwrap_or(r.position), r.position));
        let corpus_id = records
            .iter()
            .find_map(|r| r.corpus_id.clone())
            .unwrap_or_else(|| config.corpus_id.clone());
        let publication_date = records.iter().find_map(|r| r.publication_date);

        let merged: Vec<Record> = match config.granularity {
            Granularity::Sentence => {
                let mut out: Vec<Record> = Vec::with_capacity(records.len());
                for r in records {
                    if out.last().is_some_and(|p| p.position == r.position) {
                        report.records_skipped += 1;
                        report.warn(r.line, format!("duplicate position {} in {doc_id:?}", r.position));
                        continue;
                    }
                    out.push(r);
                }
                out
            }
            Granularity::Paragraph => {
                let mut groups: Vec<Vec<Record>> = Vec::new();
                for r in records {
                    let key = r.paragraph.unwrap_or(r.position);
                    match groups.last_mut() {
                        Some(g) if g[0].paragraph.unwrap_or(g[0].position) == key => g.push(r),
                        _ => groups.push(vec![r]),
                    }
                }
                groups.into_iter().map(merge_paragraph).collect()
            }
        };

        let mut units = Vec::new();
        let mut doc_terms = BTreeSet::new();
        for r in merged {
            let mut counts: HashMap<super::TermId, u32> = HashMap::new();
            for tok in &r.tokens {
                let id = corpus.vocabulary.intern(tok);
                *counts.entry(id).or_default() += 1;
                doc_terms.insert(id);
            }
            let mut bag: Vec<_> = counts.into_iter().collect();
            bag.sort_unstable();
            let terms = TermBag(bag);
            let spills = r.geos.len().max(r.times.len()).max(1);
            for k in 0..spills {
                units.push(AnnotationUnit {
                    position: r.position,
                    spill: k as u16,
                    text: r.text.clone(),
                    entities: r.entities.clone(),
                    geo: r.geos.get(k).copied(),
                    time: r.times.get(k).copied(),
                    terms: terms.clone(),
                    length: r.tokens.len() as u32,
                });
            }
        }
        for t in doc_terms {
            corpus.vocabulary.bump_doc_freq(t);
        }
        report.units += units.len();
        corpus.documents.push(Document {
            id: doc_id,
            corpus_id,
            publication_date,
            units,
        });
    }
    report.documents = corpus.documents.len();
    Ok((corpus, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CATALOG: &str = r#"{"id": "Usain_Bolt", "types": ["Athletes", "Person"]}
{"id": "China", "types": ["Country", "Location"], "lat": 35.0, "lon": 103.0}"#;

    fn catalog() -> EntityCatalog {
        EntityCatalog::from_reader(CATALOG.as_bytes()).unwrap()
    }

    fn run(input: &str, config: &IngestConfig) -> (Corpus, IngestReport) {
        ingest(input.as_bytes(), &catalog(), config).unwrap()
    }

    #[test]
    fn single_fig1_record() {
        let rec = r#"{"doc_id": "bbc", "position": 0, "text": "Beijing where Bolt announced himself to the world with two Olympic golds and two world records in 2008", "entities": ["Usain_Bolt"], "geo": {"lat": 39.55, "lon": 116.23}, "time": {"begin": "2008-01-01", "end": "2008-12-31"}}"#;
        let (c, report) = run(rec, &IngestConfig::default());
        assert_eq!(c.documents.len(), 1);
        assert_eq!(c.documents[0].units.len(), 1);
        let u = &c.documents[0].units[0];
        assert_eq!(u.entities, vec![catalog().resolve("Usain_Bolt").unwrap()]);
        assert_eq!(u.geo, Some(GeoScope::point(39.55, 116.23).unwrap()));
        assert_eq!(u.time, Some(TimeInterval::parse("2008-01-01", "2008-12-31").unwrap()));
        assert!(c.vocabulary.contains("bolt"));
        let the = c.vocabulary.id("the").unwrap();
        assert!(c.vocabulary.is_stopword(the));
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn empty_stream() {
        let (c, report) = run("", &IngestConfig::default());
        assert!(c.documents.is_empty());
        assert!(c.vocabulary.is_empty());
        assert_eq!(report.records_read, 0);
    }

    #[test]
    fn record_level_problems_are_counted() {
        let input = r#"{"doc_id": "a", "position": 0, "text": "Bolt ran", "entities": ["Usain_Bolt", "Nobody"]}
not json
{"doc_id": "a", "position": 1, "text": "  ... "}
{"doc_id": "a", "position": 2, "text": "late", "time": {"begin": "2009-01-01", "end": "2008-01-01"}}
{"doc_id": "a", "position": 3, "text": "far", "geo": {"lat": 120, "lon": 0}}
{"position": 4, "text": "orphan"}"#;
        let (c, report) = run(input, &IngestConfig::default());
        assert_eq!(report.records_read, 6);
        assert_eq!(report.records_skipped, 3);
        assert_eq!(c.documents[0].units.len(), 3);
        let units = &c.documents[0].units;
        assert_eq!(units[0].entities.len(), 1);
        assert!(units[1].time.is_none());
        assert!(units[2].geo.is_none());
        let msgs: Vec<_> = report.warnings.iter().map(|w| w.line).collect();
        assert_eq!(msgs, vec![1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn extra_annotations_spill_at_same_position() {
        let input = r#"{"doc_id": "a", "position": 7, "text": "two games", "time": [{"begin": "2008-08-08", "end": "2008-08-24"}, {"begin": "2012-07-27", "end": "2012-08-12"}], "geo": {"lat": 39.9, "lon": 116.4}}"#;
        let (c, _) = run(input, &IngestConfig::default());
        let units = &c.documents[0].units;
        assert_eq!(units.len(), 2);
        assert_eq!((units[0].position, units[0].spill), (7, 0));
        assert_eq!((units[1].position, units[1].spill), (7, 1));
        assert!(units[0].geo.is_some() && units[1].geo.is_none());
        assert_eq!(units[1].time.unwrap().begin().to_string(), "2012-07-27");
    }

    #[test]
    fn geographic_entity_supplies_missing_geo() {
        let input = r#"{"doc_id": "a", "position": 0, "text": "China hosted", "entities": ["China"]}"#;
        let (c, _) = run(input, &IngestConfig::default());
        assert_eq!(c.documents[0].units[0].geo, Some(GeoScope::point(35.0, 103.0).unwrap()));
        let off = IngestConfig {
            geo_from_entities: false,
            ..IngestConfig::default()
        };
        let (c, _) = run(input, &off);
        assert_eq!(c.documents[0].units[0].geo, None);
    }

    #[test]
    fn out_of_order_positions_sorted_and_duplicates_rejected() {
        let input = r#"{"doc_id": "a", "position": 2, "text": "second"}
{"doc_id": "b", "position": 0, "text": "other"}
{"doc_id": "a", "position": 1, "text": "first"}
{"doc_id": "a", "position": 1, "text": "again"}"#;
        let (c, report) = run(input, &IngestConfig::default());
        assert_eq!(
            c.documents.iter().map(|d| d.id.as_str()).collect::<Vec<_>>(),
            ["a", "b"]
        );
        let pos: Vec<_> = c.documents[0].units.iter().map(|u| u.position).collect();
        assert_eq!(pos, [1, 2]);
        assert_eq!(c.documents[0].units[0].text, "first");
        assert_eq!(report.records_skipped, 1);
    }

    #[test]
    fn paragraph_granularity_merges_sentences() {
        let input = r#"{"doc_id": "a", "position": 0, "paragraph": 0, "text": "Bolt won.", "entities": ["Usain_Bolt"]}
{"doc_id": "a", "position": 1, "paragraph": 0, "text": "China cheered.", "entities": ["China"], "time": {"begin": "2008-08-16", "end": "2008-08-16"}}
{"doc_id": "a", "position": 2, "paragraph": 1, "text": "Later."}"#;
        let cfg = IngestConfig {
            granularity: Granularity::Paragraph,
            ..IngestConfig::default()
        };
        let (c, _) = run(input, &cfg);
        let units = &c.documents[0].units;
        assert_eq!(units.len(), 2);
        assert_eq!(units[0].text, "Bolt won. China cheered.");
        assert_eq!(units[0].entities.len(), 2);
        assert_eq!(units[0].length, 4);
        assert!(units[0].time.is_some());
        assert_eq!(units[1].position, 1);
    }

    #[test]
    fn document_frequency_counts_documents() {
        let input = r#"{"doc_id": "a", "position": 0, "text": "gold gold"}
{"doc_id": "a", "position": 1, "text": "gold"}
{"doc_id": "b", "position": 0, "text": "gold silver"}"#;
        let (c, _) = run(input, &IngestConfig::default());
        let v = &c.vocabulary;
        assert_eq!(v.doc_freq(v.id("gold").unwrap()), 2);
        assert_eq!(v.doc_freq(v.id("silver").unwrap()), 1);
        assert_eq!(c.documents[0].units[0].terms.count(v.id("gold").unwrap()), 2);
        for (id, t) in v.iter() {
            assert_eq!(v.id(t), Some(id));
        }
    }
}
