//! Corpus data model, ingestion of pre-annotated records, and the inverted index.

mod index;
mod ingest;
pub(crate) mod persist;

pub use index::{build_index, IndexConfig, IndexStats, InvertedIndex, Posting};
pub use ingest::{ingest, Granularity, IngestConfig, IngestError, IngestReport, IngestWarning};
pub use persist::{load_index, save_index, IndexManifest, SnapshotError, INDEX_FORMAT_VERSION};

use std::collections::HashMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::annotations::{EntityId, GeoScope, TimeInterval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TermId(pub u32);

/// Address of a unit: document ordinal in the corpus, unit ordinal in the document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UnitRef {
    pub doc: u32,
    pub unit: u32,
}

/// Term counts of one unit, sorted by term id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermBag(pub Vec<(TermId, u32)>);

impl TermBag {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (TermId, u32)> + '_ {
        self.0.iter().copied()
    }

    pub fn count(&self, term: TermId) -> u32 {
        self.0
            .binary_search_by_key(&term, |&(t, _)| t)
            .map(|i| self.0[i].1)
            .unwrap_or(0)
    }

    pub fn contains(&self, term: TermId) -> bool {
        self.count(term) > 0
    }
}

/// One sentence or paragraph with its annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationUnit {
    pub position: u32,
    /// 0 for the unit itself; 1.. for the extra geo/time annotations spilled
    /// into logical units sharing the position.
    pub spill: u16,
    pub text: String,
    /// Sorted, deduplicated.
    pub entities: Vec<EntityId>,
    pub geo: Option<GeoScope>,
    pub time: Option<TimeInterval>,
    pub terms: TermBag,
    /// Token count of `text`.
    pub length: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub corpus_id: String,
    pub publication_date: Option<NaiveDate>,
    /// Ordered by `(position, spill)`, strictly increasing.
    pub units: Vec<AnnotationUnit>,
}

impl Document {
    pub fn length(&self) -> u64 {
        self.units
            .iter()
            .filter(|u| u.spill == 0)
            .map(|u| u.length as u64)
            .sum()
    }
}

/// Term ↔ id bijection with document frequencies and stopword flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyData", into = "VocabularyData")]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_freq: Vec<u32>,
    stopword: Vec<bool>,
    ids: HashMap<String, TermId>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyData {
    terms: Vec<String>,
    doc_freq: Vec<u32>,
    stopword: Vec<bool>,
}

impl From<VocabularyData> for Vocabulary {
    fn from(d: VocabularyData) -> Self {
        let ids = d
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), TermId(i as u32)))
            .collect();
        Vocabulary {
            terms: d.terms,
            doc_freq: d.doc_freq,
            stopword: d.stopword,
            ids,
        }
    }
}

impl From<Vocabulary> for VocabularyData {
    fn from(v: Vocabulary) -> Self {
        VocabularyData {
            terms: v.terms,
            doc_freq: v.doc_freq,
            stopword: v.stopword,
        }
    }
}

impl Vocabulary {
    pub(crate) fn intern(&mut self, term: &str) -> TermId {
        if let Some(&id) = self.ids.get(term) {
            return id;
        }
        let id = TermId(self.terms.len() as u32);
        self.terms.push(term.to_string());
        self.doc_freq.push(0);
        self.stopword.push(crate::text::is_stopword(term));
        self.ids.insert(term.to_string(), id);
        id
    }

    pub(crate) fn bump_doc_freq(&mut self, id: TermId) {
        self.doc_freq[id.0 as usize] += 1;
    }

    pub fn id(&self, term: &str) -> Option<TermId> {
        self.ids.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &str {
        &self.terms[id.0 as usize]
    }

    pub fn doc_freq(&self, id: TermId) -> u32 {
        self.doc_freq[id.0 as usize]
    }

    pub fn is_stopword(&self, id: TermId) -> bool {
        self.stopword[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.ids.contains_key(term)
    }

    pub fn iter(&self) -> impl Iterator<Item = (TermId, &str)> {
        self.terms
            .iter()
            .enumerate()
            .map(|(i, t)| (TermId(i as u32), t.as_str()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub id: String,
    pub documents: Vec<Document>,
    pub vocabulary: Vocabulary,
}

impl Corpus {
    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn num_units(&self) -> usize {
        self.documents.iter().map(|d| d.units.len()).sum()
    }

    pub fn unit(&self, r: UnitRef) -> &AnnotationUnit {
        &self.documents[r.doc as usize].units[r.unit as usize]
    }

    pub fn document(&self, r: UnitRef) -> &Document {
        &self.documents[r.doc as usize]
    }

    pub fn document_index(&self, id: &str) -> Option<usize> {
        self.documents.iter().position(|d| d.id == id)
    }

    /// Every unit in document order.
    pub fn units(&self) -> impl Iterator<Item = (UnitRef, &AnnotationUnit)> {
        self.documents.iter().enumerate().flat_map(|(d, doc)| {
            doc.units.iter().enumerate().map(move |(u, unit)| {
                (
                    UnitRef {
                        doc: d as u32,
                        unit: u as u32,
                    },
                    unit,
                )
            })
        })
    }

    pub fn doc_units(&self, doc: usize) -> impl Iterator<Item = (UnitRef, &AnnotationUnit)> {
        self.documents[doc].units.iter().enumerate().map(move |(u, unit)| {
            (
                UnitRef {
                    doc: doc as u32,
                    unit: u as u32,
                },
                unit,
            )
        })
    }
}

/// Several corpora analysed together; ids must be distinct.
#[derive(Debug, Clone, Default)]
pub struct CorpusSet {
    pub corpora: Vec<Corpus>,
}

impl CorpusSet {
    pub fn get(&self, id: &str) -> Option<&Corpus> {
        self.corpora.iter().find(|c| c.id == id)
    }

    pub fn num_documents(&self) -> usize {
        self.corpora.iter().map(|c| c.documents.len()).sum()
    }

    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.corpora.iter().flat_map(|c| c.documents.iter())
    }
}
