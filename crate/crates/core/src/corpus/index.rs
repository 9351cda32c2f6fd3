use std::collections::BTreeMap;

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use super::{Corpus, TermId, UnitRef};
use crate::annotations::{EntityId, TimeInterval};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndexConfig {
    /// Side of the square lat/lon cells used for geo postings, in degrees.
    pub geo_cell_degrees: f64,
    /// Intervals spanning more calendar years than this go to a single
    /// "wide" list instead of one posting per year.
    pub max_interval_years: u32,
}

impl Default for IndexConfig {
    fn default() -> Self {
        Self {
            geo_cell_degrees: 5.0,
            max_interval_years: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc: u32,
    pub unit: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IndexStats {
    pub num_docs: u32,
    pub num_units: u64,
    pub total_tokens: u64,
    /// Token count per document (spilled units not double counted).
    pub doc_lengths: Vec<u32>,
    /// Corpus-wide occurrences per term id.
    pub collection_freq: Vec<u64>,
}

/// Term postings plus entity, time-bucket and geo-cell postings over units.
///
/// Postings lists are sorted by `(doc, unit)` because the build walks the
/// corpus in document order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvertedIndex {
    pub(crate) config: IndexConfig,
    pub(crate) postings: Vec<Vec<Posting>>,
    pub(crate) entity_postings: BTreeMap<EntityId, Vec<UnitRef>>,
    pub(crate) year_postings: BTreeMap<i32, Vec<UnitRef>>,
    pub(crate) wide_time: Vec<UnitRef>,
    pub(crate) geo_postings: BTreeMap<(i32, i32), Vec<UnitRef>>,
    pub(crate) stats: IndexStats,
}

fn push_dedup(list: &mut Vec<UnitRef>, r: UnitRef) {
    if list.last() != Some(&r) {
        list.push(r);
    }
}

/// Single pass over the corpus; cost is linear in the number of unit postings.
pub fn build_index(corpus: &Corpus, config: &IndexConfig) -> InvertedIndex {
    let mut postings: Vec<Vec<Posting>> = vec![Vec::new(); corpus.vocabulary.len()];
    let mut collection_freq = vec![0u64; corpus.vocabulary.len()];
    let mut entity_postings: BTreeMap<EntityId, Vec<UnitRef>> = BTreeMap::new();
    let mut year_postings: BTreeMap<i32, Vec<UnitRef>> = BTreeMap::new();
    let mut wide_time = Vec::new();
    let mut geo_postings: BTreeMap<(i32, i32), Vec<UnitRef>> = BTreeMap::new();
    let mut doc_lengths = Vec::with_capacity(corpus.documents.len());
    let mut total_tokens = 0u64;

    for (d, doc) in corpus.documents.iter().enumerate() {
        let mut doc_len = 0u32;
        for (u, unit) in doc.units.iter().enumerate() {
            let r = UnitRef {
                doc: d as u32,
                unit: u as u32,
            };
            // spilled copies share the original's text
            if unit.spill == 0 {
                doc_len += unit.length;
                for (t, tf) in unit.terms.iter() {
                    postings[t.0 as usize].push(Posting {
                        doc: r.doc,
                        unit: r.unit,
                        tf,
                    });
                    collection_freq[t.0 as usize] += tf as u64;
                }
                for &e in &unit.entities {
                    push_dedup(entity_postings.entry(e).or_default(), r);
                }
            }
            if let Some(t) = unit.time {
                let (y0, y1) = (t.begin().year(), t.end().year());
                if (y1 - y0) as u32 >= config.max_interval_years {
                    wide_time.push(r);
                } else {
                    for y in y0..=y1 {
                        year_postings.entry(y).or_default().push(r);
                    }
                }
            }
            if let Some(g) = unit.geo {
                let (lat, lon) = g.centroid();
                let cell = (
                    (lat / config.geo_cell_degrees).floor() as i32,
                    (lon / config.geo_cell_degrees).floor() as i32,
                );
                geo_postings.entry(cell).or_default().push(r);
            }
        }
        total_tokens += doc_len as u64;
        doc_lengths.push(doc_len);
    }

    InvertedIndex {
        config: config.clone(),
        postings,
        entity_postings,
        year_postings,
        wide_time,
        geo_postings,
        stats: IndexStats {
            num_docs: corpus.documents.len() as u32,
            num_units: corpus.num_units() as u64,
            total_tokens,
            doc_lengths,
            collection_freq,
        },
    }
}

impl InvertedIndex {
    pub fn config(&self) -> &IndexConfig {
        &self.config
    }

    pub fn stats(&self) -> &IndexStats {
        &self.stats
    }

    pub fn num_terms(&self) -> usize {
        self.postings.len()
    }

    pub fn num_postings(&self) -> usize {
        self.postings.iter().map(Vec::len).sum()
    }

    pub fn postings(&self, term: TermId) -> &[Posting] {
        self.postings.get(term.0 as usize).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn entity_units(&self, entity: EntityId) -> &[UnitRef] {
        self.entity_postings.get(&entity).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Units whose interval may overlap `t` (a superset; callers check overlap).
    pub fn time_candidates(&self, t: &TimeInterval) -> Vec<UnitRef> {
        let mut out: Vec<UnitRef> = self
            .year_postings
            .range(t.begin().year()..=t.end().year())
            .flat_map(|(_, v)| v.iter().copied())
            .chain(self.wide_time.iter().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Every unit carrying a geo annotation, grouped by cell.
    pub fn geo_cells(&self) -> impl Iterator<Item = ((i32, i32), &[UnitRef])> {
        self.geo_postings.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    pub fn doc_length(&self, doc: u32) -> u32 {
        self.stats.doc_lengths[doc as usize]
    }

    pub fn avg_doc_length(&self) -> f64 {
        if self.stats.num_docs == 0 {
            0.0
        } else {
            self.stats.total_tokens as f64 / self.stats.num_docs as f64
        }
    }

    pub fn collection_freq(&self, term: TermId) -> u64 {
        self.stats.collection_freq.get(term.0 as usize).copied().unwrap_or(0)
    }

    /// Checks the structural invariants; used by tests and after loading snapshots.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (t, list) in self.postings.iter().enumerate() {
            if !list.windows(2).all(|w| (w[0].doc, w[0].unit) < (w[1].doc, w[1].unit)) {
                return Err(format!("postings of term {t} not strictly sorted"));
            }
            let sum: u64 = list.iter().map(|p| p.tf as u64).sum();
            if sum != self.stats.collection_freq[t] {
                return Err(format!("term {t}: posting tf sum {sum} != collection frequency"));
            }
        }
        if self.stats.doc_lengths.len() != self.stats.num_docs as usize {
            return Err("document length table size mismatch".into());
        }
        Ok(())
    }
}
