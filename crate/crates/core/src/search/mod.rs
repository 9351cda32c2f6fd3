//! Multidimensional document retrieval, event-diverse document selection and
//! event summaries.

mod diverse;
mod query;
mod summary;

pub use diverse::{coverage_matrix, covers, event_diverse, DiverseSelection, DiverseStep};
pub use query::Query;
pub use summary::{event_summary, Summary, SummarySentence};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotations::{entity_sim, geo_sim, time_sim, EntityCatalog, EntityId, DEFAULT_GEO_LAMBDA_KM};
use crate::corpus::{AnnotationUnit, Corpus, InvertedIndex, TermId, UnitRef};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error("empty query: give keywords or a time, geo or entity filter")]
    EmptyQuery,
    #[error("bad query: {0}")]
    BadQuery(String),
    #[error("unknown entity {0:?}")]
    UnknownEntity(String),
    #[error("budget must be at least 1")]
    InvalidBudget,
    #[error("invalid search parameters: {0}")]
    InvalidParams(String),
}

/// Mixture weights of the four components; absent components hand their
/// weight to the present ones in equal parts. Only ratios matter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Weights {
    pub text: f64,
    pub time: f64,
    pub geo: f64,
    pub entity: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            text: 0.25,
            time: 0.25,
            geo: 0.25,
            entity: 0.25,
        }
    }
}

impl Weights {
    fn effective(&self, present: [bool; 4]) -> [f64; 4] {
        let w = [self.text, self.time, self.geo, self.entity];
        let n = present.iter().filter(|p| **p).count() as f64;
        let absent: f64 = (0..4).filter(|&i| !present[i]).map(|i| w[i]).sum();
        let total: f64 = w.iter().sum();
        if total <= 0.0 {
            return std::array::from_fn(|i| if present[i] { 1.0 / n } else { 0.0 });
        }
        // normalized so totals stay in [0, 1]
        std::array::from_fn(|i| if present[i] { (w[i] + absent / n) / total } else { 0.0 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchParams {
    pub weights: Weights,
    pub n: usize,
    pub k1: f64,
    pub b: f64,
    pub geo_lambda_km: f64,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            weights: Weights::default(),
            n: 10,
            k1: 1.2,
            b: 0.75,
            geo_lambda_km: DEFAULT_GEO_LAMBDA_KM,
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<(), SearchError> {
        let w = self.weights;
        if [w.text, w.time, w.geo, w.entity].iter().any(|x| x.is_nan() || *x < 0.0) {
            return Err(SearchError::InvalidParams("weights must be non-negative".into()));
        }
        if self.n == 0 {
            return Err(SearchError::InvalidParams("n must be at least 1".into()));
        }
        if self.k1.is_nan()
            || self.k1 < 0.0
            || !(0.0..=1.0).contains(&self.b)
            || self.geo_lambda_km.is_nan()
            || self.geo_lambda_km <= 0.0
        {
            return Err(SearchError::InvalidParams(
                "k1 >= 0, b in [0,1], geo_lambda_km > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ComponentScores {
    pub text: f64,
    pub time: f64,
    pub geo: f64,
    pub entity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDoc {
    /// Index into the corpus' documents.
    pub doc: u32,
    pub doc_id: String,
    pub total: f64,
    pub components: ComponentScores,
}

/// Results sorted by total desc, then document id asc.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultSet {
    pub docs: Vec<ScoredDoc>,
}

impl ResultSet {
    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}

/// A query with keywords mapped to term ids and entities to catalog ids.
#[derive(Debug, Clone)]
pub struct ResolvedQuery<'q> {
    pub query: &'q Query,
    /// Non-stopword keyword terms present in the vocabulary, unless every
    /// keyword is a stopword.
    pub terms: Vec<TermId>,
    pub entities: Vec<EntityId>,
}

impl<'q> ResolvedQuery<'q> {
    pub fn new(query: &'q Query, corpus: &Corpus, catalog: &EntityCatalog) -> Result<Self, SearchError> {
        if query.is_empty() {
            return Err(SearchError::EmptyQuery);
        }
        let all_stop = query.keywords.iter().all(|k| crate::text::is_stopword(k));
        let mut terms: Vec<TermId> = query
            .keywords
            .iter()
            .filter(|k| all_stop || !crate::text::is_stopword(k))
            .filter_map(|k| corpus.vocabulary.id(k))
            .collect();
        terms.sort_unstable();
        terms.dedup();
        let mut entities = query
            .entities
            .iter()
            .map(|k| catalog.resolve(k).ok_or_else(|| SearchError::UnknownEntity(k.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        entities.sort_unstable();
        entities.dedup();
        Ok(ResolvedQuery { query, terms, entities })
    }

    fn present(&self) -> [bool; 4] {
        [
            !self.query.keywords.is_empty(),
            self.query.time.is_some(),
            self.query.geo.is_some(),
            !self.query.entities.is_empty(),
        ]
    }
}

fn idf(n_docs: f64, df: f64) -> f64 {
    (1.0 + (n_docs - df + 0.5) / (df + 0.5)).ln()
}

pub fn search(
    corpus: &Corpus,
    index: &InvertedIndex,
    catalog: &EntityCatalog,
    query: &Query,
    params: &SearchParams,
) -> Result<ResultSet, SearchError> {
    params.validate()?;
    let rq = ResolvedQuery::new(query, corpus, catalog)?;
    let weights = params.weights.effective(rq.present());
    let mut scores: BTreeMap<u32, ComponentScores> = BTreeMap::new();

    // text: BM25 over whole documents
    if !query.keywords.is_empty() {
        let n_docs = index.stats().num_docs as f64;
        let avgdl = index.avg_doc_length().max(1e-9);
        for &t in &rq.terms {
            let w = idf(n_docs, corpus.vocabulary.doc_freq(t) as f64);
            let mut per_doc: BTreeMap<u32, u32> = BTreeMap::new();
            for p in index.postings(t) {
                *per_doc.entry(p.doc).or_default() += p.tf;
            }
            for (doc, tf) in per_doc {
                let tf = tf as f64;
                let dl = index.doc_length(doc) as f64;
                let s = w * tf * (params.k1 + 1.0) / (tf + params.k1 * (1.0 - params.b + params.b * dl / avgdl));
                scores.entry(doc).or_default().text += s;
            }
        }
        let max = scores.values().map(|c| c.text).fold(0.0, f64::max);
        if max > 0.0 {
            scores.values_mut().for_each(|c| c.text /= max);
        }
    }

    if let Some(qt) = &query.time {
        for r in index.time_candidates(qt) {
            if let Some(t) = corpus.unit(r).time {
                let s = time_sim(qt, &t);
                if s > 0.0 {
                    let c = scores.entry(r.doc).or_default();
                    c.time = c.time.max(s);
                }
            }
        }
    }

    if let Some(qg) = &query.geo {
        for (_, units) in index.geo_cells() {
            for &r in units {
                if let Some(g) = &corpus.unit(r).geo {
                    let s = geo_sim(qg, g, params.geo_lambda_km);
                    if s > 0.0 {
                        let c = scores.entry(r.doc).or_default();
                        c.geo = c.geo.max(s);
                    }
                }
            }
        }
    }

    if !rq.entities.is_empty() {
        let docs: BTreeSet<u32> = rq
            .entities
            .iter()
            .flat_map(|&e| index.entity_units(e))
            .map(|r| r.doc)
            .collect();
        for doc in docs {
            let mut all: Vec<EntityId> = corpus.documents[doc as usize]
                .units
                .iter()
                .flat_map(|u| u.entities.iter().copied())
                .collect();
            all.sort_unstable();
            all.dedup();
            scores.entry(doc).or_default().entity = entity_sim(&rq.entities, &all);
        }
    }

    let mut docs: Vec<ScoredDoc> = scores
        .into_iter()
        .map(|(doc, c)| ScoredDoc {
            doc,
            doc_id: corpus.documents[doc as usize].id.clone(),
            total: weights[0] * c.text + weights[1] * c.time + weights[2] * c.geo + weights[3] * c.entity,
            components: c,
        })
        .filter(|d| d.total > 0.0)
        .collect();
    docs.sort_by(|a, b| b.total.total_cmp(&a.total).then_with(|| a.doc_id.cmp(&b.doc_id)));
    docs.truncate(params.n);
    Ok(ResultSet { docs })
}

/// Whether a unit matches every present query component: a keyword (if any),
/// an overlapping time, a shared entity, and a geo similarity of at least
/// `geo_threshold`.
pub fn unit_matches(unit: &AnnotationUnit, rq: &ResolvedQuery<'_>, lambda_km: f64, geo_threshold: f64) -> bool {
    let q = rq.query;
    if !q.keywords.is_empty() && !rq.terms.iter().any(|&t| unit.terms.contains(t)) {
        return false;
    }
    if let Some(qt) = &q.time {
        if !unit.time.is_some_and(|t| t.overlaps(qt)) {
            return false;
        }
    }
    if let Some(qg) = &q.geo {
        if !unit.geo.is_some_and(|g| geo_sim(qg, &g, lambda_km) >= geo_threshold) {
            return false;
        }
    }
    if !rq.entities.is_empty() && !crate::annotations::intersects(&unit.entities, &rq.entities) {
        return false;
    }
    true
}

/// Units of the retrieved documents that match the query.
pub fn relevant_units<'c>(
    corpus: &'c Corpus,
    catalog: &EntityCatalog,
    query: &Query,
    results: &ResultSet,
    params: &SearchParams,
) -> Result<Vec<(UnitRef, &'c AnnotationUnit)>, SearchError> {
    let rq = ResolvedQuery::new(query, corpus, catalog)?;
    let mut docs: Vec<u32> = results.docs.iter().map(|d| d.doc).collect();
    docs.sort_unstable();
    let mut out = Vec::new();
    for doc in docs {
        let units = &corpus.documents[doc as usize].units;
        for (i, unit) in units.iter().enumerate() {
            if unit_matches(unit, &rq, params.geo_lambda_km, 0.5) {
                out.push((UnitRef { doc, unit: i as u32 }, unit));
            }
        }
    }
    Ok(out)
}
