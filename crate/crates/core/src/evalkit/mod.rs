//! Testbeds of fact tuples and the metrics that score mined events,
//! diversified rankings and summaries against them.

mod metrics;

pub use metrics::{alpha_dcg, alpha_ndcg, ideal_alpha_dcg, prf1, rouge_n, Prf1, EXACT_IDEAL_MAX_DOCS};

use std::collections::BTreeSet;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotations::{geo_sim, time_sim, EntityCatalog, GeoScope, TimeInterval, DEFAULT_GEO_LAMBDA_KM};
use crate::corpus::Corpus;
use crate::miner::EventSet;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("invalid evaluation parameters: {0}")]
    InvalidParams(String),
    #[error("no reference has at least {0} tokens")]
    NoReference(usize),
    #[error("testbed line {line}: {message}")]
    Testbed { line: usize, message: String },
}

/// A ground-truth event for a query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fact {
    pub id: String,
    /// Where the fact was curated from.
    #[serde(default)]
    pub source: String,
    /// Query keywords, as one string.
    pub q: String,
    /// Catalog keys.
    pub entities: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geo: Option<GeoScope>,
    pub time: TimeInterval,
    #[serde(default)]
    pub terms: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Testbed {
    pub name: String,
    pub facts: Vec<Fact>,
}

impl Testbed {
    /// Reads newline-delimited fact records; ids must be unique and every fact
    /// needs query keywords and at least one entity.
    pub fn from_reader(name: &str, reader: impl BufRead) -> Result<Self, EvalError> {
        let mut facts: Vec<Fact> = Vec::new();
        let mut ids = BTreeSet::new();
        for (i, line) in reader.lines().enumerate() {
            let err = |message: String| EvalError::Testbed { line: i + 1, message };
            let line = line.map_err(|e| err(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fact: Fact = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
            if crate::text::tokenize(&fact.q).is_empty() {
                return Err(err("fact has no query keywords".into()));
            }
            fact.entities.sort();
            fact.entities.dedup();
            if fact.entities.is_empty() {
                return Err(err("fact has no entities".into()));
            }
            if !ids.insert(fact.id.clone()) {
                return Err(err(format!("duplicate fact id {:?}", fact.id)));
            }
            facts.push(fact);
        }
        Ok(Testbed {
            name: name.to_string(),
            facts,
        })
    }

    /// Distinct queries in first-appearance order.
    pub fn queries(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        self.facts
            .iter()
            .map(|f| f.q.as_str())
            .filter(|q| seen.insert(*q))
            .collect()
    }

    pub fn facts_for<'a>(&'a self, q: &'a str) -> impl Iterator<Item = &'a Fact> + 'a {
        self.facts.iter().filter(move |f| f.q == q)
    }

    pub fn to_jsonl(&self) -> String {
        self.facts
            .iter()
            .map(|f| serde_json::to_string(f).expect("fact") + "\n")
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchCriterion {
    pub tau_entity: f64,
    pub require_time_overlap: bool,
    pub require_geo: bool,
    pub geo_threshold: f64,
    pub geo_lambda_km: f64,
}

impl Default for MatchCriterion {
    fn default() -> Self {
        Self {
            tau_entity: 0.5,
            require_time_overlap: true,
            require_geo: false,
            geo_threshold: 0.5,
            geo_lambda_km: DEFAULT_GEO_LAMBDA_KM,
        }
    }
}

impl MatchCriterion {
    pub fn validate(&self) -> Result<(), EvalError> {
        if !(self.tau_entity > 0.0 && self.tau_entity <= 1.0) {
            return Err(EvalError::InvalidParams("tau_entity must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub event_id: u32,
    pub fact_id: String,
    pub similarity: f64,
}

fn key_jaccard(a: &BTreeSet<&str>, b: &BTreeSet<&str>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Greedy one-to-one matching by descending similarity, where similarity is
/// the mean of entity Jaccard, time similarity and (when both sides have a
/// scope) geo similarity.
pub fn match_events(
    events: &EventSet,
    facts: &[&Fact],
    catalog: &EntityCatalog,
    criterion: &MatchCriterion,
) -> Result<Vec<MatchPair>, EvalError> {
    criterion.validate()?;
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, e) in events.iter().enumerate() {
        let ek: BTreeSet<&str> = e.entities.iter().map(|&id| catalog.key(id)).collect();
        for (j, f) in facts.iter().enumerate() {
            let fk: BTreeSet<&str> = f.entities.iter().map(String::as_str).collect();
            let ent = key_jaccard(&ek, &fk);
            if ent < criterion.tau_entity {
                continue;
            }
            if criterion.require_time_overlap && !e.time.overlaps(&f.time) {
                continue;
            }
            let geo = match (&e.scope, &f.geo) {
                (Some(a), Some(b)) => Some(geo_sim(a, b, criterion.geo_lambda_km)),
                _ => None,
            };
            if criterion.require_geo && !geo.is_some_and(|g| g >= criterion.geo_threshold) {
                continue;
            }
            let parts = [Some(ent), Some(time_sim(&e.time, &f.time)), geo];
            let present: Vec<f64> = parts.into_iter().flatten().collect();
            pairs.push((present.iter().sum::<f64>() / present.len() as f64, i, j));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let (mut used_e, mut used_f) = (vec![false; events.len()], vec![false; facts.len()]);
    let mut out = Vec::new();
    for (sim, i, j) in pairs {
        if used_e[i] || used_f[j] {
            continue;
        }
        used_e[i] = true;
        used_f[j] = true;
        out.push(MatchPair {
            event_id: events.events[i].id,
            fact_id: facts[j].id.clone(),
            similarity: sim,
        });
    }
    Ok(out)
}

/// `judgments[d][f]`: document `docs[d]` covers fact `f` by the same rule
/// event-diverse selection uses for events.
pub fn fact_judgments(corpus: &Corpus, docs: &[u32], facts: &[&Fact], catalog: &EntityCatalog) -> Vec<Vec<bool>> {
    docs.iter()
        .map(|&d| {
            let units = &corpus.documents[d as usize].units;
            facts
                .iter()
                .map(|f| {
                    let ids: BTreeSet<_> = f.entities.iter().filter_map(|k| catalog.resolve(k)).collect();
                    let shares = units.iter().any(|u| u.entities.iter().any(|e| ids.contains(e)));
                    let mut times = units.iter().filter_map(|u| u.time).peekable();
                    shares && (times.peek().is_none() || times.any(|t| t.overlaps(&f.time)))
                })
                .collect()
        })
        .collect()
}

/// One row of an evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub testbed: String,
    pub query: String,
    pub facts: usize,
    pub predicted: usize,
    pub matched: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub alpha_ndcg: f64,
    pub rouge1: f64,
    pub rouge2: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub alpha: f64,
    pub depth: usize,
    pub rows: Vec<EvalRow>,
}

impl EvalReport {
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<16} {:<24} {:>6} {:>6} {:>6} {:>10} {:>8} {:>8}\n",
            "testbed",
            "query",
            "P",
            "R",
            "F1",
            format!("aNDCG@{}", self.depth),
            "ROUGE-1",
            "ROUGE-2"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<16} {:<24} {:>6.3} {:>6.3} {:>6.3} {:>10.3} {:>8.3} {:>8.3}\n",
                r.testbed, r.query, r.precision, r.recall, r.f1, r.alpha_ndcg, r.rouge1, r.rouge2
            ));
        }
        out
    }
}
