use std::collections::BTreeSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::annotations::{intersects, EntityId, TimeInterval};
use crate::corpus::{Corpus, TermId, UnitRef};
use crate::miner::{Event, EventSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarySentence {
    pub unit: UnitRef,
    pub doc_id: String,
    pub position: u32,
    pub text: String,
    pub words: u32,
    pub covers: Vec<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Timeline order: earliest covered event first, then document order.
    pub sentences: Vec<SummarySentence>,
    pub words: u32,
    pub covered: Vec<u32>,
    /// Covered score minus the redundancy penalty.
    pub objective: f64,
    pub warnings: Vec<String>,
}

/// One sentence with the annotations of all its spilled units.
struct Sentence {
    unit: UnitRef,
    words: u32,
    entities: Vec<EntityId>,
    times: Vec<TimeInterval>,
    terms: BTreeSet<TermId>,
}

impl Sentence {
    fn covers(&self, e: &Event) -> bool {
        intersects(&self.entities, &e.entities)
            && (self.times.is_empty() || self.times.iter().any(|t| t.overlaps(&e.time)))
    }
}

fn sentences(corpus: &Corpus, candidates: &[UnitRef]) -> Vec<Sentence> {
    let mut heads: BTreeSet<(u32, u32)> = BTreeSet::new();
    let mut out: Vec<Sentence> = Vec::new();
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    for r in sorted {
        let doc = &corpus.documents[r.doc as usize];
        let unit = &doc.units[r.unit as usize];
        if !heads.insert((r.doc, unit.position)) {
            continue;
        }
        let siblings: Vec<(usize, _)> = doc
            .units
            .iter()
            .enumerate()
            .filter(|(_, u)| u.position == unit.position)
            .collect();
        let head = siblings.iter().find(|(_, u)| u.spill == 0).unwrap_or(&siblings[0]);
        out.push(Sentence {
            unit: UnitRef {
                doc: r.doc,
                unit: head.0 as u32,
            },
            words: unit.length,
            entities: unit.entities.clone(),
            times: siblings.iter().filter_map(|(_, u)| u.time).collect(),
            terms: unit
                .terms
                .iter()
                .map(|(t, _)| t)
                .filter(|&t| !corpus.vocabulary.is_stopword(t))
                .collect(),
        });
    }
    out
}

fn jaccard(a: &BTreeSet<TermId>, b: &BTreeSet<TermId>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Greedy extractive summary within `word_budget` words.
///
/// Each step adds the fitting sentence with the largest gain in covered event
/// score minus `rho` times its term-set Jaccard overlap with the sentences
/// already chosen; ties prefer fewer words, then document order.
pub fn event_summary(
    corpus: &Corpus,
    candidates: &[UnitRef],
    events: &EventSet,
    word_budget: u32,
    rho: f64,
) -> Summary {
    let pool = sentences(corpus, candidates);
    let mut summary = Summary::default();
    if pool.is_empty() {
        summary.warnings.push("no candidate sentences".into());
        return summary;
    }
    if pool.iter().all(|s| s.words > word_budget) {
        summary
            .warnings
            .push(format!("word budget {word_budget} is below every candidate sentence"));
        return summary;
    }

    let cov: Vec<Vec<bool>> = pool
        .iter()
        .map(|s| events.iter().map(|e| s.covers(e)).collect())
        .collect();
    let mut covered = vec![false; events.len()];
    let mut chosen: Vec<usize> = Vec::new();
    let mut left = word_budget;
    loop {
        let mut best: Option<(usize, f64)> = None;
        for (i, s) in pool.iter().enumerate() {
            if chosen.contains(&i) || s.words > left {
                continue;
            }
            let coverage: f64 = events
                .iter()
                .enumerate()
                .filter(|&(j, _)| !covered[j] && cov[i][j])
                .map(|(_, e)| e.score)
                .sum();
            let penalty: f64 = chosen.iter().map(|&c| jaccard(&s.terms, &pool[c].terms)).sum();
            let gain = coverage - rho * penalty;
            let better = match best {
                None => true,
                Some((b, bg)) => gain.total_cmp(&bg).then_with(|| pool[b].words.cmp(&s.words)).is_gt(),
            };
            if better {
                best = Some((i, gain));
            }
        }
        let Some((i, gain)) = best else { break };
        if gain <= 0.0 {
            break;
        }
        summary.objective += gain;
        for (j, c) in covered.iter_mut().enumerate() {
            *c |= cov[i][j];
        }
        left -= pool[i].words;
        chosen.push(i);
    }

    let first_begin = |i: usize| -> NaiveDate {
        events
            .iter()
            .enumerate()
            .filter(|&(j, _)| cov[i][j])
            .map(|(_, e)| e.time.begin())
            .min()
            .unwrap_or(NaiveDate::MAX)
    };
    chosen.sort_by_key(|&i| (first_begin(i), pool[i].unit));
    for i in chosen {
        let s = &pool[i];
        let unit = corpus.unit(s.unit);
        summary.words += s.words;
        summary.sentences.push(SummarySentence {
            unit: s.unit,
            doc_id: corpus.documents[s.unit.doc as usize].id.clone(),
            position: unit.position,
            text: unit.text.clone(),
            words: s.words,
            covers: events
                .iter()
                .enumerate()
                .filter(|&(j, _)| cov[i][j])
                .map(|(_, e)| e.id)
                .collect(),
        });
    }
    summary.covered = events
        .iter()
        .zip(&covered)
        .filter(|(_, c)| **c)
        .map(|(e, _)| e.id)
        .collect();
    summary.covered.sort_unstable();
    summary
}
