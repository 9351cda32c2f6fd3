use serde::{Deserialize, Serialize};

use super::{ResultSet, SearchError};
use crate::annotations::intersects;
use crate::corpus::Corpus;
use crate::miner::{Event, EventSet};

/// `cov(d, c)`: some unit of `d` shares an entity with `c`, and if `d` has
/// time annotations at all, one of them overlaps `c`'s interval.
pub fn covers(corpus: &Corpus, doc: u32, event: &Event) -> bool {
    let units = &corpus.documents[doc as usize].units;
    if !units.iter().any(|u| intersects(&u.entities, &event.entities)) {
        return false;
    }
    let mut times = units.iter().filter_map(|u| u.time).peekable();
    times.peek().is_none() || times.any(|t| t.overlaps(&event.time))
}

/// `matrix[i][j]` is `covers(docs[i], events[j])`.
pub fn coverage_matrix(corpus: &Corpus, docs: &[u32], events: &EventSet) -> Vec<Vec<bool>> {
    docs.iter()
        .map(|&d| events.iter().map(|e| covers(corpus, d, e)).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiverseStep {
    pub doc: u32,
    pub doc_id: String,
    /// Marginal objective gain when selected.
    pub gain: f64,
    /// The coverage part of `gain`.
    pub coverage_gain: f64,
    pub newly_covered: Vec<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiverseSelection {
    pub steps: Vec<DiverseStep>,
    pub covered: Vec<u32>,
    /// Score mass of events no selected document covers.
    pub residual_uncovered: f64,
}

impl DiverseSelection {
    pub fn doc_ids(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.doc_id.as_str()).collect()
    }
}

/// Greedy selection of at most `budget` documents maximizing covered event
/// score plus `gamma` times normalized relevance.
pub fn event_diverse(
    corpus: &Corpus,
    results: &ResultSet,
    events: &EventSet,
    budget: usize,
    gamma: f64,
) -> Result<DiverseSelection, SearchError> {
    if budget == 0 {
        return Err(SearchError::InvalidBudget);
    }
    if gamma.is_nan() || gamma < 0.0 {
        return Err(SearchError::InvalidParams("gamma must be non-negative".into()));
    }
    let max_rel = results.docs.iter().map(|d| d.total).fold(0.0, f64::max);
    let rel = |i: usize| {
        if max_rel > 0.0 {
            results.docs[i].total / max_rel
        } else {
            0.0
        }
    };

    if events.is_empty() {
        let steps = results
            .docs
            .iter()
            .take(budget)
            .enumerate()
            .map(|(i, d)| DiverseStep {
                doc: d.doc,
                doc_id: d.doc_id.clone(),
                gain: gamma * rel(i),
                coverage_gain: 0.0,
                newly_covered: Vec::new(),
            })
            .collect();
        return Ok(DiverseSelection {
            steps,
            ..DiverseSelection::default()
        });
    }

    let docs: Vec<u32> = results.docs.iter().map(|d| d.doc).collect();
    let cov = coverage_matrix(corpus, &docs, events);
    let mut covered = vec![false; events.len()];
    let mut taken = vec![false; docs.len()];
    let mut steps = Vec::new();

    while steps.len() < budget {
        let mut best: Option<(usize, f64, f64)> = None;
        for i in (0..docs.len()).filter(|&i| !taken[i]) {
            let cg: f64 = events
                .iter()
                .enumerate()
                .filter(|&(j, _)| !covered[j] && cov[i][j])
                .map(|(_, e)| e.score)
                .sum();
            let gain = cg + gamma * rel(i);
            let better = match best {
                None => true,
                Some((b, bg, _)) => gain
                    .total_cmp(&bg)
                    .then_with(|| results.docs[i].total.total_cmp(&results.docs[b].total))
                    .then_with(|| results.docs[b].doc_id.cmp(&results.docs[i].doc_id))
                    .is_gt(),
            };
            if better {
                best = Some((i, gain, cg));
            }
        }
        let Some((i, gain, coverage_gain)) = best else { break };
        if gain <= 0.0 {
            break;
        }
        taken[i] = true;
        let mut newly_covered = Vec::new();
        for (j, e) in events.iter().enumerate() {
            if !covered[j] && cov[i][j] {
                covered[j] = true;
                newly_covered.push(e.id);
            }
        }
        steps.push(DiverseStep {
            doc: docs[i],
            doc_id: results.docs[i].doc_id.clone(),
            gain,
            coverage_gain,
            newly_covered,
        });
    }

    let mut covered_ids: Vec<u32> = events
        .iter()
        .zip(&covered)
        .filter(|(_, c)| **c)
        .map(|(e, _)| e.id)
        .collect();
    covered_ids.sort_unstable();
    let residual_uncovered = events
        .iter()
        .zip(&covered)
        .filter(|(_, c)| !**c)
        .map(|(e, _)| e.score)
        .sum();
    Ok(DiverseSelection {
        steps,
        covered: covered_ids,
        residual_uncovered,
    })
}
