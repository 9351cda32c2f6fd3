use std::collections::HashMap;

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Prf1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when nothing was predicted but facts exist; precision is reported as 0.
    pub precision_undefined: bool,
}

/// Precision, recall and F1 from match counts. Nothing predicted and nothing
/// expected counts as perfect.
pub fn prf1(matches: usize, predicted: usize, facts: usize) -> Prf1 {
    if predicted == 0 && facts == 0 {
        return Prf1 {
            precision: 1.0,
            recall: 1.0,
            f1: 1.0,
            precision_undefined: false,
        };
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let (p, r) = (ratio(matches, predicted), ratio(matches, facts));
    Prf1 {
        precision: p,
        recall: r,
        // 2PR/(P+R) reduced to one division, so the result is correctly rounded.
        f1: if p + r == 0.0 {
            0.0
        } else {
            ratio(2 * matches, predicted + facts)
        },
        precision_undefined: predicted == 0,
    }
}

/// DCG@k of a ranking; `judgments[d][e]` says whether doc `d` covers event `e`.
pub fn alpha_dcg(ranking: &[usize], judgments: &[Vec<bool>], alpha: f64, k: usize) -> f64 {
    let events = judgments.first().map_or(0, Vec::len);
    let mut seen = vec![0i32; events];
    let mut dcg = 0.0;
    for (rank, &d) in ranking.iter().take(k).enumerate() {
        let mut gain = 0.0;
        for (e, &rel) in judgments[d].iter().enumerate() {
            if rel {
                gain += (1.0 - alpha).powi(seen[e]);
                seen[e] += 1;
            }
        }
        dcg += gain / (rank as f64 + 2.0).log2();
    }
    dcg
}

/// Largest pool for which the ideal ranking is found exactly.
pub const EXACT_IDEAL_MAX_DOCS: usize = 16;

/// Ideal DCG@k over every document in `judgments`.
///
/// Gains depend only on which documents precede a position, not their order,
/// so a DP over document subsets finds the optimum for pools up to
/// [`EXACT_IDEAL_MAX_DOCS`]; larger pools use the greedy ordering.
pub fn ideal_alpha_dcg(judgments: &[Vec<bool>], alpha: f64, k: usize) -> f64 {
    let n = judgments.len();
    let k = k.min(n);
    if n > EXACT_IDEAL_MAX_DOCS {
        return alpha_dcg(&greedy_ideal(judgments, alpha, k), judgments, alpha, k);
    }
    let events = judgments.first().map_or(0, Vec::len);
    let mut best = vec![f64::NEG_INFINITY; 1 << n];
    best[0] = 0.0;
    let mut answer: f64 = 0.0;
    for set in 0usize..(1 << n) {
        if best[set] == f64::NEG_INFINITY {
            continue;
        }
        let size = set.count_ones() as usize;
        answer = answer.max(best[set]);
        if size == k {
            continue;
        }
        let counts: Vec<i32> = (0..events)
            .map(|e| (0..n).filter(|&d| set & (1 << d) != 0 && judgments[d][e]).count() as i32)
            .collect();
        let discount = (size as f64 + 2.0).log2();
        for d in (0..n).filter(|&d| set & (1 << d) == 0) {
            let gain: f64 = (0..events)
                .filter(|&e| judgments[d][e])
                .map(|e| (1.0 - alpha).powi(counts[e]))
                .sum();
            let next = set | (1 << d);
            best[next] = best[next].max(best[set] + gain / discount);
        }
    }
    answer
}

fn greedy_ideal(judgments: &[Vec<bool>], alpha: f64, k: usize) -> Vec<usize> {
    let events = judgments.first().map_or(0, Vec::len);
    let mut seen = vec![0i32; events];
    let mut left: Vec<usize> = (0..judgments.len()).collect();
    let mut order = Vec::new();
    while order.len() < k && !left.is_empty() {
        let gain = |d: usize| -> f64 {
            (0..events)
                .filter(|&e| judgments[d][e])
                .map(|e| (1.0 - alpha).powi(seen[e]))
                .sum()
        };
        let (pos, _) = left
            .iter()
            .enumerate()
            .max_by(|a, b| gain(*a.1).total_cmp(&gain(*b.1)).then_with(|| b.1.cmp(a.1)))
            .expect("non-empty");
        let d = left.remove(pos);
        for (e, s) in seen.iter_mut().enumerate() {
            if judgments[d][e] {
                *s += 1;
            }
        }
        order.push(d);
    }
    order
}

/// α-nDCG@k of `ranking` (indices into `judgments`); 0 when no document is
/// relevant to anything.
pub fn alpha_ndcg(ranking: &[usize], judgments: &[Vec<bool>], alpha: f64, k: usize) -> Result<f64, EvalError> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(EvalError::InvalidParams(format!("alpha {alpha} outside [0, 1)")));
    }
    if let Some(&bad) = ranking.iter().find(|&&d| d >= judgments.len()) {
        return Err(EvalError::InvalidParams(format!("ranked doc {bad} has no judgments")));
    }
    let ideal = ideal_alpha_dcg(judgments, alpha, k);
    if ideal <= 0.0 {
        return Ok(0.0);
    }
    Ok((alpha_dcg(ranking, judgments, alpha, k) / ideal).min(1.0))
}

fn ngrams(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut out: HashMap<&[String], usize> = HashMap::new();
    for g in tokens.windows(n) {
        *out.entry(g).or_default() += 1;
    }
    out
}

/// ROUGE-N recall with clipped counts; the best score over references.
/// References with fewer than `n` tokens are skipped.
pub fn rouge_n(candidate: &str, references: &[&str], n: usize) -> Result<f64, EvalError> {
    if n == 0 {
        return Err(EvalError::InvalidParams("rouge n must be at least 1".into()));
    }
    let cand_tokens = crate::text::tokenize(candidate);
    let cand = ngrams(&cand_tokens, n);
    let mut best: Option<f64> = None;
    for r in references {
        let tokens = crate::text::tokenize(r);
        if tokens.len() < n {
            continue;
        }
        let grams = ngrams(&tokens, n);
        let total: usize = grams.values().sum();
        let hit: usize = grams
            .iter()
            .map(|(g, &c)| c.min(cand.get(g).copied().unwrap_or(0)))
            .sum();
        let score = hit as f64 / total as f64;
        best = Some(best.map_or(score, |b: f64| b.max(score)));
    }
    best.ok_or(EvalError::NoReference(n))
}
