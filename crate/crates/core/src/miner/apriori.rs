//! Level-wise frequent itemset mining over entity-id transactions.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::annotations::EntityId;

/// A frequent itemset with the ids of the transactions that contain it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequentItemset {
    pub items: Vec<EntityId>,
    pub tids: Vec<u32>,
}

impl FrequentItemset {
    pub fn support(&self) -> usize {
        self.tids.len()
    }
}

fn intersect(a: &[u32], b: &[u32]) -> Vec<u32> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// All itemsets of size `1..=max_size` contained in at least `min_support`
/// transactions. Transactions must be sorted and deduplicated. Output is
/// ordered by size, then lexicographically.
pub fn frequent_itemsets(transactions: &[&[EntityId]], min_support: usize, max_size: usize) -> Vec<FrequentItemset> {
    let min_support = min_support.max(1);
    let mut singles: BTreeMap<EntityId, Vec<u32>> = BTreeMap::new();
    for (tid, t) in transactions.iter().enumerate() {
        for &e in t.iter() {
            singles.entry(e).or_default().push(tid as u32);
        }
    }
    let mut level: Vec<FrequentItemset> = singles
        .into_iter()
        .filter(|(_, tids)| tids.len() >= min_support)
        .map(|(e, tids)| FrequentItemset { items: vec![e], tids })
        .collect();

    let mut all = Vec::new();
    let mut size = 1;
    while !level.is_empty() {
        let next = if size < max_size {
            join_level(&level, min_support)
        } else {
            Vec::new()
        };
        #[cfg(debug_assertions)]
        check_anti_monotone(&level, &next);
        all.append(&mut level);
        level = next;
        size += 1;
    }
    all
}

// Candidates of size k+1 from pairs sharing a (k-1)-prefix, pruned when any
// k-subset is infrequent, then counted by tidlist intersection.
fn join_level(level: &[FrequentItemset], min_support: usize) -> Vec<FrequentItemset> {
    let known: HashSet<&[EntityId]> = level.iter().map(|f| f.items.as_slice()).collect();
    let k = level[0].items.len();
    let mut out = Vec::new();
    for (i, a) in level.iter().enumerate() {
        for b in &level[i + 1..] {
            if a.items[..k - 1] != b.items[..k - 1] {
                // level is sorted, so no later b shares the prefix
                break;
            }
            let mut items = a.items.clone();
            items.push(b.items[k - 1]);
            let all_subsets_frequent = (0..items.len()).all(|skip| {
                let sub: Vec<EntityId> = items
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != skip)
                    .map(|(_, &e)| e)
                    .collect();
                known.contains(sub.as_slice())
            });
            if !all_subsets_frequent {
                continue;
            }
            let tids = intersect(&a.tids, &b.tids);
            if tids.len() >= min_support {
                out.push(FrequentItemset { items, tids });
            }
        }
    }
    out
}

#[cfg(debug_assertions)]
fn check_anti_monotone(level: &[FrequentItemset], next: &[FrequentItemset]) {
    let support: HashMap<&[EntityId], usize> = level.iter().map(|f| (f.items.as_slice(), f.support())).collect();
    for f in next {
        for skip in 0..f.items.len() {
            let sub: Vec<EntityId> = f
                .items
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != skip)
                .map(|(_, &e)| e)
                .collect();
            let s = support.get(sub.as_slice()).copied();
            debug_assert!(
                s.is_some_and(|s| s >= f.support()),
                "anti-monotonicity violated: subset {sub:?} of {:?}",
                f.items
            );
        }
    }
}

/// Keeps the itemsets with no frequent proper superset in `itemsets`.
pub fn maximal(itemsets: Vec<FrequentItemset>) -> Vec<FrequentItemset> {
    let mut covered: HashSet<Vec<EntityId>> = HashSet::new();
    for f in &itemsets {
        if f.items.len() < 2 {
            continue;
        }
        for skip in 0..f.items.len() {
            let mut sub = f.items.clone();
            sub.remove(skip);
            covered.insert(sub);
        }
    }
    itemsets.into_iter().filter(|f| !covered.contains(&f.items)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> Vec<EntityId> {
        v.iter().copied().map(EntityId).collect()
    }

    #[test]
    fn textbook_example() {
        let raw = [
            ids(&[1, 2, 5]),
            ids(&[2, 4]),
            ids(&[2, 3]),
            ids(&[1, 2, 4]),
            ids(&[1, 3]),
            ids(&[2, 3]),
            ids(&[1, 3]),
            ids(&[1, 2, 3, 5]),
            ids(&[1, 2, 3]),
        ];
        let tx: Vec<&[EntityId]> = raw.iter().map(Vec::as_slice).collect();
        let f = frequent_itemsets(&tx, 2, 3);
        let got: Vec<(Vec<u32>, usize)> = f
            .iter()
            .map(|f| (f.items.iter().map(|e| e.0).collect(), f.support()))
            .collect();
        assert!(got.contains(&(vec![1, 2, 3], 2)));
        assert!(got.contains(&(vec![1, 2, 5], 2)));
        assert!(got.contains(&(vec![2, 4], 2)));
        assert_eq!(got.len(), 13);
        let m: Vec<Vec<u32>> = maximal(f)
            .into_iter()
            .map(|f| f.items.iter().map(|e| e.0).collect())
            .collect();
        assert_eq!(m, vec![vec![2, 4], vec![1, 2, 3], vec![1, 2, 5]]);
    }

    #[test]
    fn size_limit_respected() {
        let raw = [ids(&[1, 2, 3]), ids(&[1, 2, 3])];
        let tx: Vec<&[EntityId]> = raw.iter().map(Vec::as_slice).collect();
        let f = frequent_itemsets(&tx, 1, 2);
        assert!(f.iter().all(|f| f.items.len() <= 2));
        assert_eq!(maximal(f).len(), 3);
    }

    #[test]
    fn empty_input() {
        assert!(frequent_itemsets(&[], 1, 3).is_empty());
    }
}
