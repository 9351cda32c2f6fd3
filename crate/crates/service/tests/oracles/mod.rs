//! Reference implementations used by the acceptance suite. Each recomputes a
//! result from raw annotations and plain data, without the library's
//! hierarchy, mining or cube code.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, Duration, NaiveDate};
use eventlens::annotations::{Dim, EntityId, EntityLevel, GeoLevel, GeoScope, Hierarchies, TimeLevel, GEO_UNKNOWN};
use eventlens::corpus::{AnnotationUnit, Corpus, UnitRef};
use eventlens::miner::EventSet;

pub type MinerKey = ((i32, String), Vec<EntityId>);

fn midpoint(begin: NaiveDate, end: NaiveDate) -> NaiveDate {
    begin + Duration::days((end - begin).num_days() / 2)
}

/// (year of the midpoint, country of the exactly matching gazetteer place).
fn unit_bucket(u: &AnnotationUnit, h: &Hierarchies) -> Option<(i32, String)> {
    let t = u.time?;
    if u.entities.is_empty() {
        return None;
    }
    let geo = match u.geo {
        Some(GeoScope::Point { lat, lon }) => h
            .gazetteer
            .places()
            .iter()
            .find(|p| p.lat == lat && p.lon == lon)
            .map(|p| p.country.clone())
            .unwrap_or_else(|| GEO_UNKNOWN.into()),
        _ => GEO_UNKNOWN.into(),
    };
    Some((midpoint(t.begin(), t.end()).year(), geo))
}

/// Every entity subset of every unit, counted per (year, country) bucket,
/// kept when frequent and not contained in another frequent set of the bucket.
pub fn miner_candidates(
    units: &[(UnitRef, &AnnotationUnit)],
    h: &Hierarchies,
    sigma: usize,
    max_size: usize,
) -> BTreeMap<MinerKey, Vec<UnitRef>> {
    let mut support: BTreeMap<MinerKey, Vec<UnitRef>> = BTreeMap::new();
    for &(r, u) in units {
        let Some(bucket) = unit_bucket(u, h) else { continue };
        let n = u.entities.len();
        for mask in 1u32..(1 << n) {
            if mask.count_ones() as usize > max_size {
                continue;
            }
            let set: Vec<EntityId> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| u.entities[i]).collect();
            support.entry((bucket.clone(), set)).or_default().push(r);
        }
    }
    support.retain(|_, v| v.len() >= sigma);
    let keys: Vec<MinerKey> = support.keys().cloned().collect();
    support.retain(|(b, s), _| {
        !keys
            .iter()
            .any(|(b2, s2)| b2 == b && s2.len() > s.len() && s.iter().all(|x| s2.contains(x)))
    });
    support
}

/// Member names of one (event, entity) incidence at every level, from the
/// raw gazetteer rows and catalog type paths.
pub struct FlatWorld<'a> {
    h: &'a Hierarchies,
}

impl<'a> FlatWorld<'a> {
    pub fn new(h: &'a Hierarchies) -> Self {
        Self { h }
    }

    pub fn time(&self, day: NaiveDate, level: TimeLevel) -> String {
        match level {
            TimeLevel::Day => format!("{:04}-{:02}-{:02}", day.year(), day.month(), day.day()),
            TimeLevel::Month => format!("{:04}-{:02}", day.year(), day.month()),
            TimeLevel::Year => format!("{:04}", day.year()),
            TimeLevel::Decade => format!("{}s", day.year() - day.year().rem_euclid(10)),
            TimeLevel::All => "ALL".into(),
        }
    }

    /// `place` is a gazetteer place name or the unknown bucket.
    pub fn geo(&self, place: &str, level: GeoLevel) -> String {
        if level == GeoLevel::All {
            return "ALL".into();
        }
        if place == GEO_UNKNOWN {
            return place.into();
        }
        let row = self
            .h
            .gazetteer
            .places()
            .iter()
            .find(|p| p.place == place)
            .expect("known place");
        match level {
            GeoLevel::Place => row.place.clone(),
            GeoLevel::Country => row.country.clone(),
            GeoLevel::Continent => row.continent.clone(),
            GeoLevel::All => unreachable!(),
        }
    }

    pub fn entity(&self, key: &str, level: EntityLevel) -> String {
        let row = self
            .h
            .catalog
            .entries()
            .iter()
            .find(|e| e.key == key)
            .expect("known entity");
        match level {
            EntityLevel::Entity => row.key.clone(),
            EntityLevel::Type => row.type_path[0].clone(),
            EntityLevel::Supertype => row.type_path[1].clone(),
            EntityLevel::All => "ALL".into(),
        }
    }

    /// Every member name of a dimension at a level, from the raw tables.
    pub fn members(&self, dim: Dim, level: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        match dim {
            Dim::Time => {}
            Dim::Geo => {
                let level: GeoLevel = level.parse().unwrap();
                for p in self.h.gazetteer.places() {
                    out.insert(self.geo(&p.place, level));
                }
                out.insert(self.geo(GEO_UNKNOWN, level));
            }
            Dim::Entity => {
                let level: EntityLevel = level.parse().unwrap();
                for e in self.h.catalog.entries() {
                    out.insert(self.entity(&e.key, level));
                }
            }
        }
        out
    }
}

/// Pipeline state as plain data: current levels plus the restrictions seen so far.
#[derive(Debug, Clone)]
pub struct FlatCube {
    pub time: TimeLevel,
    pub geo: GeoLevel,
    pub entity: EntityLevel,
    pub geo_leaf: GeoLevel,
    pub constraints: Vec<(Dim, String, BTreeSet<String>)>,
}

/// (count, score mass, contributing event ids) per (time, geo, entity) cell.
pub type FlatCells = BTreeMap<(String, String, String), (usize, f64, Vec<u32>)>;

impl FlatCube {
    pub fn level_name(&self, dim: Dim) -> String {
        match dim {
            Dim::Time => self.time.to_string(),
            Dim::Geo => self.geo.to_string(),
            Dim::Entity => self.entity.to_string(),
        }
    }

    fn member(w: &FlatWorld<'_>, day: NaiveDate, place: &str, key: &str, dim: Dim, level: &str) -> String {
        match dim {
            Dim::Time => w.time(day, level.parse().unwrap()),
            Dim::Geo => w.geo(place, level.parse().unwrap()),
            Dim::Entity => w.entity(key, level.parse().unwrap()),
        }
    }

    /// Filter every (event, entity) incidence by the restrictions, then
    /// group at the current levels and aggregate.
    pub fn cells(&self, events: &EventSet, w: &FlatWorld<'_>) -> FlatCells {
        let mut out: FlatCells = BTreeMap::new();
        let mut ordered: Vec<_> = events.iter().collect();
        ordered.sort_by_key(|e| e.id);
        for e in ordered {
            let day = midpoint(e.time.begin(), e.time.end());
            let place = e.geo.name.as_str();
            let mut entities = e.entities.clone();
            entities.sort();
            for id in entities {
                let key = w.h.catalog.key(id);
                let keep = self
                    .constraints
                    .iter()
                    .all(|(dim, level, members)| members.contains(&Self::member(w, day, place, key, *dim, level)));
                if !keep {
                    continue;
                }
                let cell = (
                    w.time(day, self.time),
                    w.geo(place, self.geo),
                    w.entity(key, self.entity),
                );
                let slot = out.entry(cell).or_insert((0, 0.0, Vec::new()));
                slot.0 += 1;
                slot.1 += e.score;
                if slot.2.last() != Some(&e.id) {
                    slot.2.push(e.id);
                }
            }
        }
        out
    }
}

/// cov(d, c): some unit of `d` shares an entity with `c`, and if `d` has
/// any time annotation, one of them overlaps `c`'s interval.
pub fn doc_covers(corpus: &Corpus, doc: u32, entities: &[EntityId], begin: NaiveDate, end: NaiveDate) -> bool {
    let units = &corpus.documents[doc as usize].units;
    let shares = units.iter().any(|u| u.entities.iter().any(|x| entities.contains(x)));
    let times: Vec<_> = units.iter().filter_map(|u| u.time).collect();
    shares && (times.is_empty() || times.iter().any(|t| t.begin() <= end && begin <= t.end()))
}

/// Best covered score mass over all document subsets of size at most `budget`.
pub fn best_coverage(cov: &[Vec<bool>], scores: &[f64], budget: usize) -> f64 {
    let n = cov.len();
    let mut best = 0.0f64;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize > budget {
            continue;
        }
        let mass: f64 = (0..scores.len())
            .filter(|&e| (0..n).any(|d| mask & (1 << d) != 0 && cov[d][e]))
            .map(|e| scores[e])
            .sum();
        best = best.max(mass);
    }
    best
}

/// Plain α-DCG@k from its definition.
pub fn alpha_dcg(ranking: &[usize], judgments: &[Vec<bool>], alpha: f64, k: usize) -> f64 {
    let mut total = 0.0;
    for (i, &d) in ranking.iter().enumerate().take(k) {
        let mut gain = 0.0;
        for (e, &rel) in judgments[d].iter().enumerate() {
            if rel {
                let earlier = ranking[..i].iter().filter(|&&p| judgments[p][e]).count();
                gain += (1.0 - alpha).powi(earlier as i32);
            }
        }
        total += gain / ((i + 2) as f64).log2();
    }
    total
}

fn permutations(items: &mut Vec<usize>, k: usize, out: &mut dyn FnMut(&[usize])) {
    if k == items.len() {
        out(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, out);
        items.swap(k, i);
    }
}

/// Ideal α-DCG@k by trying every ordering of every document.
pub fn ideal_alpha_dcg(judgments: &[Vec<bool>], alpha: f64, k: usize) -> f64 {
    let mut items: Vec<usize> = (0..judgments.len()).collect();
    let mut best = 0.0f64;
    permutations(&mut items, 0, &mut |p| {
        best = best.max(alpha_dcg(p, judgments, alpha, k))
    });
    best
}

pub fn alpha_ndcg(ranking: &[usize], judgments: &[Vec<bool>], alpha: f64, k: usize) -> f64 {
    let ideal = ideal_alpha_dcg(judgments, alpha, k);
    if ideal == 0.0 {
        0.0
    } else {
        alpha_dcg(ranking, judgments, alpha, k) / ideal
    }
}
