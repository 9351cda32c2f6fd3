//! Event detection: ranked events mined from annotated units.
//!
//! Units with at least one entity and a time annotation are bucketed by
//! (time member, geo member). Within each bucket the maximal frequent entity
//! itemsets become candidate events, scored by their share of total support.

pub mod apriori;

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotations::{
    entity_sim, geo_sim, time_sim, AnnotationError, EntityCatalog, EntityId, Gazetteer, GeoLevel, GeoScope,
    TimeInterval, TimeLevel, TimeMember, DEFAULT_GEO_LAMBDA_KM, GEO_UNKNOWN,
};
use crate::corpus::{AnnotationUnit, UnitRef, Vocabulary};

#[derive(Debug, Error)]
pub enum MinerError {
    #[error("invalid miner parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
    #[error("event record line {line}: {message}")]
    Record { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinerParams {
    pub min_support: usize,
    pub max_events: usize,
    pub time_level: TimeLevel,
    pub geo_level: GeoLevel,
    pub context_terms: usize,
    pub max_itemset_size: usize,
    /// Geo annotations farther than this from every gazetteer place land in the unknown bucket.
    pub place_radius_km: f64,
}

impl Default for MinerParams {
    fn default() -> Self {
        Self {
            min_support: 2,
            max_events: 10,
            time_level: TimeLevel::Year,
            geo_level: GeoLevel::Country,
            context_terms: 5,
            max_itemset_size: 3,
            place_radius_km: 250.0,
        }
    }
}

impl MinerParams {
    pub fn validate(&self) -> Result<(), MinerError> {
        let bad = |m: &str| Err(MinerError::InvalidParams(m.to_string()));
        if self.min_support < 1 {
            return bad("min_support must be >= 1");
        }
        if self.max_events < 1 {
            return bad("max_events must be >= 1");
        }
        if self.context_terms < 1 {
            return bad("context_terms must be >= 1");
        }
        if self.max_itemset_size < 1 {
            return bad("max_itemset_size must be >= 1");
        }
        if self.place_radius_km.is_nan() || self.place_radius_km < 0.0 {
            return bad("place_radius_km must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Bucket {
    pub time: TimeMember,
    pub geo: String,
}

/// A maximal frequent entity itemset within one bucket.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub entities: Vec<EntityId>,
    pub bucket: Bucket,
    pub support: usize,
    pub supporting_units: Vec<UnitRef>,
}

/// Assigns the unnormalized probability mass of a candidate.
pub trait CandidateScorer {
    fn mass(&self, candidate: &Candidate) -> f64;
}

/// Mass proportional to support.
#[derive(Debug, Clone, Copy, Default)]
pub struct SupportScorer;

impl CandidateScorer for SupportScorer {
    fn mass(&self, candidate: &Candidate) -> f64 {
        candidate.support as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeoMember {
    pub level: GeoLevel,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub id: u32,
    pub entities: Vec<EntityId>,
    pub geo: GeoMember,
    /// Bounding scope of the supporting units' geo annotations.
    pub scope: Option<GeoScope>,
    pub time: TimeInterval,
    pub time_bucket: TimeMember,
    pub terms: Vec<String>,
    pub score: f64,
    pub support: usize,
    pub supporting_units: Vec<UnitRef>,
}

/// Events ordered by score desc, then earliest begin, then entity ids.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventSet {
    pub events: Vec<Event>,
}

impl EventSet {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn get(&self, id: u32) -> Option<&Event> {
        self.events.iter().find(|e| e.id == id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Event> {
        self.events.iter()
    }

    pub fn to_records(&self, catalog: &EntityCatalog) -> Vec<EventRecord> {
        self.events
            .iter()
            .map(|e| EventRecord::from_event(e, catalog))
            .collect()
    }

    pub fn to_jsonl(&self, catalog: &EntityCatalog) -> String {
        self.to_records(catalog)
            .iter()
            .map(|r| serde_json::to_string(r).expect("record") + "\n")
            .collect()
    }

    /// Reads records written by [`EventSet::to_jsonl`].
    pub fn from_jsonl(reader: impl BufRead, catalog: &EntityCatalog) -> Result<Self, MinerError> {
        let mut events = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let err = |message: String| MinerError::Record { line: i + 1, message };
            let line = line.map_err(|e| err(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: EventRecord = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
            events.push(rec.into_event(catalog).map_err(err)?);
        }
        Ok(EventSet { events })
    }
}

/// Portable line format of an event: entity catalog keys instead of ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub id: u32,
    pub entities: Vec<String>,
    pub geo: String,
    pub geo_level: GeoLevel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scope: Option<GeoScope>,
    pub time: TimeInterval,
    pub time_bucket: TimeMember,
    pub terms: Vec<String>,
    pub score: f64,
    pub support: usize,
}

impl EventRecord {
    pub fn from_event(e: &Event, catalog: &EntityCatalog) -> Self {
        EventRecord {
            id: e.id,
            entities: e.entities.iter().map(|&id| catalog.key(id).to_string()).collect(),
            geo: e.geo.name.clone(),
            geo_level: e.geo.level,
            scope: e.scope,
            time: e.time,
            time_bucket: e.time_bucket,
            terms: e.terms.clone(),
            score: e.score,
            support: e.support,
        }
    }

    fn into_event(self, catalog: &EntityCatalog) -> Result<Event, String> {
        let mut entities = self
            .entities
            .iter()
            .map(|k| catalog.resolve(k).ok_or_else(|| format!("unknown entity {k:?}")))
            .collect::<Result<Vec<_>, _>>()?;
        entities.sort_unstable();
        entities.dedup();
        if entities.is_empty() {
            return Err("event without entities".into());
        }
        if !(self.score > 0.0 && self.score <= 1.0) {
            return Err(format!("score {} outside (0, 1]", self.score));
        }
        Ok(Event {
            id: self.id,
            entities,
            geo: GeoMember {
                level: self.geo_level,
                name: self.geo,
            },
            scope: self.scope,
            time: self.time,
            time_bucket: self.time_bucket,
            terms: self.terms,
            score: self.score,
            support: self.support,
            supporting_units: Vec::new(),
        })
    }
}

fn geo_bucket(unit: &AnnotationUnit, gazetteer: &Gazetteer, params: &MinerParams) -> Result<String, AnnotationError> {
    let place = unit
        .geo
        .as_ref()
        .and_then(|g| gazetteer.resolve_place(g, params.place_radius_km));
    match place {
        Some(p) => gazetteer.roll(p, GeoLevel::Place, params.geo_level),
        None => gazetteer.roll(GEO_UNKNOWN, GeoLevel::Place, params.geo_level),
    }
}

/// Buckets the eligible units and mines maximal frequent itemsets per bucket.
///
/// Candidates are returned sorted by `(bucket, entities)`.
pub fn mine_candidates(
    units: &[(UnitRef, &AnnotationUnit)],
    gazetteer: &Gazetteer,
    params: &MinerParams,
) -> Result<Vec<Candidate>, MinerError> {
    params.validate()?;
    let mut buckets: BTreeMap<Bucket, Vec<(UnitRef, &AnnotationUnit)>> = BTreeMap::new();
    for &(r, unit) in units {
        let Some(t) = unit.time else { continue };
        if unit.entities.is_empty() {
            continue;
        }
        let bucket = Bucket {
            time: TimeMember::Day(t.midpoint()).roll(params.time_level)?,
            geo: geo_bucket(unit, gazetteer, params)?,
        };
        buckets.entry(bucket).or_default().push((r, unit));
    }

    let mut out = Vec::new();
    for (bucket, members) in buckets {
        let tx: Vec<&[EntityId]> = members.iter().map(|(_, u)| u.entities.as_slice()).collect();
        let frequent = apriori::frequent_itemsets(&tx, params.min_support, params.max_itemset_size);
        let mut found: Vec<Candidate> = apriori::maximal(frequent)
            .into_iter()
            .map(|f| Candidate {
                support: f.support(),
                supporting_units: f.tids.iter().map(|&t| members[t as usize].0).collect(),
                entities: f.items,
                bucket: bucket.clone(),
            })
            .collect();
        found.sort_by(|a, b| a.entities.cmp(&b.entities));
        out.extend(found);
    }
    Ok(out)
}

/// Context needed to turn candidates into events.
pub struct MiningContext<'a> {
    pub gazetteer: &'a Gazetteer,
    pub vocabulary: &'a Vocabulary,
}

fn event_time(bucket: &Bucket, intervals: &[TimeInterval]) -> TimeInterval {
    let mut inter = Some(intervals[0]);
    let mut hull = intervals[0];
    for t in &intervals[1..] {
        inter = inter.and_then(|i| i.intersection(t));
        hull = hull.hull(t);
    }
    inter.unwrap_or_else(|| match bucket.time.span() {
        // every interval's midpoint lies in the bucket, so this is non-empty
        Some(span) => hull.intersection(&span).unwrap_or(hull),
        None => hull,
    })
}

fn top_terms(units: &[&AnnotationUnit], vocab: &Vocabulary, m: usize) -> Vec<String> {
    let mut counts: HashMap<crate::corpus::TermId, u32> = HashMap::new();
    for u in units {
        for (t, c) in u.terms.iter() {
            if !vocab.is_stopword(t) {
                *counts.entry(t).or_default() += c;
            }
        }
    }
    let mut ranked: Vec<(&str, u32)> = counts.into_iter().map(|(t, c)| (vocab.term(t), c)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.into_iter().take(m).map(|(t, _)| t.to_string()).collect()
}

/// The total order on events: score desc, begin asc, entity ids asc, then the
/// remaining bucket fields so that distinct candidates never compare equal.
pub fn event_order(a: &Event, b: &Event) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.time.begin().cmp(&b.time.begin()))
        .then_with(|| a.entities.cmp(&b.entities))
        .then_with(|| a.time.end().cmp(&b.time.end()))
        .then_with(|| a.geo.name.cmp(&b.geo.name))
        .then_with(|| a.time_bucket.cmp(&b.time_bucket))
}

pub fn event_detect(
    units: &[(UnitRef, &AnnotationUnit)],
    ctx: &MiningContext<'_>,
    params: &MinerParams,
) -> Result<EventSet, MinerError> {
    event_detect_with(units, ctx, params, &SupportScorer)
}

/// Event detection with a custom mass function.
pub fn event_detect_with(
    units: &[(UnitRef, &AnnotationUnit)],
    ctx: &MiningContext<'_>,
    params: &MinerParams,
    scorer: &dyn CandidateScorer,
) -> Result<EventSet, MinerError> {
    let candidates = mine_candidates(units, ctx.gazetteer, params)?;
    let lookup: HashMap<UnitRef, &AnnotationUnit> = units.iter().copied().collect();

    let masses: Vec<f64> = candidates.iter().map(|c| scorer.mass(c)).collect();
    let total: f64 = masses.iter().sum();
    if candidates.is_empty() || total <= 0.0 {
        return Ok(EventSet::default());
    }

    let mut events: Vec<(Event, f64)> = candidates
        .into_iter()
        .zip(masses)
        .filter(|(_, m)| *m > 0.0)
        .map(|(c, mass)| {
            let supporting: Vec<&AnnotationUnit> = c.supporting_units.iter().map(|r| lookup[r]).collect();
            let intervals: Vec<TimeInterval> = supporting.iter().filter_map(|u| u.time).collect();
            let event = Event {
                id: 0,
                time: event_time(&c.bucket, &intervals),
                scope: GeoScope::bounding(supporting.iter().filter_map(|u| u.geo.as_ref())),
                terms: top_terms(&supporting, ctx.vocabulary, params.context_terms),
                geo: GeoMember {
                    level: params.geo_level,
                    name: c.bucket.geo.clone(),
                },
                time_bucket: c.bucket.time,
                entities: c.entities,
                score: mass / total,
                support: c.support,
                supporting_units: c.supporting_units,
            };
            (event, mass)
        })
        .collect();

    events.sort_by(|a, b| event_order(&a.0, &b.0));
    events.truncate(params.max_events);
    let kept: f64 = events.iter().map(|(_, m)| m).sum();
    let events = events
        .into_iter()
        .enumerate()
        .map(|(i, (mut e, mass))| {
            e.id = i as u32;
            e.score = mass / kept;
            e
        })
        .collect();
    Ok(EventSet { events })
}

/// Relative weights of the three annotation similarities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimWeights {
    pub entity: f64,
    pub time: f64,
    pub geo: f64,
    pub geo_lambda_km: f64,
}

impl Default for SimWeights {
    fn default() -> Self {
        Self {
            entity: 1.0 / 3.0,
            time: 1.0 / 3.0,
            geo: 1.0 / 3.0,
            geo_lambda_km: DEFAULT_GEO_LAMBDA_KM,
        }
    }
}

fn event_geo_sim(a: &Event, b: &Event, lambda_km: f64) -> f64 {
    match (&a.scope, &b.scope) {
        (Some(x), Some(y)) => geo_sim(x, y, lambda_km),
        (None, None) if a.geo == b.geo => 1.0,
        _ => 0.0,
    }
}

/// Weighted mean of entity, time and geo similarity.
pub fn event_sim(a: &Event, b: &Event, weights: &SimWeights) -> f64 {
    let total = weights.entity + weights.time + weights.geo;
    if total <= 0.0 {
        return 0.0;
    }
    let mut s = 0.0;
    if weights.entity > 0.0 {
        s += weights.entity * entity_sim(&a.entities, &b.entities);
    }
    if weights.time > 0.0 {
        s += weights.time * time_sim(&a.time, &b.time);
    }
    if weights.geo > 0.0 {
        s += weights.geo * event_geo_sim(a, b, weights.geo_lambda_km);
    }
    s / total
}
