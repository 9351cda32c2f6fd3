//! Seeded synthetic corpora for tests, benchmarks and the acceptance suite.
//!
//! Everything is emitted as annotated-corpus NDJSON and goes through
//! [`crate::corpus::ingest`], so generated data exercises the real input path.

use std::fmt::Write as _;

use chrono::{Datelike, Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::annotations::{
    EntityCatalog, EntityEntry, EntityId, Gazetteer, GazetteerPlace, GeoLevel, Hierarchies, TimeInterval, TimeMember,
    GEO_UNKNOWN,
};
use crate::corpus::{ingest, Corpus, IngestConfig};
use crate::miner::{Event, EventSet, GeoMember};

/// Places spread far enough apart that a 250 km resolution radius never
/// confuses two of them.
const PLACES: &[(&str, &str, &str, f64, f64)] = &[
    ("Alder", "Avalon", "Northland", 60.0, 10.0),
    ("Birch", "Avalon", "Northland", 55.0, 20.0),
    ("Cedar", "Borealia", "Northland", 50.0, -100.0),
    ("Dogwood", "Borealia", "Northland", 45.0, -90.0),
    ("Elm", "Cascadia", "Southland", -30.0, 140.0),
    ("Fir", "Cascadia", "Southland", -25.0, 150.0),
    ("Ginkgo", "Dunmore", "Southland", -10.0, -60.0),
    ("Hazel", "Dunmore", "Southland", -15.0, -45.0),
];

const WORDS: usize = 400;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A synthetic world: `n` entities named `E0..` plus a fixed gazetteer.
pub fn world(n_entities: usize) -> Hierarchies {
    let types = ["Athlete", "Team", "Venue", "Sport"];
    let supers = ["Person", "Organization", "Location", "Activity"];
    let entries = (0..n_entities).map(|i| EntityEntry {
        key: entity_key(i),
        name: format!("Entity {i}"),
        type_path: vec![types[i % 4].into(), supers[i % 4].into(), "ALL".into()],
        coords: None,
    });
    let places = PLACES.iter().map(|&(p, c, k, lat, lon)| GazetteerPlace {
        place: p.into(),
        country: c.into(),
        continent: k.into(),
        lat,
        lon,
    });
    Hierarchies::new(
        EntityCatalog::from_entries(entries).expect("valid synthetic catalog"),
        Gazetteer::from_places(places).expect("valid synthetic gazetteer"),
    )
}

pub fn entity_key(i: usize) -> String {
    format!("E{i}")
}

pub fn place_names() -> impl Iterator<Item = &'static str> {
    PLACES.iter().map(|p| p.0)
}

pub fn country_of(place: &str) -> &'static str {
    PLACES
        .iter()
        .find(|p| p.0 == place)
        .map(|p| p.1)
        .expect("synthetic place")
}

/// One annotated record before serialization.
#[derive(Debug, Clone)]
pub struct SynthUnit {
    pub doc: String,
    pub entities: Vec<usize>,
    pub place: Option<&'static str>,
    pub time: Option<(NaiveDate, NaiveDate)>,
    pub words: Vec<String>,
}

fn random_words(rng: &mut impl Rng, n: usize) -> Vec<String> {
    (0..n).map(|_| format!("w{}", rng.gen_range(0..WORDS))).collect()
}

fn random_place(rng: &mut impl Rng) -> &'static str {
    PLACES.choose(rng).expect("non-empty").0
}

fn day(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
}

/// Random interval of 1..=40 days starting in `years`.
fn random_interval(rng: &mut impl Rng, years: std::ops::RangeInclusive<i32>) -> (NaiveDate, NaiveDate) {
    let begin = day(rng.gen_range(years), rng.gen_range(1..=12), rng.gen_range(1..=28));
    (begin, begin + Duration::days(rng.gen_range(0..40)))
}

/// Serializes units to NDJSON; positions count up within each document.
pub fn to_ndjson(units: &[SynthUnit]) -> String {
    let mut out = String::new();
    let mut positions: std::collections::HashMap<&str, u32> = Default::default();
    for u in units {
        let pos = positions.entry(u.doc.as_str()).or_default();
        let mut rec = json!({
            "doc_id": u.doc,
            "position": *pos,
            "text": u.words.join(" "),
            "entities": u.entities.iter().map(|&e| entity_key(e)).collect::<Vec<_>>(),
        });
        if let Some(p) = u.place {
            let (_, _, _, lat, lon) = *PLACES.iter().find(|x| x.0 == p).expect("synthetic place");
            rec["geo"] = json!({ "lat": lat, "lon": lon });
        }
        if let Some((b, e)) = u.time {
            rec["time"] = json!({ "begin": b.to_string(), "end": e.to_string() });
        }
        *pos += 1;
        writeln!(out, "{rec}").expect("write to string");
    }
    out
}

pub fn build_corpus(units: &[SynthUnit], hierarchies: &Hierarchies) -> Corpus {
    let config = IngestConfig {
        corpus_id: "synthetic".into(),
        ..IngestConfig::default()
    };
    let (corpus, report) =
        ingest(to_ndjson(units).as_bytes(), &hierarchies.catalog, &config).expect("in-memory stream");
    debug_assert_eq!(report.records_skipped, 0);
    corpus
}

/// Small random corpus: up to `max_units` units over `n_entities` entities,
/// a few years and every synthetic place; some units lack time or geo.
pub fn random_units(rng: &mut impl Rng, max_units: usize, n_entities: usize) -> Vec<SynthUnit> {
    let n = rng.gen_range(1..=max_units);
    let docs = rng.gen_range(1..=10);
    (0..n)
        .map(|_| {
            let k = rng.gen_range(0..=4.min(n_entities));
            let mut entities: Vec<usize> = (0..n_entities).collect();
            entities.shuffle(rng);
            entities.truncate(k);
            SynthUnit {
                doc: format!("d{}", rng.gen_range(0..docs)),
                entities,
                place: rng.gen_bool(0.8).then(|| random_place(rng)),
                time: rng.gen_bool(0.9).then(|| random_interval(rng, 2000..=2002)),
                words: {
                    let n = rng.gen_range(1..8);
                    random_words(rng, n)
                },
            }
        })
        .collect()
}

/// A planted event: an entity pair repeated in one (year, place) bucket.
#[derive(Debug, Clone, PartialEq)]
pub struct Planted {
    pub entities: [usize; 2],
    pub place: &'static str,
    pub time: (NaiveDate, NaiveDate),
}

/// `k` planted events with `support` units each, mixed with `noise` units
/// whose entities, places and times are drawn uniformly.
pub fn planted_units(
    rng: &mut impl Rng,
    k: usize,
    support: usize,
    noise: usize,
    n_entities: usize,
) -> (Vec<SynthUnit>, Vec<Planted>) {
    assert!(2 * k <= n_entities, "need two distinct entities per planted event");
    let mut pool: Vec<usize> = (0..n_entities).collect();
    pool.shuffle(rng);
    let mut years: Vec<i32> = (1990..2020).collect();
    years.shuffle(rng);
    let planted: Vec<Planted> = (0..k)
        .map(|i| {
            let mut pair = [pool[2 * i], pool[2 * i + 1]];
            pair.sort_unstable();
            let begin = day(years[i], rng.gen_range(1..=10), rng.gen_range(1..=28));
            Planted {
                entities: pair,
                place: random_place(rng),
                time: (begin, begin + Duration::days(rng.gen_range(3..20))),
            }
        })
        .collect();

    let mut units = Vec::new();
    for (i, p) in planted.iter().enumerate() {
        for _ in 0..support {
            units.push(SynthUnit {
                doc: format!("planted{i}-{}", rng.gen_range(0..3)),
                entities: p.entities.to_vec(),
                place: Some(p.place),
                time: Some(p.time),
                words: random_words(rng, 6),
            });
        }
    }
    for _ in 0..noise {
        units.push(SynthUnit {
            doc: format!("noise{}", rng.gen_range(0..20)),
            entities: vec![rng.gen_range(0..n_entities)],
            place: Some(random_place(rng)),
            time: Some(random_interval(rng, 1990..=2019)),
            words: random_words(rng, 6),
        });
    }
    units.shuffle(rng);
    (units, planted)
}

/// `n` units across documents of 20 units each, for throughput measurements.
pub fn bulk_units(rng: &mut impl Rng, n: usize, n_entities: usize) -> Vec<SynthUnit> {
    (0..n)
        .map(|i| SynthUnit {
            doc: format!("doc{}", i / 20),
            entities: vec![rng.gen_range(0..n_entities), rng.gen_range(0..n_entities)],
            place: Some(random_place(rng)),
            time: Some(random_interval(rng, 1950..=2020)),
            words: random_words(rng, 15),
        })
        .collect()
}

/// Up to `max_events` events over the synthetic world with place-level geo
/// members (a few are geo-unknown) and scores normalized to 1.
pub fn random_events(rng: &mut impl Rng, max_events: usize, n_entities: usize) -> EventSet {
    let n = rng.gen_range(1..=max_events);
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let events = raw
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let k = rng.gen_range(1..=3.min(n_entities));
            let mut ids: Vec<usize> = (0..n_entities).collect();
            ids.shuffle(rng);
            let mut entities: Vec<EntityId> = ids[..k].iter().map(|&e| EntityId(e as u32)).collect();
            entities.sort_unstable();
            let (b, e) = random_interval(rng, 2000..=2003);
            let time = TimeInterval::new(b, e).expect("ordered");
            let geo = if rng.gen_bool(0.1) {
                GEO_UNKNOWN
            } else {
                random_place(rng)
            };
            Event {
                id: i as u32,
                entities,
                geo: GeoMember {
                    level: GeoLevel::Place,
                    name: geo.to_string(),
                },
                scope: None,
                time,
                time_bucket: TimeMember::Year(b.year()),
                terms: Vec::new(),
                score: w / total,
                support: 1,
                supporting_units: Vec::new(),
            }
        })
        .collect();
    EventSet { events }
}
