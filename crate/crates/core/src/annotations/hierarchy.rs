use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::geo::haversine_km;
use super::{AnnotationError, EntityCatalog, GeoScope};

/// Top member of every hierarchy.
pub const ALL_MEMBER: &str = "ALL";
/// Geo bucket for units without a resolvable location. Rolls to itself below ALL.
pub const GEO_UNKNOWN: &str = "geo-unknown";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dim {
    Time,
    Geo,
    Entity,
}

impl Dim {
    pub const ALL: [Dim; 3] = [Dim::Time, Dim::Geo, Dim::Entity];

    pub fn name(self) -> &'static str {
        match self {
            Dim::Time => "time",
            Dim::Geo => "geo",
            Dim::Entity => "entity",
        }
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dim {
    type Err = AnnotationError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Dim::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| AnnotationError::UnknownLevel(format!("dimension {s}")))
    }
}

macro_rules! level_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "lowercase")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL_LEVELS: &'static [$name] = &[$($name::$variant),+];

            pub fn coarser(self) -> Option<$name> {
                Self::ALL_LEVELS.get(self as usize + 1).copied()
            }

            pub fn finer(self) -> Option<$name> {
                (self as usize).checked_sub(1).map(|i| Self::ALL_LEVELS[i])
            }

            pub fn name(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $name {
            type Err = AnnotationError;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::ALL_LEVELS
                    .iter()
                    .copied()
                    .find(|l| l.name().eq_ignore_ascii_case(s.trim()))
                    .ok_or_else(|| AnnotationError::UnknownLevel(s.to_string()))
            }
        }
    };
}

level_enum!(GeoLevel {
    Place => "place",
    Country => "country",
    Continent => "continent",
    All => "all",
});

level_enum!(EntityLevel {
    Entity => "entity",
    Type => "type",
    Supertype => "supertype",
    All => "all",
});

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazetteerPlace {
    pub place: String,
    pub country: String,
    pub continent: String,
    pub lat: f64,
    pub lon: f64,
}

/// Place → country → continent, with coordinates per place.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    places: Vec<GazetteerPlace>,
    by_place: HashMap<String, usize>,
    country_continent: BTreeMap<String, String>,
}

impl Gazetteer {
    /// Reads newline-delimited JSON `{"place", "country", "continent", "lat", "lon"}`.
    pub fn from_reader(reader: impl BufRead) -> Result<Self, AnnotationError> {
        let mut places = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| AnnotationError::Io {
                what: "gazetteer".into(),
                message: e.to_string(),
            })?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let p: GazetteerPlace = serde_json::from_str(line).map_err(|e| AnnotationError::Gazetteer {
                line: i + 1,
                message: e.to_string(),
            })?;
            places.push((i + 1, p));
        }
        Self::build(places)
    }

    pub fn from_places(places: impl IntoIterator<Item = GazetteerPlace>) -> Result<Self, AnnotationError> {
        Self::build(places.into_iter().enumerate().map(|(i, p)| (i + 1, p)).collect())
    }

    fn build(places: Vec<(usize, GazetteerPlace)>) -> Result<Self, AnnotationError> {
        let mut g = Gazetteer::default();
        for (line, p) in places {
            let err = |message: String| AnnotationError::Gazetteer { line, message };
            GeoScope::point(p.lat, p.lon).map_err(|e| err(e.to_string()))?;
            if [&p.place, &p.country, &p.continent]
                .iter()
                .any(|s| s.is_empty() || *s == ALL_MEMBER || *s == GEO_UNKNOWN)
            {
                return Err(err("empty or reserved member name".into()));
            }
            if g.by_place.contains_key(&p.place) {
                return Err(err(format!("duplicate place {:?}", p.place)));
            }
            match g.country_continent.get(&p.country) {
                Some(c) if *c != p.continent => {
                    return Err(err(format!(
                        "country {:?} mapped to both {c:?} and {:?}",
                        p.country, p.continent
                    )))
                }
                _ => {
                    g.country_continent.insert(p.country.clone(), p.continent.clone());
                }
            }
            g.by_place.insert(p.place.clone(), g.places.len());
            g.places.push(p);
        }
        Ok(g)
    }

    pub fn places(&self) -> &[GazetteerPlace] {
        &self.places
    }

    pub fn place(&self, name: &str) -> Option<&GazetteerPlace> {
        self.by_place.get(name).map(|&i| &self.places[i])
    }

    /// Nearest gazetteer place to the scope's centroid within `max_km`.
    pub fn resolve_place(&self, scope: &GeoScope, max_km: f64) -> Option<&str> {
        let (lat, lon) = scope.centroid();
        self.places
            .iter()
            .map(|p| (haversine_km(lat, lon, p.lat, p.lon), p))
            .filter(|(d, _)| *d <= max_km)
            .min_by(|(da, pa), (db, pb)| da.total_cmp(db).then_with(|| pa.place.cmp(&pb.place)))
            .map(|(_, p)| p.place.as_str())
    }

    pub fn is_member(&self, level: GeoLevel, name: &str) -> bool {
        match level {
            GeoLevel::All => name == ALL_MEMBER,
            _ if name == GEO_UNKNOWN => true,
            GeoLevel::Place => self.by_place.contains_key(name),
            GeoLevel::Country => self.country_continent.contains_key(name),
            GeoLevel::Continent => self.country_continent.values().any(|c| c == name),
        }
    }

    pub fn roll(&self, member: &str, from: GeoLevel, to: GeoLevel) -> Result<String, AnnotationError> {
        if to < from {
            return Err(AnnotationError::RollDown {
                dim: Dim::Geo,
                member: member.to_string(),
                from: from.to_string(),
                to: to.to_string(),
            });
        }
        if !self.is_member(from, member) {
            return Err(AnnotationError::UnmappedMember {
                dim: Dim::Geo,
                member: member.to_string(),
                level: from.to_string(),
            });
        }
        if to == GeoLevel::All {
            return Ok(ALL_MEMBER.to_string());
        }
        if member == GEO_UNKNOWN || from == to {
            return Ok(member.to_string());
        }
        Ok(match (from, to) {
            (GeoLevel::Place, GeoLevel::Country) => self.place(member).expect("checked").country.clone(),
            (GeoLevel::Place, GeoLevel::Continent) => self.place(member).expect("checked").continent.clone(),
            (GeoLevel::Country, GeoLevel::Continent) => self.country_continent[member].clone(),
            _ => unreachable!("levels ordered and distinct"),
        })
    }

    /// Geographic extent of a member: a place's point, or the bounding box of
    /// every gazetteer place under a country or continent.
    pub fn member_scope(&self, level: GeoLevel, name: &str) -> Option<GeoScope> {
        let pts: Vec<GeoScope> = self
            .places
            .iter()
            .filter(|p| match level {
                GeoLevel::Place => p.place == name,
                GeoLevel::Country => p.country == name,
                GeoLevel::Continent => p.continent == name,
                GeoLevel::All => false,
            })
            .map(|p| GeoScope::Point { lat: p.lat, lon: p.lon })
            .collect();
        GeoScope::bounding(&pts)
    }

    pub fn to_jsonl(&self) -> String {
        self.places
            .iter()
            .map(|p| serde_json::to_string(p).expect("plain struct") + "\n")
            .collect()
    }
}

/// The entity catalog and gazetteer bundled for rolling members of all three dimensions.
#[derive(Debug, Clone, Default)]
pub struct Hierarchies {
    pub catalog: EntityCatalog,
    pub gazetteer: Gazetteer,
}

impl Hierarchies {
    pub fn new(catalog: EntityCatalog, gazetteer: Gazetteer) -> Self {
        Self { catalog, gazetteer }
    }

    pub fn is_entity_member(&self, level: EntityLevel, name: &str) -> bool {
        match level {
            EntityLevel::Entity => self.catalog.resolve(name).is_some(),
            EntityLevel::Type => self.catalog.is_type(name),
            EntityLevel::Supertype => self.catalog.is_supertype(name),
            EntityLevel::All => name == ALL_MEMBER,
        }
    }

    pub fn roll_entity(&self, member: &str, from: EntityLevel, to: EntityLevel) -> Result<String, AnnotationError> {
        if to < from {
            return Err(AnnotationError::RollDown {
                dim: Dim::Entity,
                member: member.to_string(),
                from: from.to_string(),
                to: to.to_string(),
            });
        }
        if !self.is_entity_member(from, member) {
            return Err(AnnotationError::UnmappedMember {
                dim: Dim::Entity,
                member: member.to_string(),
                level: from.to_string(),
            });
        }
        if from == to {
            return Ok(member.to_string());
        }
        if to == EntityLevel::All {
            return Ok(ALL_MEMBER.to_string());
        }
        let entry = || {
            let id = self.catalog.resolve(member).expect("checked");
            self.catalog.get(id).expect("dense ids")
        };
        Ok(match (from, to) {
            (EntityLevel::Entity, EntityLevel::Type) => entry().entity_type().to_string(),
            (EntityLevel::Entity, EntityLevel::Supertype) => entry().supertype().to_string(),
            (EntityLevel::Type, EntityLevel::Supertype) => {
                self.catalog.supertype_of(member).expect("checked").to_string()
            }
            _ => unreachable!("levels ordered and distinct"),
        })
    }

    pub fn roll_geo(&self, member: &str, from: GeoLevel, to: GeoLevel) -> Result<String, AnnotationError> {
        self.gazetteer.roll(member, from, to)
    }
}
