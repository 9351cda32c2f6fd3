//! Time intervals, geographic scopes, the entity catalog, and the hierarchies
//! that the cube and the miner roll members through.
//!
//! The three similarity functions live next to their types:
//! [`time_sim`] (inclusive-day Jaccard), [`geo_sim`] (spherical area Jaccard for
//! boxes with area, an exponential distance kernel otherwise) and [`entity_sim`]
//! (set Jaccard).

mod entity;
mod geo;
mod hierarchy;
mod time;

pub(crate) use entity::intersects;
pub use entity::{entity_sim, EntityCatalog, EntityEntry, EntityId};
pub use geo::{geo_sim, haversine_km, GeoScope, DEFAULT_GEO_LAMBDA_KM, EARTH_RADIUS_KM};
pub use hierarchy::{Dim, EntityLevel, Gazetteer, GazetteerPlace, GeoLevel, Hierarchies, ALL_MEMBER, GEO_UNKNOWN};
pub use time::{parse_day, time_sim, TimeInterval, TimeLevel, TimeMember};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnnotationError {
    #[error("invalid time interval: {0}")]
    InvalidInterval(String),
    #[error("invalid date {0:?}")]
    InvalidDate(String),
    #[error("invalid geo scope: {0}")]
    InvalidGeo(String),
    #[error("unmapped member {member:?} for {dim} at level {level}")]
    UnmappedMember { dim: Dim, member: String, level: String },
    #[error("cannot roll {dim} member {member:?} from {from} down to finer level {to}")]
    RollDown {
        dim: Dim,
        member: String,
        from: String,
        to: String,
    },
    #[error("unknown level {0:?}")]
    UnknownLevel(String),
    #[error("catalog line {line}: {message}")]
    Catalog { line: usize, message: String },
    #[error("gazetteer line {line}: {message}")]
    Gazetteer { line: usize, message: String },
    #[error("i/o error reading {what}: {message}")]
    Io { what: String, message: String },
}
