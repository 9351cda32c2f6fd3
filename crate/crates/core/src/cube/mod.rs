//! Event data cube over (time, geo, entity) with slice, dice, drill-up,
//! drill-down and roll.
//!
//! A cube is a level spec plus a list of member constraints over its source
//! events; cells are always a function of those two, so any pipeline equals
//! filtering and grouping the flat event list. Cells keep their
//! (event, entity) incidences, which makes measures independent of the order
//! in which cells were merged.

mod pipeline;

pub use pipeline::{parse_pipeline, PipelineError};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotations::{Dim, EntityId, EntityLevel, GeoLevel, Hierarchies, TimeLevel, TimeMember};
use crate::miner::{Event, EventSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CubeError {
    #[error("cannot build a cube from an empty event set")]
    NoEvents,
    #[error("{dim} level {level} is finer than the events allow (finest is {leaf})")]
    BelowLeaf { dim: Dim, level: String, leaf: String },
    #[error("no such member at level: {dim} {member:?} at {level}")]
    NoSuchMember { dim: Dim, member: String, level: String },
    #[error("already at finest level: {dim} at {level}")]
    AlreadyFinest { dim: Dim, level: String },
    #[error("already at coarsest level: {dim} at {level}")]
    AlreadyCoarsest { dim: Dim, level: String },
    #[error("roll needs a permutation of time, geo, entity; got {0}")]
    BadRoll(String),
    #[error("dice needs at least one dimension")]
    EmptyDice,
    #[error("cannot parse op: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeLevelSpec {
    pub time: TimeLevel,
    pub geo: GeoLevel,
    pub entity: EntityLevel,
}

impl Default for CubeLevelSpec {
    fn default() -> Self {
        Self {
            time: TimeLevel::Year,
            geo: GeoLevel::Country,
            entity: EntityLevel::Entity,
        }
    }
}

impl CubeLevelSpec {
    pub fn level_name(&self, dim: Dim) -> &'static str {
        match dim {
            Dim::Time => self.time.name(),
            Dim::Geo => self.geo.name(),
            Dim::Entity => self.entity.name(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum CubeOp {
    Slice { dim: Dim, member: String },
    Dice { members: BTreeMap<Dim, Vec<String>> },
    DrillUp { dim: Dim },
    DrillDown { dim: Dim },
    Roll { order: [Dim; 3] },
}

impl fmt::Display for CubeOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CubeOp::Slice { dim, member } => write!(f, "slice {dim}={member}"),
            CubeOp::Dice { members } => {
                write!(f, "dice")?;
                for (dim, ms) in members {
                    write!(f, " {dim}={}", ms.join(","))?;
                }
                Ok(())
            }
            CubeOp::DrillUp { dim } => write!(f, "drillup {dim}"),
            CubeOp::DrillDown { dim } => write!(f, "drilldown {dim}"),
            CubeOp::Roll { order } => write!(f, "roll {},{},{}", order[0], order[1], order[2]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub time: TimeMember,
    pub geo: String,
    pub entity: String,
}

impl CellKey {
    pub fn member(&self, dim: Dim) -> String {
        match dim {
            Dim::Time => self.time.to_string(),
            Dim::Geo => self.geo.clone(),
            Dim::Entity => self.entity.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measures {
    /// (event, entity) incidences in the cell.
    pub count: usize,
    pub score_mass: f64,
    /// Distinct contributing events, ascending.
    pub event_ids: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
struct Cell {
    /// Sorted (event id, entity) pairs.
    incidences: Vec<(u32, EntityId)>,
    measures: Measures,
}

impl Cell {
    fn new(mut incidences: Vec<(u32, EntityId)>, events: &BTreeMap<u32, &Event>) -> Self {
        incidences.sort_unstable();
        let score_mass = incidences.iter().map(|(id, _)| events[id].score).sum();
        let mut event_ids: Vec<u32> = incidences.iter().map(|p| p.0).collect();
        event_ids.dedup();
        Cell {
            measures: Measures {
                count: incidences.len(),
                score_mass,
                event_ids,
            },
            incidences,
        }
    }
}

/// A restriction of one dimension to a member set at a fixed level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub dim: Dim,
    pub level: String,
    pub members: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CubeWarning {
    pub event_id: u32,
    pub message: String,
}

/// Leaf members of one (event, entity) incidence.
struct Leaf<'a> {
    event: &'a Event,
    entity: EntityId,
    day: TimeMember,
}

#[derive(Debug, Clone)]
pub struct EventCube {
    levels: CubeLevelSpec,
    geo_leaf: GeoLevel,
    axis_order: [Dim; 3],
    constraints: Vec<Constraint>,
    cells: BTreeMap<CellKey, Cell>,
    events: Arc<EventSet>,
    hierarchies: Arc<Hierarchies>,
    skipped: Vec<CubeWarning>,
}

impl PartialEq for EventCube {
    fn eq(&self, other: &Self) -> bool {
        self.levels == other.levels
            && self.axis_order == other.axis_order
            && self.constraints == other.constraints
            && self.cells == other.cells
    }
}

impl EventCube {
    pub fn build(
        events: Arc<EventSet>,
        hierarchies: Arc<Hierarchies>,
        levels: CubeLevelSpec,
    ) -> Result<Self, CubeError> {
        if events.is_empty() {
            return Err(CubeError::NoEvents);
        }
        let geo_leaf = events.iter().map(|e| e.geo.level).max().expect("non-empty");
        if levels.geo < geo_leaf {
            return Err(CubeError::BelowLeaf {
                dim: Dim::Geo,
                level: levels.geo.to_string(),
                leaf: geo_leaf.to_string(),
            });
        }
        let mut cube = EventCube {
            levels,
            geo_leaf,
            axis_order: Dim::ALL,
            constraints: Vec::new(),
            cells: BTreeMap::new(),
            events,
            hierarchies,
            skipped: Vec::new(),
        };
        cube.derive();
        Ok(cube)
    }

    pub fn levels(&self) -> CubeLevelSpec {
        self.levels
    }

    pub fn axis_order(&self) -> [Dim; 3] {
        self.axis_order
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn events(&self) -> &Arc<EventSet> {
        &self.events
    }

    /// Events left out because a member could not be mapped.
    pub fn skipped(&self) -> &[CubeWarning] {
        &self.skipped
    }

    pub fn cells(&self) -> impl Iterator<Item = (&CellKey, &Measures)> {
        self.cells.iter().map(|(k, c)| (k, &c.measures))
    }

    pub fn cell(&self, key: &CellKey) -> Option<&Measures> {
        self.cells.get(key).map(|c| &c.measures)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn total_count(&self) -> usize {
        self.cells.values().map(|c| c.measures.count).sum()
    }

    pub fn total_score_mass(&self) -> f64 {
        self.cells.values().map(|c| c.measures.score_mass).sum()
    }

    fn event_map(&self) -> BTreeMap<u32, &Event> {
        self.events.iter().map(|e| (e.id, e)).collect()
    }

    fn leaves(&self) -> (Vec<Leaf<'_>>, Vec<CubeWarning>) {
        let mut leaves = Vec::new();
        let mut skipped = Vec::new();
        let h = &self.hierarchies;
        for e in self.events.iter() {
            let mut problem = None;
            if !h.gazetteer.is_member(e.geo.level, &e.geo.name) {
                problem = Some(format!(
                    "geo member {:?} not in gazetteer at {}",
                    e.geo.name, e.geo.level
                ));
            }
            if let Some(id) = e.entities.iter().find(|&&id| h.catalog.get(id).is_none()) {
                problem = Some(format!("entity id {} not in catalog", id.0));
            }
            if let Some(message) = problem {
                tracing::warn!(event = e.id, %message, "event skipped");
                skipped.push(CubeWarning {
                    event_id: e.id,
                    message,
                });
                continue;
            }
            let day = TimeMember::Day(e.time.midpoint());
            leaves.extend(e.entities.iter().map(|&entity| Leaf { event: e, entity, day }));
        }
        (leaves, skipped)
    }

    fn member_at(&self, leaf: &Leaf<'_>, dim: Dim, level: &str) -> String {
        let h = &self.hierarchies;
        match dim {
            Dim::Time => leaf
                .day
                .roll(level.parse().expect("stored level"))
                .expect("day rolls up")
                .to_string(),
            Dim::Geo => h
                .roll_geo(
                    &leaf.event.geo.name,
                    leaf.event.geo.level,
                    level.parse().expect("stored level"),
                )
                .expect("checked member"),
            Dim::Entity => h
                .roll_entity(
                    h.catalog.key(leaf.entity),
                    EntityLevel::Entity,
                    level.parse().expect("stored level"),
                )
                .expect("checked member"),
        }
    }

    fn key_of(&self, leaf: &Leaf<'_>) -> CellKey {
        let h = &self.hierarchies;
        CellKey {
            time: leaf.day.roll(self.levels.time).expect("day rolls up"),
            geo: h
                .roll_geo(&leaf.event.geo.name, leaf.event.geo.level, self.levels.geo)
                .expect("checked member"),
            entity: h
                .roll_entity(h.catalog.key(leaf.entity), EntityLevel::Entity, self.levels.entity)
                .expect("checked member"),
        }
    }

    /// Recomputes every cell from the source events.
    fn derive(&mut self) {
        let (leaves, skipped) = self.leaves();
        let mut groups: BTreeMap<CellKey, Vec<(u32, EntityId)>> = BTreeMap::new();
        for leaf in &leaves {
            let keep = self
                .constraints
                .iter()
                .all(|c| c.members.contains(&self.member_at(leaf, c.dim, &c.level)));
            if keep {
                groups
                    .entry(self.key_of(leaf))
                    .or_default()
                    .push((leaf.event.id, leaf.entity));
            }
        }
        let events = self.event_map();
        self.cells = groups
            .into_iter()
            .map(|(k, inc)| (k, Cell::new(inc, &events)))
            .collect();
        self.skipped = skipped;
    }

    fn validate_member(&self, dim: Dim, member: &str) -> Result<String, CubeError> {
        let level = self.levels.level_name(dim);
        let h = &self.hierarchies;
        let ok = match dim {
            Dim::Time => TimeMember::parse_at(self.levels.time, member)
                .map(|m| m.to_string())
                .ok(),
            Dim::Geo => h
                .gazetteer
                .is_member(self.levels.geo, member)
                .then(|| member.to_string()),
            Dim::Entity => h
                .is_entity_member(self.levels.entity, member)
                .then(|| member.to_string()),
        };
        ok.ok_or_else(|| CubeError::NoSuchMember {
            dim,
            member: member.to_string(),
            level: level.to_string(),
        })
    }

    fn restrict(&self, restrictions: Vec<(Dim, BTreeSet<String>)>) -> EventCube {
        let mut out = self.clone();
        for (dim, members) in restrictions {
            out.constraints.push(Constraint {
                dim,
                level: self.levels.level_name(dim).to_string(),
                members,
            });
            out.cells.retain(|k, _| {
                let m = k.member(dim);
                out.constraints.last().expect("just pushed").members.contains(&m)
            });
        }
        out
    }

    pub fn apply(&self, op: &CubeOp) -> Result<EventCube, CubeError> {
        match op {
            CubeOp::Slice { dim, member } => {
                let m = self.validate_member(*dim, member)?;
                Ok(self.restrict(vec![(*dim, BTreeSet::from([m]))]))
            }
            CubeOp::Dice { members } => {
                if members.is_empty() || members.values().any(|v| v.is_empty()) {
                    return Err(CubeError::EmptyDice);
                }
                let mut restrictions = Vec::new();
                for (dim, ms) in members {
                    let set = ms
                        .iter()
                        .map(|m| self.validate_member(*dim, m))
                        .collect::<Result<BTreeSet<_>, _>>()?;
                    restrictions.push((*dim, set));
                }
                Ok(self.restrict(restrictions))
            }
            CubeOp::DrillUp { dim } => self.drill_up(*dim),
            CubeOp::DrillDown { dim } => self.drill_down(*dim),
            CubeOp::Roll { order } => {
                let distinct: BTreeSet<_> = order.iter().collect();
                if distinct.len() != 3 {
                    return Err(CubeError::BadRoll(format!("{:?}", order)));
                }
                let mut out = self.clone();
                out.axis_order = *order;
                Ok(out)
            }
        }
    }

    fn drill_up(&self, dim: Dim) -> Result<EventCube, CubeError> {
        let coarsest = || CubeError::AlreadyCoarsest {
            dim,
            level: self.levels.level_name(dim).to_string(),
        };
        let mut levels = self.levels;
        match dim {
            Dim::Time => levels.time = levels.time.coarser().ok_or_else(coarsest)?,
            Dim::Geo => levels.geo = levels.geo.coarser().ok_or_else(coarsest)?,
            Dim::Entity => levels.entity = levels.entity.coarser().ok_or_else(coarsest)?,
        }
        let h = &self.hierarchies;
        let mut merged: BTreeMap<CellKey, Vec<(u32, EntityId)>> = BTreeMap::new();
        for (key, cell) in &self.cells {
            let mut k = key.clone();
            match dim {
                Dim::Time => k.time = k.time.roll(levels.time).expect("coarser"),
                Dim::Geo => k.geo = h.roll_geo(&k.geo, self.levels.geo, levels.geo).expect("cell member"),
                Dim::Entity => {
                    k.entity = h
                        .roll_entity(&k.entity, self.levels.entity, levels.entity)
                        .expect("cell member")
                }
            }
            merged.entry(k).or_default().extend_from_slice(&cell.incidences);
        }
        let events = self.event_map();
        let mut out = self.clone();
        out.levels = levels;
        out.cells = merged
            .into_iter()
            .map(|(k, inc)| (k, Cell::new(inc, &events)))
            .collect();
        Ok(out)
    }

    fn drill_down(&self, dim: Dim) -> Result<EventCube, CubeError> {
        let finest = || CubeError::AlreadyFinest {
            dim,
            level: self.levels.level_name(dim).to_string(),
        };
        let mut levels = self.levels;
        match dim {
            Dim::Time => levels.time = levels.time.finer().ok_or_else(finest)?,
            Dim::Geo => {
                levels.geo = levels.geo.finer().filter(|l| *l >= self.geo_leaf).ok_or_else(finest)?;
            }
            Dim::Entity => levels.entity = levels.entity.finer().ok_or_else(finest)?,
        }
        let mut out = self.clone();
        out.levels = levels;
        out.derive();
        Ok(out)
    }

    /// Applies `ops` in order; the error names the failing op's index.
    pub fn run_pipeline(&self, ops: &[CubeOp]) -> Result<EventCube, PipelineError> {
        let mut cube = self.clone();
        for (index, op) in ops.iter().enumerate() {
            cube = cube.apply(op).map_err(|error| PipelineError { index, error })?;
        }
        Ok(cube)
    }

    /// Cells as rows, sorted by the members in axis order.
    pub fn to_table(&self) -> CubeTable {
        let order = self.axis_order;
        let mut cells: Vec<(&CellKey, &Cell)> = self.cells.iter().collect();
        cells.sort_by(|(a, _), (b, _)| {
            order
                .iter()
                .map(|d| match d {
                    Dim::Time => a.time.cmp(&b.time),
                    Dim::Geo => a.geo.cmp(&b.geo),
                    Dim::Entity => a.entity.cmp(&b.entity),
                })
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let rows = cells
            .into_iter()
            .map(|(k, c)| CubeRow {
                time: k.time.to_string(),
                geo: k.geo.clone(),
                entity: k.entity.clone(),
                count: c.measures.count,
                score_mass: c.measures.score_mass,
                event_ids: c.measures.event_ids.clone(),
            })
            .collect();
        CubeTable {
            axes: order,
            levels: self.levels,
            rows,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeRow {
    pub time: String,
    pub geo: String,
    pub entity: String,
    pub count: usize,
    pub score_mass: f64,
    pub event_ids: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeTable {
    pub axes: [Dim; 3],
    pub levels: CubeLevelSpec,
    pub rows: Vec<CubeRow>,
}

impl CubeTable {
    /// Tab-separated text with columns in axis order, then count and score_mass.
    pub fn to_tsv(&self) -> String {
        let col = |r: &CubeRow, d: Dim| match d {
            Dim::Time => r.time.clone(),
            Dim::Geo => r.geo.clone(),
            Dim::Entity => r.entity.clone(),
        };
        let mut out = self.axes.iter().map(|d| d.name()).collect::<Vec<_>>().join("\t");
        out.push_str("\tcount\tscore_mass\n");
        for r in &self.rows {
            for d in self.axes {
                out.push_str(&col(r, d));
                out.push('\t');
            }
            out.push_str(&format!("{}\t{}\n", r.count, r.score_mass));
        }
        out
    }
}
