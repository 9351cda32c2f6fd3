use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::AnnotationError;
use crate::annotations::hierarchy::ALL_MEMBER;

/// Dense index into an [`EntityCatalog`]; assigned in catalog file order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityId(pub u32);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityEntry {
    /// Catalog key, e.g. `Usain_Bolt`.
    pub key: String,
    pub name: String,
    /// `[type, supertype, "ALL"]`.
    pub type_path: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<(f64, f64)>,
}

impl EntityEntry {
    pub fn entity_type(&self) -> &str {
        &self.type_path[0]
    }

    pub fn supertype(&self) -> &str {
        &self.type_path[1]
    }
}

#[derive(Deserialize)]
struct CatalogRecord {
    id: String,
    #[serde(default)]
    name: Option<String>,
    types: Vec<String>,
    #[serde(default)]
    lat: Option<f64>,
    #[serde(default)]
    lon: Option<f64>,
}

/// Entities with their type paths. Type → supertype must be a function.
#[derive(Debug, Clone, Default)]
pub struct EntityCatalog {
    entries: Vec<EntityEntry>,
    by_key: HashMap<String, EntityId>,
    type_parent: BTreeMap<String, String>,
}

impl EntityCatalog {
    /// Reads newline-delimited JSON records `{"id", "name", "types": [type, supertype], "lat", "lon"}`.
    ///
    /// A trailing `"ALL"` in `types` is accepted and implied when absent.
    pub fn from_reader(reader: impl BufRead) -> Result<Self, AnnotationError> {
        let mut catalog = EntityCatalog::default();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| AnnotationError::Io {
                what: "entity catalog".into(),
                message: e.to_string(),
            })?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| AnnotationError::Catalog { line: line_no, message };
            let rec: CatalogRecord = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
            let mut types = rec.types;
            if types.last().map(String::as_str) == Some(ALL_MEMBER) {
                types.pop();
            }
            if types.len() != 2 || types.iter().any(|t| t.is_empty() || t == ALL_MEMBER) {
                return Err(err(format!(
                    "type path for {:?} must be [type, supertype] rooted at ALL",
                    rec.id
                )));
            }
            types.push(ALL_MEMBER.to_string());
            let coords = match (rec.lat, rec.lon) {
                (Some(lat), Some(lon)) => {
                    super::GeoScope::point(lat, lon).map_err(|e| err(e.to_string()))?;
                    Some((lat, lon))
                }
                (None, None) => None,
                _ => return Err(err("lat and lon must be given together".into())),
            };
            catalog
                .insert(EntityEntry {
                    name: rec.name.unwrap_or_else(|| rec.id.replace('_', " ")),
                    key: rec.id,
                    type_path: types,
                    coords,
                })
                .map_err(err)?;
        }
        Ok(catalog)
    }

    pub fn from_entries(entries: impl IntoIterator<Item = EntityEntry>) -> Result<Self, AnnotationError> {
        let mut catalog = EntityCatalog::default();
        for (i, e) in entries.into_iter().enumerate() {
            catalog
                .insert(e)
                .map_err(|message| AnnotationError::Catalog { line: i + 1, message })?;
        }
        Ok(catalog)
    }

    fn insert(&mut self, entry: EntityEntry) -> Result<EntityId, String> {
        if self.by_key.contains_key(&entry.key) {
            return Err(format!("duplicate entity id {:?}", entry.key));
        }
        if entry.type_path.len() != 3 || entry.type_path[2] != ALL_MEMBER {
            return Err(format!("type path for {:?} is not [type, supertype, ALL]", entry.key));
        }
        let (ty, sup) = (entry.type_path[0].clone(), entry.type_path[1].clone());
        match self.type_parent.get(&ty) {
            Some(existing) if *existing != sup => {
                return Err(format!("type {ty:?} has two supertypes: {existing:?} and {sup:?}"))
            }
            _ => {
                self.type_parent.insert(ty, sup);
            }
        }
        let id = EntityId(self.entries.len() as u32);
        self.by_key.insert(entry.key.clone(), id);
        self.entries.push(entry);
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn resolve(&self, key: &str) -> Option<EntityId> {
        self.by_key.get(key).copied()
    }

    pub fn get(&self, id: EntityId) -> Option<&EntityEntry> {
        self.entries.get(id.0 as usize)
    }

    /// Catalog key for an id. Panics on ids from another catalog.
    pub fn key(&self, id: EntityId) -> &str {
        &self.entries[id.0 as usize].key
    }

    pub fn entries(&self) -> &[EntityEntry] {
        &self.entries
    }

    pub fn is_type(&self, name: &str) -> bool {
        self.type_parent.contains_key(name)
    }

    pub fn is_supertype(&self, name: &str) -> bool {
        self.type_parent.values().any(|s| s == name)
    }

    pub fn supertype_of(&self, ty: &str) -> Option<&str> {
        self.type_parent.get(ty).map(String::as_str)
    }

    /// Writes the catalog back in its newline-delimited JSON form.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let mut v = serde_json::json!({
                "id": e.key,
                "name": e.name,
                "types": [e.type_path[0], e.type_path[1]],
            });
            if let Some((lat, lon)) = e.coords {
                v["lat"] = lat.into();
                v["lon"] = lon.into();
            }
            out.push_str(&v.to_string());
            out.push('\n');
        }
        out
    }
}

/// Jaccard similarity of two sorted, deduplicated id slices. Two empty sets score 0.
pub fn entity_sim(a: &[EntityId], b: &[EntityId]) -> f64 {
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Whether two sorted id slices share at least one id.
pub(crate) fn intersects(a: &[EntityId], b: &[EntityId]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}
