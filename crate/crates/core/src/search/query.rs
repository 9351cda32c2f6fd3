use std::fmt;

use serde::{Deserialize, Serialize};

use super::SearchError;
use crate::annotations::{GeoScope, TimeInterval};

/// Keywords plus optional time, geo and entity components.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Query {
    pub keywords: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeInterval>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geo: Option<GeoScope>,
    /// Catalog keys.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub entities: Vec<String>,
}

impl Query {
    pub fn keywords(text: &str) -> Self {
        Query {
            keywords: crate::text::tokenize(text),
            ..Query::default()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty() && self.time.is_none() && self.geo.is_none() && self.entities.is_empty()
    }

    /// Parses free keywords mixed with `time:[b,e]`, `geo:(lat,lon)`,
    /// `geo:[minlat,minlon,maxlat,maxlon]` and `entity:{A,B}` filters.
    pub fn parse(text: &str) -> Result<Self, SearchError> {
        let mut q = Query::default();
        let mut free = String::new();
        let mut rest = text.trim_start();
        while !rest.is_empty() {
            let filter = ["time:", "geo:", "entity:"].into_iter().find(|p| rest.starts_with(p));
            match filter {
                Some(prefix) => {
                    let body = &rest[prefix.len()..];
                    let close = match body.chars().next() {
                        Some('[') => ']',
                        Some('(') => ')',
                        Some('{') => '}',
                        _ => return Err(SearchError::BadQuery(format!("{prefix} needs a bracketed value"))),
                    };
                    let end = body
                        .find(close)
                        .ok_or_else(|| SearchError::BadQuery(format!("unclosed {prefix} filter")))?;
                    let inner = &body[1..end];
                    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
                    match (prefix, close) {
                        ("time:", ']') => q.set_time(&parts)?,
                        ("geo:", ')') | ("geo:", ']') => q.set_geo(&parts, close)?,
                        ("entity:", '}') => q
                            .entities
                            .extend(parts.iter().filter(|p| !p.is_empty()).map(|p| p.to_string())),
                        _ => return Err(SearchError::BadQuery(format!("unexpected bracket after {prefix}"))),
                    }
                    rest = body[end + 1..].trim_start();
                }
                None => {
                    let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
                    free.push_str(&rest[..end]);
                    free.push(' ');
                    rest = rest[end..].trim_start();
                }
            }
        }
        q.keywords = crate::text::tokenize(&free);
        q.entities.sort();
        q.entities.dedup();
        Ok(q)
    }

    fn set_time(&mut self, parts: &[&str]) -> Result<(), SearchError> {
        let [b, e] = parts else {
            return Err(SearchError::BadQuery("time:[begin,end] needs two dates".into()));
        };
        self.time = Some(TimeInterval::parse(b, e).map_err(|e| SearchError::BadQuery(e.to_string()))?);
        Ok(())
    }

    fn set_geo(&mut self, parts: &[&str], close: char) -> Result<(), SearchError> {
        let nums = parts
            .iter()
            .map(|p| p.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| SearchError::BadQuery(format!("geo coordinates must be numbers: {parts:?}")))?;
        let scope = match (close, nums.as_slice()) {
            (')', [lat, lon]) => GeoScope::point(*lat, *lon),
            (']', [a, b, c, d]) => GeoScope::mbr(*a, *b, *c, *d),
            _ => {
                return Err(SearchError::BadQuery(
                    "geo:(lat,lon) or geo:[minlat,minlon,maxlat,maxlon]".into(),
                ))
            }
        };
        self.geo = Some(scope.map_err(|e| SearchError::BadQuery(e.to_string()))?);
        Ok(())
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.keywords.clone();
        if let Some(t) = &self.time {
            parts.push(format!("time:[{},{}]", t.begin(), t.end()));
        }
        match &self.geo {
            Some(GeoScope::Point { lat, lon }) => parts.push(format!("geo:({lat},{lon})")),
            Some(g) => {
                let b = g.bounds();
                parts.push(format!("geo:[{},{},{},{}]", b[0], b[1], b[2], b[3]));
            }
            None => {}
        }
        if !self.entities.is_empty() {
            parts.push(format!("entity:{{{}}}", self.entities.join(",")));
        }
        f.write_str(&parts.join(" "))
    }
}
