use std::net::{IpAddr, Ipv4Addr};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

pub const PORT_ENV: &str = "EVENTLENS_PORT";
pub const SNAPSHOT_ENV: &str = "EVENTLENS_SNAPSHOT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub host: IpAddr,
    pub port: u16,
    pub snapshot: PathBuf,
    /// Upper bound on `n` for search requests.
    pub max_results: usize,
    /// Cube responses are cut to this many rows.
    pub max_cells: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            host: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: 8080,
            snapshot: PathBuf::from("snapshot"),
            max_results: 100,
            max_cells: 500,
        }
    }
}

impl ServiceConfig {
    /// Reads the TOML file (if given), then applies environment overrides.
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                Self::from_toml(&text).with_context(|| format!("parsing config {}", p.display()))?
            }
            None => Self::default(),
        };
        config.apply_env(|k| std::env::var(k).ok())?;
        Ok(config)
    }

    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) -> anyhow::Result<()> {
        if let Some(port) = var(PORT_ENV) {
            self.port = port
                .parse()
                .with_context(|| format!("{PORT_ENV}={port:?} is not a port"))?;
        }
        if let Some(path) = var(SNAPSHOT_ENV) {
            self.snapshot = PathBuf::from(path);
        }
        Ok(())
    }
}
