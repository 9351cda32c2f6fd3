use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::InvertedIndex;

pub const INDEX_FORMAT: &str = "eventlens-index";
pub const INDEX_FORMAT_VERSION: u32 = 1;
pub(crate) const MANIFEST_FILE: &str = "manifest.json";
pub(crate) const POSTINGS_FILE: &str = "postings.cbor";

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("incompatible snapshot at {path}: {reason}")]
    Incompatible { path: PathBuf, reason: String },
    #[error("corrupt snapshot at {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
}

impl SnapshotError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        SnapshotError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn corrupt(path: &Path, reason: impl Into<String>) -> Self {
        SnapshotError::Corrupt {
            path: path.to_path_buf(),
            reason: reason.into(),
        }
    }

    pub(crate) fn incompatible(path: &Path, reason: impl Into<String>) -> Self {
        SnapshotError::Incompatible {
            path: path.to_path_buf(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexCounts {
    pub documents: u64,
    pub units: u64,
    pub terms: u64,
    pub postings: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexManifest {
    pub format: String,
    pub format_version: u32,
    pub counts: IndexCounts,
    pub config_hash: String,
    pub postings_sha256: String,
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), SnapshotError> {
    fs::write(path, bytes).map_err(|e| SnapshotError::io(path, e))
}

pub(crate) fn to_cbor<T: Serialize>(value: &T) -> Vec<u8> {
    let mut buf = Vec::new();
    ciborium::into_writer(value, &mut buf).expect("in-memory CBOR encoding");
    buf
}

/// Writes `manifest.json` and `postings.cbor` into `dir`, creating it if needed.
///
/// The output is a pure function of the index, so equal indexes give
/// byte-identical snapshots.
pub fn save_index(index: &InvertedIndex, dir: &Path) -> Result<IndexManifest, SnapshotError> {
    fs::create_dir_all(dir).map_err(|e| SnapshotError::io(dir, e))?;
    let body = to_cbor(index);
    let manifest = IndexManifest {
        format: INDEX_FORMAT.to_string(),
        format_version: INDEX_FORMAT_VERSION,
        counts: IndexCounts {
            documents: index.stats.num_docs as u64,
            units: index.stats.num_units,
            terms: index.num_terms() as u64,
            postings: index.num_postings() as u64,
        },
        config_hash: sha256_hex(serde_json::to_string(&index.config).expect("config").as_bytes()),
        postings_sha256: sha256_hex(&body),
    };
    write_file(&dir.join(POSTINGS_FILE), &body)?;
    let text = serde_json::to_string_pretty(&manifest).expect("manifest") + "\n";
    write_file(&dir.join(MANIFEST_FILE), text.as_bytes())?;
    Ok(manifest)
}

pub(crate) fn read_manifest(dir: &Path) -> Result<IndexManifest, SnapshotError> {
    if dir.is_file() {
        return Err(SnapshotError::incompatible(
            dir,
            "expected a snapshot directory, found a file",
        ));
    }
    let path = dir.join(MANIFEST_FILE);
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(SnapshotError::incompatible(dir, "no manifest"))
        }
        Err(e) => return Err(SnapshotError::io(&path, e)),
    };
    let manifest: IndexManifest = serde_json::from_str(&text)
        .map_err(|e| SnapshotError::incompatible(&path, format!("unreadable manifest: {e}")))?;
    if manifest.format != INDEX_FORMAT || manifest.format_version != INDEX_FORMAT_VERSION {
        return Err(SnapshotError::incompatible(
            &path,
            format!(
                "format {} v{} (expected {INDEX_FORMAT} v{INDEX_FORMAT_VERSION})",
                manifest.format, manifest.format_version
            ),
        ));
    }
    Ok(manifest)
}

pub fn load_index(dir: &Path) -> Result<InvertedIndex, SnapshotError> {
    let manifest = read_manifest(dir)?;
    let path = dir.join(POSTINGS_FILE);
    let body = fs::read(&path).map_err(|e| SnapshotError::io(&path, e))?;
    if sha256_hex(&body) != manifest.postings_sha256 {
        return Err(SnapshotError::corrupt(&path, "postings checksum mismatch"));
    }
    let index: InvertedIndex =
        ciborium::from_reader(body.as_slice()).map_err(|e| SnapshotError::corrupt(&path, e.to_string()))?;
    index.check_invariants().map_err(|e| SnapshotError::corrupt(&path, e))?;
    if index.num_postings() as u64 != manifest.counts.postings {
        return Err(SnapshotError::corrupt(&path, "posting count differs from manifest"));
    }
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotations::EntityCatalog;
    use crate::corpus::{build_index, ingest, IndexConfig, IngestConfig};

    fn index() -> InvertedIndex {
        let input = r#"{"doc_id": "a", "position": 0, "text": "Bolt won gold", "time": {"begin": "2008-08-16", "end": "2008-08-16"}}
{"doc_id": "b", "position": 0, "text": "Phelps won gold gold", "geo": {"lat": 39.9, "lon": 116.4}}"#;
        let (c, _) = ingest(input.as_bytes(), &EntityCatalog::default(), &IngestConfig::default()).unwrap();
        build_index(&c, &IndexConfig::default())
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let idx = index();
        save_index(&idx, dir.path()).unwrap();
        assert_eq!(load_index(dir.path()).unwrap(), idx);
    }

    #[test]
    fn deterministic_bytes() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        save_index(&index(), a.path()).unwrap();
        save_index(&index(), b.path()).unwrap();
        for f in [MANIFEST_FILE, POSTINGS_FILE] {
            assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
        }
    }

    #[test]
    fn empty_file_is_incompatible() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("snap");
        fs::write(&file, b"").unwrap();
        assert!(matches!(load_index(&file), Err(SnapshotError::Incompatible { .. })));
        let snap = dir.path().join("d");
        fs::create_dir(&snap).unwrap();
        fs::write(snap.join(MANIFEST_FILE), b"").unwrap();
        assert!(matches!(load_index(&snap), Err(SnapshotError::Incompatible { .. })));
    }

    #[test]
    fn version_mismatch_is_incompatible() {
        let dir = tempfile::tempdir().unwrap();
        save_index(&index(), dir.path()).unwrap();
        let p = dir.path().join(MANIFEST_FILE);
        let text = fs::read_to_string(&p)
            .unwrap()
            .replace("\"format_version\": 1", "\"format_version\": 99");
        fs::write(&p, text).unwrap();
        let err = load_index(dir.path()).unwrap_err();
        assert!(err.to_string().contains("incompatible snapshot"), "{err}");
    }

    #[test]
    fn tampered_postings_are_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        save_index(&index(), dir.path()).unwrap();
        let p = dir.path().join(POSTINGS_FILE);
        let mut bytes = fs::read(&p).unwrap();
        let n = bytes.len();
        bytes[n / 2] ^= 0xff;
        fs::write(&p, bytes).unwrap();
        assert!(matches!(load_index(dir.path()), Err(SnapshotError::Corrupt { .. })));
    }

    #[test]
    fn unwritable_location_reports_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("plain-file");
        fs::write(&blocker, b"x").unwrap();
        let target = blocker.join("snapshot");
        let err = save_index(&index(), &target).unwrap_err();
        match &err {
            SnapshotError::Io { path, .. } => assert!(path.starts_with(&blocker)),
            other => panic!("unexpected {other}"),
        }
        assert!(err.to_string().contains("plain-file"));
    }
}
