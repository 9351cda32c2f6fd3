use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::annotations::{EntityCatalog, Gazetteer, Hierarchies};
use crate::corpus::persist::{sha256_hex, to_cbor, write_file};
use crate::corpus::{build_index, load_index, save_index, Corpus, IndexConfig, InvertedIndex, SnapshotError};
use crate::evalkit::Testbed;

pub const SNAPSHOT_FORMAT: &str = "eventlens-snapshot";
pub const SNAPSHOT_FORMAT_VERSION: u32 = 1;

const META_FILE: &str = "snapshot.json";
const CORPUS_FILE: &str = "corpus.cbor";
const CATALOG_FILE: &str = "catalog.jsonl";
const GAZETTEER_FILE: &str = "gazetteer.jsonl";
const TESTBED_DIR: &str = "testbeds";

/// Everything the engine serves from: corpus, index, hierarchies and testbeds.
#[derive(Debug, Clone)]
pub struct Snapshot {
    /// Content hash; changes whenever any part of the snapshot does.
    pub version: String,
    pub corpus: Corpus,
    pub index: InvertedIndex,
    pub hierarchies: Arc<Hierarchies>,
    pub testbeds: BTreeMap<String, Testbed>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SnapshotMeta {
    format: String,
    format_version: u32,
    version: String,
    /// File name (relative to the snapshot directory) to SHA-256.
    files: BTreeMap<String, String>,
}

/// The serialized source files of a snapshot, keyed by relative path.
fn source_files(corpus: &Corpus, h: &Hierarchies, testbeds: &BTreeMap<String, Testbed>) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    files.insert(CORPUS_FILE.to_string(), to_cbor(corpus));
    files.insert(CATALOG_FILE.to_string(), h.catalog.to_jsonl().into_bytes());
    files.insert(GAZETTEER_FILE.to_string(), h.gazetteer.to_jsonl().into_bytes());
    for (name, tb) in testbeds {
        files.insert(format!("{TESTBED_DIR}/{name}.jsonl"), tb.to_jsonl().into_bytes());
    }
    files
}

fn version_of(hashes: &BTreeMap<String, String>) -> String {
    let joined: String = hashes.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
    sha256_hex(joined.as_bytes())[..16].to_string()
}

fn read(path: &Path) -> Result<Vec<u8>, SnapshotError> {
    fs::read(path).map_err(|e| SnapshotError::io(path, e))
}

impl Snapshot {
    pub fn build(
        corpus: Corpus,
        hierarchies: Hierarchies,
        testbeds: BTreeMap<String, Testbed>,
        config: &IndexConfig,
    ) -> Self {
        let index = build_index(&corpus, config);
        let mut hashes: BTreeMap<String, String> = source_files(&corpus, &hierarchies, &testbeds)
            .into_iter()
            .map(|(k, v)| (k, sha256_hex(&v)))
            .collect();
        hashes.insert(
            crate::corpus::persist::POSTINGS_FILE.into(),
            sha256_hex(&to_cbor(&index)),
        );
        Snapshot {
            version: version_of(&hashes),
            corpus,
            index,
            hierarchies: Arc::new(hierarchies),
            testbeds,
        }
    }

    /// Writes corpus, catalog, gazetteer and testbeds without an index; see
    /// [`Snapshot::index_dir`].
    pub fn write_sources(
        dir: &Path,
        corpus: &Corpus,
        hierarchies: &Hierarchies,
        testbeds: &BTreeMap<String, Testbed>,
    ) -> Result<(), SnapshotError> {
        fs::create_dir_all(dir.join(TESTBED_DIR)).map_err(|e| SnapshotError::io(dir, e))?;
        for (name, bytes) in source_files(corpus, hierarchies, testbeds) {
            write_file(&dir.join(name), &bytes)?;
        }
        Ok(())
    }

    fn read_sources(dir: &Path) -> Result<(Corpus, Hierarchies, BTreeMap<String, Testbed>), SnapshotError> {
        if dir.is_file() {
            return Err(SnapshotError::incompatible(
                dir,
                "expected a snapshot directory, found a file",
            ));
        }
        let corpus_path = dir.join(CORPUS_FILE);
        if !corpus_path.exists() {
            return Err(SnapshotError::incompatible(dir, "no corpus; run ingest first"));
        }
        let corpus: Corpus = ciborium::from_reader(read(&corpus_path)?.as_slice())
            .map_err(|e| SnapshotError::corrupt(&corpus_path, e.to_string()))?;
        let open = |name: &str| {
            let p = dir.join(name);
            fs::File::open(&p)
                .map(BufReader::new)
                .map_err(|e| SnapshotError::io(&p, e))
        };
        let catalog = EntityCatalog::from_reader(open(CATALOG_FILE)?)
            .map_err(|e| SnapshotError::corrupt(&dir.join(CATALOG_FILE), e.to_string()))?;
        let gazetteer = Gazetteer::from_reader(open(GAZETTEER_FILE)?)
            .map_err(|e| SnapshotError::corrupt(&dir.join(GAZETTEER_FILE), e.to_string()))?;
        let mut testbeds = BTreeMap::new();
        let tb_dir = dir.join(TESTBED_DIR);
        if tb_dir.is_dir() {
            let mut entries: Vec<_> = fs::read_dir(&tb_dir)
                .map_err(|e| SnapshotError::io(&tb_dir, e))?
                .filter_map(Result::ok)
                .map(|e| e.path())
                .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
                .collect();
            entries.sort();
            for p in entries {
                let name = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
                let file = fs::File::open(&p).map_err(|e| SnapshotError::io(&p, e))?;
                let tb = Testbed::from_reader(&name, BufReader::new(file))
                    .map_err(|e| SnapshotError::corrupt(&p, e.to_string()))?;
                testbeds.insert(name, tb);
            }
        }
        Ok((corpus, Hierarchies::new(catalog, gazetteer), testbeds))
    }

    /// Builds the index for sources previously written to `dir` and completes
    /// the snapshot there.
    pub fn index_dir(dir: &Path, config: &IndexConfig) -> Result<Snapshot, SnapshotError> {
        let (corpus, hierarchies, testbeds) = Self::read_sources(dir)?;
        let snapshot = Snapshot::build(corpus, hierarchies, testbeds, config);
        snapshot.save(dir)?;
        Ok(snapshot)
    }

    pub fn save(&self, dir: &Path) -> Result<(), SnapshotError> {
        Self::write_sources(dir, &self.corpus, &self.hierarchies, &self.testbeds)?;
        let manifest = save_index(&self.index, dir)?;
        let mut files: BTreeMap<String, String> = source_files(&self.corpus, &self.hierarchies, &self.testbeds)
            .into_iter()
            .map(|(k, v)| (k, sha256_hex(&v)))
            .collect();
        files.insert(crate::corpus::persist::POSTINGS_FILE.into(), manifest.postings_sha256);
        let meta = SnapshotMeta {
            format: SNAPSHOT_FORMAT.into(),
            format_version: SNAPSHOT_FORMAT_VERSION,
            version: version_of(&files),
            files,
        };
        let text = serde_json::to_string_pretty(&meta).expect("meta") + "\n";
        write_file(&dir.join(META_FILE), text.as_bytes())
    }

    /// Loads and verifies a snapshot directory.
    pub fn load(dir: &Path) -> Result<Snapshot, SnapshotError> {
        if dir.is_file() {
            return Err(SnapshotError::incompatible(
                dir,
                "expected a snapshot directory, found a file",
            ));
        }
        let meta_path = dir.join(META_FILE);
        let text = match fs::read_to_string(&meta_path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(SnapshotError::incompatible(dir, "no snapshot.json; run index first"))
            }
            Err(e) => return Err(SnapshotError::io(&meta_path, e)),
        };
        let meta: SnapshotMeta = serde_json::from_str(&text)
            .map_err(|e| SnapshotError::incompatible(&meta_path, format!("unreadable: {e}")))?;
        if meta.format != SNAPSHOT_FORMAT || meta.format_version != SNAPSHOT_FORMAT_VERSION {
            return Err(SnapshotError::incompatible(
                &meta_path,
                format!("format {} v{}", meta.format, meta.format_version),
            ));
        }
        for (name, hash) in &meta.files {
            let p = dir.join(name);
            if sha256_hex(&read(&p)?) != *hash {
                return Err(SnapshotError::corrupt(&p, "checksum mismatch"));
            }
        }
        let index = load_index(dir)?;
        let (corpus, hierarchies, testbeds) = Self::read_sources(dir)?;
        let on_disk = source_files(&corpus, &hierarchies, &testbeds);
        if on_disk.keys().any(|k| !meta.files.contains_key(k)) {
            return Err(SnapshotError::corrupt(dir, "files not listed in snapshot.json"));
        }
        if index.stats().num_docs as usize != corpus.documents.len() {
            return Err(SnapshotError::corrupt(
                dir,
                "index and corpus disagree on document count",
            ));
        }
        if version_of(&meta.files) != meta.version {
            return Err(SnapshotError::corrupt(&meta_path, "version hash mismatch"));
        }
        Ok(Snapshot {
            version: meta.version,
            corpus,
            index,
            hierarchies: Arc::new(hierarchies),
            testbeds,
        })
    }
}
