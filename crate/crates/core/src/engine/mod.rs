//! Snapshot persistence and the request-level operations shared by the CLI
//! and the HTTP service. Both front ends call these, so their outputs agree
//! field for field.

mod snapshot;

pub use snapshot::{Snapshot, SNAPSHOT_FORMAT, SNAPSHOT_FORMAT_VERSION};

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotations::{EntityCatalog, Gazetteer, Hierarchies};
use crate::corpus::{ingest, AnnotationUnit, Corpus, IngestConfig, IngestReport, UnitRef};
use crate::cube::{parse_pipeline, CubeError, CubeLevelSpec, CubeTable, EventCube, PipelineError};
use crate::evalkit::{
    alpha_ndcg, fact_judgments, match_events, prf1, rouge_n, EvalError, EvalReport, EvalRow, Fact, MatchCriterion,
    Testbed,
};
use crate::miner::{event_detect, EventRecord, EventSet, MinerError, MinerParams, MiningContext};
use crate::search::{
    event_diverse, event_summary, relevant_units, search, DiverseSelection, Query, ResultSet, SearchError,
    SearchParams, Summary,
};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Miner(#[from] MinerError),
    #[error(transparent)]
    Cube(#[from] CubeError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("unknown testbed {0:?}")]
    UnknownTestbed(String),
    #[error("cannot read {path}: {message}")]
    Input { path: String, message: String },
}

/// Input files for a new snapshot.
#[derive(Debug, Clone)]
pub struct SourcePaths<'a> {
    pub corpus: &'a Path,
    pub catalog: &'a Path,
    pub gazetteer: &'a Path,
    /// Directory of `<name>.jsonl` testbed files.
    pub testbeds: Option<&'a Path>,
}

/// Reads and ingests the source files of a snapshot.
pub fn ingest_sources(
    paths: &SourcePaths<'_>,
    config: &IngestConfig,
) -> Result<(Corpus, Hierarchies, BTreeMap<String, Testbed>, IngestReport), EngineError> {
    let input = |p: &Path, message: String| EngineError::Input {
        path: p.display().to_string(),
        message,
    };
    let open = |p: &Path| File::open(p).map(BufReader::new).map_err(|e| input(p, e.to_string()));
    let catalog = EntityCatalog::from_reader(open(paths.catalog)?).map_err(|e| input(paths.catalog, e.to_string()))?;
    let gazetteer =
        Gazetteer::from_reader(open(paths.gazetteer)?).map_err(|e| input(paths.gazetteer, e.to_string()))?;
    let (corpus, report) =
        ingest(open(paths.corpus)?, &catalog, config).map_err(|e| input(paths.corpus, e.to_string()))?;
    let mut testbeds = BTreeMap::new();
    if let Some(dir) = paths.testbeds {
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| input(dir, e.to_string()))?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        files.sort();
        for f in files {
            let name = f.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            let tb = Testbed::from_reader(&name, open(&f)?).map_err(|e| input(&f, e.to_string()))?;
            testbeds.insert(name, tb);
        }
    }
    Ok((corpus, Hierarchies::new(catalog, gazetteer), testbeds, report))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchRequest {
    /// Query text: keywords plus optional `time:`, `geo:` and `entity:` filters.
    pub q: String,
    pub params: SearchParams,
}

/// Events for a query, or for the whole corpus when `q` is absent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MineRequest {
    pub q: Option<String>,
    pub params: MinerParams,
    pub search: SearchParams,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CubeRequest {
    pub mine: MineRequest,
    pub levels: CubeLevelSpec,
    /// Text pipeline; empty for the plain cube.
    pub pipeline: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiversifyRequest {
    pub q: String,
    pub budget: usize,
    pub gamma: f64,
    pub miner: MinerParams,
    pub search: SearchParams,
}

impl Default for DiversifyRequest {
    fn default() -> Self {
        Self {
            q: String::new(),
            budget: 10,
            gamma: 0.1,
            miner: MinerParams::default(),
            search: SearchParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SummarizeRequest {
    pub q: String,
    pub word_budget: u32,
    pub rho: f64,
    pub miner: MinerParams,
    pub search: SearchParams,
}

impl Default for SummarizeRequest {
    fn default() -> Self {
        Self {
            q: String::new(),
            word_budget: 100,
            rho: 0.5,
            miner: MinerParams::default(),
            search: SearchParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalRequest {
    pub testbed: String,
    pub alpha: f64,
    pub depth: usize,
    pub gamma: f64,
    pub word_budget: u32,
    pub rho: f64,
    pub criterion: MatchCriterion,
    pub miner: MinerParams,
    pub search: SearchParams,
}

impl Default for EvalRequest {
    fn default() -> Self {
        Self {
            testbed: String::new(),
            alpha: 0.5,
            depth: 10,
            gamma: 0.1,
            word_budget: 100,
            rho: 0.5,
            criterion: MatchCriterion::default(),
            miner: MinerParams::default(),
            search: SearchParams::default(),
        }
    }
}

/// Results plus the events mined from them.
struct Mined {
    results: Option<ResultSet>,
    events: EventSet,
}

impl Snapshot {
    fn query(&self, text: &str) -> Result<Query, EngineError> {
        Ok(Query::parse(text)?)
    }

    pub fn search(&self, req: &SearchRequest) -> Result<ResultSet, EngineError> {
        let q = self.query(&req.q)?;
        Ok(search(
            &self.corpus,
            &self.index,
            &self.hierarchies.catalog,
            &q,
            &req.params,
        )?)
    }

    fn mine_inner(&self, q: Option<&str>, params: &MinerParams, sp: &SearchParams) -> Result<Mined, EngineError> {
        params.validate()?;
        let (results, units): (_, Vec<(UnitRef, &AnnotationUnit)>) = match q.map(str::trim).filter(|q| !q.is_empty()) {
            Some(text) => {
                let query = self.query(text)?;
                let results = search(&self.corpus, &self.index, &self.hierarchies.catalog, &query, sp)?;
                let units = relevant_units(&self.corpus, &self.hierarchies.catalog, &query, &results, sp)?;
                (Some(results), units)
            }
            None => (None, self.corpus.units().collect()),
        };
        let ctx = MiningContext {
            gazetteer: &self.hierarchies.gazetteer,
            vocabulary: &self.corpus.vocabulary,
        };
        let events = event_detect(&units, &ctx, params)?;
        Ok(Mined { results, events })
    }

    pub fn mine(&self, req: &MineRequest) -> Result<EventSet, EngineError> {
        Ok(self.mine_inner(req.q.as_deref(), &req.params, &req.search)?.events)
    }

    pub fn mine_records(&self, req: &MineRequest) -> Result<Vec<EventRecord>, EngineError> {
        Ok(self.mine(req)?.to_records(&self.hierarchies.catalog))
    }

    pub fn cube(&self, req: &CubeRequest) -> Result<CubeTable, EngineError> {
        let ops = parse_pipeline(&req.pipeline)?;
        let events = Arc::new(self.mine(&req.mine)?);
        let cube = EventCube::build(events, self.hierarchies.clone(), req.levels)?;
        Ok(cube.run_pipeline(&ops)?.to_table())
    }

    pub fn diversify(&self, req: &DiversifyRequest) -> Result<DiverseSelection, EngineError> {
        let mined = self.mine_inner(Some(&req.q), &req.miner, &req.search)?;
        let results = mined.results.ok_or(SearchError::EmptyQuery)?;
        Ok(event_diverse(
            &self.corpus,
            &results,
            &mined.events,
            req.budget,
            req.gamma,
        )?)
    }

    pub fn summarize(&self, req: &SummarizeRequest) -> Result<Summary, EngineError> {
        let mined = self.mine_inner(Some(&req.q), &req.miner, &req.search)?;
        let results = mined.results.ok_or(SearchError::EmptyQuery)?;
        let candidates: Vec<UnitRef> = results
            .docs
            .iter()
            .flat_map(|d| self.corpus.doc_units(d.doc as usize).map(|(r, _)| r))
            .collect();
        Ok(event_summary(
            &self.corpus,
            &candidates,
            &mined.events,
            req.word_budget,
            req.rho,
        ))
    }

    /// Scores each testbed query: P/R/F1 of mined events against the facts,
    /// α-nDCG of the diversified ranking against fact coverage, and ROUGE of
    /// the summary against the facts' terms.
    pub fn evaluate(&self, req: &EvalRequest) -> Result<EvalReport, EngineError> {
        let tb = self
            .testbeds
            .get(&req.testbed)
            .ok_or_else(|| EngineError::UnknownTestbed(req.testbed.clone()))?;
        let catalog = &self.hierarchies.catalog;
        let mut rows = Vec::new();
        for q in tb.queries() {
            let facts: Vec<&Fact> = tb.facts_for(q).collect();
            let mined = self.mine_inner(Some(q), &req.miner, &req.search)?;
            let results = mined.results.clone().unwrap_or_default();
            let matches = match_events(&mined.events, &facts, catalog, &req.criterion)?;
            let p = prf1(matches.len(), mined.events.len(), facts.len());

            let pool: Vec<u32> = results.docs.iter().map(|d| d.doc).collect();
            let judgments = fact_judgments(&self.corpus, &pool, &facts, catalog);
            let sel = event_diverse(&self.corpus, &results, &mined.events, req.depth.max(1), req.gamma);
            let ranking: Vec<usize> = match sel {
                Ok(s) => s
                    .steps
                    .iter()
                    .map(|st| pool.iter().position(|&d| d == st.doc).expect("from pool"))
                    .collect(),
                Err(_) => Vec::new(),
            };
            let andcg = if pool.is_empty() {
                0.0
            } else {
                alpha_ndcg(&ranking, &judgments, req.alpha, req.depth)?
            };

            let summary = self.summarize(&SummarizeRequest {
                q: q.to_string(),
                word_budget: req.word_budget,
                rho: req.rho,
                miner: req.miner.clone(),
                search: req.search.clone(),
            })?;
            let text: String = summary
                .sentences
                .iter()
                .map(|s| s.text.as_str())
                .collect::<Vec<_>>()
                .join(" ");
            let reference: String = facts
                .iter()
                .flat_map(|f| f.terms.iter().map(String::as_str))
                .collect::<Vec<_>>()
                .join(" ");
            let rouge = |n| rouge_n(&text, &[reference.as_str()], n).unwrap_or(0.0);
            rows.push(EvalRow {
                testbed: tb.name.clone(),
                query: q.to_string(),
                facts: facts.len(),
                predicted: mined.events.len(),
                matched: matches.len(),
                precision: p.precision,
                recall: p.recall,
                f1: p.f1,
                alpha_ndcg: andcg,
                rouge1: rouge(1),
                rouge2: rouge(2),
            });
        }
        Ok(EvalReport {
            alpha: req.alpha,
            depth: req.depth,
            rows,
        })
    }
}
