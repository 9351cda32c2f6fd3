use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use eventlens::annotations::{EntityLevel, GeoLevel, TimeLevel};
use eventlens::corpus::{Granularity, IndexConfig, IngestConfig};
use eventlens::cube::CubeLevelSpec;
use eventlens::engine::{
    ingest_sources, CubeRequest, DiversifyRequest, EvalRequest, MineRequest, SearchRequest, Snapshot, SourcePaths,
    SummarizeRequest,
};
use eventlens::miner::MinerParams;
use eventlens_service::{ServiceConfig, SNAPSHOT_ENV};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "eventlens",
    version,
    about = "Event mining and exploration over annotated corpora"
)]
struct Cli {
    /// Print results as JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ingest annotated records into a snapshot directory (without index).
    Ingest(IngestArgs),
    /// Build the index for an ingested snapshot directory.
    Index {
        #[arg(long, env = SNAPSHOT_ENV)]
        snapshot: PathBuf,
    },
    /// Rank documents for a query.
    Search {
        #[command(flatten)]
        snap: SnapArg,
        /// Query text, e.g. `olympics time:[2008-01-01,2008-12-31] entity:{Usain_Bolt}`.
        q: String,
        #[arg(short, long, default_value_t = 10)]
        n: usize,
    },
    /// Mine events for a query, or for the whole corpus without one.
    Mine {
        #[command(flatten)]
        snap: SnapArg,
        q: Option<String>,
        #[command(flatten)]
        miner: MinerArgs,
    },
    /// Build an event cube and run a pipeline over it.
    Cube {
        #[command(flatten)]
        snap: SnapArg,
        #[arg(long)]
        q: Option<String>,
        /// Pipeline text, ops separated by `;` or newlines.
        #[arg(long, default_value = "")]
        pipeline: String,
        /// Read the pipeline from a file instead.
        #[arg(long, conflicts_with = "pipeline")]
        pipeline_file: Option<PathBuf>,
        #[arg(long, default_value = "year", value_parser = level::<TimeLevel>)]
        cube_time: TimeLevel,
        #[arg(long, default_value = "country", value_parser = level::<GeoLevel>)]
        cube_geo: GeoLevel,
        #[arg(long, default_value = "entity", value_parser = level::<EntityLevel>)]
        cube_entity: EntityLevel,
        #[command(flatten)]
        miner: MinerArgs,
    },
    /// Select documents that cover the query's events.
    Diversify {
        #[command(flatten)]
        snap: SnapArg,
        q: String,
        #[arg(long, default_value_t = 10)]
        budget: usize,
        #[arg(long, default_value_t = 0.1)]
        gamma: f64,
        #[command(flatten)]
        miner: MinerArgs,
    },
    /// Summarize the query's results within a word budget.
    Summarize {
        #[command(flatten)]
        snap: SnapArg,
        q: String,
        #[arg(long, default_value_t = 100)]
        word_budget: u32,
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        #[command(flatten)]
        miner: MinerArgs,
    },
    /// Score mining, diversification and summaries against a testbed.
    Eval {
        #[command(flatten)]
        snap: SnapArg,
        testbed: String,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 10)]
        depth: usize,
        #[command(flatten)]
        miner: MinerArgs,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    catalog: PathBuf,
    #[arg(long)]
    gazetteer: PathBuf,
    /// Directory of `<name>.jsonl` testbeds.
    #[arg(long)]
    testbeds: Option<PathBuf>,
    #[arg(long, default_value = "sentence", value_parser = level::<Granularity>)]
    granularity: Granularity,
    #[arg(long, default_value = "default")]
    corpus_id: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SnapArg {
    #[arg(long, env = SNAPSHOT_ENV)]
    snapshot: PathBuf,
}

impl SnapArg {
    fn load(&self) -> anyhow::Result<Snapshot> {
        Snapshot::load(&self.snapshot).with_context(|| format!("loading {}", self.snapshot.display()))
    }
}

#[derive(Debug, Args)]
struct MinerArgs {
    #[arg(long, default_value_t = 2)]
    min_support: usize,
    #[arg(long, default_value_t = 10)]
    max_events: usize,
    #[arg(long, default_value = "year", value_parser = level::<TimeLevel>)]
    time_level: TimeLevel,
    #[arg(long, default_value = "country", value_parser = level::<GeoLevel>)]
    geo_level: GeoLevel,
}

impl MinerArgs {
    fn params(&self) -> MinerParams {
        MinerParams {
            min_support: self.min_support,
            max_events: self.max_events,
            time_level: self.time_level,
            geo_level: self.geo_level,
            ..MinerParams::default()
        }
    }
}

/// Parses a lowercase level or granularity name through its serde form.
fn level<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_lowercase())).map_err(|e| e.to_string())
}

fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn read_pipeline(text: String, file: Option<&Path>) -> anyhow::Result<String> {
    match file {
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display())),
        None => Ok(text),
    }
}

fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let json = cli.json;
    match cli.command {
        Command::Ingest(a) => {
            let config = IngestConfig {
                corpus_id: a.corpus_id,
                granularity: a.granularity,
                ..IngestConfig::default()
            };
            let paths = SourcePaths {
                corpus: &a.input,
                catalog: &a.catalog,
                gazetteer: &a.gazetteer,
                testbeds: a.testbeds.as_deref(),
            };
            let (corpus, hierarchies, testbeds, report) = ingest_sources(&paths, &config)?;
            Snapshot::write_sources(&a.out, &corpus, &hierarchies, &testbeds)?;
            if json {
                print_json(&report)?;
            } else {
                for w in &report.warnings {
                    eprintln!("warning: {w:?}");
                }
                println!(
                    "ingested {} records ({} skipped) into {} documents, {} units at {}",
                    report.records_read,
                    report.records_skipped,
                    report.documents,
                    report.units,
                    a.out.display()
                );
            }
        }
        Command::Index { snapshot } => {
            let s = Snapshot::index_dir(&snapshot, &IndexConfig::default())
                .with_context(|| format!("indexing {}", snapshot.display()))?;
            let stats = s.index.stats();
            if json {
                print_json(&serde_json::json!({
                    "version": s.version,
                    "documents": stats.num_docs,
                    "units": stats.num_units,
                    "tokens": stats.total_tokens,
                }))?;
            } else {
                println!(
                    "snapshot {} version {}: {} documents, {} units, {} tokens",
                    snapshot.display(),
                    s.version,
                    stats.num_docs,
                    stats.num_units,
                    stats.total_tokens
                );
            }
        }
        Command::Search { snap, q, n } => {
            let mut req = SearchRequest {
                q,
                ..Default::default()
            };
            req.params.n = n;
            let results = snap.load()?.search(&req)?;
            if json {
                return print_json(&results);
            }
            println!(
                "{:>4}  {:<24} {:>8} {:>8} {:>8} {:>8} {:>8}",
                "rank", "doc", "total", "text", "time", "geo", "entity"
            );
            for (i, d) in results.docs.iter().enumerate() {
                let c = &d.components;
                println!(
                    "{:>4}  {:<24} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
                    i + 1,
                    d.doc_id,
                    d.total,
                    c.text,
                    c.time,
                    c.geo,
                    c.entity
                );
            }
        }
        Command::Mine { snap, q, miner } => {
            let s = snap.load()?;
            let req = MineRequest {
                q,
                params: miner.params(),
                ..Default::default()
            };
            let events = s.mine(&req)?;
            if json {
                return print_json(&events.to_records(&s.hierarchies.catalog));
            }
            print!("{}", events.to_jsonl(&s.hierarchies.catalog));
        }
        Command::Cube {
            snap,
            q,
            pipeline,
            pipeline_file,
            cube_time,
            cube_geo,
            cube_entity,
            miner,
        } => {
            let req = CubeRequest {
                mine: MineRequest {
                    q,
                    params: miner.params(),
                    ..Default::default()
                },
                levels: CubeLevelSpec {
                    time: cube_time,
                    geo: cube_geo,
                    entity: cube_entity,
                },
                pipeline: read_pipeline(pipeline, pipeline_file.as_deref())?,
            };
            let table = snap.load()?.cube(&req)?;
            if json {
                return print_json(&table);
            }
            print!("{}", table.to_tsv());
        }
        Command::Diversify {
            snap,
            q,
            budget,
            gamma,
            miner,
        } => {
            let req = DiversifyRequest {
                q,
                budget,
                gamma,
                miner: miner.params(),
                ..Default::default()
            };
            let sel = snap.load()?.diversify(&req)?;
            if json {
                return print_json(&sel);
            }
            for (i, st) in sel.steps.iter().enumerate() {
                println!(
                    "{:>3}  {:<24} gain {:.4}  covers {:?}",
                    i + 1,
                    st.doc_id,
                    st.gain,
                    st.newly_covered
                );
            }
            println!(
                "covered events {:?}, residual uncovered mass {:.4}",
                sel.covered, sel.residual_uncovered
            );
        }
        Command::Summarize {
            snap,
            q,
            word_budget,
            rho,
            miner,
        } => {
            let req = SummarizeRequest {
                q,
                word_budget,
                rho,
                miner: miner.params(),
                ..Default::default()
            };
            let summary = snap.load()?.summarize(&req)?;
            if json {
                return print_json(&summary);
            }
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            for s in &summary.sentences {
                println!("[{}] {}", s.doc_id, s.text);
            }
            println!("({} words, events {:?})", summary.words, summary.covered);
        }
        Command::Eval {
            snap,
            testbed,
            alpha,
            depth,
            miner,
        } => {
            let req = EvalRequest {
                testbed,
                alpha,
                depth,
                miner: miner.params(),
                ..Default::default()
            };
            let report = snap.load()?.evaluate(&req)?;
            if json {
                return print_json(&report);
            }
            print!("{}", report.to_table());
        }
        Command::Serve { config } => {
            let config = ServiceConfig::load(config.as_deref())?;
            tokio::runtime::Runtime::new()?.block_on(eventlens_service::serve(config))?;
        }
    }
    Ok(())
}
