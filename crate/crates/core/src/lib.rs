//! Event mining, event cubes, multidimensional search and evaluation over
//! semantically annotated text.
//!
//! The pipeline: [`corpus::ingest`] pre-annotated records into a [`corpus::Corpus`],
//! [`corpus::build_index`], retrieve with [`search::search`], mine ranked events with
//! [`miner::event_detect`], aggregate them in an [`cube::EventCube`], and score
//! everything with [`evalkit`]. [`engine::Snapshot`] ties the pieces together for
//! the CLI and the HTTP service.

pub mod annotations;
pub mod corpus;
pub mod cube;
pub mod engine;
pub mod evalkit;
pub mod miner;
pub mod search;
pub mod synth;
pub mod text;
