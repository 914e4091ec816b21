//! Localizing anomalous events in long test-execution logs.
//!
//! Raw logs are grouped into sessions ([`ingest`]), mined into template ids
//! ([`miner`]), and fed to counting N-gram next-event models ([`ngram`]).
//! Each event of a suspect run gets two anomaly scores: how often it
//! followed its context in normal runs, and the conditional probability of
//! that. [`eval`] measures next-event accuracy against a constant baseline
//! and across window sizes; [`report`] writes score streams and SVG plots.

pub mod error;
pub mod eval;
pub mod event;
pub mod formats;
pub mod ingest;
pub mod miner;
pub mod ngram;
pub mod pipeline;
pub mod report;
pub mod synthetic;

pub use error::{Error, Result};
pub use eval::{DummyPredictor, EvalReport, NextEventPredictor};
pub use event::{EventId, EventSequence, Label};
pub use ingest::{LabeledCorpus, SplitSpec};
pub use miner::{MinerConfig, TemplateMiner};
pub use ngram::{AnomalyScore, NGramModel, Prediction, WindowSize};
