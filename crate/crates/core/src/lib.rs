//! Usage bibliometrics: measuring research activity from clickstream logs.

pub mod clickstream;
pub mod corpus;
pub mod cohort;
pub mod indicators;
pub mod synth;
pub mod ingest;
pub mod report;
pub mod pipeline;
pub mod verify;
pub mod cli;
