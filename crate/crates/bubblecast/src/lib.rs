//! File formats, the sealing ledger and the command-line front end for
//! [`bubblecast_core`].

pub mod cli;
pub mod config;
pub mod ingest;
pub mod pipeline;
pub mod report;
pub mod sealing;
