//! File formats, parallel table campaigns and the `fedgame` command line
//! built on [`fedgame_core`].
//!
//! Every artifact is plain CSV or JSON and every command is a pure function
//! of its inputs and seeds, so reruns produce byte-identical files.

pub mod campaign;
pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod tables;

pub use error::{Error, Result};
