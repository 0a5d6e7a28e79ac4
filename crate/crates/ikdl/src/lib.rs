//! File formats, model persistence, run configuration and the command-line
//! front end for [`ikdl_core`].

pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod model_file;
pub mod outputs;
pub mod pipeline;
pub mod report;

pub use error::{Error, Result};
