//! Batch pipeline for optimal error intervals of quantum state properties.
//!
//! A run is described by one JSON [`config::PipelineConfig`]. Stages write
//! their results into the output directory, stamped with the config hash, so
//! an interrupted run resumes from the last complete stage.

pub mod config;
pub mod error;
pub mod jaynes;
pub mod output;
pub mod pipeline;

pub use config::{PipelineConfig, Stage};
pub use error::CliError;
pub use pipeline::{Pipeline, Summary};
