//! Filesystem side of the toolkit: dataset ingestion, file formats, run
//! manifests and the `ethereal` command-line pipeline.

pub mod commands;
pub mod config;
pub mod datasets;
pub mod formats;
