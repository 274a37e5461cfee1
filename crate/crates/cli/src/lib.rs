//! Library surface of the `intervene` CLI: scenario configs, versioned
//! checkpoints, file formats, the checkpointable policy runtime, and the
//! subcommand implementations.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod data;
pub mod runtime;
