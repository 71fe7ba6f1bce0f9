//! File formats and IO around [`xmf_core`]: the XMEB embedding container,
//! metadata and caption JSON Lines, CSV outputs, and run configuration.

pub mod captions;
pub mod config;
pub mod metadata;
pub mod probs;
pub mod tables;
pub mod xmeb;

pub use xmf_core as core;
