//! Core algorithms for building artwork–music paired datasets from precomputed
//! embeddings and for scoring the resulting captions and generated audio.
//!
//! The crate is `no_std` with `alloc`. Enable `parallel` to spread similarity
//! precomputation over a rayon pool; outputs are identical either way.
//!
//! Modules:
//! - [`corpus`]: embedding sets, identifiers and item metadata.
//! - [`simkernel`]: cosine similarity, blocked matrices and top-k lists.
//! - [`pairing`]: greedy one-to-one audio/image assignment and its oracle.
//! - [`capscore`]: composite caption scores, ROUGE-1 and the regeneration gate.
//! - [`genmetrics`]: Fréchet audio distance, KL divergence and embedding alignment.
//! - [`diffusion`]: variance schedules, DDIM sampling, min-SNR loss and a toy aligner.
//! - [`report`]: distribution summaries, similarity bins and label co-occurrence.
//! - [`rng`]: the seeded generator behind initializers and synthetic data.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod capscore;
pub mod corpus;
pub mod diffusion;
pub mod genmetrics;
pub mod pairing;
pub mod report;
pub mod rng;
pub mod simkernel;

pub use corpus::{EmbeddingSet, ItemMetadata, ItemRef, Modality, Source};
pub use pairing::{Pair, PairingConfig, PairingMode, PairingOutcome};
