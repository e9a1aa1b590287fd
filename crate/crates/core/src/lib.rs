//! Neural text classification for patronizing and condescending language
//! detection, built from scratch: corpus handling, imbalance strategies,
//! embedding-based ANN and LSTM classifiers trained with a small
//! reverse-mode autodiff engine, a four-vote ensemble, and shared-task
//! scoring.

pub mod corpus;
pub mod ensemble;
pub mod error;
pub mod imbalance;
pub mod metrics;
pub mod models;
pub mod nncore;
pub mod seed;
pub mod synth;
pub mod textprep;

pub use error::{Error, Result};
