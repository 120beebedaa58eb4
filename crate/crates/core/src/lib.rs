//! Convert executable byte streams into 224x224 analysis images, extract
//! texture and gradient descriptors, and evaluate nearest-neighbour
//! classifiers over seeded stratified splits.
//!
//! The crate is organised bottom-up:
//!
//! - [`corpus`]: ingestion, fixed-length samples, byte histograms, splits
//! - [`layout`]: row-major, Hilbert and spiral index-to-cell maps
//! - [`imaging`]: the eight image techniques and PNG output
//! - [`features`]: luma, HOG and Haralick descriptors
//! - [`learn`]: forest importances, KNN, hyperparameter search, metrics
//! - [`pipeline`]: the staged, deterministic end-to-end run

pub mod corpus;
pub mod error;
pub mod features;
pub mod imaging;
pub mod layout;
pub mod learn;
pub mod pipeline;
pub mod seed;
pub mod synthetic;

pub use error::{Error, Result};
