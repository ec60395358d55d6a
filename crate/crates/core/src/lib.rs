//! Recommending a static code analyzer for a project from its
//! characteristics.
//!
//! The pipeline labels each analyzer's warnings as actionable or not by
//! tracking them across two releases ([`evolution`]), groups identical
//! warnings reported by different analyzers ([`alignment`]), scores every
//! analyzer per project ([`effectiveness`]), relates project features to the
//! best analyzers ([`mining`]) and trains recommenders on them
//! ([`recommender`]). [`testkit`] generates synthetic corpora with planted
//! ground truth.

pub mod alignment;
pub mod dataset;
pub mod effectiveness;
pub mod error;
pub mod evolution;
pub mod ingestion;
pub mod learners;
pub mod mining;
pub mod model;
pub mod pipeline;
pub mod recommender;
pub mod rng;
pub mod testkit;

pub use error::{Error, Result};
pub use model::{AlignedWarning, Beta, ScaId, WarningLabel};
