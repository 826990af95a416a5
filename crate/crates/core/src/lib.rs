//! Context-aware movie recommendation toolkit.
//!
//! The pipeline pre-filters a rating corpus down to a target context, runs
//! memory-based collaborative filtering on what survives, and blends the CF
//! predictions with genre weights derived by the Analytic Hierarchy Process.
//! [`eval`] measures the resulting top-N lists with precision, recall and
//! F-measure.

pub mod ahp;
pub mod cf;
pub mod contextfilter;
pub mod eval;
pub mod ingest;
pub mod model;
pub mod pipeline;
