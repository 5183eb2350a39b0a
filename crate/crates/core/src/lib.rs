//! Culture-led regeneration analytics over geo-social check-in data.
//!
//! The pipeline turns venue check-in transitions into yearly directed
//! graphs, aggregates network, venue and expenditure indicators to wards,
//! compares ward cohorts with ANOVA and predicts the direction of
//! deprivation-rank change with four classifiers under stratified
//! cross-validation. [`synth`] generates cities with planted effects so
//! every stage can be checked against known ground truth.

pub mod cohort;
pub mod geo;
pub mod graph;
pub mod ingest;
pub mod metrics;
pub mod par;
pub mod pipeline;
pub mod predict;
pub mod synth;
