//! Learner-behavior modeling and outcome prediction from clickstream logs.
//!
//! The pipeline runs in stages, each backed by one module:
//!
//! 1. [`ingest`] — parse timestamped click logs, map raw click types to
//!    categories, and segment each student's stream into sessions
//!    (a gap of more than one hour starts a new session).
//! 2. [`behavior`] — fit a multinomial mixture model (MMM) or hidden Markov
//!    model (HMM) over per-session category counts and decode session states.
//! 3. [`features`] — build per-student token sequences (raw clicks, click
//!    categories, or session states), truncate prefixes along four
//!    dimensions, and rank indicative n-grams.
//! 4. [`classifiers`] — an LSTM sequence classifier trained from scratch,
//!    plus linear-SVM and MLP baselines on count/length features.
//! 5. [`evaluation`] — labeling, filtering, splits, the experiment grid,
//!    cross-course transfer, and significance testing.
//! 6. [`synthgen`] — a seeded synthetic-course generator used as ground
//!    truth by the test suites.

pub mod behavior;
pub mod classifiers;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod ingest;
pub mod numeric;
pub mod synthgen;

pub use error::{Error, Result};
