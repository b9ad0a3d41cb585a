//! Capability-based data valuation and curriculum scheduling for
//! question-answering corpora.
//!
//! The pipeline: ingest a corpus ([`corpus`]), compute per-sample data
//! property metrics ([`metrics`]), normalize and decorrelate them into
//! four capability-specific values ([`valuation`]), measure a model's
//! capability levels from logged performance ([`assessment`]), and plan
//! training stages or active-learning queries that track the capability
//! boundary ([`scheduler`]). A synthetic-learner laboratory ([`simlab`])
//! closes the loop end to end without neural training, and [`report`]
//! produces the distribution and correlation tables.

// index loops over fixed 4x4 matrices and parallel arrays read better
// than iterator chains in the numeric kernels
#![allow(clippy::needless_range_loop)]

pub mod assessment;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod report;
pub mod scheduler;
pub mod simlab;
pub mod valuation;

pub use error::{CoreError, Result};
