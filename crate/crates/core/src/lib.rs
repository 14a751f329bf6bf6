//! Streaming topic modelling for short-text corpora: online LDA, an
//! embedding-cluster track with c-TF-IDF topics, C_V coherence, topic
//! hierarchy and dynamics, and static reports.

pub mod cli;
pub mod cluster;
pub mod coherence;
pub mod corpus;
pub mod dynamics;
pub mod embedstore;
pub mod error;
pub mod hierarchy;
pub mod lda;
pub mod math;
pub mod pipeline;
pub mod report;
pub mod synthetic;
pub mod textprep;
pub mod topicrep;

pub use error::{Error, Result};
