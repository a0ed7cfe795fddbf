//! Text-based relationship recommendation at desk scale.
//!
//! The crate covers the full pipeline: distant-supervision corpus
//! construction from raw tweets (plus a synthetic generator for verifiable
//! experiments), a hierarchical GRU scorer with coupled attention, six
//! comparison models, pairwise hinge training, and a negative-sampling
//! ranking evaluator with attention-based explanation export.

pub mod baselines;
pub mod corpus;
pub mod couplenet;
pub mod encoders;
pub mod error;
pub mod evalkit;
pub mod model;
pub mod numkit;
pub mod registry;
pub mod trainer;

pub use error::{Error, Result};
