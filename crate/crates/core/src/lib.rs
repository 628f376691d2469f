//! Exact information calculus for encoder-decoder classification.
//!
//! The crate is organised around histogram-structured joint models
//! ([`model::HistogramModel`]): a product grid of cells on `R^d`, a class
//! prior, and a per-class pmf over cells, with `X` uniform inside each cell.
//! For such models every quantity of interest (entropies, mutual
//! information, the information lost by an encoder, the cross-entropy risk of
//! a decoder and its split into encoder and decoder effects) has a closed
//! form on a finite table, which [`infocalc`] computes exactly.
//!
//! * [`model`] builds, validates, transforms and samples models.
//! * [`encoders`] holds the encoder taxonomy (selectors, masks, cell and
//!   dyadic quantizers, orbit encoders, transform selectors, chains) and the
//!   exact pushforward machinery.
//! * [`infocalc`] computes measures, losses and risk decompositions.
//! * [`ib`] solves the deterministic information bottleneck over cell groupings.
//! * [`learner`] is a small MLP trained with momentum SGD.
//! * [`harness`] runs the study matrix and the expressiveness sweeps.

pub mod encoders;
pub mod error;
pub mod harness;
pub mod ib;
pub mod infocalc;
pub mod io;
pub mod learner;
pub mod model;
pub mod units;

pub use encoders::{Encoder, Label, Representation, Symbol};
pub use error::{Error, Result};
pub use infocalc::{DecoderTable, JointPmf, McEstimate, RiskDecomposition};
pub use model::{BoundaryGrid, Dataset, DiscreteJoint, HistogramModel, Rotation};
pub use units::{InfoBits, Units};
