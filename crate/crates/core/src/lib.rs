//! Core library for compensatory-movement detection from skeleton sequences:
//! domain types and I/O, the preprocessing chain, a small reverse-mode
//! autodiff tensor engine, the graph-convolutional recurrent classifier with
//! its ablation variants, classical baselines, evaluation metrics, and a
//! synthetic motion generator.

pub mod autodiff;
pub mod error;
pub mod exec;
pub mod baselines;
pub mod io;
pub mod metrics;
pub mod model;
pub mod preprocess;
pub mod skeleton;
pub mod spline;
pub mod split;
pub mod synthgen;

pub use error::{Error, ErrorKind, Result};
