//! Forecasting exceptional growth of research communities.

pub mod citegraph;
pub mod cli;
pub mod cluster;
pub mod corpus;
pub mod error;
pub mod evaluate;
pub mod forecast;
pub mod indicators;
pub mod pipeline;
pub mod regression;
pub mod synth;

pub type PaperId = u64;
pub type RcId = u32;
pub type Year = i32;

pub use error::{Error, Result};
