//! Monte-Carlo simulation of physical-layer secrecy in wiretap channels
//! assisted by a reconfigurable intelligent surface.

pub mod acceptance;
pub mod channel;
pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod output;
pub mod ris;
pub mod scenario;
pub mod secrecy;

pub use error::{Error, Result};
