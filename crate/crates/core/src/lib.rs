//! Toolkit for monodic two-variable counting logic with standpoint
//! modalities: parsing, normal forms, standpoint elimination, description
//! logic front end, and small-model verification oracles.

pub mod corpus;
pub mod dl;
mod error;
pub mod frugal;
pub mod parse;
pub mod reductions;
pub mod removal;
pub mod semantics;
pub mod syntax;
pub mod verify;

pub use error::{Error, Result};
