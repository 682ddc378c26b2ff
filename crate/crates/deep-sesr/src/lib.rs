//! File formats, training and the command-line front end for the
//! `deep-sesr-core` model.

pub mod bench;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod manifest;
pub mod prepare;
pub mod tensorfile;
pub mod trainer;

pub use error::{Error, Result};
