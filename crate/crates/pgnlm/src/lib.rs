//! File formats, scene configs, multi-threaded drivers and the `pgnlm`
//! command line on top of [`pgnlm_core`].

pub use pgnlm_core as core;

pub mod cli;
pub mod config;
pub mod evaluate;
pub mod export;
pub mod io;
pub mod par;
