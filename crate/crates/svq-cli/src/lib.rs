//! Library surface of the `svq` command-line harness: the run configuration
//! (defaults, flat-file parser, echo format) and the verb implementations.
//! The binary in `main.rs` is a thin argument-parsing shell over this, and
//! the acceptance suite drives the same code paths directly.

pub mod commands;
pub mod config;
