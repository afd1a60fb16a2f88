//! Command-line front end for `qfreq-core`: plan files, risk tables, bound
//! tables, and SVG plots.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod svg;

pub use config::{ConfigError, Format, PlanConfig};
