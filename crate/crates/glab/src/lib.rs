//! Config parsing, experiment orchestration and report emission for the `glab` CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod report;
pub mod validate;
