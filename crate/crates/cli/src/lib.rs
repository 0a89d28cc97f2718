//! Support library for the `strata-alloc` command-line tool: reference
//! table regeneration and output formatting shared by the binary and its
//! tests. All numerical work lives in `strata_core`; this crate only
//! arranges inputs and renders results.

pub mod tables;
