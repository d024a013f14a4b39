//! Helpers shared by the integration test targets.
#![allow(dead_code)]

pub mod fixtures;
pub mod formula_oracle;
pub mod sql_oracle;
