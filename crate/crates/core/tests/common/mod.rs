//! Independent reference implementations shared by integration tests.
#![allow(dead_code)]

pub mod cluster_oracle;
pub mod conic_oracle;
pub mod splat_oracle;
pub mod fixtures;
