//! Spectral solution of linear evolution problems with multipoint conditions.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod data;
pub mod expr;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod quad;
pub mod reduce;
pub mod representation;
pub mod scalar;
pub mod spectral;
pub mod wellposed;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
