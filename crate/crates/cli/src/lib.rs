//! Manifest loading, the built-in manifold catalog, suite orchestration,
//! and report emission for the warpgeom verification tool.

pub mod catalog;
pub mod manifest;
pub mod report;
pub mod suite;
