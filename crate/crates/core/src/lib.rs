//! Spectral graph networks.
//!
//! Message passing runs in parallel over an input ("spatial") graph and a
//! complete "spectral" graph whose vertices are the lowest Laplacian
//! eigenvectors. Each step exchanges node latents between the two through
//! eigenpooling (`Uᵀ·V`) and eigenbroadcasting (`U·S`).

pub mod blocks;
pub mod datasets;
pub mod error;
pub mod graph;
pub mod harness;
pub mod matrix;
pub mod model;
pub mod nn;
pub mod spectral;

pub use error::{Error, Result};
pub use graph::{disjoint_union, BatchedGraph, Graph, GraphLine, Label};
pub use matrix::Matrix;
