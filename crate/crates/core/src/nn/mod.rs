//! Dense reverse-mode autodiff, MLPs, the Adam optimizer and checkpoints.

pub mod adam;
pub mod checkpoint;
pub mod params;
pub mod tape;

use std::sync::Arc;

pub use adam::{Adam, AdamConfig};
pub use params::{Bound, Init, Linear, Mlp, ParamId, ParamStore, Part};
pub use tape::{BlockProjection, Gradients, Tape, Var};

/// Per-element BCE weights: positives get `#neg / #pos`, negatives 1.
pub fn positive_class_weights(targets: &[f64]) -> Arc<[f64]> {
    let pos = targets.iter().filter(|&&y| y > 0.5).count();
    let neg = targets.len() - pos;
    let w = if pos == 0 { 1.0 } else { neg as f64 / pos as f64 };
    targets.iter().map(|&y| if y > 0.5 { w } else { 1.0 }).collect()
}
