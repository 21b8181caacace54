//! Experiment drivers: train / eval / compare / ablate / generalize /
//! latency-bench / physics-check, with CSV and SVG report emission.

pub mod physics_check;
pub mod report;
pub mod svg;

mod drivers;

pub use drivers::*;
pub use physics_check::{run_physics_check, PhysicsCheckReport};
pub use report::EvalReport;
