//! Dynamic weather effects for static Gaussian-splat scenes.
//!
//! A pre-trained splat scene and its collision mesh are normalized into the
//! unit cube, weather particles are simulated with MLS-MPM against the scene,
//! collided particles are resolved onto the mesh and everything is rendered
//! with a CPU tile rasterizer.

pub mod collision;
pub mod error;
pub mod fixtures;
pub mod gaussian;
pub mod math;
pub mod mesh;
pub mod mpm;
pub mod pipeline;
pub mod presets;
pub mod render;
pub mod scene_io;

pub use error::{Error, Result};
