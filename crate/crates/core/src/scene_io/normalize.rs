//! World ↔ simulation-cube normalization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{Aabb, Vec3};
use crate::mesh::TriangleMesh;

use super::GaussianScene;

/// Normalized height of the lowest scene point.
pub const GROUND_HEIGHT: f64 = 0.02;
/// Free space left on every side of the unit cube.
pub const NORMALIZATION_MARGIN: f64 = 0.02;

/// Uniform scale + translation taking world coordinates into `[0,1]³`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimTransform {
    pub scale: f64,
    pub translation: Vec3,
    pub ground_height: f64,
}

impl SimTransform {
    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            translation: Vec3::zeros(),
            ground_height: GROUND_HEIGHT,
        }
    }

    /// World → simulation.
    pub fn apply(&self, p: &Vec3) -> Vec3 {
        p * self.scale + self.translation
    }

    /// Simulation → world.
    pub fn inverse(&self, p: &Vec3) -> Vec3 {
        (p - self.translation) / self.scale
    }

    pub fn apply_box(&self, b: &Aabb) -> Aabb {
        Aabb::new(self.apply(&b.min), self.apply(&b.max))
    }

    pub fn inverse_box(&self, b: &Aabb) -> Aabb {
        Aabb::new(self.inverse(&b.min), self.inverse(&b.max))
    }

    /// Simulation-unit length → world-unit length.
    pub fn length_to_world(&self, l: f64) -> f64 {
        l / self.scale
    }
}

/// Fits the union of scene and mesh bounds into the unit cube.
pub fn compute_normalization(scene: &GaussianScene, mesh: &TriangleMesh) -> Result<SimTransform> {
    normalization_for_bounds(&scene.source_bounds.union(&mesh.bounds()))
}

/// The longest axis spans `1 - 2·margin`; x and z are centred at 0.5 and the
/// minimum y lands on [`GROUND_HEIGHT`].
pub fn normalization_for_bounds(bounds: &Aabb) -> Result<SimTransform> {
    if bounds.is_empty() {
        return Err(Error::Invalid("cannot normalize empty bounds".into()));
    }
    let extent = bounds.extent();
    let longest = extent.max();
    if !longest.is_finite() || longest <= 1e-12 {
        return Err(Error::Invalid(format!(
            "cannot normalize degenerate bounds with extent {:?}",
            [extent.x, extent.y, extent.z]
        )));
    }
    let scale = (1.0 - 2.0 * NORMALIZATION_MARGIN) / longest;
    let c = bounds.center();
    let translation = Vec3::new(
        0.5 - scale * c.x,
        GROUND_HEIGHT - scale * bounds.min.y,
        0.5 - scale * c.z,
    );
    Ok(SimTransform {
        scale,
        translation,
        ground_height: GROUND_HEIGHT,
    })
}
