//! Collision geometry: triangle meshes and closest-point queries.

mod bvh;
mod closest;

pub use bvh::Bvh;
pub use closest::{closest_point_on_triangle, TriangleRegion};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{Aabb, Vec3};
use crate::scene_io::SimTransform;

/// Triangles with twice-area below this are dropped as degenerate.
const DEGENERATE_AREA: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
    normals: Vec<Vec3>,
}

/// Closest point on the mesh surface to a query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceHit {
    pub point: Vec3,
    pub normal: Vec3,
    pub distance: f64,
    pub triangle: u32,
}

impl TriangleMesh {
    /// Validates indices, drops zero-area triangles and computes
    /// area-weighted vertex normals when `normals` is `None`.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>, normals: Option<Vec<Vec3>>) -> Result<Self> {
        if let Some(bad) = vertices.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::Invalid(format!("vertex {bad} is not finite")));
        }
        for (i, t) in triangles.iter().enumerate() {
            if t.iter().any(|&v| v as usize >= vertices.len()) {
                return Err(Error::Invalid(format!(
                    "triangle {i} references a vertex outside 0..{}",
                    vertices.len()
                )));
            }
        }
        let triangles: Vec<[u32; 3]> = triangles
            .into_iter()
            .filter(|t| {
                let [a, b, c] = t.map(|i| vertices[i as usize]);
                (b - a).cross(&(c - a)).norm() > DEGENERATE_AREA
            })
            .collect();
        if triangles.is_empty() {
            return Err(Error::Invalid("mesh has no non-degenerate triangles".into()));
        }
        let normals = match normals {
            Some(n) if n.len() == vertices.len() && n.iter().all(|v| v.norm() > 1e-12) => {
                n.into_iter().map(|v| v.normalize()).collect()
            }
            _ => area_weighted_normals(&vertices, &triangles),
        };
        Ok(Self {
            vertices,
            triangles,
            normals,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn triangle(&self, i: usize) -> [Vec3; 3] {
        self.triangles[i].map(|v| self.vertices[v as usize])
    }

    pub fn face_normal(&self, i: usize) -> Vec3 {
        let [a, b, c] = self.triangle(i);
        (b - a).cross(&(c - a)).normalize()
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter())
    }

    /// Same mesh in simulation coordinates. Uniform scaling keeps normals.
    pub fn transformed(&self, t: &SimTransform) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().map(|v| t.apply(v)).collect(),
            triangles: self.triangles.clone(),
            normals: self.normals.clone(),
        }
    }
}

fn area_weighted_normals(vertices: &[Vec3], triangles: &[[u32; 3]]) -> Vec<Vec3> {
    let mut acc = vec![Vec3::zeros(); vertices.len()];
    for t in triangles {
        let [a, b, c] = t.map(|i| vertices[i as usize]);
        // Unnormalised cross product weights by twice the area.
        let n = (b - a).cross(&(c - a));
        for &i in t {
            acc[i as usize] += n;
        }
    }
    acc.into_iter()
        .map(|n| if n.norm() > 0.0 { n.normalize() } else { Vec3::y() })
        .collect()
}
