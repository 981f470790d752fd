use crate::gaussian::GaussianSplat;
use crate::math::{Aabb, Quat, Vec3};
use crate::scene_io::GaussianScene;

/// A Gaussian object driven by a single particle.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetGaussians {
    pub splats: Vec<GaussianSplat>,
    pub reference_point: Vec3,
    pub reference_orientation: Quat,
}

impl AssetGaussians {
    /// Reference point defaults to the bottom centre of the splat bounds.
    pub fn from_scene(scene: GaussianScene) -> Self {
        let b = Aabb::from_points(scene.splats.iter().map(|s| &s.position));
        let c = b.center();
        Self {
            splats: scene.splats,
            reference_point: Vec3::new(c.x, b.min.y, c.z),
            reference_orientation: Quat::identity(),
        }
    }
}

/// Places the asset so its reference point sits at `position` with its
/// reference orientation turned to `rotation`, scaled uniformly.
pub fn align_asset(asset: &AssetGaussians, position: &Vec3, rotation: &Quat, scale: f64) -> Vec<GaussianSplat> {
    let q = rotation * asset.reference_orientation.inverse();
    asset
        .splats
        .iter()
        .map(|s| GaussianSplat {
            position: position + q * ((s.position - asset.reference_point) * scale),
            rotation: q * s.rotation,
            scale: s.scale * scale,
            opacity: s.opacity,
            color: s.color.clone(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn asset() -> AssetGaussians {
        let splats = (0..4)
            .map(|i| {
                GaussianSplat::flat(
                    Vec3::new(i as f64, (i * i) as f64 * 0.1, -(i as f64)),
                    Quat::from_euler_angles(0.1 * i as f64, 0.2, 0.0),
                    Vec3::new(0.1, 0.2, 0.3),
                    0.5,
                    [0.2, 0.4, 0.6],
                )
            })
            .collect();
        AssetGaussians {
            splats,
            reference_point: Vec3::new(1.0, 0.0, 0.0),
            reference_orientation: Quat::identity(),
        }
    }

    #[test]
    fn identity_pose_keeps_asset() {
        let a = asset();
        let out = align_asset(&a, &a.reference_point, &Quat::identity(), 1.0);
        assert_eq!(out, a.splats);
    }

    #[test]
    fn translation_only_shifts() {
        let a = asset();
        let shift = Vec3::new(0.5, -2.0, 3.0);
        let out = align_asset(&a, &(a.reference_point + shift), &Quat::identity(), 1.0);
        for (o, s) in out.iter().zip(&a.splats) {
            assert!((o.position - s.position - shift).norm() < 1e-12);
            assert_eq!(o.rotation, s.rotation);
        }
    }
}
