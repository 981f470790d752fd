use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gaussian::GaussianSplat;
use crate::math::{Quat, Vec3};
use crate::mpm::{rotation_from_deformation, Material, Particle, RotationMode};
use crate::scene_io::SimTransform;

use super::{align_asset, AssetGaussians, EffectPreset};

const SALT_SCALE: u64 = 1;
const SALT_CLONE: u64 = 2;

/// Per-particle generator, stable across frames for a given run seed.
pub fn particle_rng(seed: u64, id: u64, salt: u64) -> ChaCha8Rng {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for v in [id, salt] {
        h = splitmix(h ^ v);
    }
    ChaCha8Rng::seed_from_u64(h)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The preset's base splat for particle `id` at a simulation-space pose.
pub fn particle_splat(
    id: u64,
    position: &Vec3,
    rotation: Quat,
    preset: &EffectPreset,
    transform: &SimTransform,
    seed: u64,
) -> GaussianSplat {
    let r = &preset.render_scale;
    let u = if r.is_fixed() {
        0.0
    } else {
        particle_rng(seed, id, SALT_SCALE).random::<f64>()
    };
    let scale = Vec3::from_fn(|a, _| r.min[a] + (r.max[a] - r.min[a]) * u);
    GaussianSplat::flat(
        transform.inverse(position),
        rotation,
        scale,
        preset.render_opacity,
        preset.render_color,
    )
}

/// Splats for the active particles of one frame: one per particle (or a
/// whole aligned asset), plus one clone per splat when the preset has a
/// clone policy.
pub fn particles_to_gaussians(
    particles: &[Particle],
    preset: &EffectPreset,
    transform: &SimTransform,
    seed: u64,
    mode: RotationMode,
    asset: Option<&AssetGaussians>,
) -> Result<Vec<GaussianSplat>> {
    let mut out = Vec::with_capacity(particles.len() * if preset.clone.is_some() { 2 } else { 1 });
    for p in particles.iter().filter(|p| p.active && p.material != Material::Stationary) {
        let rotation = if preset.oriented && p.material != Material::Rigid {
            rotation_from_deformation(&p.deformation, mode).map_err(|e| Error::Simulation {
                frame: 0,
                particle: p.id,
                message: e.to_string(),
            })?
        } else {
            Quat::identity()
        };
        if let Some(asset) = asset {
            let scale = preset.asset_scale.unwrap_or(1.0);
            out.extend(align_asset(asset, &transform.inverse(&p.position), &rotation, scale));
            continue;
        }
        let base = particle_splat(p.id, &p.position, rotation, preset, transform, seed);
        if let Some(c) = &preset.clone {
            let mut rng = particle_rng(seed, p.id, SALT_CLONE);
            let dir = random_direction(&mut rng);
            let dist = c.offset.at(rng.random::<f64>());
            let clone = GaussianSplat::flat(
                base.position + dir * dist,
                base.rotation,
                Vec3::repeat(c.scale),
                c.opacity,
                preset.render_color,
            );
            out.push(base);
            out.push(clone);
        } else {
            out.push(base);
        }
    }
    Ok(out)
}

fn random_direction(rng: &mut ChaCha8Rng) -> Vec3 {
    let z: f64 = rng.random_range(-1.0..1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(r * phi.cos(), r * phi.sin(), z)
}
