//! Turning collision events into resting splats and rain wetness.

mod wetness;

use rand::Rng;

use crate::error::Result;
use crate::gaussian::{quaternion_from_matrix, GaussianSplat};
use crate::math::{tangent_frame, Mat3, Vec3};
use crate::mesh::{Bvh, SurfaceHit};
use crate::mpm::CollisionEvent;
use crate::presets::{particle_rng, particle_splat, CollisionMode, EffectPreset};
use crate::scene_io::SimTransform;

pub use wetness::{apply_wetness_to_scene, WetnessGrid};

const SALT_ACCUMULATED: u64 = 3;

/// A frozen splat (world coordinates) left behind by a collided particle.
#[derive(Debug, Clone, PartialEq)]
pub struct AccumulatedSplat {
    pub splat: GaussianSplat,
    pub birth_frame: u32,
    pub source_id: u64,
}

/// Projects an event onto the mesh: the splat sits `surface_offset` along the
/// surface normal with its local y axis on the normal. Tangent axes get the
/// sampled accumulated scale, the normal axis that times `normal_flattening`.
pub fn project_to_surface(
    event: &CollisionEvent,
    bvh: &Bvh,
    preset: &EffectPreset,
    transform: &SimTransform,
    seed: u64,
) -> Result<(AccumulatedSplat, SurfaceHit)> {
    let hit = bvh.closest_point(&event.position);
    let n = hit.normal;
    let position = hit.point + n * preset.surface_offset;
    let (t1, t2) = tangent_frame(&n);
    let rotation = quaternion_from_matrix(&Mat3::from_columns(&[t1, n, t2]))?;
    let a = &preset.accumulated_scale;
    let s = if a.max > a.min {
        a.at(particle_rng(seed, event.particle_id, SALT_ACCUMULATED).random::<f64>())
    } else {
        a.min
    };
    let splat = GaussianSplat::flat(
        transform.inverse(&position),
        rotation,
        Vec3::new(s, s * preset.normal_flattening, s),
        preset.render_opacity,
        preset.render_color,
    );
    Ok((
        AccumulatedSplat {
            splat,
            birth_frame: event.frame,
            source_id: event.particle_id,
        },
        hit,
    ))
}

pub fn project_snow(
    event: &CollisionEvent,
    bvh: &Bvh,
    preset: &EffectPreset,
    transform: &SimTransform,
    seed: u64,
) -> Result<AccumulatedSplat> {
    project_to_surface(event, bvh, preset, transform, seed).map(|r| r.0)
}

pub fn project_sand(
    event: &CollisionEvent,
    bvh: &Bvh,
    preset: &EffectPreset,
    transform: &SimTransform,
    seed: u64,
) -> Result<AccumulatedSplat> {
    project_to_surface(event, bvh, preset, transform, seed).map(|r| r.0)
}

/// The particle's own splat at the pose where it stopped.
pub fn frozen_splat(event: &CollisionEvent, preset: &EffectPreset, transform: &SimTransform, seed: u64) -> AccumulatedSplat {
    AccumulatedSplat {
        splat: particle_splat(event.particle_id, &event.position, event.rotation, preset, transform, seed),
        birth_frame: event.frame,
        source_id: event.particle_id,
    }
}

/// What a collision event leaves behind.
#[derive(Debug, Clone, PartialEq)]
pub enum Resolution {
    Splat(AccumulatedSplat),
    /// Surface point hit by a raindrop (simulation units).
    Wetness(Vec3),
}

/// Effect-specific handling of one event; with `handling` off every event is
/// frozen in place.
pub fn resolve_event(
    event: &CollisionEvent,
    bvh: &Bvh,
    preset: &EffectPreset,
    transform: &SimTransform,
    seed: u64,
    handling: bool,
) -> Result<Resolution> {
    if !handling {
        return Ok(Resolution::Splat(frozen_splat(event, preset, transform, seed)));
    }
    Ok(match preset.collision {
        CollisionMode::SurfaceProject => Resolution::Splat(project_snow(event, bvh, preset, transform, seed)?),
        CollisionMode::SandAccumulate => Resolution::Splat(project_sand(event, bvh, preset, transform, seed)?),
        CollisionMode::WetnessGrid => Resolution::Wetness(bvh.closest_point(&event.position).point),
        CollisionMode::None => Resolution::Splat(frozen_splat(event, preset, transform, seed)),
    })
}
