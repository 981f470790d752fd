//! Effect parameter tables, preset overrides and particle → splat conversion.

mod asset;
mod convert;
mod overrides;
mod range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{Aabb, Vec3};
use crate::mpm::{EmitRegion, EmitterSpec, Keyframe, KeyframeTrack, Material, SimConfig};

pub use asset::{align_asset, AssetGaussians};
pub use convert::{particle_rng, particle_splat, particles_to_gaussians};
pub use overrides::{apply_overrides, flatten_preset, Override};
pub use range::{Range1, Range3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectName {
    Snowfall,
    Rainfall,
    Fog,
    Sandstorm,
    Leaves,
    Feather,
    RigidObject,
}

impl EffectName {
    pub const ALL: [EffectName; 7] = [
        EffectName::Snowfall,
        EffectName::Rainfall,
        EffectName::Fog,
        EffectName::Sandstorm,
        EffectName::Leaves,
        EffectName::Feather,
        EffectName::RigidObject,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EffectName::Snowfall => "snowfall",
            EffectName::Rainfall => "rainfall",
            EffectName::Fog => "fog",
            EffectName::Sandstorm => "sandstorm",
            EffectName::Leaves => "leaves",
            EffectName::Feather => "feather",
            EffectName::RigidObject => "rigid_object",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|e| e.as_str()).collect();
                Error::Config(format!("unknown effect '{s}', expected one of {}", names.join(", ")))
            })
    }
}

impl std::fmt::Display for EffectName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionMode {
    /// Project onto the closest surface point, offset along the normal.
    SurfaceProject,
    /// Record impacts in a wetness grid; no visible accumulation.
    WetnessGrid,
    /// Surface projection with splats flattened along the normal.
    SandAccumulate,
    /// Keep the particle's own splat where it stopped.
    None,
}

/// Emitter placement relative to the normalized scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionPreset {
    /// Horizontal patch over the scene's x/z extent.
    AboveScene { height: f64 },
    /// Vertical patch on the plane `x`, spanning the scene's z extent.
    SideX { x: f64, min_y: f64, max_y: f64 },
    /// The scene's bounding box, raised to at least `min_top`.
    SceneVolume { min_top: f64 },
    /// First keyframe of the object track.
    TrackStart,
    Explicit { region: EmitRegion },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterPreset {
    pub region: RegionPreset,
    pub count: u32,
    pub period: u32,
    pub start_frame: u32,
    pub end_frame: Option<u32>,
    pub velocity: [f64; 3],
    pub jitter: [[f64; 2]; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClonePolicy {
    /// Distance of the clone from its source splat.
    pub offset: Range1,
    pub scale: f64,
    pub opacity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WetnessPreset {
    pub decay: f64,
    pub resolution: u32,
    pub kernel_sigma_cells: f64,
    pub kernel_radius_cells: u32,
    /// Gain `k` of the darkening law `1 / (1 + k·w)`.
    pub darkening: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectPreset {
    pub name: EffectName,
    pub material: Material,
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub gravity: [f64; 3],
    pub emitter: EmitterPreset,
    /// Default frame count for runs of this effect.
    pub frames: u32,
    pub render_scale: Range3,
    pub render_opacity: f64,
    pub render_color: [f64; 3],
    /// Orient splats by the deformation rotation.
    pub oriented: bool,
    pub collision: CollisionMode,
    pub surface_offset: f64,
    pub accumulated_scale: Range1,
    /// Normal-axis scale relative to the tangent scale for accumulated splats.
    pub normal_flattening: f64,
    pub clone: Option<ClonePolicy>,
    pub wetness: Option<WetnessPreset>,
    /// Uniform scale applied to an attached Gaussian asset.
    pub asset_scale: Option<f64>,
    pub keyframes: Option<Vec<Keyframe>>,
}

const WEATHER_FRAMES: u32 = 250;
const OBJECT_FRAMES: u32 = 300;

fn above_scene_emitter(velocity: [f64; 3], jitter: [[f64; 2]; 3]) -> EmitterPreset {
    EmitterPreset {
        region: RegionPreset::AboveScene { height: 0.95 },
        count: 1000,
        period: 2,
        start_frame: 0,
        end_frame: None,
        velocity,
        jitter,
    }
}

fn single_particle_emitter() -> EmitterPreset {
    EmitterPreset {
        region: RegionPreset::TrackStart,
        count: 1,
        period: 1,
        start_frame: 0,
        end_frame: Some(1),
        velocity: [0.0; 3],
        jitter: [[0.0; 2]; 3],
    }
}

fn key(frame: u32, x: f64, y: f64, z: f64) -> Keyframe {
    Keyframe {
        frame,
        position: Vec3::new(x, y, z),
    }
}

/// The parameter table for one effect.
pub fn preset(name: EffectName) -> EffectPreset {
    let snow_jitter = [[-0.1, 0.1], [0.0, 0.0], [-0.1, 0.1]];
    let base = EffectPreset {
        name,
        material: Material::Snow,
        youngs_modulus: 0.14,
        poisson_ratio: 0.2,
        gravity: [0.0, -9.8, 0.0],
        emitter: above_scene_emitter([0.0, -0.5, 0.0], snow_jitter),
        frames: WEATHER_FRAMES,
        render_scale: Range3::iso(0.005),
        render_opacity: 0.65,
        render_color: [0.95, 0.95, 0.96],
        oriented: true,
        collision: CollisionMode::SurfaceProject,
        surface_offset: 0.01,
        accumulated_scale: Range1::fixed(0.01),
        normal_flattening: 1.0,
        clone: None,
        wetness: None,
        asset_scale: None,
        keyframes: None,
    };
    let object = EffectPreset {
        material: Material::Rigid,
        youngs_modulus: 0.8,
        poisson_ratio: 0.3,
        emitter: single_particle_emitter(),
        frames: OBJECT_FRAMES,
        render_scale: Range3::iso(0.03),
        render_opacity: 0.85,
        collision: CollisionMode::None,
        surface_offset: 0.0,
        accumulated_scale: Range1::fixed(0.03),
        ..base.clone()
    };
    match name {
        EffectName::Snowfall => base,
        EffectName::Rainfall => EffectPreset {
            material: Material::Fluid,
            youngs_modulus: 0.08,
            poisson_ratio: 0.45,
            render_scale: Range3::fixed([0.002, 0.006, 0.002]),
            render_opacity: 0.25,
            render_color: [0.85, 0.87, 0.9],
            collision: CollisionMode::WetnessGrid,
            surface_offset: 0.0,
            accumulated_scale: Range1::fixed(0.002),
            wetness: Some(WetnessPreset {
                decay: 0.95,
                resolution: 64,
                kernel_sigma_cells: 1.5,
                kernel_radius_cells: 3,
                darkening: 0.4,
            }),
            ..base
        },
        EffectName::Sandstorm => EffectPreset {
            material: Material::Sand,
            youngs_modulus: 0.08,
            poisson_ratio: 0.3,
            emitter: EmitterPreset {
                region: RegionPreset::SideX { x: 0.02, min_y: 0.1, max_y: 0.6 },
                velocity: [0.0, 0.0, 0.0],
                jitter: [[0.8, 1.2], [-0.2, 0.2], [0.0, 0.0]],
                ..base.emitter.clone()
            },
            render_scale: Range3::iso_range(0.0025, 0.003),
            render_opacity: 0.85,
            render_color: [0.92, 0.79, 0.62],
            collision: CollisionMode::SandAccumulate,
            surface_offset: 0.001,
            accumulated_scale: Range1::new(0.015, 0.025),
            normal_flattening: 0.2,
            clone: Some(ClonePolicy {
                offset: Range1::new(0.001, 0.005),
                scale: 0.035,
                opacity: 0.15,
            }),
            ..base
        },
        EffectName::Fog => EffectPreset {
            material: Material::Fluid,
            youngs_modulus: 0.08,
            poisson_ratio: 0.45,
            gravity: [0.5, -0.1, 0.0],
            emitter: EmitterPreset {
                region: RegionPreset::SceneVolume { min_top: 0.5 },
                count: 5000,
                period: 1,
                start_frame: 0,
                end_frame: Some(1),
                velocity: [0.5, 0.0, 0.0],
                jitter: [[-0.1, 0.1]; 3],
            },
            render_scale: Range3::iso(0.25),
            render_opacity: 0.08,
            render_color: [0.85, 0.85, 0.85],
            oriented: false,
            collision: CollisionMode::None,
            surface_offset: 0.0,
            accumulated_scale: Range1::fixed(0.25),
            ..base
        },
        EffectName::Leaves => EffectPreset {
            gravity: [0.0, -4.8, 0.0],
            emitter: EmitterPreset {
                region: RegionPreset::AboveScene { height: 0.9 },
                count: 7,
                period: 25,
                start_frame: 0,
                end_frame: None,
                velocity: [0.0, 0.0, 0.0],
                jitter: [[-0.05, 0.05], [-0.2, -0.1], [-0.05, 0.05]],
            },
            frames: WEATHER_FRAMES,
            render_color: [0.45, 0.6, 0.25],
            asset_scale: Some(0.035),
            ..object
        },
        EffectName::Feather => EffectPreset {
            render_color: [0.96, 0.96, 0.94],
            asset_scale: Some(0.12),
            keyframes: Some(vec![
                key(0, 0.35, 0.85, 0.5),
                key(100, 0.55, 0.6, 0.42),
                key(200, 0.42, 0.35, 0.56),
                key(280, 0.5, 0.1, 0.5),
            ]),
            ..object
        },
        EffectName::RigidObject => EffectPreset {
            render_color: [0.7, 0.7, 0.7],
            asset_scale: Some(0.075),
            keyframes: Some(vec![
                key(0, 0.2, 0.9, 0.5),
                key(120, 0.45, 0.45, 0.5),
                key(240, 0.5, 0.1, 0.5),
            ]),
            ..object
        },
    }
}

impl EffectPreset {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("preset {}: {m}", self.name)));
        if !(self.youngs_modulus > 0.0) {
            return bad("youngs_modulus must be positive".into());
        }
        if !(self.poisson_ratio > 0.0 && self.poisson_ratio < 0.5) {
            return bad("poisson_ratio must lie in (0, 0.5)".into());
        }
        if !(self.render_opacity > 0.0 && self.render_opacity <= 1.0) {
            return bad("render_opacity must lie in (0, 1]".into());
        }
        if !self.render_scale.is_valid() {
            return bad("render_scale components must be positive with min <= max".into());
        }
        if self.render_color.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return bad("render_color channels must lie in [0, 1]".into());
        }
        if !self.accumulated_scale.is_valid() || self.accumulated_scale.min <= 0.0 {
            return bad("accumulated_scale must be positive with min <= max".into());
        }
        if !(self.normal_flattening > 0.0) || !(self.surface_offset >= 0.0) {
            return bad("normal_flattening must be positive and surface_offset non-negative".into());
        }
        if self.emitter.period == 0 {
            return bad("emitter.period must be at least 1".into());
        }
        if self.material == Material::Stationary {
            return bad("material cannot be stationary".into());
        }
        if let Some(c) = &self.clone {
            if !c.offset.is_valid() || !(c.scale > 0.0) || !(c.opacity > 0.0 && c.opacity <= 1.0) {
                return bad("clone policy needs a valid offset range, positive scale and opacity in (0, 1]".into());
            }
        }
        if let Some(w) = &self.wetness {
            if !(w.decay > 0.0 && w.decay < 1.0) || w.resolution == 0 || !(w.kernel_sigma_cells > 0.0) {
                return bad("wetness needs decay in (0, 1), resolution >= 1 and positive sigma".into());
            }
            if !(w.darkening >= 0.0) {
                return bad("wetness.darkening must be non-negative".into());
            }
        }
        if self.collision == CollisionMode::WetnessGrid && self.wetness.is_none() {
            return bad("wetness_grid collision needs wetness parameters".into());
        }
        if let Some(s) = self.asset_scale {
            if !(s > 0.0) {
                return bad("asset_scale must be positive".into());
            }
        }
        if matches!(self.emitter.region, RegionPreset::TrackStart) && self.keyframes.is_none() {
            return bad("track_start emitters need keyframes".into());
        }
        if let Some(k) = &self.keyframes {
            KeyframeTrack::new(k.clone())?;
        }
        Ok(())
    }

    pub fn track(&self) -> Option<KeyframeTrack> {
        self.keyframes.clone().map(|keys| KeyframeTrack { keys })
    }

    /// Simulation settings implied by this preset on top of `base`.
    pub fn sim_config(&self, base: &SimConfig) -> SimConfig {
        SimConfig {
            gravity: Vec3::from(self.gravity),
            youngs_modulus: self.youngs_modulus,
            poisson_ratio: self.poisson_ratio,
            ..base.clone()
        }
    }

    /// Concrete emitter for a scene occupying `scene` (simulation units).
    pub fn emitter_spec(&self, scene: &Aabb) -> Result<EmitterSpec> {
        let e = &self.emitter;
        let unit = |v: f64| v.clamp(0.0, 1.0);
        let region = match &e.region {
            RegionPreset::AboveScene { height } => EmitRegion::PlaneY {
                min_x: unit(scene.min.x),
                max_x: unit(scene.max.x),
                min_z: unit(scene.min.z),
                max_z: unit(scene.max.z),
                y: *height,
            },
            RegionPreset::SideX { x, min_y, max_y } => EmitRegion::PlaneX {
                x: *x,
                min_y: *min_y,
                max_y: *max_y,
                min_z: unit(scene.min.z),
                max_z: unit(scene.max.z),
            },
            RegionPreset::SceneVolume { min_top } => EmitRegion::Box {
                min: scene.min.map(unit),
                max: Vec3::new(scene.max.x, scene.max.y.max(*min_top), scene.max.z).map(unit),
            },
            RegionPreset::TrackStart => {
                let k = self
                    .keyframes
                    .as_ref()
                    .and_then(|k| k.first())
                    .ok_or_else(|| Error::Config("track_start emitter needs keyframes".into()))?;
                EmitRegion::Point { at: k.position }
            }
            RegionPreset::Explicit { region } => region.clone(),
        };
        let spec = EmitterSpec {
            region,
            count: e.count,
            period: e.period,
            start_frame: e.start_frame,
            end_frame: e.end_frame,
            velocity: Vec3::from(e.velocity),
            jitter: e.jitter,
            material: self.material,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_validate() {
        for name in EffectName::ALL {
            let p = preset(name);
            p.validate().unwrap();
            assert_eq!(EffectName::parse(name.as_str()).unwrap(), name);
            let scene = Aabb::new(Vec3::new(0.02, 0.02, 0.1), Vec3::new(0.98, 0.4, 0.9));
            p.emitter_spec(&scene).unwrap();
        }
        assert!(EffectName::parse("hail").is_err());
    }

    #[test]
    fn scene_volume_is_raised_for_flat_scenes() {
        let flat = Aabb::new(Vec3::new(0.02, 0.02, 0.02), Vec3::new(0.98, 0.02, 0.98));
        let spec = preset(EffectName::Fog).emitter_spec(&flat).unwrap();
        let b = spec.region.bounds();
        assert_eq!(b.max.y, 0.5);
        assert_eq!(b.min.y, 0.02);
    }
}
