//! Run configuration and the simulate → resolve → render loop.

mod ablation;
mod config;
mod listing;
mod run;

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::math::{quat_from_wxyz, Aabb, Vec3};
use crate::mesh::{Bvh, TriangleMesh};
use crate::mpm::SimConfig;
use crate::presets::{AssetGaussians, EffectPreset};
use crate::scene_io::{
    compute_normalization, load_cameras, load_gaussian_ply, load_gaussian_ply_with, load_mesh, CameraSpec,
    GaussianScene, SimTransform,
};

pub use ablation::{ablate_collisions, ablate_prepared, AblationReport, DistanceStats, REST_TOLERANCE};
pub use config::{AssetReference, OrbitSpec, RunConfig, CONFIG_VERSION};
pub use listing::list_presets;
pub use run::{
    frame_state_path, render_frame, render_path, render_prepared, run_render, run_simulate, simulate_prepared,
    PersistedFrame, RenderSummary, RunSummary, Runner,
};

/// Half-open range of frame indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameRange {
    pub start: u32,
    pub end: u32,
}

impl FrameRange {
    pub fn new(start: u32, end: u32) -> Result<Self> {
        if end <= start {
            return Err(Error::Config(format!("empty frame range {start}..{end}")));
        }
        Ok(Self { start, end })
    }

    /// Accepts `a..b`, `a..=b` or a single index `a`.
    pub fn parse(s: &str) -> Result<Self> {
        let num = |t: &str| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| Error::Config(format!("bad frame range '{s}', expected a..b")))
        };
        if let Some((a, b)) = s.split_once("..=") {
            Self::new(num(a)?, num(b)?.saturating_add(1))
        } else if let Some((a, b)) = s.split_once("..") {
            Self::new(num(a)?, num(b)?)
        } else {
            let a = num(s)?;
            Self::new(a, a.saturating_add(1))
        }
    }

    pub fn contains(&self, frame: u32) -> bool {
        (self.start..self.end).contains(&frame)
    }

    pub fn iter(&self) -> std::ops::Range<u32> {
        self.start..self.end
    }

    pub fn len(&self) -> usize {
        (self.end - self.start) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// Everything loaded and derived from a run configuration.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: RunConfig,
    pub preset: EffectPreset,
    pub sim_config: SimConfig,
    /// Static scene in world coordinates.
    pub scene: GaussianScene,
    /// World → simulation normalization.
    pub transform: SimTransform,
    /// Collision mesh in simulation units.
    pub bvh: Bvh,
    /// World-space bounds of scene and mesh together.
    pub world_bounds: Aabb,
    pub asset: Option<AssetGaussians>,
}

/// Validates `config` and loads its inputs.
pub fn prepare(config: &RunConfig) -> Result<Prepared> {
    config.validate()?;
    let scene = load_gaussian_ply(&config.scene)?;
    let mesh = load_mesh(&config.mesh)?;
    let asset = match &config.asset {
        Some(p) => Some(load_gaussian_ply_with(p, config.asset_activation)?),
        None => None,
    };
    prepare_with(config.clone(), scene, mesh, asset)
}

/// Like [`prepare`] but with inputs already in memory; file paths in the
/// config are ignored.
pub fn prepare_with(
    config: RunConfig,
    scene: GaussianScene,
    mesh: TriangleMesh,
    asset: Option<GaussianScene>,
) -> Result<Prepared> {
    let preset = config.effect_preset()?;
    let sim_config = config.sim_config()?;
    let transform = compute_normalization(&scene, &mesh)?;
    let world_bounds = Aabb::from_points(scene.splats.iter().map(|s| &s.position)).union(&mesh.bounds());
    let bvh = Bvh::build(mesh.transformed(&transform))?;
    let asset = asset.map(|a| {
        let mut a = AssetGaussians::from_scene(a);
        if let Some(r) = &config.asset_reference {
            a.reference_point = Vec3::from(r.point);
            a.reference_orientation = quat_from_wxyz(r.orientation);
        }
        a
    });
    Ok(Prepared {
        config,
        preset,
        sim_config,
        scene,
        transform,
        bvh,
        world_bounds,
        asset,
    })
}

impl Prepared {
    /// Cameras from the camera file, else the orbit spec, else one default
    /// orbit view.
    pub fn cameras(&self) -> Result<Vec<CameraSpec>> {
        if let Some(p) = &self.config.camera {
            return load_cameras(p);
        }
        orbit_cameras(&self.config.orbit.clone().unwrap_or_default(), &self.world_bounds)
    }

    pub fn output_dir(&self) -> &Path {
        &self.config.output
    }

    pub fn frames_dir(&self) -> PathBuf {
        self.config.output.join("frames")
    }

    pub fn renders_dir(&self) -> PathBuf {
        self.config.output.join("renders")
    }
}

/// `count` cameras evenly spaced in azimuth around the orbit centre.
pub fn orbit_cameras(spec: &OrbitSpec, scene: &Aabb) -> Result<Vec<CameraSpec>> {
    let center = spec.center.map(Vec3::from).unwrap_or_else(|| scene.center());
    let radius = spec.radius.unwrap_or_else(|| 1.3 * scene.extent().max());
    if !(radius > 0.0) {
        return Err(Error::Config("orbit radius must be positive".into()));
    }
    let el = spec.elevation_deg.to_radians();
    (0..spec.count)
        .map(|i| {
            let az = (spec.start_azimuth_deg + 360.0 * i as f64 / spec.count as f64).to_radians();
            let dir = Vec3::new(el.cos() * az.sin(), el.sin(), el.cos() * az.cos());
            let mut cam = CameraSpec::look_at(
                center + dir * radius,
                center,
                Vec3::y(),
                spec.width,
                spec.height,
                spec.fov_deg,
            )?;
            cam.name = Some(format!("orbit{i:02}"));
            Ok(cam)
        })
        .collect()
}
