use serde::Serialize;

use crate::collision::{resolve_event, AccumulatedSplat, Resolution};
use crate::error::Result;
use crate::mesh::Bvh;
use crate::scene_io::SimTransform;

use super::{prepare, Prepared, RunConfig, Runner};

/// Tolerance on the rest distance of resolved splats.
pub const REST_TOLERANCE: f64 = 1e-4;

/// Distances (simulation units) from splat centres to the closest mesh point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceStats {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl DistanceStats {
    pub fn measure(splats: &[AccumulatedSplat], bvh: &Bvh, transform: &SimTransform) -> Self {
        let d: Vec<f64> = splats
            .iter()
            .map(|a| {
                let p = transform.apply(&a.splat.position);
                (p - bvh.closest_point(&p).point).norm()
            })
            .collect();
        let n = d.len();
        Self {
            count: n,
            mean: if n == 0 { f64::NAN } else { d.iter().sum::<f64>() / n as f64 },
            min: d.iter().copied().fold(f64::INFINITY, f64::min),
            max: d.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationReport {
    pub effect: String,
    pub frames: u32,
    pub surface_offset: f64,
    pub with_handling: DistanceStats,
    pub without_handling: DistanceStats,
    /// Every resolved splat lies within tolerance of the surface offset.
    pub resolved_on_surface: bool,
    /// Mean distance without handling is strictly larger than with it.
    pub handling_reduces_distance: bool,
}

/// Simulates once and resolves every collision event both with and without
/// collision handling.
pub fn ablate_collisions(config: &RunConfig) -> Result<AblationReport> {
    let prep = prepare(config)?;
    ablate_prepared(&prep, |_| Ok(()))
}

/// As [`ablate_collisions`]; `after_frame` sees the handled run after every
/// frame.
pub fn ablate_prepared(prep: &Prepared, mut after_frame: impl FnMut(&Runner) -> Result<()>) -> Result<AblationReport> {
    let frames = prep.config.frame_count();
    let seed = prep.sim_config.seed;
    let mut runner = Runner::new(prep, true)?;
    let mut frozen = Vec::new();
    while runner.frame() < frames {
        let report = runner.step()?;
        for event in &report.events {
            if let Resolution::Splat(s) = resolve_event(event, &prep.bvh, &prep.preset, &prep.transform, seed, false)? {
                frozen.push(s);
            }
        }
        after_frame(&runner)?;
    }
    let with_handling = DistanceStats::measure(runner.accumulated(), &prep.bvh, &prep.transform);
    let without_handling = DistanceStats::measure(&frozen, &prep.bvh, &prep.transform);
    let offset = prep.preset.surface_offset;
    let resolved_on_surface = with_handling.count > 0
        && (with_handling.min - offset).abs() <= REST_TOLERANCE
        && (with_handling.max - offset).abs() <= REST_TOLERANCE;
    Ok(AblationReport {
        effect: prep.preset.name.to_string(),
        frames,
        surface_offset: offset,
        with_handling,
        without_handling,
        resolved_on_surface,
        handling_reduces_distance: without_handling.mean > with_handling.mean,
    })
}
