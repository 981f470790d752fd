use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{Aabb, Vec3};

use super::{Material, Particle};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EmitRegion {
    Box { min: Vec3, max: Vec3 },
    /// Horizontal patch at height `y`.
    PlaneY { min_x: f64, max_x: f64, min_z: f64, max_z: f64, y: f64 },
    /// Vertical patch at `x`.
    PlaneX { x: f64, min_y: f64, max_y: f64, min_z: f64, max_z: f64 },
    Point { at: Vec3 },
}

impl EmitRegion {
    pub fn bounds(&self) -> Aabb {
        match *self {
            EmitRegion::Box { min, max } => Aabb::new(min, max),
            EmitRegion::PlaneY { min_x, max_x, min_z, max_z, y } => {
                Aabb::new(Vec3::new(min_x, y, min_z), Vec3::new(max_x, y, max_z))
            }
            EmitRegion::PlaneX { x, min_y, max_y, min_z, max_z } => {
                Aabb::new(Vec3::new(x, min_y, min_z), Vec3::new(x, max_y, max_z))
            }
            EmitRegion::Point { at } => Aabb::new(at, at),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec3 {
        let b = self.bounds();
        let mut p = b.min;
        for a in 0..3 {
            if b.max[a] > b.min[a] {
                p[a] = rng.random_range(b.min[a]..b.max[a]);
            }
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterSpec {
    pub region: EmitRegion,
    pub count: u32,
    /// Emit on frames where `(frame - start_frame) % period == 0`.
    pub period: u32,
    pub start_frame: u32,
    /// First frame that no longer emits; `None` means unlimited.
    pub end_frame: Option<u32>,
    pub velocity: Vec3,
    /// Per-component `[lo, hi]` added to `velocity`.
    pub jitter: [[f64; 2]; 3],
    pub material: Material,
}

impl EmitterSpec {
    pub fn validate(&self) -> Result<()> {
        if self.period == 0 {
            return Err(Error::Config("emitter period must be at least 1".into()));
        }
        let b = self.region.bounds();
        let unit = Aabb::new(Vec3::zeros(), Vec3::repeat(1.0));
        if b.min.iter().chain(b.max.iter()).any(|v| !v.is_finite()) || !unit.contains_box(&b) {
            return Err(Error::Config(format!(
                "emitter region [{:.4}, {:.4}, {:.4}]..[{:.4}, {:.4}, {:.4}] is outside the unit cube",
                b.min.x, b.min.y, b.min.z, b.max.x, b.max.y, b.max.z
            )));
        }
        for (a, [lo, hi]) in self.jitter.iter().enumerate() {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Config(format!("emitter jitter on axis {a} must satisfy lo <= hi")));
            }
        }
        if self.material == Material::Stationary {
            return Err(Error::Config("emitters cannot produce stationary particles".into()));
        }
        Ok(())
    }

    pub fn emits_on(&self, frame: u32) -> bool {
        frame >= self.start_frame
            && self.end_frame.is_none_or(|end| frame < end)
            && (frame - self.start_frame) % self.period == 0
    }
}

/// Particles emitted on `frame`, with ids starting at `first_id`. For each
/// particle the position is drawn first, then the three velocity components.
pub fn emit(spec: &EmitterSpec, frame: u32, first_id: u64, rng: &mut ChaCha8Rng) -> Result<Vec<Particle>> {
    spec.validate()?;
    if !spec.emits_on(frame) {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(spec.count as usize);
    for n in 0..spec.count as u64 {
        let pos = spec.region.sample(rng);
        let mut vel = spec.velocity;
        for a in 0..3 {
            let [lo, hi] = spec.jitter[a];
            if hi > lo {
                vel[a] += rng.random_range(lo..hi);
            } else {
                vel[a] += lo;
            }
        }
        out.push(Particle::new(first_id + n, spec.material, pos, vel, frame));
    }
    Ok(out)
}
