//! MLS-MPM simulation of weather particles over a static splat scene.

mod constitutive;
mod emitter;
mod grid;
mod sim;

use nalgebra::SVD;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::quaternion_from_matrix;
use crate::math::{Aabb, Mat3, Quat, Vec3};
use crate::scene_io::{GaussianScene, SimTransform};

pub use constitutive::{lame_parameters, Plasticity};
pub use emitter::{emit, EmitRegion, EmitterSpec};
pub use grid::{MpmGrid, GRID_RESOLUTION};
pub use sim::{FrameReport, SimStats, Simulation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Material {
    Stationary,
    Snow,
    Fluid,
    Sand,
    Rigid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub id: u64,
    pub material: Material,
    pub position: Vec3,
    pub velocity: Vec3,
    /// APIC affine velocity.
    pub affine: Mat3,
    pub deformation: Mat3,
    pub plastic_det: f64,
    pub active: bool,
    pub spawn_frame: u32,
    /// Position at the start of the current output frame.
    pub previous_position: Vec3,
    /// Index of the keyframe track driving this particle.
    pub track: Option<u32>,
    /// Rotation of the last polar decomposition of `deformation`.
    pub(crate) polar: Mat3,
    /// Right singular vectors of the last decomposition, reused as the
    /// starting basis for the next one.
    pub(crate) svd_basis: Mat3,
}

impl Particle {
    pub fn new(id: u64, material: Material, position: Vec3, velocity: Vec3, spawn_frame: u32) -> Self {
        Self {
            id,
            material,
            position,
            velocity,
            affine: Mat3::zeros(),
            deformation: Mat3::identity(),
            plastic_det: 1.0,
            active: true,
            spawn_frame,
            previous_position: position,
            track: None,
            polar: Mat3::identity(),
            svd_basis: Mat3::identity(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub particle_id: u64,
    pub frame: u32,
    pub material: Material,
    pub position: Vec3,
    pub rotation: Quat,
}

/// Which rotation is taken from `F = UΣVᵀ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationMode {
    /// Polar rotation `UVᵀ`.
    #[default]
    Polar,
    /// Literal `VUᵀ`.
    StrictPaper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionMode {
    /// Single-threaded ground truth.
    Reference,
    /// Rayon over particles, grid slabs and nodes; bitwise equal to `Reference`.
    #[default]
    Parallel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub gravity: Vec3,
    pub substeps: u32,
    pub dt: f64,
    /// Inactivity threshold on per-frame displacement.
    pub delta: f64,
    /// Ω is `[0,1]³` grown by this much on every face.
    pub domain_margin: f64,
    /// Particles are clamped to `[wall_margin, 1 - wall_margin]³`.
    pub wall_margin: f64,
    /// Grid cells next to each face with zero outward velocity.
    pub boundary_cells: u32,
    pub seed: u64,
    pub total_frames: u32,
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub particle_mass: f64,
    pub particle_volume: f64,
    /// Maximum particle speed in cells per substep.
    pub max_cells_per_substep: f64,
    /// Grid nodes whose stationary mass fraction exceeds this are held still.
    pub stationary_fraction: f64,
    /// Frames after spawn during which a slow particle stays active.
    pub spawn_grace_frames: u32,
    pub snow: Plasticity,
    pub sand: Plasticity,
    pub rotation_mode: RotationMode,
    pub execution: ExecutionMode,
}

impl Default for SimConfig {
    fn default() -> Self {
        let dx = 1.0 / GRID_RESOLUTION as f64;
        Self {
            gravity: Vec3::new(0.0, -9.8, 0.0),
            substeps: 25,
            dt: 2e-4,
            delta: 0.001,
            domain_margin: 0.05,
            wall_margin: 0.02,
            boundary_cells: 3,
            seed: 0,
            total_frames: 250,
            youngs_modulus: 0.14,
            poisson_ratio: 0.2,
            particle_mass: 1.0,
            particle_volume: dx * dx * dx / 4.0,
            max_cells_per_substep: 2.0,
            stationary_fraction: 0.9,
            spawn_grace_frames: 10,
            snow: Plasticity::SNOW,
            sand: Plasticity::SAND,
            rotation_mode: RotationMode::Polar,
            execution: ExecutionMode::Parallel,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.delta > 0.0) {
            return bad("delta must be positive");
        }
        if self.substeps == 0 {
            return bad("substeps must be at least 1");
        }
        if !(0.0..0.25).contains(&self.wall_margin) || self.wall_margin * GRID_RESOLUTION as f64 <= 0.5 {
            return bad("wall_margin must keep particles at least half a cell inside the grid");
        }
        if !(self.domain_margin >= 0.0) {
            return bad("domain_margin must be non-negative");
        }
        if !(self.particle_mass > 0.0 && self.particle_volume > 0.0) {
            return bad("particle mass and volume must be positive");
        }
        if !(self.youngs_modulus > 0.0) || !(self.poisson_ratio > 0.0 && self.poisson_ratio < 0.5) {
            return bad("need E > 0 and 0 < poisson ratio < 0.5");
        }
        if self.gravity.iter().any(|g| !g.is_finite()) {
            return bad("gravity must be finite");
        }
        Ok(())
    }

    /// Ω, the valid simulation domain.
    pub fn domain(&self) -> Aabb {
        Aabb::new(Vec3::zeros(), Vec3::repeat(1.0)).expanded(self.domain_margin)
    }

    /// Simulated seconds per output frame.
    pub fn frame_duration(&self) -> f64 {
        self.dt * self.substeps as f64
    }
}

/// One motionless particle per splat, at the normalized splat centre.
pub fn gaussians_to_stationary_particles(scene: &GaussianScene, transform: &SimTransform) -> Vec<Particle> {
    scene
        .splats
        .iter()
        .enumerate()
        .map(|(i, s)| {
            Particle::new(i as u64, Material::Stationary, transform.apply(&s.position), Vec3::zeros(), 0)
        })
        .collect()
}

/// The rotation part of a deformation gradient.
pub fn rotation_from_deformation(f: &Mat3, mode: RotationMode) -> Result<Quat> {
    let r = polar_rotation(f)?;
    let r = match mode {
        RotationMode::Polar => r,
        RotationMode::StrictPaper => r.transpose(),
    };
    quaternion_from_matrix(&r)
}

/// `UVᵀ`, with the column of the smallest singular value flipped when the
/// product would be a reflection.
pub fn polar_rotation(f: &Mat3) -> Result<Mat3> {
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("deformation gradient is not finite".into()));
    }
    let scale = f.norm();
    if scale == 0.0 || f.determinant().abs() <= 1e-12 * scale * scale * scale {
        return Err(Error::Invalid("deformation gradient is singular".into()));
    }
    let (u, _, v_t) = svd3(f);
    Ok(u * v_t)
}

/// SVD with singular values sorted descending and `U`, `Vᵀ` proper rotations;
/// a negative determinant shows up as a negative last singular value.
pub(crate) fn svd3(f: &Mat3) -> (Mat3, Vec3, Mat3) {
    svd3_from(f, &Mat3::identity())
}

/// [`svd3`] with Jacobi sweeps started from the orthonormal `basis`; a basis
/// close to the right singular vectors saves sweeps.
pub(crate) fn svd3_from(f: &Mat3, basis: &Mat3) -> (Mat3, Vec3, Mat3) {
    jacobi_svd(f, basis).unwrap_or_else(|| general_svd(f))
}

/// SVD through a Jacobi eigen-decomposition of `FᵀF`. Fast and accurate for
/// well-conditioned `F`, which is every deformation gradient the clamps
/// allow; `None` otherwise.
fn jacobi_svd(f: &Mat3, basis: &Mat3) -> Option<(Mat3, Vec3, Mat3)> {
    let (a, v) = jacobi_eigen(f, basis)?;
    let v = Mat3::from_fn(|r, c| v[r][c]);
    let a = Mat3::from_fn(|r, c| a[r][c]);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&x, &y| a[(y, y)].total_cmp(&a[(x, x)]));
    let sigma = Vec3::from_fn(|i, _| a[(order[i], order[i])].max(0.0).sqrt());
    if !sigma[2].is_finite() || sigma[2] <= 1e-2 * sigma[0] {
        return None;
    }
    let mut v = Mat3::from_columns(&[v.column(order[0]), v.column(order[1]), v.column(order[2])]);
    if v.determinant() < 0.0 {
        v.column_mut(2).neg_mut();
    }
    let mut u = f * v * Mat3::from_diagonal(&sigma.map(|s| 1.0 / s));
    let mut sigma = sigma;
    if u.determinant() < 0.0 {
        u.column_mut(2).neg_mut();
        sigma[2] = -sigma[2];
    }
    Some((u, sigma, v.transpose()))
}

/// Cyclic Jacobi eigen-decomposition of `FᵀF` started from `basis`:
/// the rotated matrix (diagonal up to round-off) and the accumulated
/// eigenvectors as columns. `None` when 10 sweeps do not converge.
fn jacobi_eigen(f: &Mat3, basis: &Mat3) -> Option<([[f64; 3]; 3], [[f64; 3]; 3])> {
    let fb = f * basis;
    let m = fb.transpose() * fb;
    let mut a = [[m[(0, 0)], m[(0, 1)], m[(0, 2)]], [m[(1, 0)], m[(1, 1)], m[(1, 2)]], [m[(2, 0)], m[(2, 1)], m[(2, 2)]]];
    let mut v = [[basis[(0, 0)], basis[(0, 1)], basis[(0, 2)]], [basis[(1, 0)], basis[(1, 1)], basis[(1, 2)]], [basis[(2, 0)], basis[(2, 1)], basis[(2, 2)]]];
    for _ in 0..10 {
        let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        let diag = a[0][0] * a[0][0] + a[1][1] * a[1][1] + a[2][2] * a[2][2];
        if off <= 1e-28 * diag {
            return Some((a, v));
        }
        jacobi_rotate::<0, 1, 2>(&mut a, &mut v);
        jacobi_rotate::<0, 2, 1>(&mut a, &mut v);
        jacobi_rotate::<1, 2, 0>(&mut a, &mut v);
    }
    None
}

/// Result of clamping the singular values of a deformation gradient.
pub(crate) struct ClampedDeformation {
    pub deformation: Mat3,
    /// Rotation `F (FᵀF)^(-1/2)` of the unclamped gradient.
    pub polar: Mat3,
    /// Right singular vectors, in no particular order or handedness.
    pub basis: Mat3,
    /// `det(F) / det(F clamped)`.
    pub det_ratio: f64,
}

/// Clamps every singular value of `f` into `[lo, hi]`.
///
/// Both the clamped gradient `F V diag(σ̂/σ) Vᵀ` and the rotation
/// `F V diag(1/σ) Vᵀ` are independent of the order and signs of the
/// columns of `V`, so no sorting or reflection fix-up is needed as long as
/// `det F > 0`. Inverted or badly conditioned gradients go through the
/// general SVD instead.
pub(crate) fn clamp_singular_values(f: &Mat3, basis: &Mat3, lo: f64, hi: f64) -> ClampedDeformation {
    let fast = || {
        if f.determinant() <= 0.0 {
            return None;
        }
        let (a, v) = jacobi_eigen(f, basis)?;
        let sigma = [a[0][0].max(0.0).sqrt(), a[1][1].max(0.0).sqrt(), a[2][2].max(0.0).sqrt()];
        let (min, max) = (sigma[0].min(sigma[1]).min(sigma[2]), sigma[0].max(sigma[1]).max(sigma[2]));
        if !min.is_finite() || min <= 1e-2 * max {
            return None;
        }
        let clamped = sigma.map(|s| s.clamp(lo, hi));
        let v = Mat3::from_fn(|r, c| v[r][c]);
        let w = f * v;
        let scaled = |d: [f64; 3]| {
            Mat3::from_fn(|r, c| w[(r, 0)] * d[0] * v[(c, 0)] + w[(r, 1)] * d[1] * v[(c, 1)] + w[(r, 2)] * d[2] * v[(c, 2)])
        };
        Some(ClampedDeformation {
            deformation: scaled([clamped[0] / sigma[0], clamped[1] / sigma[1], clamped[2] / sigma[2]]),
            polar: scaled([1.0 / sigma[0], 1.0 / sigma[1], 1.0 / sigma[2]]),
            basis: v,
            det_ratio: (sigma[0] * sigma[1] * sigma[2]) / (clamped[0] * clamped[1] * clamped[2]),
        })
    };
    fast().unwrap_or_else(|| {
        let (u, sigma, v_t) = svd3_from(f, basis);
        let clamped = sigma.map(|s| s.clamp(lo, hi));
        ClampedDeformation {
            deformation: u * Mat3::from_diagonal(&clamped) * v_t,
            polar: u * v_t,
            basis: v_t.transpose(),
            det_ratio: (sigma[0] * sigma[1] * sigma[2]) / (clamped[0] * clamped[1] * clamped[2]),
        }
    })
}

/// Zeroes `a[P][Q]` with one Givens rotation, accumulating it into `v`.
#[inline(always)]
fn jacobi_rotate<const P: usize, const Q: usize, const R: usize>(a: &mut [[f64; 3]; 3], v: &mut [[f64; 3]; 3]) {
    let apq = a[P][Q];
    if apq == 0.0 {
        return;
    }
    let theta = (a[Q][Q] - a[P][P]) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    a[P][P] -= t * apq;
    a[Q][Q] += t * apq;
    a[P][Q] = 0.0;
    a[Q][P] = 0.0;
    let (arp, arq) = (a[R][P], a[R][Q]);
    a[R][P] = c * arp - s * arq;
    a[R][Q] = s * arp + c * arq;
    a[P][R] = a[R][P];
    a[Q][R] = a[R][Q];
    for row in v.iter_mut() {
        let (vp, vq) = (row[P], row[Q]);
        row[P] = c * vp - s * vq;
        row[Q] = s * vp + c * vq;
    }
}

fn general_svd(f: &Mat3) -> (Mat3, Vec3, Mat3) {
    let svd = SVD::new(*f, true, true);
    let mut u = svd.u.unwrap();
    let mut v_t = svd.v_t.unwrap();
    let mut sigma = svd.singular_values;
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
    let (u0, v0, s0) = (u, v_t, sigma);
    for (dst, &src) in order.iter().enumerate() {
        u.set_column(dst, &u0.column(src));
        v_t.set_row(dst, &v0.row(src));
        sigma[dst] = s0[src];
    }
    if u.determinant() < 0.0 {
        u.column_mut(2).neg_mut();
        sigma[2] = -sigma[2];
    }
    if v_t.determinant() < 0.0 {
        v_t.row_mut(2).neg_mut();
        sigma[2] = -sigma[2];
    }
    (u, sigma, v_t)
}

/// A piecewise-linear trajectory over output frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyframeTrack {
    pub keys: Vec<Keyframe>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keyframe {
    pub frame: u32,
    pub position: Vec3,
}

impl KeyframeTrack {
    pub fn new(keys: Vec<Keyframe>) -> Result<Self> {
        if keys.len() < 2 {
            return Err(Error::Config("a keyframe track needs at least two keys".into()));
        }
        if keys.windows(2).any(|w| w[1].frame <= w[0].frame) {
            return Err(Error::Config("keyframe frames must be strictly increasing".into()));
        }
        Ok(Self { keys })
    }

    pub fn sample(&self, frame: f64) -> (Vec3, Vec3) {
        keyframed_position(&self.keys, frame)
    }
}

/// Position and velocity (units per frame) at a possibly fractional frame.
/// Clamped with zero velocity outside the keyed range.
pub fn keyframed_position(keys: &[Keyframe], frame: f64) -> (Vec3, Vec3) {
    let first = keys[0];
    let last = keys[keys.len() - 1];
    if frame <= first.frame as f64 {
        return (first.position, Vec3::zeros());
    }
    if frame >= last.frame as f64 {
        return (last.position, Vec3::zeros());
    }
    let seg = keys.partition_point(|k| k.frame as f64 <= frame) - 1;
    let (a, b) = (keys[seg], keys[seg + 1]);
    let span = (b.frame - a.frame) as f64;
    let slope = (b.position - a.position) / span;
    let t = (frame - a.frame as f64) / span;
    (a.position.lerp(&b.position, t), slope)
}

/// Active-flag update over one output frame. Returns events for particles
/// that stopped inside Ω; out-of-domain particles are deactivated silently.
pub fn update_active_flags(
    particles: &mut [Particle],
    frame: u32,
    config: &SimConfig,
) -> Result<Vec<CollisionEvent>> {
    let domain = config.domain();
    let mut events = Vec::new();
    for p in particles.iter_mut() {
        if !p.active || p.material == Material::Stationary {
            continue;
        }
        if !domain.contains(&p.position) {
            p.active = false;
            continue;
        }
        let young = frame.saturating_sub(p.spawn_frame) < config.spawn_grace_frames;
        if !young && (p.position - p.previous_position).norm() < config.delta {
            p.active = false;
            let rotation = if p.material == Material::Rigid {
                Quat::identity()
            } else {
                rotation_from_deformation(&p.deformation, config.rotation_mode).map_err(|e| {
                    Error::Simulation {
                        frame,
                        particle: p.id,
                        message: e.to_string(),
                    }
                })?
            };
            events.push(CollisionEvent {
                particle_id: p.id,
                frame,
                material: p.material,
                position: p.position,
                rotation,
            });
        }
    }
    Ok(events)
}
