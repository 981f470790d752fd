use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{Mat3, Vec3};

use super::constitutive::{kirchhoff, lame_parameters, project_deformation};
use super::grid::{in_grid, MpmGrid, Stencil, GRID_RESOLUTION, NODES, PLANE};
use super::{emit, update_active_flags, CollisionEvent, EmitterSpec, ExecutionMode, KeyframeTrack, Material, Particle, SimConfig};

/// Particles are scattered in x-slabs of this many base cells. Slabs of the
/// same parity write disjoint node planes, so each parity pass can run in
/// parallel without changing the accumulation order.
const SLAB: usize = 4;
const SLABS: usize = GRID_RESOLUTION.div_ceil(SLAB);

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimStats {
    pub emitted: u64,
    pub collided: u64,
    pub exited: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameReport {
    pub frame: u32,
    pub emitted: usize,
    pub events: Vec<CollisionEvent>,
    pub exited: usize,
    /// Dynamic particles still simulated after the frame.
    pub active: usize,
}

#[derive(Debug, Clone)]
struct Emitter {
    spec: EmitterSpec,
    track: Option<u32>,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    config: SimConfig,
    mu: f64,
    lambda: f64,
    grid: MpmGrid,
    stationary: Vec<Particle>,
    particles: Vec<Particle>,
    emitters: Vec<Emitter>,
    tracks: Vec<KeyframeTrack>,
    rng: ChaCha8Rng,
    frame: u32,
    substep: u32,
    next_id: u64,
    stats: SimStats,
    emitted_this_frame: usize,
    scratch_affine: Vec<Mat3>,
    scratch_order: Vec<u32>,
    scratch_start: [usize; SLABS + 1],
}

impl Simulation {
    /// New simulation; stationary particles deposit their mass once, in order.
    pub fn new(config: SimConfig, stationary: Vec<Particle>) -> Result<Self> {
        config.validate()?;
        let (mu, lambda) = lame_parameters(config.youngs_modulus, config.poisson_ratio);
        let mut grid = MpmGrid::new();
        let stationary: Vec<Particle> = stationary
            .into_iter()
            .filter(|p| in_grid(&p.position))
            .map(|mut p| {
                p.material = Material::Stationary;
                p.velocity = Vec3::zeros();
                p
            })
            .collect();
        let zero = Mat3::zeros();
        for p in &stationary {
            scatter(p, &zero, config.particle_mass, &mut grid.base, 0);
        }
        grid.stationary_total = config.particle_mass * stationary.len() as f64;
        grid.clear();
        let seed = config.seed;
        Ok(Self {
            config,
            mu,
            lambda,
            grid,
            stationary,
            particles: Vec::new(),
            emitters: Vec::new(),
            tracks: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            frame: 0,
            substep: 0,
            next_id: 0,
            stats: SimStats::default(),
            emitted_this_frame: 0,
            scratch_affine: Vec::new(),
            scratch_order: Vec::new(),
            scratch_start: [0; SLABS + 1],
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn set_execution(&mut self, mode: ExecutionMode) {
        self.config.execution = mode;
    }

    pub fn add_emitter(&mut self, spec: EmitterSpec) -> Result<()> {
        spec.validate()?;
        self.emitters.push(Emitter { spec, track: None });
        Ok(())
    }

    /// Emitter whose particles follow `track` instead of the grid.
    pub fn add_tracked_emitter(&mut self, spec: EmitterSpec, track: KeyframeTrack) -> Result<()> {
        spec.validate()?;
        self.tracks.push(track);
        let idx = (self.tracks.len() - 1) as u32;
        self.emitters.push(Emitter { spec, track: Some(idx) });
        Ok(())
    }

    /// Adds one dynamic particle and returns its id.
    pub fn add_particle(&mut self, material: Material, position: Vec3, velocity: Vec3) -> Result<u64> {
        if material == Material::Stationary {
            return Err(Error::Invalid("stationary particles are fixed at construction".into()));
        }
        let id = self.next_id;
        self.next_id += 1;
        let mut p = Particle::new(id, material, self.clamp_to_walls(position), velocity, self.frame);
        p.previous_position = p.position;
        self.particles.push(p);
        self.stats.emitted += 1;
        Ok(id)
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn particles_mut(&mut self) -> &mut [Particle] {
        &mut self.particles
    }

    pub fn stationary(&self) -> &[Particle] {
        &self.stationary
    }

    pub fn grid(&self) -> &MpmGrid {
        &self.grid
    }

    /// Index of the frame that the next `advance_frame` simulates.
    pub fn frame(&self) -> u32 {
        self.frame
    }

    pub fn stats(&self) -> SimStats {
        self.stats
    }

    /// Mass of every particle that deposits on the grid.
    pub fn total_particle_mass(&self) -> f64 {
        self.grid.stationary_total + self.config.particle_mass * self.particles.len() as f64
    }

    pub fn total_particle_momentum(&self) -> Vec3 {
        self.particles
            .iter()
            .fold(Vec3::zeros(), |acc, p| acc + p.velocity * self.config.particle_mass)
    }

    /// Emit → substeps → active tracking for one output frame.
    pub fn advance_frame(&mut self) -> Result<FrameReport> {
        self.begin_frame()?;
        for _ in 0..self.config.substeps {
            self.substep()?;
        }
        self.end_frame()
    }

    /// Records frame-start positions and runs this frame's emitters.
    pub fn begin_frame(&mut self) -> Result<usize> {
        for p in &mut self.particles {
            p.previous_position = p.position;
        }
        let mut emitted = 0;
        for e in 0..self.emitters.len() {
            let Emitter { spec, track } = self.emitters[e].clone();
            let mut batch = emit(&spec, self.frame, self.next_id, &mut self.rng)?;
            self.next_id += batch.len() as u64;
            for p in &mut batch {
                if let Some(t) = track {
                    let (pos, vel) = self.tracks[t as usize].sample(self.frame as f64);
                    p.position = pos;
                    p.velocity = vel / self.config.frame_duration();
                    p.track = Some(t);
                }
                p.position = self.clamp_to_walls(p.position);
                p.previous_position = p.position;
            }
            emitted += batch.len();
            self.particles.extend(batch);
        }
        // Grid-major order keeps P2G and G2P memory access local.
        self.particles.sort_by_cached_key(|p| {
            let b = Stencil::new(&p.position).base;
            (b[0] * NODES + b[1]) * NODES + b[2]
        });
        self.stats.emitted += emitted as u64;
        self.emitted_this_frame = emitted;
        self.substep = 0;
        Ok(emitted)
    }

    /// Updates active flags, drops inactive particles and moves to the next frame.
    pub fn end_frame(&mut self) -> Result<FrameReport> {
        let before = self.particles.len();
        let events = update_active_flags(&mut self.particles, self.frame, &self.config)?;
        self.particles.retain(|p| p.active);
        let exited = before - self.particles.len() - events.len();
        self.stats.collided += events.len() as u64;
        self.stats.exited += exited as u64;
        let report = FrameReport {
            frame: self.frame,
            emitted: self.emitted_this_frame,
            events,
            exited,
            active: self.particles.len(),
        };
        self.frame += 1;
        Ok(report)
    }

    /// One MPM substep: clear → P2G → grid update → G2P.
    pub fn substep(&mut self) -> Result<()> {
        let parallel = self.config.execution == ExecutionMode::Parallel;
        let cfg = &self.config.clone();
        let dt = cfg.dt;
        let mass = cfg.particle_mass;
        let inv_dx = GRID_RESOLUTION as f64;
        let stress_scale = -dt * cfg.particle_volume * 4.0 * inv_dx * inv_dx;
        let (mu, lambda, snow, sand) = (self.mu, self.lambda, cfg.snow, cfg.sand);

        self.grid.clear();

        let affine = |p: &Particle| p.affine * mass + kirchhoff(p, mu, lambda, &snow, &sand) * stress_scale;
        if parallel {
            self.particles.par_iter().map(affine).collect_into_vec(&mut self.scratch_affine);
        } else {
            self.scratch_affine.clear();
            self.scratch_affine.extend(self.particles.iter().map(affine));
        }

        self.bucket();
        let particles = &self.particles;
        let affines = &self.scratch_affine;
        let order = &self.scratch_order;
        let start = &self.scratch_start;
        let run_slab = |slab: usize, chunk: &mut [[f64; 4]], plane0: usize| {
            if slab >= SLABS {
                return;
            }
            for &pi in &order[start[slab]..start[slab + 1]] {
                let pi = pi as usize;
                scatter(&particles[pi], &affines[pi], mass, chunk, plane0);
            }
        };
        let chunk_len = 2 * SLAB * PLANE;
        if parallel {
            self.grid
                .state
                .par_chunks_mut(chunk_len)
                .enumerate()
                .for_each(|(c, chunk)| run_slab(2 * c, chunk, 2 * SLAB * c));
            let (_, rest) = self.grid.state.split_at_mut(SLAB * PLANE);
            rest.par_chunks_mut(chunk_len)
                .enumerate()
                .for_each(|(c, chunk)| run_slab(2 * c + 1, chunk, SLAB + 2 * SLAB * c));
        } else {
            for (c, chunk) in self.grid.state.chunks_mut(chunk_len).enumerate() {
                run_slab(2 * c, chunk, 2 * SLAB * c);
            }
            let (_, rest) = self.grid.state.split_at_mut(SLAB * PLANE);
            for (c, chunk) in rest.chunks_mut(chunk_len).enumerate() {
                run_slab(2 * c + 1, chunk, SLAB + 2 * SLAB * c);
            }
        }

        let gravity = cfg.gravity;
        let frac = cfg.stationary_fraction;
        let bc = cfg.boundary_cells as usize;
        let base = &self.grid.base;
        let state = &self.grid.state;
        let update_plane = |(i, plane): (usize, &mut [[f64; 3]])| {
            let nodes = &state[i * PLANE..(i + 1) * PLANE];
            let stationary = &base[i * PLANE..(i + 1) * PLANE];
            for j in 0..NODES {
                let row = j * NODES..(j + 1) * NODES;
                let out = &mut plane[row.clone()];
                for (k, ((o, n), s)) in out.iter_mut().zip(&nodes[row.clone()]).zip(&stationary[row]).enumerate() {
                    *o = if n[0] <= 0.0 {
                        [0.0; 3]
                    } else {
                        grid_velocity([i, j, k], n, s[0], dt, &gravity, frac, bc)
                    };
                }
            }
        };
        if parallel {
            self.grid.velocity.par_chunks_mut(PLANE).enumerate().for_each(update_plane);
        } else {
            self.grid.velocity.chunks_mut(PLANE).enumerate().for_each(update_plane);
        }

        let t_end = self.frame as f64 + (self.substep + 1) as f64 / cfg.substeps as f64;
        let frame_duration = cfg.frame_duration();
        let lo = cfg.wall_margin;
        let hi = 1.0 - cfg.wall_margin;
        let vmax = cfg.max_cells_per_substep / inv_dx / dt;
        let velocity = &self.grid.velocity;
        let tracks = &self.tracks;
        let gather = |p: &mut Particle| {
            if let Some(t) = p.track {
                let (pos, vel) = tracks[t as usize].sample(t_end);
                p.position = pos.map(|c| c.clamp(lo, hi));
                p.velocity = vel / frame_duration;
                p.affine = Mat3::zeros();
                p.deformation = Mat3::identity();
                return;
            }
            g2p(p, velocity, dt, vmax, &snow, &sand);
            p.position = p.position.map(|c| c.clamp(lo, hi));
        };
        if parallel {
            self.particles.par_iter_mut().for_each(gather);
        } else {
            self.particles.iter_mut().for_each(gather);
        }
        self.substep += 1;

        if let Some(p) = self.particles.iter().find(|p| !finite(p)) {
            return Err(Error::Simulation {
                frame: self.frame,
                particle: p.id,
                message: "non-finite particle state".into(),
            });
        }
        Ok(())
    }

    fn clamp_to_walls(&self, p: Vec3) -> Vec3 {
        let m = self.config.wall_margin;
        p.map(|c| c.clamp(m, 1.0 - m))
    }

    /// Stable counting sort of particle indices by x-slab.
    fn bucket(&mut self) {
        let mut counts = [0usize; SLABS];
        let slab_of = |p: &Particle| (Stencil::new(&p.position).base[0] / SLAB).min(SLABS - 1);
        for p in &self.particles {
            counts[slab_of(p)] += 1;
        }
        let start = &mut self.scratch_start;
        start[0] = 0;
        for s in 0..SLABS {
            start[s + 1] = start[s] + counts[s];
        }
        let mut cursor = [0usize; SLABS];
        cursor.copy_from_slice(&start[..SLABS]);
        self.scratch_order.resize(self.particles.len(), 0);
        for (i, p) in self.particles.iter().enumerate() {
            let s = slab_of(p);
            self.scratch_order[cursor[s]] = i as u32;
            cursor[s] += 1;
        }
    }
}

fn finite(p: &Particle) -> bool {
    p.position.iter().chain(p.velocity.iter()).all(|v| v.is_finite()) && p.deformation.iter().all(|v| v.is_finite())
}

/// Adds one particle's mass and APIC momentum to a slab of node planes
/// starting at plane `plane0`.
#[inline]
fn scatter(p: &Particle, affine: &Mat3, mass: f64, nodes: &mut [[f64; 4]], plane0: usize) {
    let s = Stencil::new(&p.position);
    // Mass and momentum as one 4-lane value, with affine · dpos split per
    // axis so the inner loop only adds.
    let a = affine / GRID_RESOLUTION as f64;
    let lanes = |c: usize| [0.0, a[(0, c)], a[(1, c)], a[(2, c)]];
    let (ax, ay, az) = (lanes(0), lanes(1), lanes(2));
    let m = p.velocity * mass - a * s.fx;
    let m0 = [mass, m.x, m.y, m.z];
    for i in 0..3 {
        let wi = s.w[0][i];
        let row = (s.base[0] + i - plane0) * PLANE;
        for j in 0..3 {
            let wij = wi * s.w[1][j];
            let (fi, fj) = (i as f64, j as f64);
            let mij: [f64; 4] = std::array::from_fn(|c| m0[c] + ax[c] * fi + ay[c] * fj);
            let col = row + (s.base[1] + j) * NODES + s.base[2];
            for (k, n) in nodes[col..col + 3].iter_mut().enumerate() {
                let w = wij * s.w[2][k];
                let fk = k as f64;
                for c in 0..4 {
                    n[c] += (mij[c] + az[c] * fk) * w;
                }
            }
        }
    }
}

#[inline]
fn grid_velocity(
    ijk: [usize; 3],
    node: &[f64; 4],
    stationary_mass: f64,
    dt: f64,
    gravity: &Vec3,
    frac: f64,
    bc: usize,
) -> [f64; 3] {
    let m = node[0];
    if m <= 0.0 {
        return [0.0; 3];
    }
    if stationary_mass > frac * m {
        return [0.0; 3];
    }
    let mut v = [
        node[1] / m + dt * gravity.x,
        node[2] / m + dt * gravity.y,
        node[3] / m + dt * gravity.z,
    ];
    for a in 0..3 {
        if ijk[a] < bc && v[a] < 0.0 {
            v[a] = 0.0;
        }
        if ijk[a] > GRID_RESOLUTION - bc && v[a] > 0.0 {
            v[a] = 0.0;
        }
    }
    v
}

#[inline]
fn g2p(
    p: &mut Particle,
    velocity: &[[f64; 3]],
    dt: f64,
    vmax: f64,
    snow: &super::Plasticity,
    sand: &super::Plasticity,
) {
    let s = Stencil::new(&p.position);
    // Σ w·v·(node - x)ᵀ built from Σ w·v and the sums of w·v weighted by the
    // node offset along each axis, accumulated row by row.
    let mut v = Vec3::zeros();
    let mut by_axis = [Vec3::zeros(); 3];
    for i in 0..3 {
        let mut plane = Vec3::zeros();
        for j in 0..3 {
            let col = (s.base[0] + i) * PLANE + (s.base[1] + j) * NODES + s.base[2];
            let nodes = &velocity[col..col + 3];
            let wij = s.w[0][i] * s.w[1][j];
            let w1 = Vec3::from(nodes[1]) * (wij * s.w[2][1]);
            let w2 = Vec3::from(nodes[2]) * (wij * s.w[2][2]);
            let row = Vec3::from(nodes[0]) * (wij * s.w[2][0]) + w1 + w2;
            by_axis[2] += w1 + w2 * 2.0;
            by_axis[1] += row * j as f64;
            plane += row;
        }
        by_axis[0] += plane * i as f64;
        v += plane;
    }
    let inv_dx = GRID_RESOLUTION as f64;
    let b = Mat3::from_fn(|r, c| {
        (by_axis[c][r] - s.fx[c] * v[r]) / inv_dx
    });
    let speed = v.norm();
    if speed > vmax {
        v *= vmax / speed;
    }
    p.velocity = v;
    p.affine = b * (4.0 * inv_dx * inv_dx);
    p.deformation = (Mat3::identity() + p.affine * dt) * p.deformation;
    project_deformation(p, snow, sand);
    p.position += v * dt;
}
