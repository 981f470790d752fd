use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::collision::{resolve_event, AccumulatedSplat, Resolution, WetnessGrid};
use crate::error::{Error, Result};
use crate::gaussian::GaussianSplat;
use crate::mpm::{gaussians_to_stationary_particles, FrameReport, Simulation};
use crate::presets::particles_to_gaussians;
use crate::render::{render, write_png, FrameImage, Layer, RenderOptions};
use crate::scene_io::{encode_frame_state, read_frame_state, CameraSpec, FrameState};

use super::{prepare, FrameRange, Prepared, RunConfig};

pub fn frame_state_path(output: &Path, frame: u32) -> PathBuf {
    output.join("frames").join(format!("frame_{frame:05}.swfs"))
}

pub fn render_path(output: &Path, frame: u32, camera: usize) -> PathBuf {
    output.join("renders").join(format!("frame_{frame:05}_cam{camera:02}.png"))
}

/// Steps one configured effect frame by frame, resolving collisions as it
/// goes.
pub struct Runner<'a> {
    prep: &'a Prepared,
    sim: Simulation,
    handling: bool,
    dynamic: Vec<GaussianSplat>,
    accumulated: Vec<AccumulatedSplat>,
    wetness: Option<WetnessGrid>,
}

impl<'a> Runner<'a> {
    pub fn new(prep: &'a Prepared, handling: bool) -> Result<Self> {
        let stationary = gaussians_to_stationary_particles(&prep.scene, &prep.transform);
        let mut sim = Simulation::new(prep.sim_config.clone(), stationary)?;
        let sim_bounds = prep.transform.apply_box(&prep.world_bounds);
        let spec = prep.preset.emitter_spec(&sim_bounds)?;
        match prep.preset.track() {
            Some(track) => sim.add_tracked_emitter(spec, track)?,
            None => sim.add_emitter(spec)?,
        }
        let wetness = match (&prep.preset.wetness, handling) {
            (Some(w), true) => Some(WetnessGrid::around(&prep.bvh.mesh().bounds(), w)?),
            _ => None,
        };
        Ok(Self {
            prep,
            sim,
            handling,
            dynamic: Vec::new(),
            accumulated: Vec::new(),
            wetness,
        })
    }

    pub fn simulation(&self) -> &Simulation {
        &self.sim
    }

    pub fn simulation_mut(&mut self) -> &mut Simulation {
        &mut self.sim
    }

    /// Index of the next frame to be simulated.
    pub fn frame(&self) -> u32 {
        self.sim.frame()
    }

    pub fn dynamic(&self) -> &[GaussianSplat] {
        &self.dynamic
    }

    pub fn accumulated(&self) -> &[AccumulatedSplat] {
        &self.accumulated
    }

    pub fn wetness(&self) -> Option<&WetnessGrid> {
        self.wetness.as_ref()
    }

    /// Simulates one frame, resolves its collision events and refreshes the
    /// dynamic splats.
    pub fn step(&mut self) -> Result<FrameReport> {
        let frame = self.sim.frame();
        self.step_inner().map_err(|e| e.at_frame(frame))
    }

    fn step_inner(&mut self) -> Result<FrameReport> {
        let frame = self.sim.frame();
        let report = self.sim.advance_frame()?;
        let prep = self.prep;
        let seed = prep.sim_config.seed;
        if let Some(w) = &mut self.wetness {
            w.decay();
        }
        for event in &report.events {
            match resolve_event(event, &prep.bvh, &prep.preset, &prep.transform, seed, self.handling)? {
                Resolution::Splat(s) => self.accumulated.push(s),
                Resolution::Wetness(p) => {
                    if let Some(w) = &mut self.wetness {
                        w.splat(&p);
                    }
                }
            }
        }
        self.dynamic = particles_to_gaussians(
            self.sim.particles(),
            &prep.preset,
            &prep.transform,
            seed,
            prep.sim_config.rotation_mode,
            prep.asset.as_ref(),
        )
        .map_err(|e| match e {
            Error::Simulation { particle, message, .. } => Error::Simulation {
                frame,
                particle,
                message,
            },
            e => e,
        })?;
        Ok(report)
    }

    /// The state after the last simulated frame.
    pub fn state(&self) -> FrameState {
        FrameState {
            frame: self.sim.frame().saturating_sub(1),
            active_particles: self.sim.particles().len() as u64,
            dynamic: self.dynamic.clone(),
            accumulated: self.accumulated.clone(),
            wetness: self.wetness.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PersistedFrame {
    pub frame: u32,
    pub path: PathBuf,
    pub sha256: String,
}

/// Totals written to `summary.json` after a simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub effect: String,
    pub seed: u64,
    pub collision_handling: bool,
    pub frames_simulated: u32,
    pub emitted: u64,
    pub collided: u64,
    pub exited: u64,
    pub active: u64,
    pub accumulated: u64,
    pub persisted: Vec<PersistedFrame>,
}

/// Simulates frames `0..range.end` and persists the frame states inside
/// `range` (all frames by default).
pub fn run_simulate(config: &RunConfig, range: Option<FrameRange>) -> Result<RunSummary> {
    let prep = prepare(config)?;
    simulate_prepared(&prep, range)
}

pub fn simulate_prepared(prep: &Prepared, range: Option<FrameRange>) -> Result<RunSummary> {
    let total = prep.config.frame_count();
    let range = range.unwrap_or(FrameRange { start: 0, end: total });
    if range.end > total {
        return Err(Error::Config(format!(
            "frame range {}..{} exceeds the configured {total} frames",
            range.start, range.end
        )));
    }
    let frames_dir = prep.frames_dir();
    std::fs::create_dir_all(&frames_dir).map_err(|e| Error::io(&frames_dir, e))?;
    let mut runner = Runner::new(prep, prep.config.collision_handling)?;
    let mut persisted = Vec::new();
    while runner.frame() < range.end {
        let frame = runner.frame();
        runner.step()?;
        if range.contains(frame) {
            let bytes = encode_frame_state(&runner.state());
            let path = frame_state_path(prep.output_dir(), frame);
            std::fs::write(&path, &bytes).map_err(|e| Error::io(&path, e).at_frame(frame))?;
            persisted.push(PersistedFrame {
                frame,
                path,
                sha256: hex::encode(Sha256::digest(&bytes)),
            });
        }
    }
    let stats = runner.simulation().stats();
    let summary = RunSummary {
        effect: prep.preset.name.to_string(),
        seed: prep.sim_config.seed,
        collision_handling: prep.config.collision_handling,
        frames_simulated: runner.frame(),
        emitted: stats.emitted,
        collided: stats.collided,
        exited: stats.exited,
        active: runner.simulation().particles().len() as u64,
        accumulated: runner.accumulated().len() as u64,
        persisted,
    };
    let path = prep.output_dir().join("summary.json");
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::Invalid(e.to_string()))?;
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(summary)
}

/// Renders the static scene merged with one frame state. Wetness, when
/// present, darkens the static splats only.
pub fn render_frame(prep: &Prepared, state: &FrameState, camera: &CameraSpec, opts: &RenderOptions) -> FrameImage {
    let tint: Option<Vec<f64>> = state.wetness.as_ref().map(|w| {
        prep.scene
            .splats
            .iter()
            .map(|s| w.darkening_factor(&prep.transform.apply(&s.position)))
            .collect()
    });
    let accumulated: Vec<GaussianSplat> = state.accumulated.iter().map(|a| a.splat.clone()).collect();
    let mut layers = vec![match &tint {
        Some(t) => Layer::tinted(&prep.scene.splats, t),
        None => Layer::new(&prep.scene.splats),
    }];
    if !state.dynamic.is_empty() {
        layers.push(Layer::new(&state.dynamic));
    }
    if !accumulated.is_empty() {
        layers.push(Layer::new(&accumulated));
    }
    render(&layers, camera, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenderSummary {
    pub frames: Vec<u32>,
    pub cameras: usize,
    pub images: Vec<PathBuf>,
}

/// One PNG per frame per camera under `output/renders`.
pub fn run_render(config: &RunConfig, range: Option<FrameRange>) -> Result<RenderSummary> {
    let prep = prepare(config)?;
    render_prepared(&prep, range)
}

pub fn render_prepared(prep: &Prepared, range: Option<FrameRange>) -> Result<RenderSummary> {
    let range = range.unwrap_or(FrameRange {
        start: 0,
        end: prep.config.frame_count(),
    });
    let missing: Vec<u32> = range
        .iter()
        .filter(|&f| !frame_state_path(prep.output_dir(), f).is_file())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingFrames(missing));
    }
    let cameras = prep.cameras()?;
    let dir = prep.renders_dir();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let opts = RenderOptions {
        background: prep.config.background,
        execution: prep.config.execution(),
        ..RenderOptions::default()
    };
    let mut images = Vec::new();
    for frame in range.iter() {
        let state = read_frame_state(frame_state_path(prep.output_dir(), frame))?;
        for (c, cam) in cameras.iter().enumerate() {
            let img = render_frame(prep, &state, cam, &opts);
            let path = render_path(prep.output_dir(), frame, c);
            write_png(&img, &path).map_err(|e| e.at_frame(frame))?;
            images.push(path);
        }
    }
    Ok(RenderSummary {
        frames: range.iter().collect(),
        cameras: cameras.len(),
        images,
    })
}
