//! CPU tile rasterizer for Gaussian splats.

mod image;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::gaussian::GaussianSplat;
use crate::math::{Mat3, Vec3};
use crate::mpm::ExecutionMode;
use crate::scene_io::CameraSpec;

pub use image::{decode_png, encode_png, write_png, FrameImage};

pub const TILE_SIZE: usize = 16;
pub const ALPHA_MAX: f64 = 0.99;
pub const ALPHA_MIN: f64 = 1.0 / 255.0;
pub const TRANSMITTANCE_MIN: f64 = 1e-4;
/// Squared Mahalanobis radius of the splat footprint (3σ).
pub const FOOTPRINT_D2: f64 = 9.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderOptions {
    pub background: [f64; 3],
    pub near: f64,
    /// Added to the diagonal of every 2D covariance, in pixels².
    pub low_pass: f64,
    /// Frustum guard for the projection Jacobian, as a multiple of the half field of view.
    pub frustum_guard: f64,
    pub execution: ExecutionMode,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            background: [0.0; 3],
            near: 0.01,
            low_pass: 0.3,
            frustum_guard: 1.3,
            execution: ExecutionMode::Parallel,
        }
    }
}

/// A splat on the image plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projected2DSplat {
    /// Order among all projected splats; breaks depth ties.
    pub id: u32,
    /// Pixel coordinates; pixel `(x, y)` has its centre at `(x + 0.5, y + 0.5)`.
    pub mean: [f64; 2],
    /// Inverse 2D covariance `[a, b, c]` for `[[a, b], [b, c]]`.
    pub conic: [f64; 3],
    pub cov2d: [f64; 3],
    pub depth: f64,
    pub color: [f64; 3],
    pub opacity: f64,
    /// Inclusive pixel range `[x0, y0, x1, y1]` whose centres may fall inside the footprint.
    pub rect: [usize; 4],
}

impl Projected2DSplat {
    /// Alpha at a pixel centre, or `None` when outside the footprint or
    /// below the skip threshold.
    #[inline]
    pub fn alpha_at(&self, px: usize, py: usize) -> Option<f64> {
        let dx = px as f64 + 0.5 - self.mean[0];
        let dy = py as f64 + 0.5 - self.mean[1];
        let [a, b, c] = self.conic;
        let q = a * dx * dx + 2.0 * b * dx * dy + c * dy * dy;
        if !(q <= FOOTPRINT_D2) {
            return None;
        }
        let alpha = (self.opacity * (-0.5 * q).exp()).min(ALPHA_MAX);
        (alpha >= ALPHA_MIN).then_some(alpha)
    }
}

/// A group of splats sharing an optional per-splat colour multiplier.
#[derive(Debug, Clone, Copy)]
pub struct Layer<'a> {
    pub splats: &'a [GaussianSplat],
    pub tint: Option<&'a [f64]>,
}

impl<'a> Layer<'a> {
    pub fn new(splats: &'a [GaussianSplat]) -> Self {
        Self { splats, tint: None }
    }

    pub fn tinted(splats: &'a [GaussianSplat], tint: &'a [f64]) -> Self {
        Self {
            splats,
            tint: Some(tint),
        }
    }
}

/// Projects one splat; `None` when behind the near plane, degenerate or
/// entirely off-screen.
pub fn project_splat(splat: &GaussianSplat, camera: &CameraSpec, opts: &RenderOptions) -> Option<Projected2DSplat> {
    let w = camera.rotation_matrix();
    let t = w * splat.position + camera.translation_vector();
    if !(t.z > opts.near) {
        return None;
    }
    let (fx, fy) = (camera.fx, camera.fy);
    let lim_x = opts.frustum_guard * 0.5 * camera.width as f64 / fx;
    let lim_y = opts.frustum_guard * 0.5 * camera.height as f64 / fy;
    let tx = (t.x / t.z).clamp(-lim_x, lim_x) * t.z;
    let ty = (t.y / t.z).clamp(-lim_y, lim_y) * t.z;
    let iz = 1.0 / t.z;
    let j = nalgebra::Matrix2x3::new(fx * iz, 0.0, -fx * tx * iz * iz, 0.0, fy * iz, -fy * ty * iz * iz);
    let sigma: Mat3 = splat.covariance().ok()?;
    let m = j * w;
    let cov = m * sigma * m.transpose();
    let (a, b, c) = (cov[(0, 0)] + opts.low_pass, 0.5 * (cov[(0, 1)] + cov[(1, 0)]), cov[(1, 1)] + opts.low_pass);
    let det = a * c - b * b;
    if !(det > 0.0) || !det.is_finite() {
        return None;
    }
    let mean = [fx * t.x * iz + camera.cx, fy * t.y * iz + camera.cy];
    let rx = (FOOTPRINT_D2 * a).sqrt();
    let ry = (FOOTPRINT_D2 * c).sqrt();
    let x0 = (mean[0] - rx - 0.5).ceil().max(0.0);
    let x1 = (mean[0] + rx - 0.5).floor().min(camera.width as f64 - 1.0);
    let y0 = (mean[1] - ry - 0.5).ceil().max(0.0);
    let y1 = (mean[1] + ry - 0.5).floor().min(camera.height as f64 - 1.0);
    if !(x0 <= x1 && y0 <= y1) {
        return None;
    }
    let view = splat.position - camera.position();
    let dir = if view.norm() > 0.0 { view.normalize() } else { Vec3::z() };
    Some(Projected2DSplat {
        id: 0,
        mean,
        conic: [c / det, -b / det, a / det],
        cov2d: [a, b, c],
        depth: t.z,
        color: splat.color.rgb(&dir),
        opacity: splat.opacity,
        rect: [x0 as usize, y0 as usize, x1 as usize, y1 as usize],
    })
}

/// Projects all layers in order, assigning consecutive ids (culled splats
/// keep their slot so ids are stable).
pub fn project_layers(layers: &[Layer], camera: &CameraSpec, opts: &RenderOptions) -> Vec<Projected2DSplat> {
    let mut jobs: Vec<(&GaussianSplat, f64, u32)> = Vec::new();
    let mut id = 0u32;
    for layer in layers {
        for (i, s) in layer.splats.iter().enumerate() {
            let tint = layer.tint.map_or(1.0, |t| t[i]);
            jobs.push((s, tint, id));
            id += 1;
        }
    }
    let project = |&(s, tint, id): &(&GaussianSplat, f64, u32)| {
        project_splat(s, camera, opts).map(|mut p| {
            p.id = id;
            if tint != 1.0 {
                p.color = p.color.map(|c| c * tint);
            }
            p
        })
    };
    match opts.execution {
        ExecutionMode::Parallel => jobs.par_iter().filter_map(project).collect(),
        ExecutionMode::Reference => jobs.iter().filter_map(project).collect(),
    }
}

/// Front-to-back alpha blending over the union of all layers.
pub fn render(layers: &[Layer], camera: &CameraSpec, opts: &RenderOptions) -> FrameImage {
    let projected = project_layers(layers, camera, opts);
    render_projected(&projected, camera.width as usize, camera.height as usize, opts)
}

/// Front-to-back blending of pre-projected splats, binned into 16×16 tiles
/// after a global `(depth, id)` sort.
pub fn render_projected(projected: &[Projected2DSplat], width: usize, height: usize, opts: &RenderOptions) -> FrameImage {
    let mut order: Vec<usize> = (0..projected.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (&projected[a], &projected[b]);
        pa.depth.total_cmp(&pb.depth).then(pa.id.cmp(&pb.id))
    });
    let tiles_x = width.div_ceil(TILE_SIZE);
    let tiles_y = height.div_ceil(TILE_SIZE);
    let mut bins: Vec<Vec<u32>> = vec![Vec::new(); tiles_x * tiles_y];
    for &i in &order {
        let r = projected[i].rect;
        for ty in r[1] / TILE_SIZE..=r[3] / TILE_SIZE {
            for tx in r[0] / TILE_SIZE..=r[2] / TILE_SIZE {
                bins[ty * tiles_x + tx].push(i as u32);
            }
        }
    }
    let bg = opts.background;
    let shade_tile = |t: usize| -> Vec<[f64; 3]> {
        let (tx, ty) = (t % tiles_x, t / tiles_x);
        let x0 = tx * TILE_SIZE;
        let y0 = ty * TILE_SIZE;
        let x1 = (x0 + TILE_SIZE).min(width);
        let y1 = (y0 + TILE_SIZE).min(height);
        let mut out = Vec::with_capacity((x1 - x0) * (y1 - y0));
        for py in y0..y1 {
            for px in x0..x1 {
                let mut c = [0.0; 3];
                let mut trans = 1.0;
                for &i in &bins[t] {
                    let s = &projected[i as usize];
                    let Some(alpha) = s.alpha_at(px, py) else { continue };
                    for ch in 0..3 {
                        c[ch] += trans * alpha * s.color[ch];
                    }
                    trans *= 1.0 - alpha;
                    if trans < TRANSMITTANCE_MIN {
                        break;
                    }
                }
                out.push([c[0] + trans * bg[0], c[1] + trans * bg[1], c[2] + trans * bg[2]]);
            }
        }
        out
    };
    let tiles: Vec<Vec<[f64; 3]>> = match opts.execution {
        ExecutionMode::Parallel => (0..bins.len()).into_par_iter().map(shade_tile).collect(),
        ExecutionMode::Reference => (0..bins.len()).map(shade_tile).collect(),
    };
    let mut image = FrameImage::new(width, height, bg);
    for (t, block) in tiles.into_iter().enumerate() {
        let (tx, ty) = (t % tiles_x, t / tiles_x);
        let x0 = tx * TILE_SIZE;
        let x1 = (x0 + TILE_SIZE).min(width);
        let w = x1 - x0;
        for (r, row) in block.chunks(w).enumerate() {
            let y = ty * TILE_SIZE + r;
            image.pixels[y * width + x0..y * width + x1].copy_from_slice(row);
        }
    }
    image
}
