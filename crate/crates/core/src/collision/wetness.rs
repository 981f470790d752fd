use crate::error::{Error, Result};
use crate::math::{Aabb, Vec3};
use crate::presets::WetnessPreset;

/// Scalar wetness over a box around the mesh, stored per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct WetnessGrid {
    dims: [usize; 3],
    bounds: Aabb,
    decay: f64,
    sigma: f64,
    radius: u32,
    darkening: f64,
    values: Vec<f64>,
}

impl WetnessGrid {
    /// Grid of `res³` cells covering `mesh_bounds` padded by 5% of its
    /// longest side (and at least two cells) on every face.
    pub fn around(mesh_bounds: &Aabb, p: &WetnessPreset) -> Result<Self> {
        let longest = mesh_bounds.extent().max();
        if mesh_bounds.is_empty() || !(longest > 0.0) {
            return Err(Error::Invalid("wetness grid needs non-degenerate mesh bounds".into()));
        }
        let res = p.resolution as f64;
        let pad = (0.05 * longest).max(2.0 * longest / res);
        let bounds = mesh_bounds.expanded(pad);
        let n = p.resolution as usize;
        Self::from_parts([n, n, n], bounds, p.decay, p.kernel_sigma_cells, p.kernel_radius_cells, p.darkening, vec![0.0; n * n * n])
    }

    pub fn from_parts(
        dims: [usize; 3],
        bounds: Aabb,
        decay: f64,
        sigma: f64,
        radius: u32,
        darkening: f64,
        values: Vec<f64>,
    ) -> Result<Self> {
        if dims.contains(&0) || values.len() != dims[0] * dims[1] * dims[2] {
            return Err(Error::Invalid("wetness grid dimensions do not match its values".into()));
        }
        if !(decay > 0.0 && decay < 1.0) || !(sigma > 0.0) || !(darkening >= 0.0) {
            return Err(Error::Invalid("wetness grid needs decay in (0,1), sigma > 0, darkening >= 0".into()));
        }
        let e = bounds.extent();
        if bounds.is_empty() || !(e.min() > 0.0) {
            return Err(Error::Invalid("wetness grid bounds must have positive extent".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Invalid("wetness values must be finite and non-negative".into()));
        }
        Ok(Self {
            dims,
            bounds,
            decay,
            sigma,
            radius,
            darkening,
            values,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn bounds(&self) -> &Aabb {
        &self.bounds
    }

    pub fn decay_rate(&self) -> f64 {
        self.decay
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn darkening(&self) -> f64 {
        self.darkening
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    pub fn value(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    pub fn set_value(&mut self, i: usize, j: usize, k: usize, w: f64) {
        let idx = self.index(i, j, k);
        self.values[idx] = w.max(0.0);
    }

    fn cell_size(&self) -> Vec3 {
        let e = self.bounds.extent();
        Vec3::new(e.x / self.dims[0] as f64, e.y / self.dims[1] as f64, e.z / self.dims[2] as f64)
    }

    pub fn cell_center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let c = self.cell_size();
        self.bounds.min + Vec3::new((i as f64 + 0.5) * c.x, (j as f64 + 0.5) * c.y, (k as f64 + 0.5) * c.z)
    }

    fn cell_of(&self, p: &Vec3) -> Option<[usize; 3]> {
        if !self.bounds.contains(p) {
            return None;
        }
        let c = self.cell_size();
        let mut out = [0usize; 3];
        for a in 0..3 {
            let f = ((p[a] - self.bounds.min[a]) / c[a]).floor() as usize;
            out[a] = f.min(self.dims[a] - 1);
        }
        Some(out)
    }

    /// Adds a unit Gaussian bump at the impact cell. The kernel is cut to a
    /// sphere of `radius` cells and renormalised over in-bounds cells, so the
    /// grid total grows by exactly one. Impacts outside the grid are ignored.
    pub fn splat(&mut self, impact: &Vec3) -> bool {
        let Some(c) = self.cell_of(impact) else {
            return false;
        };
        let r = self.radius as i64;
        let inv = 1.0 / (2.0 * self.sigma * self.sigma);
        let mut taps = Vec::new();
        let mut sum = 0.0;
        for di in -r..=r {
            for dj in -r..=r {
                for dk in -r..=r {
                    let d2 = (di * di + dj * dj + dk * dk) as f64;
                    if d2 > (r * r) as f64 {
                        continue;
                    }
                    let (i, j, k) = (c[0] as i64 + di, c[1] as i64 + dj, c[2] as i64 + dk);
                    if i < 0 || j < 0 || k < 0 {
                        continue;
                    }
                    let (i, j, k) = (i as usize, j as usize, k as usize);
                    if i >= self.dims[0] || j >= self.dims[1] || k >= self.dims[2] {
                        continue;
                    }
                    let w = (-d2 * inv).exp();
                    sum += w;
                    taps.push((self.index(i, j, k), w));
                }
            }
        }
        for (idx, w) in taps {
            self.values[idx] += w / sum;
        }
        true
    }

    /// One drying step: every cell times the decay rate.
    pub fn decay(&mut self) {
        let d = self.decay;
        self.values.iter_mut().for_each(|v| *v *= d);
    }

    /// Trilinear interpolation between cell centres, clamped at the border;
    /// zero outside the grid box.
    pub fn sample(&self, p: &Vec3) -> f64 {
        if !self.bounds.contains(p) {
            return 0.0;
        }
        let c = self.cell_size();
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let x = ((p[a] - self.bounds.min[a]) / c[a] - 0.5).clamp(0.0, (self.dims[a] - 1) as f64);
            let b = (x.floor() as usize).min(self.dims[a].saturating_sub(2));
            base[a] = b;
            frac[a] = x - b as f64;
        }
        let mut w = 0.0;
        for (di, wi) in [(0, 1.0 - frac[0]), (1, frac[0])] {
            for (dj, wj) in [(0, 1.0 - frac[1]), (1, frac[1])] {
                for (dk, wk) in [(0, 1.0 - frac[2]), (1, frac[2])] {
                    let wt = wi * wj * wk;
                    if wt == 0.0 {
                        continue;
                    }
                    let (i, j, k) = (base[0] + di, base[1] + dj, base[2] + dk);
                    if i < self.dims[0] && j < self.dims[1] && k < self.dims[2] {
                        w += wt * self.value(i, j, k);
                    }
                }
            }
        }
        w
    }

    /// Colour multiplier `1 / (1 + k·w)` at a simulation-space point.
    pub fn darkening_factor(&self, p: &Vec3) -> f64 {
        1.0 / (1.0 + self.darkening * self.sample(p))
    }
}

/// Darkened copies of static splat colours; positions are in the grid's
/// frame. Cells with zero wetness leave colours bitwise unchanged.
pub fn apply_wetness_to_scene(colors: &[[f64; 3]], positions: &[Vec3], grid: &WetnessGrid) -> Vec<[f64; 3]> {
    colors
        .iter()
        .zip(positions)
        .map(|(c, p)| {
            let w = grid.sample(p);
            if w == 0.0 {
                *c
            } else {
                let f = 1.0 / (1.0 + grid.darkening * w);
                [c[0] * f, c[1] * f, c[2] * f]
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> WetnessGrid {
        let p = WetnessPreset {
            decay: 0.95,
            resolution: 16,
            kernel_sigma_cells: 1.5,
            kernel_radius_cells: 3,
            darkening: 0.4,
        };
        WetnessGrid::from_parts(
            [16, 16, 16],
            Aabb::new(Vec3::zeros(), Vec3::repeat(1.6)),
            p.decay,
            p.kernel_sigma_cells,
            p.kernel_radius_cells,
            p.darkening,
            vec![0.0; 4096],
        )
        .unwrap()
    }

    #[test]
    fn kernel_is_symmetric_and_normalised() {
        let mut g = grid();
        let c = g.cell_center(8, 8, 8);
        assert!(g.splat(&c));
        let center = g.value(8, 8, 8);
        let n = [g.value(7, 8, 8), g.value(9, 8, 8), g.value(8, 7, 8), g.value(8, 9, 8), g.value(8, 8, 7), g.value(8, 8, 9)];
        assert!(n.iter().all(|&v| v == n[0]));
        assert!(center > n[0]);
        assert!(g.values().iter().all(|&v| v <= center));
        assert!((g.total() - 1.0).abs() < 1e-12);
        g.splat(&c);
        assert!((g.value(8, 8, 8) - 2.0 * center).abs() < 1e-15);
    }

    #[test]
    fn corner_impacts_still_add_one() {
        let mut g = grid();
        g.splat(&Vec3::repeat(0.01));
        assert!((g.total() - 1.0).abs() < 1e-12);
        assert!(!g.splat(&Vec3::repeat(2.0)));
        assert!((g.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decay_and_darkening() {
        let mut g = grid();
        g.set_value(3, 3, 3, 1.0);
        g.decay();
        assert_eq!(g.value(3, 3, 3), 0.95);
        g.set_value(3, 3, 3, 1.0);
        let p = g.cell_center(3, 3, 3);
        assert!((g.sample(&p) - 1.0).abs() < 1e-12);
        let out = apply_wetness_to_scene(&[[0.5, 0.6, 0.7]], &[p], &g);
        assert!((out[0][0] - 0.5 / 1.4).abs() < 1e-12);
        let dry = apply_wetness_to_scene(&[[0.5, 0.6, 0.7]], &[g.cell_center(12, 12, 12)], &g);
        assert_eq!(dry[0], [0.5, 0.6, 0.7]);
    }
}
