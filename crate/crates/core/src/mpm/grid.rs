use crate::math::Vec3;

/// Cells per axis; there are `GRID_RESOLUTION + 1` nodes per axis.
pub const GRID_RESOLUTION: usize = 64;
pub(crate) const NODES: usize = GRID_RESOLUTION + 1;
pub(crate) const PLANE: usize = NODES * NODES;

/// Node lattice over the unit cube. Mass and momentum hold the latest P2G
/// result; velocities the latest grid update.
#[derive(Debug, Clone)]
pub struct MpmGrid {
    /// `[mass, px, py, pz]` per node, x-major.
    pub(crate) state: Vec<[f64; 4]>,
    pub(crate) velocity: Vec<[f64; 3]>,
    /// Mass deposited by stationary particles, re-applied at every clear.
    pub(crate) base: Vec<[f64; 4]>,
    pub(crate) stationary_total: f64,
}

impl Default for MpmGrid {
    fn default() -> Self {
        Self::new()
    }
}

impl MpmGrid {
    pub fn new() -> Self {
        let n = NODES * PLANE;
        Self {
            state: vec![[0.0; 4]; n],
            velocity: vec![[0.0; 3]; n],
            base: vec![[0.0; 4]; n],
            stationary_total: 0.0,
        }
    }

    pub fn resolution(&self) -> usize {
        GRID_RESOLUTION
    }

    pub fn dx(&self) -> f64 {
        1.0 / GRID_RESOLUTION as f64
    }

    pub fn index(i: usize, j: usize, k: usize) -> usize {
        i * PLANE + j * NODES + k
    }

    pub fn node_mass(&self, i: usize, j: usize, k: usize) -> f64 {
        self.state[Self::index(i, j, k)][0]
    }

    pub fn node_velocity(&self, i: usize, j: usize, k: usize) -> Vec3 {
        Vec3::from(self.velocity[Self::index(i, j, k)])
    }

    pub fn stationary_mass(&self, i: usize, j: usize, k: usize) -> f64 {
        self.base[Self::index(i, j, k)][0]
    }

    pub fn total_mass(&self) -> f64 {
        self.state.iter().map(|s| s[0]).sum()
    }

    pub fn total_momentum(&self) -> Vec3 {
        self.state
            .iter()
            .fold(Vec3::zeros(), |acc, s| acc + Vec3::new(s[1], s[2], s[3]))
    }

    pub fn min_mass(&self) -> f64 {
        self.state.iter().map(|s| s[0]).fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn clear(&mut self) {
        self.state.copy_from_slice(&self.base);
    }
}

/// Quadratic B-spline stencil: base node and per-axis weights.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Stencil {
    pub base: [usize; 3],
    pub w: [[f64; 3]; 3],
    /// Particle position in cell units relative to `base`.
    pub fx: Vec3,
}

impl Stencil {
    pub fn new(pos: &Vec3) -> Self {
        let inv_dx = GRID_RESOLUTION as f64;
        let mut base = [0usize; 3];
        let mut w = [[0.0; 3]; 3];
        let mut fx = Vec3::zeros();
        for a in 0..3 {
            let x = pos[a] * inv_dx;
            // Truncation is floor here: in-range positions have x >= 0.5.
            base[a] = (x - 0.5) as usize;
            let f = x - base[a] as f64;
            fx[a] = f;
            w[a] = [
                0.5 * (1.5 - f) * (1.5 - f),
                0.75 - (f - 1.0) * (f - 1.0),
                0.5 * (f - 0.5) * (f - 0.5),
            ];
        }
        Self { base, w, fx }
    }
}

/// Whether a position keeps its whole stencil inside the grid.
pub(crate) fn in_grid(p: &Vec3) -> bool {
    let n = GRID_RESOLUTION as f64;
    p.iter().all(|&c| {
        let x = c * n;
        x.is_finite() && x >= 0.5 && (x - 0.5).floor() + 2.0 <= n
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_partition_unity_and_center() {
        for p in [Vec3::new(0.3, 0.51, 0.777), Vec3::new(0.02, 0.98, 0.5)] {
            let s = Stencil::new(&p);
            for a in 0..3 {
                assert!((s.w[a].iter().sum::<f64>() - 1.0).abs() < 1e-14);
                let first: f64 = (0..3).map(|i| s.w[a][i] * (i as f64 - s.fx[a])).sum();
                assert!(first.abs() < 1e-14);
                let second: f64 = (0..3).map(|i| s.w[a][i] * (i as f64 - s.fx[a]).powi(2)).sum();
                assert!((second - 0.25).abs() < 1e-14);
            }
            assert!(s.base.iter().all(|&b| b + 2 < NODES));
        }
    }

    #[test]
    fn grid_bounds() {
        assert!(in_grid(&Vec3::new(0.02, 0.5, 0.98)));
        assert!(!in_grid(&Vec3::new(0.001, 0.5, 0.5)));
        assert!(!in_grid(&Vec3::new(0.5, 1.0, 0.5)));
    }
}
