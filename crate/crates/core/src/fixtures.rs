//! Small synthetic scenes for tests, examples and demos.

use crate::gaussian::GaussianSplat;
use crate::math::{Quat, Vec3};
use crate::mesh::TriangleMesh;
use crate::scene_io::GaussianScene;

/// A `[0,1]²` ground plane at `y = 0`: an `n × n` carpet of flat splats and
/// the matching two-triangle mesh.
pub fn flat_ground(n: usize) -> (GaussianScene, TriangleMesh) {
    let scene = GaussianScene::new(ground_splats(n), 0).expect("valid fixture");
    (scene, ground_quad(0.0, 1.0, 0.0))
}

fn ground_splats(n: usize) -> Vec<GaussianSplat> {
    let n = n.max(1);
    let step = 1.0 / n as f64;
    let mut splats = Vec::with_capacity(n * n);
    for i in 0..n {
        for k in 0..n {
            let checker = if (i / 4 + k / 4) % 2 == 0 { 0.0 } else { 0.06 };
            splats.push(GaussianSplat::flat(
                Vec3::new((i as f64 + 0.5) * step, 0.0, (k as f64 + 0.5) * step),
                Quat::identity(),
                Vec3::new(0.6 * step, 0.1 * step, 0.6 * step),
                0.95,
                [0.32 + checker, 0.42 + checker, 0.28 + checker],
            ));
        }
    }
    splats
}

fn ground_quad(lo: f64, hi: f64, y: f64) -> TriangleMesh {
    let v = vec![
        Vec3::new(lo, y, lo),
        Vec3::new(hi, y, lo),
        Vec3::new(hi, y, hi),
        Vec3::new(lo, y, hi),
    ];
    TriangleMesh::new(v, vec![[0, 3, 2], [0, 2, 1]], None).expect("valid quad")
}

/// Ground plane with a box standing in the middle; splats cover the ground
/// and the box's top and sides.
pub fn box_on_ground(n: usize) -> (GaussianScene, TriangleMesh) {
    let (lo, hi, top) = (0.35, 0.65, 0.3);
    let step = 1.0 / n.max(1) as f64;
    let mut splats: Vec<GaussianSplat> = ground_splats(n)
        .into_iter()
        .filter(|s| !(s.position.x > lo && s.position.x < hi && s.position.z > lo && s.position.z < hi))
        .collect();
    let color = [0.62, 0.36, 0.24];
    let m = ((hi - lo) / step).round() as usize;
    let h = (top / step).round() as usize;
    let flat = |p: Vec3, normal_axis: usize| {
        let mut scale = Vec3::repeat(0.6 * step);
        scale[normal_axis] = 0.1 * step;
        GaussianSplat::flat(p, Quat::identity(), scale, 0.95, color)
    };
    for i in 0..m {
        for k in 0..m {
            let x = lo + (i as f64 + 0.5) * step;
            let z = lo + (k as f64 + 0.5) * step;
            splats.push(flat(Vec3::new(x, top, z), 1));
        }
        for j in 0..h {
            let t = lo + (i as f64 + 0.5) * step;
            let y = (j as f64 + 0.5) * step;
            splats.push(flat(Vec3::new(t, y, lo), 2));
            splats.push(flat(Vec3::new(t, y, hi), 2));
            splats.push(flat(Vec3::new(lo, y, t), 0));
            splats.push(flat(Vec3::new(hi, y, t), 0));
        }
    }
    let scene = GaussianScene::new(splats, 0).expect("valid fixture");

    let mut vertices = ground_quad(0.0, 1.0, 0.0).vertices().to_vec();
    let mut triangles = vec![[0, 3, 2], [0, 2, 1]];
    let b = vertices.len() as u32;
    for &(x, y, z) in &[
        (lo, 0.0, lo),
        (hi, 0.0, lo),
        (hi, 0.0, hi),
        (lo, 0.0, hi),
        (lo, top, lo),
        (hi, top, lo),
        (hi, top, hi),
        (lo, top, hi),
    ] {
        vertices.push(Vec3::new(x, y, z));
    }
    let faces: [[u32; 3]; 10] = [
        [4, 7, 6],
        [4, 6, 5],
        [0, 1, 5],
        [0, 5, 4],
        [1, 2, 6],
        [1, 6, 5],
        [2, 3, 7],
        [2, 7, 6],
        [3, 0, 4],
        [3, 4, 7],
    ];
    for f in faces {
        triangles.push(f.map(|i| i + b));
    }
    let mesh = TriangleMesh::new(vertices, orient_outward(&triangles, b), None).expect("valid box mesh");
    (scene, mesh)
}

/// Flips box side triangles whose winding points into the box.
fn orient_outward(triangles: &[[u32; 3]], box_base: u32) -> Vec<[u32; 3]> {
    let (lo, hi, top) = (0.35, 0.65, 0.3);
    let corners = [
        (lo, 0.0, lo),
        (hi, 0.0, lo),
        (hi, 0.0, hi),
        (lo, 0.0, hi),
        (lo, top, lo),
        (hi, top, lo),
        (hi, top, hi),
        (lo, top, hi),
    ]
    .map(|(x, y, z)| Vec3::new(x, y, z));
    let center = Vec3::new(0.5, top / 2.0, 0.5);
    triangles
        .iter()
        .map(|t| {
            if t[0] < box_base {
                return *t;
            }
            let [a, b, c] = t.map(|i| corners[(i - box_base) as usize]);
            let n = (b - a).cross(&(c - a));
            if n.dot(&((a + b + c) / 3.0 - center)) < 0.0 {
                [t[0], t[2], t[1]]
            } else {
                *t
            }
        })
        .collect()
}
