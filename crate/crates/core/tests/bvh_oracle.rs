//! Closest-point queries on a 10k-triangle mesh against brute force with an
//! independent point-triangle distance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splatweather::math::Vec3;
use splatweather::mesh::{Bvh, TriangleMesh};

fn segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Plane distance when the projection lands inside, else the nearest edge.
fn triangle_distance(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let n = (b - a).cross(&(c - a));
    let area2 = n.norm_squared();
    let h = (p - a).dot(&n) / area2;
    let q = p - n * h;
    let inside = [(a, b), (b, c), (c, a)]
        .iter()
        .all(|(u, v)| (*v - *u).cross(&(q - *u)).dot(&n) >= 0.0);
    if inside {
        (p - q).norm()
    } else {
        segment_distance(p, a, b).min(segment_distance(p, b, c)).min(segment_distance(p, c, a))
    }
}

/// A bumpy 50×50 heightfield (5000 triangles) plus 5000 loose triangles.
fn mesh(rng: &mut impl Rng) -> TriangleMesh {
    let n = 51;
    let mut v = Vec::new();
    let mut t = Vec::new();
    for i in 0..n {
        for k in 0..n {
            let (x, z) = (i as f64 / 50.0, k as f64 / 50.0);
            v.push(Vec3::new(x, 0.1 * (7.0 * x).sin() * (5.0 * z).cos() + 0.2, z));
        }
    }
    for i in 0..n - 1 {
        for k in 0..n - 1 {
            let a = (i * n + k) as u32;
            let (b, c, d) = (a + 1, a + n as u32, a + n as u32 + 1);
            t.push([a, b, d]);
            t.push([a, d, c]);
        }
    }
    for _ in 0..5000 {
        let base = Vec3::from_fn(|_, _| rng.random_range(0.0..1.0));
        let i = v.len() as u32;
        v.push(base);
        v.push(base + Vec3::from_fn(|_, _| rng.random_range(-0.03..0.03)));
        v.push(base + Vec3::from_fn(|_, _| rng.random_range(-0.03..0.03)));
        t.push([i, i + 1, i + 2]);
    }
    TriangleMesh::new(v, t, None).unwrap()
}

#[test]
fn matches_brute_force_on_10k_triangles() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mesh = mesh(&mut rng);
    assert_eq!(mesh.triangles().len(), 10_000);
    let bvh = Bvh::build(mesh.clone()).unwrap();
    for _ in 0..300 {
        let q = Vec3::from_fn(|_, _| rng.random_range(-0.2..1.2));
        let hit = bvh.closest_point(&q);
        let want = (0..mesh.triangles().len())
            .map(|i| {
                let [a, b, c] = mesh.triangle(i);
                triangle_distance(&q, &a, &b, &c)
            })
            .fold(f64::INFINITY, f64::min);
        let got = (q - hit.point).norm();
        assert!((got - want).abs() < 1e-10, "query {q:?}: {got} vs {want}");
        let [a, b, c] = mesh.triangle(hit.triangle as usize);
        assert!(triangle_distance(&hit.point, &a, &b, &c) < 1e-10, "hit point is off its triangle");
    }
}
