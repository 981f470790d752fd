use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::math::{Aabb, Vec3};

use super::closest::{closest_point_on_triangle, TriangleRegion};
use super::{SurfaceHit, TriangleMesh};

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    /// Leaf: first index into `order`. Inner: index of the left child
    /// (the right child follows the whole left subtree).
    first: u32,
    /// Leaf: triangle count. Inner: 0.
    count: u32,
    right: u32,
}

/// Bounding-volume hierarchy over a triangle mesh, answering closest-point
/// queries with angle-weighted pseudo-normals on edges and vertices.
/// Immutable after build; queries may run concurrently.
#[derive(Debug, Clone)]
pub struct Bvh {
    mesh: TriangleMesh,
    nodes: Vec<Node>,
    order: Vec<u32>,
    face_normals: Vec<Vec3>,
    edge_normals: Vec<[Vec3; 3]>,
    vertex_normals: Vec<Vec3>,
}

impl Bvh {
    pub fn build(mesh: TriangleMesh) -> Result<Self> {
        let n = mesh.triangles().len();
        if n == 0 {
            return Err(Error::Invalid("cannot build a BVH over an empty mesh".into()));
        }
        let face_normals: Vec<Vec3> = (0..n).map(|i| mesh.face_normal(i)).collect();

        let mut vertex_normals = vec![Vec3::zeros(); mesh.vertices().len()];
        let mut edge_sum: HashMap<(u32, u32), Vec3> = HashMap::new();
        for (ti, tri) in mesh.triangles().iter().enumerate() {
            let p = mesh.triangle(ti);
            for k in 0..3 {
                let e1 = p[(k + 1) % 3] - p[k];
                let e2 = p[(k + 2) % 3] - p[k];
                let angle = e1.angle(&e2);
                vertex_normals[tri[k] as usize] += face_normals[ti] * angle;
                let key = edge_key(tri[k], tri[(k + 1) % 3]);
                *edge_sum.entry(key).or_insert_with(Vec3::zeros) += face_normals[ti];
            }
        }
        let vertex_normals = vertex_normals
            .into_iter()
            .map(|v| if v.norm() > 0.0 { v.normalize() } else { Vec3::y() })
            .collect();
        let edge_normals = mesh
            .triangles()
            .iter()
            .enumerate()
            .map(|(ti, tri)| {
                std::array::from_fn(|k| {
                    let s = edge_sum[&edge_key(tri[k], tri[(k + 1) % 3])];
                    if s.norm() > 1e-12 {
                        s.normalize()
                    } else {
                        face_normals[ti]
                    }
                })
            })
            .collect();

        let centroids: Vec<Vec3> = (0..n)
            .map(|i| {
                let [a, b, c] = mesh.triangle(i);
                (a + b + c) / 3.0
            })
            .collect();
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut nodes = Vec::with_capacity(2 * n / LEAF_SIZE + 1);
        build_node(&mesh, &centroids, &mut order, 0, &mut nodes);
        Ok(Self {
            mesh,
            nodes,
            order,
            face_normals,
            edge_normals,
            vertex_normals,
        })
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    /// Number of node levels; a tree with a single leaf has depth 1.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            let n = &nodes[i];
            if n.count > 0 {
                1
            } else {
                1 + walk(nodes, n.first as usize).max(walk(nodes, n.right as usize))
            }
        }
        walk(&self.nodes, 0)
    }

    /// Closest surface point over the whole mesh. Equidistant triangles
    /// resolve to the lowest triangle index.
    pub fn closest_point(&self, q: &Vec3) -> SurfaceHit {
        let mut best_d2 = f64::INFINITY;
        let mut best: Option<(u32, Vec3, TriangleRegion)> = None;
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            // Slack keeps boxes that tie with the current best after rounding.
            if node.bounds.distance_squared(q) > best_d2 * (1.0 + 1e-9) + 1e-300 {
                continue;
            }
            if node.count > 0 {
                let start = node.first as usize;
                for &ti in &self.order[start..start + node.count as usize] {
                    let [a, b, c] = self.mesh.triangle(ti as usize);
                    let (p, region) = closest_point_on_triangle(q, &a, &b, &c);
                    let d2 = (q - p).norm_squared();
                    let better = match best {
                        None => true,
                        Some((bt, _, _)) => d2 < best_d2 || (d2 == best_d2 && ti < bt),
                    };
                    if better {
                        best_d2 = d2;
                        best = Some((ti, p, region));
                    }
                }
            } else {
                let l = node.first;
                let r = node.right;
                let dl = self.nodes[l as usize].bounds.distance_squared(q);
                let dr = self.nodes[r as usize].bounds.distance_squared(q);
                // Push the farther child first so the nearer one is searched first.
                if dl <= dr {
                    stack.push(r);
                    stack.push(l);
                } else {
                    stack.push(l);
                    stack.push(r);
                }
            }
        }
        let (ti, point, region) = best.expect("non-empty mesh");
        SurfaceHit {
            point,
            normal: self.region_normal(ti as usize, region),
            distance: (q - point).norm(),
            triangle: ti,
        }
    }

    /// Hit against one specific triangle.
    pub fn surface_hit(&self, q: &Vec3, triangle: usize) -> SurfaceHit {
        let [a, b, c] = self.mesh.triangle(triangle);
        let (point, region) = closest_point_on_triangle(q, &a, &b, &c);
        SurfaceHit {
            point,
            normal: self.region_normal(triangle, region),
            distance: (q - point).norm(),
            triangle: triangle as u32,
        }
    }

    fn region_normal(&self, ti: usize, region: TriangleRegion) -> Vec3 {
        match region {
            TriangleRegion::Face => self.face_normals[ti],
            TriangleRegion::Edge(k) => self.edge_normals[ti][k as usize],
            TriangleRegion::Vertex(k) => {
                self.vertex_normals[self.mesh.triangles()[ti][k as usize] as usize]
            }
        }
    }
}

fn edge_key(a: u32, b: u32) -> (u32, u32) {
    (a.min(b), a.max(b))
}

fn build_node(
    mesh: &TriangleMesh,
    centroids: &[Vec3],
    order: &mut [u32],
    offset: usize,
    nodes: &mut Vec<Node>,
) -> u32 {
    let mut bounds = Aabb::empty();
    let mut cbounds = Aabb::empty();
    for &ti in order.iter() {
        for v in mesh.triangle(ti as usize) {
            bounds.grow(&v);
        }
        cbounds.grow(&centroids[ti as usize]);
    }
    let index = nodes.len() as u32;
    nodes.push(Node {
        bounds,
        first: offset as u32,
        count: order.len() as u32,
        right: 0,
    });
    if order.len() <= LEAF_SIZE {
        return index;
    }
    let axis = cbounds.longest_axis();
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        centroids[a as usize][axis]
            .total_cmp(&centroids[b as usize][axis])
            .then(a.cmp(&b))
    });
    let (left, right) = order.split_at_mut(mid);
    let l = build_node(mesh, centroids, left, offset, nodes);
    let r = build_node(mesh, centroids, right, offset + mid, nodes);
    let node = &mut nodes[index as usize];
    node.first = l;
    node.count = 0;
    node.right = r;
    index
}
