//! Triangle mesh import/export: Wavefront OBJ and PLY (ASCII or binary).

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::mesh::TriangleMesh;

use super::ply::{PlyReader, PropertyKind};

/// Loads an OBJ or PLY mesh, dispatching on the file extension.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let ctx = path.display().to_string();
    match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()) {
        Some(ext) if ext == "ply" => parse_ply_mesh(&bytes, &ctx),
        Some(ext) if ext == "obj" => parse_obj(&String::from_utf8_lossy(&bytes), &ctx),
        _ => Err(Error::parse(ctx, "file name", "mesh must have a .obj or .ply extension")),
    }
}

pub fn parse_obj(text: &str, context: &str) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut normals_in = Vec::new();
    let mut vertex_normal_idx: Vec<Option<usize>> = Vec::new();
    let mut triangles = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        let loc = || format!("line {line_no}");
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("v") => {
                let c: Vec<f64> = tok
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::parse(context, loc(), "bad vertex coordinate"))?;
                if c.len() != 3 {
                    return Err(Error::parse(context, loc(), "vertex needs 3 coordinates"));
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
                vertex_normal_idx.push(None);
            }
            Some("vn") => {
                let c: Vec<f64> = tok
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::parse(context, loc(), "bad normal component"))?;
                if c.len() != 3 {
                    return Err(Error::parse(context, loc(), "normal needs 3 components"));
                }
                normals_in.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let refs: Vec<&str> = tok.collect();
                if refs.len() != 3 {
                    return Err(Error::parse(
                        context,
                        loc(),
                        format!(
                            "face has {} vertices; only triangles are supported, triangulate the mesh before import",
                            refs.len()
                        ),
                    ));
                }
                let mut tri = [0u32; 3];
                for (k, r) in refs.iter().enumerate() {
                    let mut parts = r.split('/');
                    let vi = resolve_obj_index(parts.next(), vertices.len())
                        .ok_or_else(|| Error::parse(context, loc(), format!("bad vertex reference '{r}'")))?;
                    let _texture = parts.next();
                    if let Some(ni) = parts.next().filter(|s| !s.is_empty()) {
                        let ni = resolve_obj_index(Some(ni), normals_in.len())
                            .ok_or_else(|| Error::parse(context, loc(), format!("bad normal reference '{r}'")))?;
                        vertex_normal_idx[vi] = Some(ni);
                    }
                    tri[k] = vi as u32;
                }
                triangles.push(tri);
            }
            _ => {}
        }
    }
    if triangles.is_empty() {
        return Err(Error::parse(context, "end of file", "no triangles found"));
    }
    let normals = if vertex_normal_idx.iter().all(|n| n.is_some()) {
        Some(vertex_normal_idx.iter().map(|n| normals_in[n.unwrap()]).collect())
    } else {
        None
    };
    TriangleMesh::new(vertices, triangles, normals).map_err(|e| Error::parse(context, "mesh", e.to_string()))
}

fn resolve_obj_index(tok: Option<&str>, len: usize) -> Option<usize> {
    let i: i64 = tok?.parse().ok()?;
    let idx = if i > 0 { i - 1 } else { len as i64 + i };
    (0..len as i64).contains(&idx).then_some(idx as usize)
}

pub fn parse_ply_mesh(bytes: &[u8], context: &str) -> Result<TriangleMesh> {
    let mut reader = PlyReader::new(bytes, context)?;
    let mut vertices = Vec::new();
    let mut normals = Vec::new();
    let mut triangles = Vec::new();
    let elements = reader.header.elements.clone();
    for element in &elements {
        match element.name.as_str() {
            "vertex" => {
                let idx = |n: &str| element.property_index(n);
                let (x, y, z) = match (idx("x"), idx("y"), idx("z")) {
                    (Some(x), Some(y), Some(z)) => (x, y, z),
                    _ => return Err(Error::parse(context, "element 'vertex'", "missing x/y/z")),
                };
                let n = match (idx("nx"), idx("ny"), idx("nz")) {
                    (Some(a), Some(b), Some(c)) => Some((a, b, c)),
                    _ => None,
                };
                reader.read_next_element(|_, row| {
                    let v = &row.values;
                    vertices.push(Vec3::new(v[x], v[y], v[z]));
                    if let Some((a, b, c)) = n {
                        normals.push(Vec3::new(v[a], v[b], v[c]));
                    }
                    Ok(())
                })?;
            }
            "face" => {
                let li = element
                    .properties
                    .iter()
                    .position(|p| {
                        matches!(p.kind, PropertyKind::List { .. })
                            && (p.name == "vertex_indices" || p.name == "vertex_index")
                    })
                    .ok_or_else(|| Error::parse(context, "element 'face'", "missing vertex_indices list"))?;
                reader.read_next_element(|r, row| {
                    let l = &row.lists[li];
                    if l.len() != 3 {
                        return Err(Error::parse(
                            context,
                            format!("face {r}"),
                            format!(
                                "face has {} vertices; only triangles are supported, triangulate the mesh before import",
                                l.len()
                            ),
                        ));
                    }
                    triangles.push([l[0] as u32, l[1] as u32, l[2] as u32]);
                    Ok(())
                })?;
            }
            _ => {
                reader.read_next_element(|_, _| Ok(()))?;
            }
        }
    }
    if triangles.is_empty() {
        return Err(Error::parse(context, "element 'face'", "no triangles found"));
    }
    let normals = (!normals.is_empty()).then_some(normals);
    TriangleMesh::new(vertices, triangles, normals).map_err(|e| Error::parse(context, "mesh", e.to_string()))
}

/// OBJ text with `v`, `vn` and `f v//vn` records.
pub fn encode_obj(mesh: &TriangleMesh) -> String {
    let mut s = String::new();
    for v in mesh.vertices() {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    for n in mesh.normals() {
        let _ = writeln!(s, "vn {} {} {}", n.x, n.y, n.z);
    }
    for t in mesh.triangles() {
        let _ = writeln!(s, "f {0}//{0} {1}//{1} {2}//{2}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    s
}

pub fn save_obj(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_obj(mesh)).map_err(|e| Error::io(path, e))
}
