//! Gaussian-splat scenes in the binary PLY layout produced by the reference
//! 3DGS trainer: `x y z [nx ny nz] f_dc_0..2 [f_rest_*] opacity scale_0..2 rot_0..3`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::gaussian::{sh_coeff_count, GaussianSplat, ShCoefficients, SplatColor, UNIT_TOLERANCE};
use crate::math::{Aabb, Quat, Vec3};

use super::ply::{Element, PlyFormat, PlyReader, PlyWriter, Property, PropertyKind, ScalarType};

/// How stored scale/opacity values map to splat parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlyActivation {
    /// `scale = exp(stored)`, `opacity = logistic(stored)`.
    #[default]
    Standard,
    /// Stored values are used as-is.
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianScene {
    pub splats: Vec<GaussianSplat>,
    pub sh_degree: u8,
    pub source_bounds: Aabb,
}

impl GaussianScene {
    /// Builds a scene, converting flat colors to SH blocks of `sh_degree`.
    pub fn new(splats: Vec<GaussianSplat>, sh_degree: u8) -> Result<Self> {
        if splats.is_empty() {
            return Err(Error::Invalid("a scene needs at least one splat".into()));
        }
        if sh_degree > 3 {
            return Err(Error::Invalid(format!("SH degree {sh_degree} exceeds 3")));
        }
        let mut splats = splats;
        for s in &mut splats {
            s.validate()?;
            s.color = SplatColor::Sh(to_degree(&s.color, sh_degree)?);
        }
        let source_bounds = Aabb::from_points(splats.iter().map(|s| &s.position));
        Ok(Self {
            splats,
            sh_degree,
            source_bounds,
        })
    }
}

fn to_degree(color: &SplatColor, degree: u8) -> Result<ShCoefficients> {
    let base = match color {
        SplatColor::Flat(rgb) => ShCoefficients::from_rgb(*rgb),
        SplatColor::Sh(sh) => sh.clone(),
    };
    if base.degree() == degree {
        return Ok(base);
    }
    if base.degree() > degree {
        return Ok(base.truncated(degree));
    }
    let mut coeffs = base.coeffs().to_vec();
    coeffs.resize(sh_coeff_count(degree), [0.0; 3]);
    ShCoefficients::new(degree, coeffs)
}

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    (p / (1.0 - p)).ln()
}

pub fn load_gaussian_ply(path: impl AsRef<Path>) -> Result<GaussianScene> {
    load_gaussian_ply_with(path, PlyActivation::Standard)
}

pub fn load_gaussian_ply_with(path: impl AsRef<Path>, activation: PlyActivation) -> Result<GaussianScene> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_gaussian_ply(&bytes, &path.display().to_string(), activation)
}

pub fn parse_gaussian_ply(bytes: &[u8], context: &str, activation: PlyActivation) -> Result<GaussianScene> {
    let mut reader = PlyReader::new(bytes, context)?;
    if reader.header.format != PlyFormat::BinaryLittleEndian {
        return Err(Error::parse(context, "header", "Gaussian PLY must be binary_little_endian"));
    }
    let vertex = reader
        .header
        .elements
        .first()
        .filter(|e| e.name == "vertex")
        .cloned()
        .ok_or_else(|| Error::parse(context, "header", "first element must be 'vertex'"))?;

    let idx = |name: &str| -> Result<usize> {
        vertex
            .property_index(name)
            .ok_or_else(|| Error::parse(context, format!("property '{name}'"), "missing required property"))
    };
    let pos = [idx("x")?, idx("y")?, idx("z")?];
    let opacity = idx("opacity")?;
    let scale = [idx("scale_0")?, idx("scale_1")?, idx("scale_2")?];
    let rot = [idx("rot_0")?, idx("rot_1")?, idx("rot_2")?, idx("rot_3")?];
    let dc = [idx("f_dc_0")?, idx("f_dc_1")?, idx("f_dc_2")?];
    let n_rest = vertex
        .properties
        .iter()
        .filter(|p| p.name.starts_with("f_rest_"))
        .count();
    let sh_degree: u8 = match n_rest {
        0 => 0,
        9 => 1,
        24 => 2,
        45 => 3,
        n => {
            return Err(Error::parse(
                context,
                "property 'f_rest_*'",
                format!("{n} f_rest properties do not match any SH degree <= 3"),
            ))
        }
    };
    let rest: Vec<usize> = (0..n_rest)
        .map(|i| idx(&format!("f_rest_{i}")))
        .collect::<Result<_>>()?;
    let per_channel = n_rest / 3;
    if vertex.count == 0 {
        return Err(Error::parse(context, "element 'vertex'", "scene has no splats"));
    }

    let mut splats = Vec::with_capacity(vertex.count);
    let props = vertex.properties.clone();
    reader.read_next_element(|row_idx, row| {
        for (pi, v) in row.values.iter().enumerate() {
            if !v.is_finite() && matches!(props[pi].kind, PropertyKind::Scalar(_)) {
                return Err(Error::parse(
                    context,
                    format!("vertex {row_idx}, property '{}'", props[pi].name),
                    format!("non-finite value {v}"),
                ));
            }
        }
        let v = &row.values;
        let raw_q = nalgebra::Quaternion::new(v[rot[0]], v[rot[1]], v[rot[2]], v[rot[3]]);
        let n = raw_q.norm();
        if n == 0.0 {
            return Err(Error::parse(
                context,
                format!("vertex {row_idx}, property 'rot_0'"),
                "zero quaternion",
            ));
        }
        // Already-unit quaternions are kept verbatim so a save/load cycle is exact.
        let rotation = if (n - 1.0).abs() <= UNIT_TOLERANCE * 0.5 {
            Quat::new_unchecked(raw_q)
        } else {
            Quat::new_normalize(raw_q)
        };
        let raw_scale = Vec3::new(v[scale[0]], v[scale[1]], v[scale[2]]);
        let (scale, opacity) = match activation {
            PlyActivation::Standard => (raw_scale.map(f64::exp), logistic(v[opacity])),
            PlyActivation::Linear => (raw_scale, v[opacity]),
        };
        let mut coeffs = vec![[0.0; 3]; per_channel + 1];
        coeffs[0] = [v[dc[0]], v[dc[1]], v[dc[2]]];
        for ch in 0..3 {
            for k in 0..per_channel {
                coeffs[k + 1][ch] = v[rest[ch * per_channel + k]];
            }
        }
        let splat = GaussianSplat {
            position: Vec3::new(v[pos[0]], v[pos[1]], v[pos[2]]),
            rotation,
            scale,
            opacity,
            color: SplatColor::Sh(ShCoefficients::new(sh_degree, coeffs)?),
        };
        splat.validate().map_err(|e| {
            Error::parse(context, format!("vertex {row_idx}"), e.to_string())
        })?;
        splats.push(splat);
        Ok(())
    })?;
    GaussianScene::new(splats, sh_degree)
}

pub fn encode_gaussian_ply(scene: &GaussianScene, activation: PlyActivation) -> Result<Vec<u8>> {
    let degree = scene.sh_degree;
    let per_channel = sh_coeff_count(degree) - 1;
    let mut names: Vec<String> = ["x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    names.extend((0..3 * per_channel).map(|i| format!("f_rest_{i}")));
    names.extend(
        ["opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"]
            .iter()
            .map(|s| s.to_string()),
    );
    let element = Element {
        name: "vertex".into(),
        count: scene.splats.len(),
        properties: names
            .into_iter()
            .map(|name| Property {
                name,
                kind: PropertyKind::Scalar(ScalarType::F32),
            })
            .collect(),
    };
    let mut w = PlyWriter::new(Vec::with_capacity(64 + scene.splats.len() * element.properties.len() * 4));
    w.header(PlyFormat::BinaryLittleEndian, std::slice::from_ref(&element))
        .expect("writing to memory");
    let mut row = Vec::with_capacity(element.properties.len());
    for s in &scene.splats {
        let sh = to_degree(&s.color, degree)?;
        row.clear();
        row.extend(s.position.iter().copied());
        row.extend([0.0; 3]);
        row.extend(sh.coeffs()[0]);
        for ch in 0..3 {
            row.extend(sh.coeffs()[1..].iter().map(|c| c[ch]));
        }
        match activation {
            PlyActivation::Standard => {
                row.push(logit(s.opacity));
                row.extend(s.scale.iter().map(|v| v.ln()));
            }
            PlyActivation::Linear => {
                row.push(s.opacity);
                row.extend(s.scale.iter().copied());
            }
        }
        let q = s.rotation.as_ref();
        row.extend([q.w, q.i, q.j, q.k]);
        for v in &row {
            w.f32_le(*v as f32).expect("writing to memory");
        }
    }
    Ok(w.into_inner())
}

pub fn save_gaussian_ply(scene: &GaussianScene, path: impl AsRef<Path>) -> Result<()> {
    save_gaussian_ply_with(scene, path, PlyActivation::Standard)
}

pub fn save_gaussian_ply_with(scene: &GaussianScene, path: impl AsRef<Path>, activation: PlyActivation) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_gaussian_ply(scene, activation)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
