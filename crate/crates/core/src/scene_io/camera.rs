//! Pinhole cameras stored as JSON.
//!
//! A file holds either one camera object, an array of them, or
//! `{"cameras": [...]}`. Cameras use the OpenCV convention: x right, y down,
//! z forward; `rotation`/`translation` map world points into camera space.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{Mat3, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// Row-major world-to-camera rotation.
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl CameraSpec {
    pub fn rotation_matrix(&self) -> Mat3 {
        let r = &self.rotation;
        Mat3::new(
            r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2],
        )
    }

    pub fn translation_vector(&self) -> Vec3 {
        Vec3::from(self.translation)
    }

    pub fn world_to_camera(&self, p: &Vec3) -> Vec3 {
        self.rotation_matrix() * p + self.translation_vector()
    }

    /// Camera centre in world coordinates.
    pub fn position(&self) -> Vec3 {
        -(self.rotation_matrix().transpose() * self.translation_vector())
    }

    /// Camera at `eye` looking at `target`; `up` is the world up direction.
    pub fn look_at(eye: Vec3, target: Vec3, up: Vec3, width: u32, height: u32, fov_y_deg: f64) -> Result<Self> {
        let forward = target - eye;
        if forward.norm() < 1e-12 {
            return Err(Error::Invalid("camera eye and target coincide".into()));
        }
        let z = forward.normalize();
        let x = z.cross(&up);
        if x.norm() < 1e-9 {
            return Err(Error::Invalid("camera up vector is parallel to the view direction".into()));
        }
        let x = x.normalize();
        let y = z.cross(&x);
        let r = Mat3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
        let t = -(r * eye);
        let f = 0.5 * height as f64 / (0.5 * fov_y_deg.to_radians()).tan();
        let cam = Self {
            name: None,
            width,
            height,
            fx: f,
            fy: f,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            rotation: [
                [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
                [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
                [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
            ],
            translation: [t.x, t.y, t.z],
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Invalid("camera width and height must be positive".into()));
        }
        if !(self.fx > 0.0 && self.fy > 0.0) || !self.cx.is_finite() || !self.cy.is_finite() {
            return Err(Error::Invalid("camera focal lengths must be positive and finite".into()));
        }
        let r = self.rotation_matrix();
        if r.iter().any(|v| !v.is_finite()) || self.translation.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("camera pose has non-finite entries".into()));
        }
        if (r.transpose() * r - Mat3::identity()).norm() > 1e-6 || (r.determinant() - 1.0).abs() > 1e-6 {
            return Err(Error::Invalid(
                "camera rotation must be orthonormal with determinant +1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CameraFile {
    Wrapped { cameras: Vec<CameraSpec> },
    List(Vec<CameraSpec>),
    Single(CameraSpec),
}

pub fn parse_cameras(text: &str, context: &str) -> Result<Vec<CameraSpec>> {
    let file: CameraFile = serde_json::from_str(text).map_err(|e| {
        Error::parse(
            context,
            format!("line {} column {}", e.line(), e.column()),
            "expected a camera object, an array of cameras or {\"cameras\": [...]}",
        )
    })?;
    let cams = match file {
        CameraFile::Wrapped { cameras } | CameraFile::List(cameras) => cameras,
        CameraFile::Single(c) => vec![c],
    };
    if cams.is_empty() {
        return Err(Error::parse(context, "cameras", "no cameras defined"));
    }
    for (i, c) in cams.iter().enumerate() {
        c.validate()
            .map_err(|e| Error::parse(context, format!("camera {i}"), e.to_string()))?;
    }
    Ok(cams)
}

pub fn load_cameras(path: impl AsRef<Path>) -> Result<Vec<CameraSpec>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_cameras(&text, &path.display().to_string())
}

pub fn save_cameras(cameras: &[CameraSpec], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(&serde_json::json!({ "cameras": cameras }))
        .map_err(|e| Error::Invalid(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
