//! Gaussian kernel math shared by simulation and rendering.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{Mat3, Quat, Vec3};

/// Tolerance on quaternion norm and rotation orthonormality.
pub const UNIT_TOLERANCE: f64 = 1e-6;

pub const SH_C0: f64 = 0.282_094_791_773_878_14;
const SH_C1: f64 = 0.488_602_511_902_919_9;
const SH_C2: [f64; 5] = [
    1.092_548_430_592_079_2,
    -1.092_548_430_592_079_2,
    0.315_391_565_252_520_05,
    -1.092_548_430_592_079_2,
    0.546_274_215_296_039_6,
];
const SH_C3: [f64; 7] = [
    -0.590_043_589_926_643_5,
    2.890_611_442_640_554,
    -0.457_045_799_464_465_8,
    0.373_176_332_590_115_4,
    -0.457_045_799_464_465_8,
    1.445_305_721_320_277,
    -0.590_043_589_926_643_5,
];

/// Real spherical-harmonic coefficients, one RGB triple per basis function,
/// ordered by degree then order `m = -l..=l`. Index 0 is the DC term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShCoefficients {
    degree: u8,
    coeffs: Vec<[f64; 3]>,
}

pub const fn sh_coeff_count(degree: u8) -> usize {
    (degree as usize + 1) * (degree as usize + 1)
}

impl ShCoefficients {
    pub fn new(degree: u8, coeffs: Vec<[f64; 3]>) -> Result<Self> {
        if degree > 3 {
            return Err(Error::Invalid(format!("SH degree {degree} exceeds 3")));
        }
        if coeffs.len() != sh_coeff_count(degree) {
            return Err(Error::Invalid(format!(
                "SH degree {degree} needs {} coefficients per channel, got {}",
                sh_coeff_count(degree),
                coeffs.len()
            )));
        }
        Ok(Self { degree, coeffs })
    }

    /// Degree-0 block reproducing `rgb` under the +0.5 offset convention.
    pub fn from_rgb(rgb: [f64; 3]) -> Self {
        Self {
            degree: 0,
            coeffs: vec![rgb.map(|c| (c - 0.5) / SH_C0)],
        }
    }

    pub fn degree(&self) -> u8 {
        self.degree
    }

    pub fn coeffs(&self) -> &[[f64; 3]] {
        &self.coeffs
    }

    /// Drop all bands above `degree`.
    pub fn truncated(&self, degree: u8) -> Self {
        let degree = degree.min(self.degree);
        Self {
            degree,
            coeffs: self.coeffs[..sh_coeff_count(degree)].to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SplatColor {
    /// View-independent RGB in [0, 1].
    Flat([f64; 3]),
    Sh(ShCoefficients),
}

impl SplatColor {
    pub fn rgb(&self, view_dir: &Vec3) -> [f64; 3] {
        match self {
            SplatColor::Flat(c) => *c,
            // Coefficient blocks are validated at construction.
            SplatColor::Sh(sh) => eval_sh_unchecked(sh, view_dir),
        }
    }
}

/// One anisotropic Gaussian kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSplat {
    pub position: Vec3,
    pub rotation: Quat,
    pub scale: Vec3,
    pub opacity: f64,
    pub color: SplatColor,
}

impl GaussianSplat {
    pub fn flat(position: Vec3, rotation: Quat, scale: Vec3, opacity: f64, rgb: [f64; 3]) -> Self {
        Self {
            position,
            rotation,
            scale,
            opacity,
            color: SplatColor::Flat(rgb),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let qn = self.rotation.as_ref().norm();
        if (qn - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::Invalid(format!("splat quaternion norm {qn} is not 1")));
        }
        if !self.scale.iter().all(|s| *s > 0.0 && s.is_finite()) {
            return Err(Error::Invalid(format!("splat scale {:?} must be positive", self.scale)));
        }
        if !(0.0..=1.0).contains(&self.opacity) {
            return Err(Error::Invalid(format!("splat opacity {} outside [0,1]", self.opacity)));
        }
        if !self.position.iter().all(|v| v.is_finite()) {
            return Err(Error::Invalid("splat position is not finite".into()));
        }
        Ok(())
    }

    pub fn covariance(&self) -> Result<Mat3> {
        covariance_from(&self.rotation, &self.scale)
    }
}

/// `R diag(scale)^2 R^T`, exactly symmetric.
pub fn covariance_from(rotation: &Quat, scale: &Vec3) -> Result<Mat3> {
    let qn = rotation.as_ref().norm();
    if (qn - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::Invalid(format!("quaternion norm {qn} is not 1")));
    }
    let r = Quat::new_normalize(*rotation.as_ref()).to_rotation_matrix().into_inner();
    let m = r * Mat3::from_diagonal(&scale.component_mul(scale)) * r.transpose();
    Ok((m + m.transpose()) * 0.5)
}

/// Evaluate view-dependent color. `view_dir` points from the camera to the splat.
/// Returns the basis contraction plus 0.5, clamped to [0, 1].
pub fn evaluate_sh(sh: &ShCoefficients, view_dir: &Vec3) -> Result<[f64; 3]> {
    if sh.degree > 3 || sh.coeffs.len() != sh_coeff_count(sh.degree) {
        return Err(Error::Invalid(format!(
            "SH degree {} does not match {} coefficients",
            sh.degree,
            sh.coeffs.len()
        )));
    }
    Ok(eval_sh_unchecked(sh, view_dir))
}

fn eval_sh_unchecked(sh: &ShCoefficients, d: &Vec3) -> [f64; 3] {
    let c = &sh.coeffs;
    let mut out = [0.0; 3];
    for ch in 0..3 {
        let mut v = SH_C0 * c[0][ch];
        if sh.degree > 0 {
            let (x, y, z) = (d.x, d.y, d.z);
            v += -SH_C1 * y * c[1][ch] + SH_C1 * z * c[2][ch] - SH_C1 * x * c[3][ch];
            if sh.degree > 1 {
                let (xx, yy, zz) = (x * x, y * y, z * z);
                let (xy, yz, xz) = (x * y, y * z, x * z);
                v += SH_C2[0] * xy * c[4][ch]
                    + SH_C2[1] * yz * c[5][ch]
                    + SH_C2[2] * (2.0 * zz - xx - yy) * c[6][ch]
                    + SH_C2[3] * xz * c[7][ch]
                    + SH_C2[4] * (xx - yy) * c[8][ch];
                if sh.degree > 2 {
                    v += SH_C3[0] * y * (3.0 * xx - yy) * c[9][ch]
                        + SH_C3[1] * xy * z * c[10][ch]
                        + SH_C3[2] * y * (4.0 * zz - xx - yy) * c[11][ch]
                        + SH_C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy) * c[12][ch]
                        + SH_C3[4] * x * (4.0 * zz - xx - yy) * c[13][ch]
                        + SH_C3[5] * z * (xx - yy) * c[14][ch]
                        + SH_C3[6] * x * (xx - 3.0 * yy) * c[15][ch];
                }
            }
        }
        out[ch] = (v + 0.5).clamp(0.0, 1.0);
    }
    out
}

/// Rotation matrix to unit quaternion (Shepperd's method).
pub fn quaternion_from_matrix(r: &Mat3) -> Result<Quat> {
    let det = r.determinant();
    if det <= 0.0 {
        return Err(Error::Invalid(format!("rotation determinant {det} is not positive")));
    }
    if (r.transpose() * r - Mat3::identity()).amax() > UNIT_TOLERANCE {
        return Err(Error::Invalid("matrix is not orthonormal".into()));
    }
    let trace = r.trace();
    let (w, x, y, z);
    if trace > r[(0, 0)] && trace > r[(1, 1)] && trace > r[(2, 2)] {
        let s = (1.0 + trace).sqrt() * 2.0;
        w = 0.25 * s;
        x = (r[(2, 1)] - r[(1, 2)]) / s;
        y = (r[(0, 2)] - r[(2, 0)]) / s;
        z = (r[(1, 0)] - r[(0, 1)]) / s;
    } else if r[(0, 0)] >= r[(1, 1)] && r[(0, 0)] >= r[(2, 2)] {
        let s = (1.0 + r[(0, 0)] - r[(1, 1)] - r[(2, 2)]).sqrt() * 2.0;
        w = (r[(2, 1)] - r[(1, 2)]) / s;
        x = 0.25 * s;
        y = (r[(0, 1)] + r[(1, 0)]) / s;
        z = (r[(0, 2)] + r[(2, 0)]) / s;
    } else if r[(1, 1)] >= r[(2, 2)] {
        let s = (1.0 + r[(1, 1)] - r[(0, 0)] - r[(2, 2)]).sqrt() * 2.0;
        w = (r[(0, 2)] - r[(2, 0)]) / s;
        x = (r[(0, 1)] + r[(1, 0)]) / s;
        y = 0.25 * s;
        z = (r[(1, 2)] + r[(2, 1)]) / s;
    } else {
        let s = (1.0 + r[(2, 2)] - r[(0, 0)] - r[(1, 1)]).sqrt() * 2.0;
        w = (r[(1, 0)] - r[(0, 1)]) / s;
        x = (r[(0, 2)] + r[(2, 0)]) / s;
        y = (r[(1, 2)] + r[(2, 1)]) / s;
        z = 0.25 * s;
    }
    let mut q = nalgebra::Quaternion::new(w, x, y, z);
    if q.w < 0.0 {
        q = -q;
    }
    Ok(Quat::new_normalize(q))
}

pub fn matrix_from_quaternion(q: &Quat) -> Mat3 {
    Quat::new_normalize(*q.as_ref()).to_rotation_matrix().into_inner()
}

/// True when `a` and `b` describe the same rotation (q and -q are equal).
pub fn same_rotation(a: &Quat, b: &Quat, tol: f64) -> bool {
    (a.as_ref() - b.as_ref()).norm() <= tol || (a.as_ref() + b.as_ref()).norm() <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::quat_from_wxyz;
    use proptest::prelude::*;

    #[test]
    fn covariance_identity_and_axis_scale() {
        let c = covariance_from(&Quat::identity(), &Vec3::new(1.0, 1.0, 1.0)).unwrap();
        assert_eq!(c, Mat3::identity());
        let c = covariance_from(&Quat::identity(), &Vec3::new(2.0, 1.0, 1.0)).unwrap();
        assert_eq!(c, Mat3::from_diagonal(&Vec3::new(4.0, 1.0, 1.0)));
    }

    #[test]
    fn covariance_rejects_non_unit_quaternion() {
        let q = quat_from_wxyz([1.1, 0.0, 0.0, 0.0]);
        assert!(covariance_from(&q, &Vec3::repeat(1.0)).is_err());
    }

    #[test]
    fn quaternion_of_quarter_turn_about_z() {
        let r = nalgebra::Rotation3::from_axis_angle(&Vec3::z_axis(), std::f64::consts::FRAC_PI_2);
        let q = quaternion_from_matrix(r.matrix()).unwrap();
        let h = std::f64::consts::FRAC_PI_4;
        let expected = quat_from_wxyz([h.cos(), 0.0, 0.0, h.sin()]);
        assert!(same_rotation(&q, &expected, 1e-12));
        assert!(same_rotation(
            &quaternion_from_matrix(&Mat3::identity()).unwrap(),
            &Quat::identity(),
            0.0
        ));
    }

    #[test]
    fn reflection_is_rejected() {
        let m = Mat3::from_diagonal(&Vec3::new(1.0, 1.0, -1.0));
        assert!(quaternion_from_matrix(&m).is_err());
    }

    #[test]
    fn degree_zero_is_view_independent() {
        let sh = ShCoefficients::from_rgb([0.2, 0.4, 0.9]);
        let a = evaluate_sh(&sh, &Vec3::x()).unwrap();
        for i in 0..100 {
            let t = i as f64 * 0.37;
            let d = Vec3::new(t.sin() * (2.0 * t).cos(), t.cos(), t.sin() * (2.0 * t).sin());
            assert_eq!(evaluate_sh(&sh, &d.normalize()).unwrap(), a);
        }
        for (c, e) in a.iter().zip([0.2, 0.4, 0.9]) {
            assert!((c - e).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatched_sh_block_is_an_error() {
        assert!(ShCoefficients::new(2, vec![[0.0; 3]; 4]).is_err());
        assert!(ShCoefficients::new(4, vec![[0.0; 3]; 25]).is_err());
    }

    fn unit_quat() -> impl Strategy<Value = Quat> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
            .prop_filter("non-degenerate", |(w, x, y, z)| w * w + x * x + y * y + z * z > 1e-3)
            .prop_map(|(w, x, y, z)| Quat::new_normalize(nalgebra::Quaternion::new(w, x, y, z)))
    }

    proptest! {
        #[test]
        fn covariance_is_spd(q in unit_quat(), s in prop::array::uniform3(1e-3..10.0f64)) {
            let c = covariance_from(&q, &Vec3::from(s)).unwrap();
            prop_assert!((c - c.transpose()).amax() <= 1e-9);
            prop_assert!(c.cholesky().is_some());
        }

        #[test]
        fn rotation_round_trip(q in unit_quat()) {
            let m = matrix_from_quaternion(&q);
            let back = quaternion_from_matrix(&m).unwrap();
            prop_assert!(same_rotation(&q, &back, 1e-9));
            prop_assert!((matrix_from_quaternion(&back) - m).amax() < 1e-6);
        }
    }
}
