use serde::{Deserialize, Serialize};

use crate::math::Mat3;

use super::{clamp_singular_values, Material, Particle};

/// Singular-value clamp window `[1 - compress, 1 + stretch]` and hardening
/// coefficient `ξ` in `exp(ξ(1 - Jp))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Plasticity {
    pub compress: f64,
    pub stretch: f64,
    pub hardening: f64,
}

impl Plasticity {
    pub const SNOW: Plasticity = Plasticity {
        compress: 2.5e-2,
        stretch: 4.5e-3,
        hardening: 10.0,
    };
    pub const SAND: Plasticity = Plasticity {
        compress: 5e-2,
        stretch: 1e-2,
        hardening: 0.0,
    };
}

/// `(μ, λ)` from Young's modulus and Poisson ratio.
pub fn lame_parameters(youngs: f64, poisson: f64) -> (f64, f64) {
    let mu = youngs / (2.0 * (1.0 + poisson));
    let lambda = youngs * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
    (mu, lambda)
}

/// Kirchhoff stress `P Fᵀ` for the particle's material.
pub(crate) fn kirchhoff(p: &Particle, mu: f64, lambda: f64, snow: &Plasticity, sand: &Plasticity) -> Mat3 {
    let f = &p.deformation;
    match p.material {
        Material::Snow | Material::Sand => {
            let xi = if p.material == Material::Snow {
                snow.hardening
            } else {
                sand.hardening
            };
            let h = (xi * (1.0 - p.plastic_det)).exp();
            let (mu, lambda) = (mu * h, lambda * h);
            let j = f.determinant();
            (f - p.polar) * f.transpose() * (2.0 * mu) + Mat3::identity() * (lambda * j * (j - 1.0))
        }
        Material::Fluid => {
            let j = f[(0, 0)] * f[(1, 1)] * f[(2, 2)];
            Mat3::identity() * (lambda * j * (j - 1.0))
        }
        Material::Rigid | Material::Stationary => Mat3::zeros(),
    }
}

/// Post-update projection of `F` and refresh of the cached polar rotation.
pub(crate) fn project_deformation(p: &mut Particle, snow: &Plasticity, sand: &Plasticity) {
    match p.material {
        Material::Snow | Material::Sand => {
            let plast = if p.material == Material::Snow { snow } else { sand };
            let lo = 1.0 - plast.compress;
            let hi = 1.0 + plast.stretch;
            let c = clamp_singular_values(&p.deformation, &p.svd_basis, lo, hi);
            p.svd_basis = c.basis;
            p.plastic_det *= c.det_ratio;
            p.deformation = c.deformation;
            p.polar = c.polar;
        }
        Material::Fluid => {
            let j = p.deformation.determinant();
            p.deformation = Mat3::identity() * j.cbrt();
        }
        Material::Rigid | Material::Stationary => {
            p.deformation = Mat3::identity();
        }
    }
}
