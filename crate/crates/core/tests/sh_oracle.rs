//! Spherical harmonics against the textbook real basis built from
//! associated Legendre polynomials (Condon–Shortley phase included).

use std::f64::consts::PI;

use proptest::prelude::*;
use splatweather::gaussian::{evaluate_sh, sh_coeff_count, ShCoefficients, SH_C0};
use splatweather::math::Vec3;

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `P_l^m(x)` for `m >= 0`, with the `(-1)^m` phase.
fn legendre(l: u32, m: u32, x: f64) -> f64 {
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = 1.0;
    for i in 1..=m {
        pmm *= -(2.0 * i as f64 - 1.0) * s;
    }
    if l == m {
        return pmm;
    }
    let mut pm1 = x * (2.0 * m as f64 + 1.0) * pmm;
    if l == m + 1 {
        return pm1;
    }
    let mut p = 0.0;
    for ll in m + 2..=l {
        p = ((2.0 * ll as f64 - 1.0) * x * pm1 - (ll + m - 1) as f64 * pmm) / (ll - m) as f64;
        pmm = pm1;
        pm1 = p;
    }
    p
}

fn real_sh(l: u32, m: i32, d: &Vec3) -> f64 {
    let d = d.normalize();
    let theta = d.z.clamp(-1.0, 1.0).acos();
    let phi = d.y.atan2(d.x);
    let am = m.unsigned_abs();
    let k = ((2 * l + 1) as f64 / (4.0 * PI) * factorial(l - am) / factorial(l + am)).sqrt();
    let p = legendre(l, am, theta.cos());
    match m {
        0 => k * p,
        m if m > 0 => 2f64.sqrt() * k * (m as f64 * phi).cos() * p,
        _ => 2f64.sqrt() * k * (am as f64 * phi).sin() * p,
    }
}

fn oracle(degree: u8, coeffs: &[[f64; 3]], d: &Vec3) -> [f64; 3] {
    let mut out = [0.5; 3];
    let mut i = 0;
    for l in 0..=degree as u32 {
        for m in -(l as i32)..=l as i32 {
            let y = real_sh(l, m, d);
            for ch in 0..3 {
                out[ch] += y * coeffs[i][ch];
            }
            i += 1;
        }
    }
    out.map(|v| v.clamp(0.0, 1.0))
}

#[test]
fn dc_constant_matches_the_basis() {
    assert!((SH_C0 - real_sh(0, 0, &Vec3::z())).abs() < 1e-15);
}

#[test]
fn each_basis_function_alone() {
    let dirs = [
        Vec3::new(0.3, -0.5, 0.8),
        Vec3::new(-0.9, 0.1, 0.2),
        Vec3::new(0.0, 0.0, -1.0),
        Vec3::new(0.6, 0.6, -0.3),
    ];
    for i in 0..16 {
        let mut coeffs = vec![[0.0; 3]; 16];
        coeffs[i] = [0.4, -0.4, 0.2];
        let sh = ShCoefficients::new(3, coeffs.clone()).unwrap();
        for d in &dirs {
            let got = evaluate_sh(&sh, &d.normalize()).unwrap();
            let want = oracle(3, &coeffs, d);
            for ch in 0..3 {
                assert!((got[ch] - want[ch]).abs() < 1e-12, "basis {i}, dir {d:?}: {got:?} vs {want:?}");
            }
        }
    }
}

proptest! {
    #[test]
    fn random_coefficients(
        degree in 0u8..=3,
        raw in prop::collection::vec(-0.3f64..0.3, 48),
        dir in prop::array::uniform3(-1.0f64..1.0),
    ) {
        let d = Vec3::from(dir);
        prop_assume!(d.norm() > 1e-3);
        let d = d.normalize();
        let n = sh_coeff_count(degree);
        let coeffs: Vec<[f64; 3]> = raw.chunks(3).take(n).map(|c| [c[0], c[1], c[2]]).collect();
        let sh = ShCoefficients::new(degree, coeffs.clone()).unwrap();
        let got = evaluate_sh(&sh, &d).unwrap();
        let want = oracle(degree, &coeffs, &d);
        for ch in 0..3 {
            prop_assert!((got[ch] - want[ch]).abs() < 1e-12);
        }
    }
}
