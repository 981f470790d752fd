//! Covariance construction and quaternion conversion against an
//! eigendecomposition oracle.

use proptest::prelude::*;
use splatweather::gaussian::{covariance_from, matrix_from_quaternion, quaternion_from_matrix, same_rotation};
use splatweather::math::{Mat3, Quat, Vec3};

fn quat(v: [f64; 4]) -> Option<Quat> {
    let q = nalgebra::Quaternion::new(v[0], v[1], v[2], v[3]);
    (q.norm() > 1e-3).then(|| Quat::from_quaternion(q / q.norm()))
}

proptest! {
    #[test]
    fn eigen_structure(v in prop::array::uniform4(-1.0f64..1.0), s in prop::array::uniform3(0.001f64..2.0)) {
        let Some(q) = quat(v) else { return Ok(()) };
        let scale = Vec3::from(s);
        let cov = covariance_from(&q, &scale).unwrap();
        prop_assert_eq!(cov, cov.transpose());

        let mut got: Vec<f64> = cov.symmetric_eigen().eigenvalues.iter().copied().collect();
        let mut want: Vec<f64> = s.iter().map(|x| x * x).collect();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-12 * (1.0 + want[2]));
        }
        // Columns of R are the eigenvectors with eigenvalue scale².
        let r = matrix_from_quaternion(&q);
        for a in 0..3 {
            let col = r.column(a).into_owned();
            prop_assert!((cov * col - col * (s[a] * s[a])).norm() <= 1e-12 * (1.0 + want[2]));
        }
    }

    #[test]
    fn quaternion_round_trip(v in prop::array::uniform4(-1.0f64..1.0)) {
        let Some(q) = quat(v) else { return Ok(()) };
        let r = matrix_from_quaternion(&q);
        prop_assert!((r.transpose() * r - Mat3::identity()).norm() < 1e-12);
        prop_assert!((r.determinant() - 1.0).abs() < 1e-12);
        let back = quaternion_from_matrix(&r).unwrap();
        prop_assert!(same_rotation(&q, &back, 1e-9));
        prop_assert!((matrix_from_quaternion(&back) - r).norm() < 1e-12);
    }
}

#[test]
fn rejects_non_unit_quaternions() {
    let q = Quat::new_unchecked(nalgebra::Quaternion::new(2.0, 0.0, 0.0, 0.0));
    assert!(covariance_from(&q, &Vec3::repeat(1.0)).is_err());
}
