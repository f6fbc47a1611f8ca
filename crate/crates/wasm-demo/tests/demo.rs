use std::f64::consts::FRAC_PI_4;

use tractor_calculus::almost_einstein::{Locus, ScalarType};
use tractor_wasm_demo::*;

#[test]
fn unit_sphere_quadric() {
    let q = quadric(0.5, &[0.0; 3], -0.5, &[0.2, 0.1, 0.0]).unwrap();
    assert_eq!(q.kind, ScalarType::ScalarNegative);
    assert!((q.i_squared - 1.0).abs() < 1e-12);
    assert_eq!(q.locus, Some(Locus::Sphere { center: vec![0.0; 3], radius: 1.0 }));
    assert!(q.parallel_residual < 1e-10);
    assert!(q.einstein_residual.unwrap() < 1e-8);
    // on the locus there is no Einstein metric
    assert!(quadric(0.5, &[0.0; 3], -0.5, &[1.0, 0.0, 0.0]).unwrap().einstein_residual.is_none());
}

#[test]
fn interpolation_passes_through_flat() {
    let s = interpolation(3, FRAC_PI_4, &[0.3, 0.0, 0.1]).unwrap();
    assert_eq!(s.kind, ScalarType::ScalarFlat);
    assert!((s.i_squared - s.minus_cos_2t).abs() < 1e-12);
    assert!(matches!(s.locus, Some(Locus::Point { .. })));
}

#[test]
fn curvature_of_models() {
    let r = curvature("round_sphere_stereo", r#"{"dim": 3}"#, &[0.1, 0.2, 0.0]).unwrap();
    assert!((r.scalar - 6.0).abs() < 1e-10);
    assert!(r.weyl_max < 1e-10 && r.tractor_curvature_max < 1e-10);
    let p = curvature("product_spheres", r#"{"d1": 2, "r1": 1, "d2": 2, "r2": 1}"#, &[0.1, 0.0, 0.2, 0.0]).unwrap();
    assert!((p.scalar - 4.0).abs() < 1e-10);
    assert!(p.weyl_max > 0.1 && p.bach_max < 1e-8);
    assert!(curvature("poincare_ball", r#"{"dim": 3}"#, &[2.0, 0.0, 0.0]).is_err());
    assert!(curvature("nope", "{}", &[0.0; 3]).is_err());
}

#[test]
fn json_bindings() {
    let s = interpolation_js(4, 0.3, vec![0.1; 4]).unwrap();
    let v: serde_json::Value = serde_json::from_str(&s).unwrap();
    assert_eq!(v["kind"], "scalar_positive");
}
