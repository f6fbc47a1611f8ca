#![allow(clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tractor_calculus::almost_einstein::*;
use tractor_calculus::curvature::{curvature_packet, unit_multi_index};
use tractor_calculus::metric::{conformal_rescale, Monomial, ScalarField};
use tractor_calculus::{Error, Jet, MetricChart, Scalar};

fn points(d: usize, n: usize, r: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..d).map(|_| rng.gen_range(-r..r)).collect()).collect()
}

fn coordinate(i: usize, d: usize, scale: f64, shift: f64) -> ScalarField {
    let mut powers = vec![0u8; d];
    powers[i] = 1;
    ScalarField::Polynomial {
        terms: vec![
            Monomial { coeff: shift, powers: vec![0; d] },
            Monomial { coeff: scale, powers },
        ],
    }
}

fn random_omega(d: usize, rng: &mut ChaCha8Rng) -> ScalarField {
    let mut terms = Vec::new();
    for _ in 0..4 {
        let mut powers = vec![0u8; d];
        for _ in 0..rng.gen_range(1..=2) {
            powers[rng.gen_range(0..d)] += 1;
        }
        terms.push(Monomial {
            coeff: rng.gen_range(-0.3..0.3),
            powers,
        });
    }
    ScalarField::Polynomial { terms }
}

#[test]
fn quadrics_solve_the_almost_einstein_equation() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let b: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (a, c) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let ae = quadric_ae(a, b.clone(), c).unwrap();
        for x in points(3, 5, 1.0, 4) {
            assert!(ae_residual(&ae.chart, &ae.sigma, &x).unwrap().max_abs() < 1e-12);
            assert!(parallel_residual(&ae, &x).unwrap() < 1e-10);
            let s = asc_scalar(&ae.chart, &ae.sigma, &x).unwrap();
            let disc = b.iter().map(|v| v * v).sum::<f64>() - 4.0 * a * c;
            assert!((s + disc).abs() < 1e-12);
            assert!((ae.i_squared(&x).unwrap() - disc).abs() < 1e-12);
        }
    }
}

#[test]
fn einstein_scale_on_einstein_products() {
    for chart in [
        MetricChart::product_spheres(2, 1.0, 2, 1.0),
        MetricChart::product_spheres(2, 0.9, 3, 0.9 * 2f64.sqrt()),
    ] {
        let d = chart.dim();
        let ae = AEStructure::new(chart, ScalarField::constant(1.0));
        for x in points(d, 3, 0.5, 9) {
            assert!(ae_residual(&ae.chart, &ae.sigma, &x).unwrap().max_abs() < 1e-10);
            assert!(parallel_residual(&ae, &x).unwrap() < 1e-9);
            assert!(einstein_residual(&ae, &x).unwrap() < 1e-9);
            let r = aesum_residuals(&ae, &x).unwrap();
            assert!(r.max() < 1e-8, "{r:?}");
        }
    }
}

#[test]
fn coordinate_scale_on_the_sphere_is_not_almost_einstein() {
    let chart = MetricChart::round_sphere(3);
    let s = coordinate(0, 3, 1.0, 0.0);
    let x = [0.3, -0.2, 0.4];
    let r = ae_residual(&chart, &s, &x).unwrap();
    assert!(r.max_abs() > 1e-2);
    // independent assembly: finite-difference Hessian, packet Christoffels and Schouten
    let p = curvature_packet(&chart, &x, 2).unwrap();
    let h = 1e-4;
    let f = |y: &[f64]| s.value_at(y).unwrap();
    let mut m = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            let mut pp = x.to_vec();
            let mut pm = x.to_vec();
            let mut mp = x.to_vec();
            let mut mm = x.to_vec();
            pp[a] += h;
            pp[b] += h;
            pm[a] += h;
            pm[b] -= h;
            mp[a] -= h;
            mp[b] += h;
            mm[a] -= h;
            mm[b] -= h;
            let dd = (f(&pp) - f(&pm) - f(&mp) + f(&mm)) / (4.0 * h * h);
            let gamma_term: f64 = (0..3).map(|c| p.gamma.get(&[c, a, b]) * if c == 0 { 1.0 } else { 0.0 }).sum();
            m[a][b] = dd - gamma_term + x[0] * p.schouten.get(&[a, b]);
        }
    }
    let tr: f64 = (0..3)
        .flat_map(|a| (0..3).map(move |b| (a, b)))
        .map(|(a, b)| p.ginv.get(&[a, b]) * m[a][b])
        .sum();
    for a in 0..3 {
        for b in 0..3 {
            let expected = m[a][b] - tr / 3.0 * p.g.get(&[a, b]);
            assert!((r.get(&[a, b]) - expected).abs() < 1e-6);
        }
    }
}

#[test]
fn asc_scalar_on_space_forms() {
    let one = ScalarField::constant(1.0);
    let x = [0.2, 0.1, -0.3];
    assert!((asc_scalar(&MetricChart::round_sphere(3), &one, &x).unwrap() - 1.0).abs() < 1e-12);
    assert!((asc_scalar(&MetricChart::poincare_ball(3), &one, &x).unwrap() + 1.0).abs() < 1e-12);
}

#[test]
fn non_almost_einstein_scale_is_detected() {
    let chart = MetricChart::product_spheres(2, 1.0, 2, 1.0);
    let ae = AEStructure::new(chart, coordinate(0, 4, 0.1, 1.0));
    let x = [0.2, 0.3, -0.1, 0.25];
    assert!(parallel_residual(&ae, &x).unwrap() > 1e-3);
    assert!(matches!(classify(&ae, &x), Err(Error::NotAlmostEinstein(_))));
    assert!(aesum_residuals(&ae, &x).unwrap().weyl_cotton > 1e-4);
}

#[test]
fn classification_of_the_three_model_quadrics() {
    let x = [0.3, 0.1, -0.2];
    let pos = classify(&quadric_ae(0.5, vec![0.0; 3], 0.5).unwrap(), &x).unwrap();
    assert_eq!(pos.kind, ScalarType::ScalarPositive);
    assert_eq!(pos.locus, Some(Locus::Empty));
    let flat = classify(&quadric_ae(0.0, vec![0.0; 3], 1.0).unwrap(), &x).unwrap();
    assert_eq!(flat.kind, ScalarType::ScalarFlat);
    assert_eq!(flat.locus, Some(Locus::Point { center: vec![0.0; 3] }));
    let neg = classify(&quadric_ae(0.5, vec![0.0; 3], -0.5).unwrap(), &x).unwrap();
    assert_eq!(neg.kind, ScalarType::ScalarNegative);
    assert!(matches!(neg.locus, Some(Locus::Sphere { radius, .. }) if (radius - 1.0).abs() < 1e-15));
}

#[test]
fn einstein_representatives_match_space_form_oracles() {
    for d in 3..=5 {
        let mut x = vec![0.0; d];
        x[0] = 0.3;
        // hyperbolic: σ^{-2}δ = 4(1−|x|²)^{-2}δ
        let hyp = quadric_ae(0.5, vec![0.0; d], -0.5).unwrap();
        assert!(einstein_residual(&hyp, &x).unwrap() < 1e-8);
        let gb = einstein_chart(&hyp).metric_at(&x).unwrap();
        let ball = MetricChart::poincare_ball(d).metric_at(&x).unwrap();
        assert!(gb.sub(&ball).unwrap().max_abs() < 1e-12);
        // round: σ^{-2}δ = 4(1+|x|²)^{-2}δ
        let round = quadric_ae(0.5, vec![0.0; d], 0.5).unwrap();
        assert!(einstein_residual(&round, &x).unwrap() < 1e-8);
        let gb = einstein_chart(&round).metric_at(&x).unwrap();
        let sphere = MetricChart::round_sphere(d).metric_at(&x).unwrap();
        assert!(gb.sub(&sphere).unwrap().max_abs() < 1e-12);
        // flat inversion metric |x|^{-4}δ
        let flat = quadric_ae(0.0, vec![0.0; d], 1.0).unwrap();
        let mut y = vec![0.0; d];
        y[0] = 1.0;
        assert!(einstein_residual(&flat, &y).unwrap() < 1e-8);
        let ric = tractor_calculus::curvature::riemann_tensor(&einstein_chart(&flat), &y).unwrap();
        assert!(ric.riemann.max_abs() < 1e-9);
    }
}

#[test]
fn singularity_guard() {
    let ae = quadric_ae(0.5, vec![0.0; 3], -0.5).unwrap();
    assert!(matches!(
        einstein_residual(&ae, &[1.0, 0.0, 0.0]),
        Err(Error::SingularityProximity(_))
    ));
}

#[test]
fn scalar_flat_zero_is_a_critical_point() {
    let ae = quadric_ae(0.0, vec![0.0; 4], 1.0).unwrap();
    let j: Jet = ae.sigma.jet_at(&[0.0; 4], 2).unwrap();
    assert_eq!(j.value(), 0.0);
    let mut lap = 0.0;
    for a in 0..4 {
        assert_eq!(j.derivative(&unit_multi_index(4, &[a])).unwrap(), 0.0);
        lap -= j.derivative(&unit_multi_index(4, &[a, a])).unwrap();
    }
    assert!((lap + 8.0).abs() < 1e-14);
}

#[test]
fn conformal_covariance_of_the_functionals() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let chart = MetricChart::random_perturbation(3, 70);
    let s = ScalarField::quadric(0.4, vec![0.1, -0.2, 0.3], 0.2);
    let x = [0.1, 0.2, -0.15];
    let r0 = ae_residual(&chart, &s, &x).unwrap();
    let a0 = asc_scalar(&chart, &s, &x).unwrap();
    for _ in 0..20 {
        let omega = random_omega(3, &mut rng);
        let rescaled = conformal_rescale(&chart, omega.clone());
        let s_hat = ScalarField::Exp { field: Box::new(omega.clone()) }.times(s.clone());
        let w = omega.value_at(&x).unwrap();
        let r1 = ae_residual(&rescaled, &s_hat, &x).unwrap();
        assert!(r1.sub(&r0.scale(w.exp())).unwrap().max_abs() < 1e-9);
        assert!((asc_scalar(&rescaled, &s_hat, &x).unwrap() - a0).abs() < 1e-9);
    }
}

#[test]
fn linear_combinations_stay_parallel() {
    let i1 = quadric_ae(0.5, vec![0.0; 3], -0.5).unwrap();
    let i2 = quadric_ae(0.5, vec![0.0; 3], 0.5).unwrap();
    let x = [0.2, -0.4, 0.1];
    for k in 0..8 {
        let t = k as f64 * std::f64::consts::PI / 8.0;
        let it = i1.combine(t.sin(), &i2, t.cos()).unwrap();
        assert!(parallel_residual(&it, &x).unwrap() < 1e-10);
        assert!((it.i_squared(&x).unwrap() + (2.0 * t).cos()).abs() < 1e-12);
    }
    let quarter = i1.combine(0.5f64.sqrt(), &i2, 0.5f64.sqrt()).unwrap();
    assert_eq!(classify(&quarter, &x).unwrap().kind, ScalarType::ScalarFlat);
}

#[test]
fn s_is_minus_tractor_length_on_a_rescaled_einstein_structure() {
    // ĝ = e^{2ω} g with g Einstein; the Einstein scale in ĝ is σ = e^{ω}
    let base = MetricChart::product_spheres(2, 1.0, 2, 1.0);
    let omega = ScalarField::Polynomial {
        terms: vec![
            Monomial { coeff: 0.2, powers: vec![1, 0, 0, 0] },
            Monomial { coeff: -0.1, powers: vec![0, 1, 1, 0] },
        ],
    };
    let chart = conformal_rescale(&base, omega.clone());
    let ae = AEStructure::new(chart, ScalarField::Exp { field: Box::new(omega) });
    for x in points(4, 5, 0.4, 12) {
        assert!(parallel_residual(&ae, &x).unwrap() < 1e-9);
        let s = asc_scalar(&ae.chart, &ae.sigma, &x).unwrap();
        assert!((s + ae.i_squared(&x).unwrap()).abs() < 1e-10);
        let r = aesum_residuals(&ae, &x).unwrap();
        assert!(r.max() < 1e-8, "{r:?}");
        assert!(einstein_residual(&ae, &x).unwrap() < 1e-8);
    }
}

#[test]
fn w_identities_in_dimension_five() {
    let e5 = MetricChart::product_spheres(2, 1.0, 3, 2f64.sqrt());
    let x = [0.1, 0.2, -0.1, 0.0, 0.2];
    let r = ext_residual(&AEStructure::new(e5.clone(), ScalarField::constant(1.0)), &x).unwrap();
    assert!(r.ext < 1e-6 && r.w_i < 1e-9 && r.w_x < 1e-10, "{r:?}");
    assert!(r.box_w > 1e-2);
    // the same structure in a non-Einstein scale: σ = e^ω on e^{2ω}g
    let omega = ScalarField::Polynomial {
        terms: vec![
            Monomial { coeff: 0.15, powers: vec![0, 0, 1, 0, 0] },
            Monomial { coeff: 0.1, powers: vec![1, 0, 0, 0, 1] },
        ],
    };
    let ae = AEStructure::new(conformal_rescale(&e5, omega.clone()), ScalarField::Exp { field: Box::new(omega) });
    let r = ext_residual(&ae, &x).unwrap();
    assert!(r.ext < 1e-6 && r.w_i < 1e-9 && r.w_x < 1e-10, "{r:?}");
    // a scale that is not almost Einstein breaks the identity
    let bad = AEStructure::new(e5, coordinate(1, 5, 0.3, 1.0));
    assert!(ext_residual(&bad, &x).unwrap().ext > 1e-4);
}

#[test]
fn ext_needs_dimension_five() {
    let ae = AEStructure::new(MetricChart::product_spheres(2, 1.0, 2, 1.0), ScalarField::constant(1.0));
    assert!(matches!(ext_residual(&ae, &[0.0; 4]), Err(Error::Dimension(_))));
}
