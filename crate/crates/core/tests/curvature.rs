use approx::assert_abs_diff_eq;
use tractor_calculus::curvature::{self, bianchi_residuals, curvature_packet, fields_at};
use tractor_calculus::metric::{conformal_rescale, MetricChart, ScalarField};
use tractor_calculus::{Jet, Scalar};

fn sample_points(dim: usize, n: usize, radius: f64, seed: u64) -> Vec<Vec<f64>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..dim).map(|_| rng.gen_range(-radius..radius)).collect())
        .collect()
}

#[test]
fn bianchi_identities_on_perturbations() {
    for dim in 3..=5 {
        let chart = MetricChart::random_perturbation(dim, 11 + dim as u64);
        for x in sample_points(dim, 3, 0.5, dim as u64) {
            let r = bianchi_residuals(&chart, &x).unwrap();
            assert!(r.max() < 1e-9, "d={dim} {r:?}");
        }
    }
}

#[test]
fn bianchi_identities_are_not_vacuous() {
    // the individual terms must be nonzero for the residuals to mean anything
    let chart = MetricChart::random_perturbation(4, 3);
    let p = curvature_packet(&chart, &[0.1, 0.2, -0.1, 0.05], 4).unwrap();
    assert!(p.weyl.max_abs() > 1e-3);
    assert!(p.cotton.as_ref().unwrap().max_abs() > 1e-3);
    assert!(p.bach.as_ref().unwrap().max_abs() > 1e-4);
}

#[test]
fn riemann_symmetries() {
    let charts = [
        MetricChart::random_perturbation(4, 5),
        MetricChart::poincare_ball(3),
        MetricChart::product_spheres(2, 1.0, 3, 1.3),
        MetricChart::round_sphere(4),
    ];
    for chart in &charts {
        let d = chart.dim();
        let x: Vec<f64> = (0..d).map(|i| 0.1 * (i as f64 + 1.0) - 0.2).collect();
        let p = curvature_packet(chart, &x, 2).unwrap();
        let r = |a: usize, b: usize, c: usize, e: usize| p.riemann.get(&[a, b, c, e]);
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for e in 0..d {
                        worst = worst
                            .max((r(a, b, c, e) + r(b, a, c, e)).abs())
                            .max((r(a, b, c, e) + r(a, b, e, c)).abs())
                            .max((r(a, b, c, e) - r(c, e, a, b)).abs())
                            .max((r(a, b, c, e) + r(b, c, a, e) + r(c, a, b, e)).abs());
                    }
                }
            }
        }
        assert!(worst < 1e-10, "{}: {worst}", chart.label());
        // Weyl is totally trace-free
        let ginv = &p.ginv;
        for b in 0..d {
            for e in 0..d {
                let tr: f64 = (0..d)
                    .flat_map(|a| (0..d).map(move |c| (a, c)))
                    .map(|(a, c)| ginv.get(&[a, c]) * p.weyl.get(&[a, b, c, e]))
                    .sum();
                assert!(tr.abs() < 1e-10);
            }
        }
    }
}

#[test]
fn unit_sphere_riemann_closed_form() {
    let chart = MetricChart::round_sphere(3);
    let x = [0.3, -0.2, 0.5];
    let p = curvature_packet(&chart, &x, 2).unwrap();
    let g = |a: usize, b: usize| p.g.get(&[a, b]);
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                for e in 0..3 {
                    let expected = g(a, c) * g(b, e) - g(b, c) * g(a, e);
                    assert_abs_diff_eq!(*p.riemann.get(&[a, b, c, e]), expected, epsilon = 1e-11);
                }
            }
        }
    }
    assert!(p.weyl.max_abs() < 1e-11);
}

#[test]
fn three_dimensional_weyl_vanishes() {
    let chart = MetricChart::random_perturbation(3, 21);
    let p = curvature_packet(&chart, &[0.2, 0.1, -0.3], 2).unwrap();
    assert!(p.weyl.max_abs() < 1e-12);
    assert!(p.riemann.max_abs() > 1e-3);
}

#[test]
fn conformally_flat_models_have_no_weyl() {
    for chart in [MetricChart::poincare_ball(4), MetricChart::round_sphere(5)] {
        let d = chart.dim();
        let x: Vec<f64> = (0..d).map(|i| 0.07 * i as f64).collect();
        let p = curvature_packet(&chart, &x, 4).unwrap();
        assert!(p.weyl.max_abs() < 1e-10);
        assert!(p.cotton.unwrap().max_abs() < 1e-10);
        assert!(p.bach.unwrap().max_abs() < 1e-9);
    }
}

fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[i] += h;
    xm[i] -= h;
    (f(&xp) - f(&xm)) / (2.0 * h)
}

#[test]
fn christoffel_matches_finite_differences() {
    let chart = MetricChart::poincare_ball(2);
    let x = [0.3, 0.0];
    let gamma = curvature::christoffel(&chart, &x, 1).unwrap();
    // closed form: g = e^{2φ}δ, φ = ln 2 − ln(1−|x|²), Γ^c_ab = δ_ca φ_b + δ_cb φ_a − δ_ab φ_c
    let dphi = |y: &[f64], i: usize| 2.0 * y[i] / (1.0 - y[0] * y[0] - y[1] * y[1]);
    let closed = |y: &[f64], c: usize, a: usize, b: usize| {
        let k = |p: usize, q: usize| if p == q { 1.0 } else { 0.0 };
        k(c, a) * dphi(y, b) + k(c, b) * dphi(y, a) - k(a, b) * dphi(y, c)
    };
    for c in 0..2 {
        for a in 0..2 {
            for b in 0..2 {
                let jet = &gamma[(c * 2 + a) * 2 + b];
                assert_abs_diff_eq!(jet.value(), closed(&x, c, a, b), epsilon = 1e-12);
                for e in 0..2 {
                    let mut alpha = [0u8; 2];
                    alpha[e] = 1;
                    let fd = central_difference(|y| closed(y, c, a, b), &x, e, 1e-5);
                    let exact = jet.derivative(&alpha).unwrap();
                    assert!((exact - fd).abs() < 1e-6 * (1.0 + fd.abs()));
                }
            }
        }
    }
}

#[test]
fn metric_jets_match_finite_differences() {
    let charts = [
        MetricChart::round_sphere(3),
        MetricChart::poincare_ball(3),
        MetricChart::random_perturbation(3, 8),
        MetricChart::product_spheres(1, 1.0, 2, 2.0),
    ];
    let x = [0.21, -0.13, 0.34];
    for chart in &charts {
        let jets = chart.metric_jets(&x, 3).unwrap();
        for (k, jet) in jets.iter().enumerate() {
            let f = |y: &[f64]| chart.metric(y).unwrap()[k];
            for i in 0..3 {
                // third derivative ∂_i ∂_i ∂_i via Richardson-extrapolated central differences
                let third_h = |h: f64| {
                    let at = |t: f64| {
                        let mut y = x.to_vec();
                        y[i] += t;
                        f(&y)
                    };
                    (at(2.0 * h) - 2.0 * at(h) + 2.0 * at(-h) - at(-2.0 * h)) / (2.0 * h * h * h)
                };
                let (d1, d2, d3) = (third_h(0.04), third_h(0.02), third_h(0.01));
                let r1 = (4.0 * d2 - d1) / 3.0;
                let r2 = (4.0 * d3 - d2) / 3.0;
                let fd = (16.0 * r2 - r1) / 15.0;
                let mut alpha = [0u8; 3];
                alpha[i] = 3;
                let exact = jet.derivative(&alpha).unwrap();
                assert!(
                    (exact - fd).abs() < 1e-6 * (1.0 + exact.abs()),
                    "{} component {k}: {exact} vs {fd}",
                    chart.label()
                );
                alpha[i] = 1;
                let first = jet.derivative(&alpha).unwrap();
                let fd1 = central_difference(f, &x, i, 1e-5);
                assert!((first - fd1).abs() < 1e-6 * (1.0 + first.abs()));
            }
        }
    }
}

#[test]
fn weyl_is_conformally_invariant() {
    let chart = MetricChart::random_perturbation(4, 17);
    let omega = ScalarField::Polynomial {
        terms: vec![
            tractor_calculus::metric::Monomial { coeff: 0.3, powers: vec![1, 0, 0, 0] },
            tractor_calculus::metric::Monomial { coeff: -0.2, powers: vec![0, 1, 1, 0] },
            tractor_calculus::metric::Monomial { coeff: 0.1, powers: vec![0, 0, 0, 2] },
        ],
    };
    let rescaled = conformal_rescale(&chart, omega);
    let x = [0.1, -0.2, 0.3, 0.15];
    let a = curvature_packet(&chart, &x, 2).unwrap();
    let b = curvature_packet(&rescaled, &x, 2).unwrap();
    // compare C_ab^c_d
    let mixed = |p: &curvature::CurvaturePacket| p.weyl.raise_lower(2, &p.g, &p.ginv).unwrap();
    let diff = mixed(&a).sub(&mixed(&b)).unwrap();
    assert!(diff.max_abs() < 1e-9, "{}", diff.max_abs());
}

#[test]
fn schouten_transformation_law() {
    let chart = MetricChart::random_perturbation(3, 2);
    let omega = ScalarField::Sin {
        field: Box::new(ScalarField::quadric(0.1, vec![0.4, -0.3, 0.2], 0.5)),
    };
    let rescaled = conformal_rescale(&chart, omega.clone());
    let x = [0.2, 0.1, -0.25];
    let p = curvature_packet(&chart, &x, 2).unwrap();
    let ph = curvature_packet(&rescaled, &x, 2).unwrap();
    // P̂ = P − ∇Υ + ΥΥ − ½|Υ|² g with Υ = dω
    let w: Jet = omega.jet_at(&x, 2).unwrap();
    let up: Vec<f64> = (0..3)
        .map(|i| {
            let mut a = [0u8; 3];
            a[i] = 1;
            w.derivative(&a).unwrap()
        })
        .collect();
    let hess = curvature::covariant_derivative(&chart, &x, &[], 0, 2, |y| Ok(vec![omega.eval(y)?])).unwrap();
    let norm2: f64 = (0..3)
        .flat_map(|a| (0..3).map(move |b| (a, b)))
        .map(|(a, b)| p.ginv.get(&[a, b]) * up[a] * up[b])
        .sum();
    for a in 0..3 {
        for b in 0..3 {
            let expected = p.schouten.get(&[a, b]) - hess.get(&[a, b]) + up[a] * up[b]
                - 0.5 * norm2 * p.g.get(&[a, b]);
            assert_abs_diff_eq!(*ph.schouten.get(&[a, b]), expected, epsilon = 1e-9);
        }
    }
}

#[test]
fn einstein_products_have_vanishing_bianchi_terms() {
    let chart = MetricChart::product_spheres(2, 1.0, 2, 1.0);
    let r = bianchi_residuals(&chart, &[0.1, -0.2, 0.05, 0.3]).unwrap();
    assert!(r.max() < 1e-9);
    let f = fields_at(&chart, &[0.1, -0.2, 0.05, 0.3], 4).unwrap();
    let a = f.cotton.unwrap();
    assert!(a.iter().all(|c| c.value().abs() < 1e-10));
}

#[test]
fn normal_form_metrics_are_hyperbolic() {
    use tractor_calculus::metric::BoundarySchouten;
    use tractor_calculus::sphere_model::constant_curvature_residual;
    for d in 3..=5 {
        for (boundary, schouten) in [
            (MetricChart::euclidean(d - 1), BoundarySchouten::Zero),
            (MetricChart::round_sphere(d - 1), BoundarySchouten::Proportional { factor: 0.5 }),
        ] {
            let chart = MetricChart::FgHyperbolicNormalForm {
                boundary: Box::new(boundary),
                schouten,
            };
            for s in [0.1, 0.45, 1.0] {
                let mut x = vec![s];
                x.extend((1..d).map(|i| 0.2 * i as f64 - 0.3));
                // sectional curvature −1, which is stronger than Ric = −(d−1)g
                assert!(constant_curvature_residual(&chart, &x, -1.0).unwrap() < 1e-8, "d={d} s={s}");
            }
        }
    }
    // flat boundary: the upper half-space metric s⁻²(ds² + dy²)
    let chart = MetricChart::FgHyperbolicNormalForm {
        boundary: Box::new(MetricChart::euclidean(2)),
        schouten: BoundarySchouten::Zero,
    };
    let g = chart.metric_at(&[0.5, 0.1, -0.2]).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { 4.0 } else { 0.0 };
            assert_abs_diff_eq!(*g.get(&[i, j]), want, epsilon = 1e-14);
        }
    }
}
