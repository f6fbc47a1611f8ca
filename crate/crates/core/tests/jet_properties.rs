//! Jet arithmetic against a brute-force polynomial oracle.

use std::collections::BTreeMap;

use proptest::prelude::*;
use tractor_calculus::{Jet, Scalar};

/// Sparse polynomial: exponent vector → coefficient.
type Poly = BTreeMap<Vec<u8>, f64>;

fn poly_mul(p: &Poly, q: &Poly) -> Poly {
    let mut out = Poly::new();
    for (a, x) in p {
        for (b, y) in q {
            let e: Vec<u8> = a.iter().zip(b).map(|(i, j)| i + j).collect();
            *out.entry(e).or_insert(0.0) += x * y;
        }
    }
    out
}

fn falling(n: u8, k: u8) -> f64 {
    (0..k).map(|i| (n - i) as f64).product()
}

/// `∂^α p (x)` term by term.
fn poly_derivative(p: &Poly, alpha: &[u8], x: &[f64]) -> f64 {
    p.iter()
        .filter(|(b, _)| b.iter().zip(alpha).all(|(bi, ai)| bi >= ai))
        .map(|(b, c)| {
            let mut t = *c;
            for i in 0..x.len() {
                t *= falling(b[i], alpha[i]) * x[i].powi((b[i] - alpha[i]) as i32);
            }
            t
        })
        .sum()
}

fn poly_jet(p: &Poly, x: &[f64], order: usize) -> Jet {
    let d = x.len();
    let vars: Vec<Jet> = (0..d).map(|i| Jet::variable_with(d, order, i, x[i]).unwrap()).collect();
    let mut acc = Jet::constant(d, order, 0.0).unwrap();
    for (e, c) in p {
        let mut m = Jet::constant(d, order, *c).unwrap();
        for (i, &k) in e.iter().enumerate() {
            for _ in 0..k {
                m = m.times(&vars[i]);
            }
        }
        acc = acc.plus(&m);
    }
    acc
}

fn multi_indices(d: usize, order: usize) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|a| (0..=order as u8).map(move |k| [a.clone(), vec![k]].concat()))
            .collect();
    }
    out.retain(|a| a.iter().map(|&k| k as usize).sum::<usize>() <= order);
    out
}

fn poly_strategy(d: usize) -> impl Strategy<Value = Poly> {
    prop::collection::vec((prop::collection::vec(0u8..3, d), -2.0f64..2.0), 1..5)
        .prop_map(|terms| terms.into_iter().collect())
}

fn case() -> impl Strategy<Value = (Poly, Poly, Vec<f64>, usize)> {
    (2usize..4).prop_flat_map(|d| {
        (
            poly_strategy(d),
            poly_strategy(d),
            prop::collection::vec(-1.0f64..1.0, d),
            1usize..=4,
        )
    })
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn products_match_the_oracle((p, q, x, order) in case()) {
        let jet = poly_jet(&p, &x, order).times(&poly_jet(&q, &x, order));
        let pq = poly_mul(&p, &q);
        for alpha in multi_indices(x.len(), order) {
            let got = jet.derivative(&alpha).unwrap();
            let want = poly_derivative(&pq, &alpha, &x);
            prop_assert!(close(got, want), "α={alpha:?}: {got} vs {want}");
        }
    }

    #[test]
    fn partials_commute_with_the_oracle((p, _q, x, order) in case()) {
        let jet = poly_jet(&p, &x, order);
        for v in 0..x.len() {
            let dj = jet.partial(v).unwrap();
            for alpha in multi_indices(x.len(), order - 1) {
                let mut beta = alpha.clone();
                beta[v] += 1;
                prop_assert!(close(dj.derivative(&alpha).unwrap(), poly_derivative(&p, &beta, &x)));
            }
        }
    }

    #[test]
    fn reciprocal_and_exponential_invert((p, _q, x, order) in case()) {
        let jet = poly_jet(&p, &x, order).add_const(5.0);
        let one = jet.times(&jet.recip().unwrap());
        let e = jet.scale(0.2).exp().times(&jet.scale(-0.2).exp());
        for alpha in multi_indices(x.len(), order) {
            let want = if alpha.iter().all(|&a| a == 0) { 1.0 } else { 0.0 };
            prop_assert!(close(one.derivative(&alpha).unwrap(), want));
            prop_assert!(close(e.derivative(&alpha).unwrap(), want));
        }
    }

    #[test]
    fn ln_inverts_exp((p, _q, x, order) in case()) {
        let jet = poly_jet(&p, &x, order).scale(0.3);
        let back = jet.exp().ln().unwrap();
        for alpha in multi_indices(x.len(), order) {
            prop_assert!(close(back.derivative(&alpha).unwrap(), jet.derivative(&alpha).unwrap()));
        }
    }
}
