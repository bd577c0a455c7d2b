use std::sync::Arc;

use proptest::prelude::*;
use wienerlab::heat::{
    contraction_check, derivative_exchange_residual, heat_apply, heat_symbol, HeatMethod,
};
use wienerlab::hilbert::{HVector, TraceClassOperator};
use wienerlab::symbols::{
    gaussian_bell, partial, qa_membership_check, trig, CylindricalSymbol, LinearCombinationSymbol,
    PolyScalarSymbol, ProductSymbol, SymbolRef,
};

fn stock() -> Vec<SymbolRef> {
    let a = HVector::new(vec![0.8, -0.4, 0.2]).unwrap();
    let b = HVector::new(vec![0.1, 0.5, 0.6]).unwrap();
    let c = TraceClassOperator::diagonal(&[1.0, 0.5, 0.25]).unwrap();
    vec![
        Arc::new(trig(a.clone(), 0.3, 1.0)),
        Arc::new(gaussian_bell(&c, 1.0)),
        Arc::new(PolyScalarSymbol::new(vec![a.clone(), b.clone()], vec![2, 2]).unwrap()),
        Arc::new(ProductSymbol::new(vec![Arc::new(trig(a, 0.0, 1.0)), Arc::new(trig(b, 0.2, 1.0))]).unwrap()),
    ]
}

#[test]
fn constants_are_preserved() {
    let one = CylindricalSymbol::constant(4, 1.0);
    for t in [0.0, 0.1, 1.0, 10.0] {
        let r = heat_apply(&one, &[0.3, 0.1, -2.0, 5.0], t, &HeatMethod::adaptive()).unwrap();
        assert!((r.value.re - 1.0).abs() < 1e-12 && r.value.im == 0.0);
    }
}

#[test]
fn quadrature_agrees_with_monte_carlo() {
    let x = [0.2, -0.5, 0.4];
    for (i, f) in stock().iter().enumerate() {
        for t in [0.1, 1.0] {
            let q = heat_apply(f.as_ref(), &x, t, &HeatMethod::adaptive()).unwrap();
            let mc = heat_apply(f.as_ref(), &x, t, &HeatMethod::monte_carlo(200_000, 17 + i as u64)).unwrap();
            assert!((q.value - mc.value).norm() <= 3.0 * mc.error_estimate + 1e-12, "{} t={t}", f.label());
        }
    }
}

#[test]
fn heat_is_contractive_on_trig() {
    let a = HVector::new(vec![0.6, 0.8, 0.0]).unwrap();
    let f: SymbolRef = Arc::new(trig(a.clone(), 0.1, 2.0));
    let grid: Vec<Vec<f64>> = (0..10).map(|k| vec![0.3 * k as f64, -0.1 * k as f64, 1.0]).collect();
    assert!(contraction_check(f.as_ref(), &grid, 0.5, &HeatMethod::adaptive()).unwrap().pass);
    let h = heat_symbol(f, 0.5, &HeatMethod::adaptive()).unwrap();
    let claim = h.claims().qa.unwrap();
    let r = qa_membership_check(h.as_ref(), &claim.op, claim.norm, 3, 100, 2).unwrap();
    assert!(r.pass, "{r:?}");
}

#[test]
fn mixed_partial_exchange_on_two_direction_symbol() {
    // cos⟨a,x⟩cos⟨b,x⟩ = ½(cos⟨a+b,x⟩ + cos⟨a−b,x⟩)
    let a = HVector::new(vec![0.9, 0.2, 0.0]).unwrap();
    let b = HVector::new(vec![-0.1, 0.7, 0.0]).unwrap();
    let f: SymbolRef =
        Arc::new(ProductSymbol::new(vec![Arc::new(trig(a.clone(), 0.0, 1.0)), Arc::new(trig(b.clone(), 0.0, 1.0))]).unwrap());
    let x = [0.3, -0.6, 0.2];
    let t = 0.4;
    let oracle: f64 = [a.add(b.coords()), a.sub(b.coords())]
        .iter()
        .map(|c| -0.5 * c.coords()[0] * c.coords()[1] * (-0.5 * t * c.norm_sq()).exp() * c.dot(&x).cos())
        .sum();
    let m = HeatMethod::adaptive();
    let g = partial(f.clone(), &[1, 1, 0]).unwrap();
    let rhs = heat_apply(g.as_ref(), &x, t, &m).unwrap().value.re;
    assert!((rhs - oracle).abs() < 1e-7);
    let r = derivative_exchange_residual(f, &x, t, &[1, 1, 0], &m).unwrap();
    assert!(r.residual < 1e-7, "{r:?}");
}

#[test]
fn directional_exchange_trig_oracle() {
    let a = HVector::new(vec![1.2, -0.5]).unwrap();
    let f: SymbolRef = Arc::new(trig(a.clone(), 0.0, 1.0));
    let x = [0.4, 0.9];
    let t = 0.6;
    let u = a.scaled(1.0 / a.norm());
    let oracle = -a.norm() * (-0.5 * t * a.norm_sq()).exp() * a.dot(&x).sin();
    let h = heat_symbol(f, t, &HeatMethod::adaptive()).unwrap();
    assert!((h.derivative(&x, &[u.coords()]).unwrap().re - oracle).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn heat_is_linear(alpha in -2.0f64..2.0, beta in -2.0f64..2.0, t in 0.01f64..2.0,
                      x in prop::collection::vec(-2.0f64..2.0, 3), i in 0usize..4, j in 0usize..4) {
        let s = stock();
        let combo = LinearCombinationSymbol::real(vec![(alpha, s[i].clone()), (beta, s[j].clone())]).unwrap();
        let m = HeatMethod::adaptive();
        let lhs = heat_apply(&combo, &x, t, &m).unwrap();
        let a = heat_apply(s[i].as_ref(), &x, t, &m).unwrap();
        let b = heat_apply(s[j].as_ref(), &x, t, &m).unwrap();
        let diff = (lhs.value - alpha * a.value - beta * b.value).norm();
        let scale = 1.0 + a.value.norm() + b.value.norm();
        prop_assert!(diff <= 3.0 * (lhs.error_estimate + a.error_estimate + b.error_estimate) + 1e-11 * scale);
    }

    #[test]
    fn trig_closed_form(t in 0.0f64..3.0, x in prop::collection::vec(-3.0f64..3.0, 3)) {
        let a = HVector::new(vec![0.5, 1.0, -0.7]).unwrap();
        let f = trig(a.clone(), 0.0, 1.0);
        let r = heat_apply(&f, &x, t, &HeatMethod::adaptive()).unwrap();
        let oracle = (-0.5 * t * a.norm_sq()).exp() * a.dot(&x).cos();
        prop_assert!((r.value.re - oracle).abs() < 1e-12);
    }
}
