use std::sync::Arc;

use proptest::prelude::*;
use wienerlab::hilbert::{random_orthogonal, HVector, OrthonormalFrame, TraceClassOperator};
use wienerlab::symbols::{
    compose_orthogonal, fd_derivative, gaussian_bell, laplacian, laplacian_in_basis, partial, qa_claim_check, trig,
    PolyScalarSymbol, ProductSymbol, Symbol, SymbolRef,
};
use wienerlab::Complex64;

fn stock(dim: usize) -> Vec<SymbolRef> {
    let a = HVector::new((0..dim).map(|j| 0.7 / (j as f64 + 1.0)).collect()).unwrap();
    let b = HVector::new((0..dim).map(|j| if j % 2 == 0 { 0.4 } else { -0.3 }).collect()).unwrap();
    let c = TraceClassOperator::diagonal(&(0..dim).map(|j| 0.5f64.powi(j as i32)).collect::<Vec<_>>()).unwrap();
    vec![
        Arc::new(trig(a.clone(), 0.3, 1.2)),
        Arc::new(gaussian_bell(&c, 0.8)),
        Arc::new(PolyScalarSymbol::new(vec![a.clone(), b.clone()], vec![2, 1]).unwrap()),
        Arc::new(ProductSymbol::new(vec![Arc::new(trig(a, 0.0, 1.0)), Arc::new(trig(b, 0.5, 1.0))]).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn second_derivative_is_symmetric(x in prop::collection::vec(-2.0f64..2.0, 4),
                                      u in prop::collection::vec(-1.0f64..1.0, 4),
                                      v in prop::collection::vec(-1.0f64..1.0, 4)) {
        for f in stock(4) {
            let a = f.derivative(&x, &[&u, &v]).unwrap();
            let b = f.derivative(&x, &[&v, &u]).unwrap();
            prop_assert!((a - b).norm() < 1e-12 * (1.0 + a.norm()), "{}", f.label());
        }
    }

    #[test]
    fn derivative_matches_finite_differences(x in prop::collection::vec(-1.5f64..1.5, 4),
                                             u in prop::collection::vec(-1.0f64..1.0, 4)) {
        for f in stock(4) {
            let g = |y: &[f64]| f.eval(y);
            let fd = fd_derivative(&g, &x, &[&u]).unwrap();
            let an = f.derivative(&x, &[&u]).unwrap();
            prop_assert!((fd - an).norm() < 1e-7 * (1.0 + an.norm()), "{}", f.label());
        }
    }

    #[test]
    fn chain_rule_under_rotation(x in prop::collection::vec(-1.5f64..1.5, 4),
                                 u in prop::collection::vec(-1.0f64..1.0, 4),
                                 seed in 0u64..500) {
        // d(f∘φ)(x)(u) = df(φx)(φu)
        let phi = random_orthogonal(4, seed).unwrap();
        let phix = phi.apply(&HVector::new(x.clone()).unwrap()).unwrap();
        let phiu = phi.apply(&HVector::new(u.clone()).unwrap()).unwrap();
        for f in stock(4) {
            let g = compose_orthogonal(f.clone(), &phi).unwrap();
            let lhs = g.derivative(&x, &[&u]).unwrap();
            let rhs = f.derivative(phix.coords(), &[phiu.coords()]).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-10 * (1.0 + rhs.norm()));
            let h = |y: &[f64]| g.eval(y);
            let fd = fd_derivative(&h, &x, &[&u]).unwrap();
            prop_assert!((fd - rhs).norm() < 1e-7 * (1.0 + rhs.norm()));
        }
    }

    #[test]
    fn laplacian_is_basis_independent(x in prop::collection::vec(-2.0f64..2.0, 5), seed in 0u64..500) {
        let phi = random_orthogonal(5, seed).unwrap();
        let rotated: Vec<HVector> = (0..5).map(|j| phi.column(j)).collect();
        let canonical = OrthonormalFrame::canonical(5).unwrap();
        for f in stock(5) {
            let a = laplacian(f.as_ref(), &x, &canonical).unwrap();
            let b = laplacian_in_basis(f.as_ref(), &x, &rotated).unwrap();
            prop_assert!((a - b).norm() < 1e-9 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn partials_descend_in_order(x in prop::collection::vec(-1.0f64..1.0, 3)) {
        // ∂_0 ∂_1 f computed as a partial of a partial equals the direct one.
        for f in stock(3) {
            let once = partial(f.clone(), &[1, 0, 0]).unwrap();
            let twice = partial(once, &[0, 1, 0]).unwrap();
            let e0 = HVector::basis(3, 0);
            let e1 = HVector::basis(3, 1);
            let direct = f.derivative(&x, &[e0.coords(), e1.coords()]).unwrap();
            prop_assert!((twice.eval(&x) - direct).norm() < 1e-12 * (1.0 + direct.norm()));
        }
    }

    #[test]
    fn product_sup_bound(x in prop::collection::vec(-5.0f64..5.0, 3)) {
        let a = HVector::new(vec![1.0, 0.2, 0.0]).unwrap();
        let b = HVector::new(vec![0.0, 0.5, 0.5]).unwrap();
        let p = ProductSymbol::new(vec![Arc::new(trig(a, 0.1, 2.0)), Arc::new(trig(b, 0.0, 0.5))]).unwrap();
        let sup = p.claims().sup.unwrap();
        prop_assert!((sup - 1.0).abs() < 1e-15);
        prop_assert!(p.eval(&x).norm() <= sup + 1e-15);
    }
}

#[test]
fn stock_qa_claims_hold() {
    let a = HVector::new(vec![0.6, -0.8, 0.0]).unwrap();
    let f: SymbolRef = Arc::new(trig(a.clone(), 0.2, 1.5));
    let r = qa_claim_check(&f, 3, 200, 4).unwrap();
    assert!(r.pass, "{r:?}");
    let p: SymbolRef = Arc::new(
        ProductSymbol::new(vec![f, Arc::new(trig(HVector::basis(3, 2), 0.0, 1.0))]).unwrap(),
    );
    let r = qa_claim_check(&p, 3, 200, 5).unwrap();
    assert!(r.pass, "{r:?}");
}

#[test]
fn complex_valued_derivative() {
    let a = HVector::new(vec![0.3, 0.4]).unwrap();
    let f = wienerlab::symbols::exp_i(a.clone(), 1.0);
    let x = [0.5, -0.2];
    let d = f.derivative(&x, &[a.coords()]).unwrap();
    let expect = Complex64::new(0.0, a.norm_sq()) * Complex64::new(0.0, a.dot(&x)).exp();
    assert!((d - expect).norm() < 1e-14);
}
