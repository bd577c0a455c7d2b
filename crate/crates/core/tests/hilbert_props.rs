use proptest::prelude::*;
use wienerlab::hilbert::{a_norm, project, q_form, random_orthogonal, HVector, Subspace, TraceClassOperator};

fn vec_strategy(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, dim)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_idempotent(x in vec_strategy(8), k in 1usize..8, seed in 0u64..1000) {
        let phi = random_orthogonal(8, seed).unwrap();
        let e = Subspace::new(8, (0..k).map(|j| phi.column(j)).collect()).unwrap();
        let x = HVector::new(x).unwrap();
        let p = project(&e, &x).unwrap();
        let pp = project(&e, &p).unwrap();
        for (a, b) in p.coords().iter().zip(pp.coords()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pythagoras(x in vec_strategy(6), k in 0usize..=6, seed in 0u64..1000) {
        let phi = random_orthogonal(6, seed).unwrap();
        let e = Subspace::new(6, (0..k).map(|j| phi.column(j)).collect()).unwrap();
        let x = HVector::new(x).unwrap();
        let p = project(&e, &x).unwrap();
        let r = x.sub(p.coords());
        prop_assert!((p.norm_sq() + r.norm_sq() - x.norm_sq()).abs() < 1e-10 * (1.0 + x.norm_sq()));
        prop_assert!(p.dot(r.coords()).abs() < 1e-10 * (1.0 + x.norm_sq()));
    }

    #[test]
    fn q_form_conjugation(lams in prop::collection::vec(0.0f64..2.0, 5), x in vec_strategy(5), seed in 0u64..1000) {
        let a = TraceClassOperator::diagonal(&lams).unwrap();
        let phi = random_orthogonal(5, seed).unwrap();
        let b = a.conjugate(&phi).unwrap();
        let x = HVector::new(x).unwrap();
        // Q_A(φx) = Q_{φ*Aφ}(x)
        let phix = phi.apply(&x).unwrap();
        let lhs = q_form(&a, phix.coords()).unwrap();
        let rhs = q_form(&b, x.coords()).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + rhs.abs()));
        prop_assert!((a_norm(&b, x.coords()).unwrap().powi(2) - rhs).abs() < 1e-10 * (1.0 + rhs));
    }

    #[test]
    fn trace_is_basis_independent(lams in prop::collection::vec(0.0f64..2.0, 6), seed in 0u64..1000) {
        let a = TraceClassOperator::diagonal(&lams).unwrap();
        let phi = random_orthogonal(6, seed).unwrap();
        let b = a.conjugate(&phi).unwrap();
        let m = b.to_matrix();
        let diag_sum: f64 = (0..6).map(|i| m[(i, i)]).sum();
        let direct: f64 = lams.iter().sum();
        prop_assert!((diag_sum - direct).abs() < 1e-12 * (1.0 + direct));
        prop_assert!((b.trace() - direct).abs() < 1e-12 * (1.0 + direct));
    }

    #[test]
    fn rotations_preserve_inner_products(x in vec_strategy(7), y in vec_strategy(7), seed in 0u64..1000) {
        let phi = random_orthogonal(7, seed).unwrap();
        let x = HVector::new(x).unwrap();
        let y = HVector::new(y).unwrap();
        let (px, py) = (phi.apply(&x).unwrap(), phi.apply(&y).unwrap());
        prop_assert!((px.dot(py.coords()) - x.dot(y.coords())).abs() < 1e-10 * (1.0 + x.norm() * y.norm()));
        let back = phi.adjoint_apply(&px).unwrap();
        for (a, b) in back.coords().iter().zip(x.coords()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn same_seed_same_rotation() {
    let a = random_orthogonal(5, 7).unwrap();
    let b = random_orthogonal(5, 7).unwrap();
    assert_eq!(a.matrix(), b.matrix());
}
