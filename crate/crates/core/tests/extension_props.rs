use proptest::prelude::*;
use wienerlab::extension::{ext_prodscal_closed_form, lq_distance, McSetup, SubspaceChain};
use wienerlab::gaussian::{gaussian_sample, GaussianMeasureSpec};
use wienerlab::hilbert::{random_orthogonal, HVector, Subspace};
use wienerlab::sampling::McPlan;
use wienerlab::symbols::{linear, trig};

#[test]
fn linear_distance_matches_closed_form_under_mc() {
    let a = HVector::new((0..8).map(|j| 0.5f64.powi(j)).collect()).unwrap();
    let f = linear(a.clone());
    let batch = gaussian_sample(GaussianMeasureSpec::new(8, 1.0).unwrap(), 4, 200_000).unwrap();
    for n in [1, 2, 4, 6] {
        let e = Subspace::coordinate(8, n).unwrap();
        let est = lq_distance(&f, &e, 2.0, &batch).unwrap();
        // ‖ℓ_a − ℓ_a∘π_E‖_2 = |a − π_E a| for h = 1
        let tail: f64 = a.coords()[n..].iter().map(|c| c * c).sum::<f64>().sqrt();
        assert!(est.within(tail, 3.0), "n={n}: {est:?} vs {tail}");
        assert!((ext_prodscal_closed_form(&a, &e, 2.0, 1.0).unwrap() - tail).abs() < 1e-14);
    }
}

#[test]
fn distance_shrinks_along_chain() {
    let a = HVector::new((0..16).map(|j| 0.7f64.powi(j)).collect()).unwrap();
    let f = trig(a, 0.0, 1.0);
    let chain = SubspaceChain::coordinate(16, &[2, 4, 8, 12, 16]).unwrap();
    let batch = gaussian_sample(GaussianMeasureSpec::new(16, 1.0).unwrap(), 8, 100_000).unwrap();
    let ests: Vec<_> = chain.steps().iter().map(|e| lq_distance(&f, e, 1.0, &batch).unwrap()).collect();
    for w in ests.windows(2) {
        assert!(w[1].value <= w[0].value + 3.0 * (w[0].stderr + w[1].stderr), "{ests:?}");
    }
    assert_eq!(ests.last().unwrap().value, 0.0);
}

#[test]
fn setup_is_deterministic() {
    let a = HVector::new(vec![1.0, 0.5, 0.25, 0.125]).unwrap();
    let f = trig(a, 0.0, 1.0);
    let e = Subspace::coordinate(4, 2).unwrap();
    let s = McSetup::new(1.0, McPlan::fixed(10_000), 3);
    let run = || {
        let b = gaussian_sample(GaussianMeasureSpec::new(4, s.h).unwrap(), s.seed, 10_000).unwrap();
        lq_distance(&f, &e, 2.0, &b).unwrap()
    };
    assert_eq!(run(), run());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rotated_chains_are_nested(seed in 0u64..1000, steps in 1usize..6) {
        let phi = random_orthogonal(12, seed).unwrap();
        let dims: Vec<usize> = (1..=steps).map(|k| 2 * k).collect();
        let chain = SubspaceChain::rotated(&phi, &dims).unwrap();
        for w in chain.steps().windows(2) {
            prop_assert!(w[1].extends(&w[0]));
        }
    }

    #[test]
    fn closed_form_decreases(n in 1usize..8, p in 1.0f64..6.0) {
        let a = HVector::new((0..8).map(|j| 1.0 / (1.0 + j as f64)).collect()).unwrap();
        let small = Subspace::coordinate(8, n - 1).unwrap();
        let big = Subspace::coordinate(8, n).unwrap();
        prop_assert!(ext_prodscal_closed_form(&a, &big, p, 1.0).unwrap()
            <= ext_prodscal_closed_form(&a, &small, p, 1.0).unwrap() + 1e-15);
    }
}
