use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wienerlab::gaussian::{
    abs_moment, double_factorial_odd, enumerate_pairings, exp_moment, gaussian_sample, holder_telescoping_check,
    k_constant, mixed_moment_rhs, wick_integral, GaussianMeasureSpec,
};
use wienerlab::hilbert::HVector;

/// `∫_ℝ |v|^p dμ_{ℝ,1}` by the trapezoid rule on a wide grid.
fn trapezoid_abs_moment(p: f64) -> f64 {
    let n = 400_000;
    let l = 40.0;
    let dx = 2.0 * l / n as f64;
    let mut s = 0.0;
    for i in 0..=n {
        let v = -l + i as f64 * dx;
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        s += w * v.abs().powf(p) * (-0.5 * v * v).exp();
    }
    s * dx / (2.0 * std::f64::consts::PI).sqrt()
}

#[test]
fn k_of_two_is_one() {
    assert!((k_constant(2.0).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn abs_moment_against_trapezoid() {
    for p in [1.0, 2.0, 3.0, 4.0, 2.5] {
        let a = abs_moment(1.0, p, 1.0).unwrap();
        assert!((a - trapezoid_abs_moment(p)).abs() < 1e-8, "p = {p}");
    }
}

#[test]
fn exp_moment_closed_values() {
    let e = HVector::basis(3, 0);
    let z = HVector::zeros(3);
    assert!((exp_moment(&e, &z, 1.0).unwrap().re - 1.6487212707).abs() < 1e-10);
    let v = exp_moment(&z, &e, 2.0).unwrap();
    assert!((v.re - (-1f64).exp()).abs() < 1e-14 && v.im.abs() < 1e-14);
}

#[test]
fn mixed_moment_reduces_to_abs_moment() {
    for p in [1.0, 2.0, 3.5] {
        let a = mixed_moment_rhs(1.3, 0.0, 0.0, p, 0.7).unwrap();
        let b = abs_moment(1.3, p, 0.7).unwrap();
        assert!((a - b).abs() < 1e-9 * b);
    }
}

#[test]
fn mixed_moment_against_mc() {
    let a = HVector::new(vec![0.8, 0.1, -0.3]).unwrap();
    let b = HVector::new(vec![0.2, 0.5, 0.1]).unwrap();
    let batch = gaussian_sample(GaussianMeasureSpec::new(3, 1.0).unwrap(), 5, 200_000).unwrap();
    let est = batch.mean(|x| b.dot(x).exp() * a.dot(x).abs().powf(3.0)).unwrap();
    let rhs = mixed_moment_rhs(a.norm(), a.dot(b.coords()), b.norm(), 3.0, 1.0).unwrap();
    assert!(est.within(rhs, 3.0), "{est:?} vs {rhs}");
}

#[test]
fn wick_against_mc_and_unit_copies() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let vs: Vec<HVector> = (0..4)
        .map(|_| HVector::new((0..6).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap())
        .collect();
    let w = wick_integral(&vs, 1.0).unwrap();
    let batch = gaussian_sample(GaussianMeasureSpec::new(6, 1.0).unwrap(), 2, 400_000).unwrap();
    let est = batch.mean(|x| vs.iter().map(|v| v.dot(x)).product()).unwrap();
    assert!(est.within(w, 3.0), "{est:?} vs {w}");
    let e = HVector::basis(6, 2);
    for p in 1..=4u32 {
        let copies = vec![e.clone(); 2 * p as usize];
        let h: f64 = 1.5;
        assert_eq!(wick_integral(&copies, h).unwrap(), double_factorial_odd(p) as f64 * h.powi(p as i32));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn pairing_count(p in 1usize..=6) {
        let n = enumerate_pairings(2 * p).unwrap().len() as u64;
        prop_assert_eq!(n, double_factorial_odd(p as u32));
    }

    #[test]
    fn holder_telescoping_never_violated(seed in 0u64..10_000, n in 1usize..5, p in 1.0f64..4.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = 7;
        let mut draw = || (0..m).map(|_| rng.random_range(-2.0..2.0)).collect::<Vec<f64>>();
        let f: Vec<Vec<f64>> = (0..n).map(|_| draw()).collect();
        let g: Vec<Vec<f64>> = (0..n).map(|_| draw()).collect();
        let mut w: Vec<f64> = (0..m).map(|_| rng.random_range(0.01..1.0)).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        let r = holder_telescoping_check(&f, &g, p, &w).unwrap();
        prop_assert!(r.pass);
        prop_assert!(r.rhs <= r.coarse_rhs * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn prefix_property(seed in 0u64..100, small in 1usize..5000) {
        let spec = GaussianMeasureSpec::new(3, 1.0).unwrap();
        let a = gaussian_sample(spec, seed, small).unwrap().to_matrix();
        let b = gaussian_sample(spec, seed, small + 5000).unwrap().to_matrix();
        prop_assert_eq!(&a[..], &b[..a.len()]);
    }
}
