use freeclt::semicircle::{scale_deviation, shift_deviation, standard_cdf, standard_density};
use freeclt::SemicircleLaw;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

#[test]
fn normalization_and_endpoints() {
    // x = 2 sin θ removes the square-root edges
    let n = 20_000;
    let h = PI / n as f64;
    let mass: f64 = (0..n)
        .map(|i| {
            let th = -PI / 2.0 + (i as f64 + 0.5) * h;
            standard_density(2.0 * th.sin()) * 2.0 * th.cos() * h
        })
        .sum();
    assert!((mass - 1.0).abs() < 1e-9, "{mass}");
    assert_eq!(standard_cdf(0.0), 0.5);
    assert_eq!(standard_cdf(-2.0), 0.0);
    assert_eq!(standard_cdf(2.0), 1.0);
}

#[test]
fn cdf_derivative_is_density() {
    let h = 1e-6;
    for i in 1..40 {
        let x = -1.9 + 3.8 * i as f64 / 40.0;
        let fd = (standard_cdf(x + h) - standard_cdf(x - h)) / (2.0 * h);
        assert!((fd - standard_density(x)).abs() < 1e-5);
    }
}

#[test]
fn deviation_bounds_randomized() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let q: f64 = rng.random_range(-1.0..1.0);
        let p: f64 = rng.random_range(0.25..4.0);
        assert!(shift_deviation(q) <= q.abs() / PI + 1e-12);
        assert!(scale_deviation(p).unwrap() <= 2.0 / PI * (p - 1.0).abs() + 1e-12);
    }
}

proptest! {
    #[test]
    fn affine_coherence(c in -3.0f64..3.0, v in 0.01f64..9.0, x in -10.0f64..10.0) {
        let law = SemicircleLaw::new(c, v).unwrap();
        prop_assert_eq!(law.cdf(x), standard_cdf((x - c) / v.sqrt()));
    }
}
