use freeclt::families::random_compact;
use freeclt::measure::kolmogorov_distance;
use freeclt::{Measure, TruncationWindow};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_measure(seed: u64) -> Measure {
    random_compact(&mut ChaCha8Rng::seed_from_u64(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_axioms(a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let (mu, nu, rho) = (random_measure(a), random_measure(b), random_measure(c));
        let d = kolmogorov_distance(&mu, &nu);
        prop_assert_eq!(d, kolmogorov_distance(&nu, &mu));
        prop_assert_eq!(kolmogorov_distance(&mu, &mu), 0.0);
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!(d <= kolmogorov_distance(&mu, &rho) + kolmogorov_distance(&rho, &nu) + 1e-12);
    }

    #[test]
    fn affine_invariance(a in any::<u64>(), b in any::<u64>(), s in 0.05f64..20.0, t in -5.0f64..5.0) {
        let (mu, nu) = (random_measure(a), random_measure(b));
        let d = kolmogorov_distance(&mu, &nu);
        let d2 = kolmogorov_distance(&mu.affine_pushforward(s, t).unwrap(), &nu.affine_pushforward(s, t).unwrap());
        prop_assert!((d - d2).abs() < 1e-12, "{} vs {}", d, d2);
    }

    #[test]
    fn truncation_contract(a in any::<u64>(), t in -2.5f64..-0.05, tau in 0.05f64..2.5) {
        let mu = random_measure(a);
        let w = TruncationWindow::new(t, tau).unwrap();
        let tr = mu.truncate(&w).unwrap();
        prop_assert!((tr.total_mass() - 1.0).abs() < 1e-9);
        let (lo, hi) = tr.support();
        prop_assert!(lo >= t && hi <= tau);
        prop_assert!(kolmogorov_distance(&mu, &tr) <= mu.mass_outside(&w) + 1e-12);
    }

    #[test]
    fn moments(a in any::<u64>(), c in 0.0f64..2.5) {
        let mu = random_measure(a);
        prop_assert!(mu.moment(2) >= mu.moment(1).powi(2));
        let split = mu.tail_second_moment(c) + mu.windowed_second_moment(c);
        prop_assert!((split - mu.moment(2)).abs() < 1e-12);
    }
}

#[test]
fn centered_stats_examples() {
    assert_eq!(Measure::dirac(0.0).centered_stats(), (0.0, 0.0));
    assert_eq!(Measure::rademacher().centered_stats(), (0.0, 1.0));
    let u = Measure::uniform(-2.0, 2.0).unwrap().truncate(&TruncationWindow::symmetric(1.0).unwrap()).unwrap();
    let (alpha, beta_sq) = u.centered_stats();
    assert!(alpha.abs() < 1e-15);
    assert!((beta_sq - 1.0 / 6.0).abs() < 1e-14);
}

#[test]
fn json_round_trip() {
    let mu = random_measure(7);
    let text = serde_json::to_string(&mu).unwrap();
    assert!(text.starts_with(r#"{"atoms":"#));
    let back: Measure = serde_json::from_str(&text).unwrap();
    assert_eq!(kolmogorov_distance(&mu, &back), 0.0);
    assert!(serde_json::from_str::<Measure>(r#"{"atoms":[[0,0.5]],"grid":[],"density":[]}"#).is_err());
}
