use freeclt::oracle::{free_sum_esd, EnsembleSpec};
use freeclt::{free_convolve, ConvolutionParams, Measure};

#[test]
fn pooled_spectrum_ignores_thread_count() {
    let ms = [Measure::rademacher(), Measure::uniform(-1.0, 1.0).unwrap()];
    let spec = EnsembleSpec { matrix_size: 64, trials: 6, seed: 9 };
    let run = |threads| rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| free_sum_esd(&ms, &spec).unwrap());
    let one = run(1);
    let four = run(4);
    assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&four).unwrap());
}

#[test]
fn single_summand_is_its_quantile_spectrum() {
    let u = Measure::uniform(-1.0, 1.0).unwrap();
    let spec = EnsembleSpec { matrix_size: 100, trials: 2, seed: 0 };
    let esd = free_sum_esd(std::slice::from_ref(&u), &spec).unwrap();
    assert!(esd.kolmogorov_distance(&u) <= 1.0 / 200.0 + 1e-12);
}

#[test]
fn agreement_improves_with_matrix_size() {
    let pair = [Measure::rademacher(), Measure::rademacher()];
    let analytic = free_convolve(&pair[0], &pair[1], &ConvolutionParams::default()).unwrap();
    let mut means = Vec::new();
    for n in [100, 250, 500] {
        let seeds = [1u64, 2];
        let total: f64 = seeds
            .iter()
            .map(|&seed| free_sum_esd(&pair, &EnsembleSpec { matrix_size: n, trials: 4, seed }).unwrap().kolmogorov_distance(&analytic))
            .sum();
        means.push(total / seeds.len() as f64);
    }
    assert!(means[0] > means[1] && means[1] > means[2], "{means:?}");
    assert!(means[2] < 2e-2);
}
