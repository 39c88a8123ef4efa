use proptest::prelude::*;
use qcp::als::als_sweep;
use qcp::sparse::{
    als_sparse_fit_from, als_sparse_fit_with_reference, build_reduced_design, sampled_max_error, sparse_sweep,
};
use qcp::{
    als_sparse_fit, generate_samples, gram_chain, mttkrp_chain, random_init, sample_points, sampled_objective,
    AlsConfig, FactorMatrix, FunctionSpec, QuantizedVector, SampleSet, SamplingStrategy,
};

#[test]
fn full_sampling_fits_the_exponential() {
    let spec = FunctionSpec::parse("exp:1", 0.0, 1.0, 8).unwrap();
    let data = generate_samples(&spec);
    let all: Vec<usize> = (1..=256).collect();
    let samples = SampleSet::from_vector(&data, &all).unwrap();
    let cfg = AlsConfig { tolerance: 1e-12, max_iterations: 500, ..AlsConfig::with_rank(1) };
    let (model, _) = als_sparse_fit(&samples, &cfg).unwrap();
    assert!(sampled_objective(&model, &samples).unwrap() <= 1e-18);
    assert!(model.max_error(&data).unwrap() <= 1e-9);
}

#[test]
fn rank_one_data_is_interpolated_from_few_samples() {
    let truth = random_init(10, 1, 4).unwrap();
    let data = truth.reconstruct();
    let idx = sample_points(SamplingStrategy::Stratified, 4 * 10, 10, 1).unwrap();
    let samples = SampleSet::from_vector(&data, &idx).unwrap();
    let cfg = AlsConfig { tolerance: 1e-13, max_iterations: 2000, ..AlsConfig::with_rank(1) };
    let (model, rep) = als_sparse_fit(&samples, &cfg).unwrap();
    assert!(rep.max_error <= 1e-9, "sampled residual {}", rep.max_error);
    let (_, full) = als_sparse_fit_with_reference(&samples, &cfg, &data).unwrap();
    assert!(full.max_error <= 1e-6, "grid error {}", full.max_error);
    assert!(model.max_error(&data).unwrap() <= 1e-6);
}

#[test]
fn sample_sets_reject_bad_input() {
    assert!(SampleSet::new(3, [(9, 0.0)]).is_err());
    assert!(SampleSet::new(3, [(2, 0.0), (2, 1.0)]).is_err());
    assert!(SampleSet::new(3, std::iter::empty()).is_err());
    assert!(sample_points(SamplingStrategy::UniformRandom, 9, 3, 0).is_err());
    assert_eq!("stratified".parse::<SamplingStrategy>().unwrap(), SamplingStrategy::Stratified);
}

#[test]
fn empty_digit_groups_are_skipped_with_a_warning() {
    // every sample has digit 1 in mode 1
    let samples = SampleSet::new(4, [(1, 1.0), (3, 2.0), (5, 3.0), (7, 4.0)]).unwrap();
    let mut model = random_init(4, 1, 0).unwrap();
    let before = model.factor(1).row(1).to_vec();
    let stats = sparse_sweep(&samples, &mut model, &AlsConfig::with_rank(1)).unwrap();
    assert!(stats.other_warnings >= 1);
    assert_eq!(model.factor(1).row(1), before.as_slice());
}

fn fixture(seed: u64) -> (QuantizedVector, qcp::CpModel) {
    let v: Vec<f64> = (0..64).map(|i| ((i as f64 + seed as f64) * 0.37).sin()).collect();
    (QuantizedVector::new(v).unwrap(), random_init(6, 3, seed).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn full_sampling_reduces_to_dense_normal_equations(seed in any::<u64>(), mode in 1usize..=6) {
        let (data, model) = fixture(seed);
        let all: Vec<usize> = (1..=64).collect();
        let samples = SampleSet::from_vector(&data, &all).unwrap();
        let d = build_reduced_design(&model, &samples, mode).unwrap();
        let chain: Vec<&FactorMatrix> = (1..=6).rev().filter(|&m| m != mode).map(|m| model.factor(m)).collect();
        let g = gram_chain(&chain).unwrap();
        for (a, b) in d.first.gram().as_slice().iter().zip(g.as_slice()) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
        let b2 = mttkrp_chain(&chain, &data.mode_slice(mode, 2).unwrap()).unwrap();
        for (a, b) in d.second.transpose_mul_vec(&d.rhs_second).unwrap().iter().zip(&b2) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn full_sampling_sweep_equals_dense_sweep(seed in any::<u64>()) {
        let (data, model) = fixture(seed);
        let all: Vec<usize> = (1..=64).collect();
        let samples = SampleSet::from_vector(&data, &all).unwrap();
        let cfg = AlsConfig::with_rank(3);
        let (mut dense, mut sparse) = (model.clone(), model);
        let a = als_sweep(&data, &mut dense, &cfg).unwrap();
        let b = sparse_sweep(&samples, &mut sparse, &cfg).unwrap();
        if a.escalations == 0 && b.escalations == 0 {
            prop_assert!(dense.max_abs_diff(&sparse) <= 1e-10);
        }
    }

    #[test]
    fn sampled_objective_matches_a_direct_loop(seed in any::<u64>(), m in 1usize..=64) {
        let (data, model) = fixture(seed);
        let idx = sample_points(SamplingStrategy::UniformRandom, m, 6, seed).unwrap();
        let samples = SampleSet::from_vector(&data, &idx).unwrap();
        let full = model.reconstruct();
        let direct: f64 = idx.iter().map(|&i| 0.5 * (data.values()[i - 1] - full.values()[i - 1]).powi(2)).sum();
        let f = sampled_objective(&model, &samples).unwrap();
        prop_assert!((f - direct).abs() <= 1e-12 * (1.0 + direct));
        prop_assert!(sampled_max_error(&model, &samples).unwrap() <= model.max_error(&data).unwrap() + 1e-15);
    }

    #[test]
    fn exact_sparse_updates_do_not_increase_the_sampled_objective(seed in any::<u64>()) {
        let (_, init) = fixture(seed);
        // noise has no exact low-rank fit, so F stays well above rounding level
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let noise: Vec<f64> = (0..64).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
        let data = QuantizedVector::new(noise).unwrap();
        let idx = sample_points(SamplingStrategy::Stratified, 40, 6, seed).unwrap();
        let samples = SampleSet::from_vector(&data, &idx).unwrap();
        let cfg = AlsConfig { max_iterations: 15, restarts: 1, ..AlsConfig::with_rank(3) };
        let f0 = sampled_objective(&init, &samples).unwrap();
        let (_, rep) = als_sparse_fit_from(&samples, init, &cfg).unwrap();
        let mut prev = f0;
        for (f, esc) in rep.objective_trace.iter().zip(&rep.sweep_escalations) {
            if *esc == 0 {
                prop_assert!(*f <= prev * (1.0 + 1e-10), "{} -> {}", prev, f);
            }
            prev = *f;
        }
    }

    #[test]
    fn sample_points_are_sorted_and_distinct(count in 1usize..=256, seed in any::<u64>(), stratified in any::<bool>()) {
        let strategy = if stratified { SamplingStrategy::Stratified } else { SamplingStrategy::UniformRandom };
        let idx = sample_points(strategy, count, 8, seed).unwrap();
        prop_assert_eq!(idx.len(), count);
        prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(idx[0] >= 1 && idx[count - 1] <= 256);
        prop_assert_eq!(sample_points(strategy, count, 8, seed).unwrap(), idx);
    }
}
