//! Empirical cost measurements for full and sparse sweeps.

use std::time::Instant;

use crate::als::{als_sweep, random_init, AlsConfig};
use crate::error::Result;
use crate::sparse::{sample_points, sparse_sweep, SampleSet, SamplingStrategy};

use super::{generate_samples, FunctionKind, FunctionSpec};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScalingReport {
    /// `(L, best seconds per full sweep)`.
    pub full_sweep_seconds: Vec<(usize, f64)>,
    /// Consecutive ratios `t(L+1) / t(L)`.
    pub full_ratios: Vec<f64>,
    /// `(M, flops per sparse sweep)` at `L = 12`.
    pub sparse_flops: Vec<(usize, u64)>,
    /// Consecutive ratios for `M → 2M`.
    pub sparse_ratios: Vec<f64>,
    /// Sparse flops ratio when the rank doubles at fixed `M`.
    pub rank_doubling_ratio: f64,
}

/// Seconds per full-data sweep at a given order, minimum over `repetitions`.
pub fn time_full_sweep(order: usize, rank: usize, repetitions: usize) -> Result<f64> {
    let spec = FunctionSpec::new(FunctionKind::Gaussian(1.0), 0.0, 1.0, order)?;
    let data = generate_samples(&spec);
    let cfg = AlsConfig::with_rank(rank);
    let mut model = random_init(order, rank, 0)?;
    // warm-up
    als_sweep(&data, &mut model, &cfg)?;
    let mut best = f64::INFINITY;
    for _ in 0..repetitions.max(1) {
        let start = Instant::now();
        als_sweep(&data, &mut model, &cfg)?;
        best = best.min(start.elapsed().as_secs_f64());
    }
    Ok(best)
}

/// Flops of one sparse sweep with `m` uniform samples.
pub fn sparse_sweep_flops(order: usize, rank: usize, m: usize, seed: u64) -> Result<u64> {
    let spec = FunctionSpec::new(FunctionKind::Gaussian(1.0), 0.0, 1.0, order)?;
    let idx = sample_points(SamplingStrategy::UniformRandom, m, order, seed)?;
    let samples = SampleSet::from_fn(order, &idx, |i| spec.value_at(i))?;
    let mut model = random_init(order, rank, seed)?;
    Ok(sparse_sweep(&samples, &mut model, &AlsConfig::with_rank(rank))?.flops)
}

/// Measures full sweeps over `orders` and sparse sweeps at `L = 12` for
/// `M ∈ {2Lr, 4Lr, 8Lr}` plus a rank doubling.
pub fn scaling_probe(orders: std::ops::RangeInclusive<usize>, rank: usize, repetitions: usize) -> Result<ScalingReport> {
    let mut report = ScalingReport::default();
    for order in orders {
        report.full_sweep_seconds.push((order, time_full_sweep(order, rank, repetitions)?));
    }
    report.full_ratios = report.full_sweep_seconds.windows(2).map(|w| w[1].1 / w[0].1).collect();

    let order = 12;
    for factor in [2, 4, 8] {
        let m = factor * order * rank;
        report.sparse_flops.push((m, sparse_sweep_flops(order, rank, m, 0)?));
    }
    report.sparse_ratios = report
        .sparse_flops
        .windows(2)
        .map(|w| w[1].1 as f64 / w[0].1 as f64)
        .collect();
    let m = 4 * order * rank;
    report.rank_doubling_ratio =
        sparse_sweep_flops(order, 2 * rank, m, 0)? as f64 / sparse_sweep_flops(order, rank, m, 0)? as f64;
    Ok(report)
}
