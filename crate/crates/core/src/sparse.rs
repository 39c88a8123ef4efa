//! Sparse QCP interpolation: fitting a rank-`r` model from `M ≪ 2^L` sampled
//! entries.
//!
//! For mode `i` the samples split by their mode-`i` digit into two groups.
//! Each group yields its own design matrix whose row for sample `p` holds
//! `Π_{m≠i} A_m[j_m(p), k]`, so unlike the full-data case the two normal
//! systems of a mode have different matrices.

use std::collections::HashSet;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::als::{balance_columns, best_of_restarts, random_init_with, AlsConfig, AlsReport, SweepStats};
use crate::cpmodel::CpModel;
use crate::error::{QcpError, Result};
use crate::multilinear::{DenseMatrix, FlopCounter};
use crate::quantize::{linear_to_multi, MultiIndex, QuantizedVector, MAX_ORDER};
use crate::spd::solve_spd_multi;

/// One sampled grid position.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePoint {
    /// 1-based linear index.
    pub index: usize,
    pub multi_index: MultiIndex,
    pub value: f64,
}

/// `M` distinct samples of a length-`2^L` vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    order: usize,
    points: Vec<SamplePoint>,
}

impl SampleSet {
    /// Builds from `(1-based index, value)` pairs. Duplicate or out-of-range
    /// indices are rejected.
    pub fn new(order: usize, samples: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        if order == 0 || order > MAX_ORDER {
            return Err(QcpError::InvalidOrder { order, max: MAX_ORDER });
        }
        let mut seen = HashSet::new();
        let mut points = Vec::new();
        for (index, value) in samples {
            if !seen.insert(index) {
                return Err(QcpError::InvalidSamples(format!("duplicate index {index}")));
            }
            if !value.is_finite() {
                return Err(QcpError::NonFinite("sample value"));
            }
            let multi_index = linear_to_multi(index, order)?;
            points.push(SamplePoint { index, multi_index, value });
        }
        if points.is_empty() {
            return Err(QcpError::InvalidSamples("at least one sample is required".into()));
        }
        Ok(Self { order, points })
    }

    /// Evaluates `f` at each 1-based index.
    pub fn from_fn(order: usize, indices: &[usize], f: impl Fn(usize) -> f64) -> Result<Self> {
        Self::new(order, indices.iter().map(|&i| (i, f(i))))
    }

    /// Picks entries out of a full vector.
    pub fn from_vector(data: &QuantizedVector, indices: &[usize]) -> Result<Self> {
        let pairs = indices
            .iter()
            .map(|&i| Ok((i, data.get(i)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(data.order(), pairs)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[SamplePoint] {
        &self.points
    }

    /// Splits sample positions by their digit in a 1-based mode.
    pub fn partition(&self, mode: usize) -> Result<ModePartition> {
        if mode == 0 || mode > self.order {
            return Err(QcpError::ShapeMismatch(format!("mode {mode} outside 1..={}", self.order)));
        }
        let (mut first, mut second) = (Vec::new(), Vec::new());
        for (p, pt) in self.points.iter().enumerate() {
            if pt.multi_index.digit(mode) == 1 {
                first.push(p);
            } else {
                second.push(p);
            }
        }
        Ok(ModePartition { first, second })
    }
}

/// Positions (into [`SampleSet::points`]) with digit 1 and digit 2 in a mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModePartition {
    pub first: Vec<usize>,
    pub second: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingStrategy {
    /// Uniform draw without replacement.
    UniformRandom,
    /// One uniform draw from each of `M` equal blocks of the index range.
    Stratified,
}

impl FromStr for SamplingStrategy {
    type Err = QcpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" | "uniform-random" | "random" => Ok(Self::UniformRandom),
            "stratified" => Ok(Self::Stratified),
            other => Err(QcpError::InvalidConfig(format!("unknown sampling strategy {other:?}"))),
        }
    }
}

/// `count` distinct 1-based positions in `1..=2^order`, sorted.
pub fn sample_points(
    strategy: SamplingStrategy,
    count: usize,
    order: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    if order == 0 || order > MAX_ORDER {
        return Err(QcpError::InvalidOrder { order, max: MAX_ORDER });
    }
    let n = 1usize << order;
    if count == 0 || count > n {
        return Err(QcpError::InvalidSamples(format!("cannot draw {count} of {n} grid points")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<usize> = match strategy {
        SamplingStrategy::UniformRandom => rand::seq::index::sample(&mut rng, n, count)
            .into_iter()
            .map(|i| i + 1)
            .collect(),
        SamplingStrategy::Stratified => (0..count)
            .map(|j| {
                let lo = j * n / count;
                let hi = (j + 1) * n / count;
                rng.random_range(lo..hi) + 1
            })
            .collect(),
    };
    out.sort_unstable();
    Ok(out)
}

/// Row-subsampled design matrices and right-hand sides for one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedDesign {
    /// `N₁ × r`, samples with digit 1.
    pub first: DenseMatrix,
    /// `N₂ × r`, samples with digit 2.
    pub second: DenseMatrix,
    pub rhs_first: Vec<f64>,
    pub rhs_second: Vec<f64>,
}

/// Design matrices for a 1-based `mode`; rows follow sample order.
pub fn build_reduced_design(model: &CpModel, samples: &SampleSet, mode: usize) -> Result<ReducedDesign> {
    check_orders(model, samples)?;
    let part = samples.partition(mode)?;
    let r = model.rank();
    let build = |rows: &[usize]| {
        DenseMatrix::from_fn(rows.len(), r, |row, k| {
            let pt = &samples.points[rows[row]];
            let mut prod = 1.0;
            for m in (1..=model.order()).rev().filter(|&m| m != mode) {
                prod *= model.factor(m).get((pt.multi_index.digit(m) - 1) as usize, k);
            }
            prod
        })
    };
    let rhs = |rows: &[usize]| rows.iter().map(|&p| samples.points[p].value).collect();
    Ok(ReducedDesign {
        first: build(&part.first),
        second: build(&part.second),
        rhs_first: rhs(&part.first),
        rhs_second: rhs(&part.second),
    })
}

fn check_orders(model: &CpModel, samples: &SampleSet) -> Result<()> {
    if model.order() != samples.order() {
        return Err(QcpError::OrderMismatch { expected: samples.order(), actual: model.order() });
    }
    Ok(())
}

/// `½ Σ_m (τ_{s_m} - model(s_m))²`.
pub fn sampled_objective(model: &CpModel, samples: &SampleSet) -> Result<f64> {
    check_orders(model, samples)?;
    Ok(0.5
        * samples
            .points
            .iter()
            .map(|p| {
                let d = p.value - model.eval_offset(p.index - 1);
                d * d
            })
            .sum::<f64>())
}

/// Largest absolute residual over the samples.
pub fn sampled_max_error(model: &CpModel, samples: &SampleSet) -> Result<f64> {
    check_orders(model, samples)?;
    Ok(samples
        .points
        .iter()
        .map(|p| (p.value - model.eval_offset(p.index - 1)).abs())
        .fold(0.0, f64::max))
}

/// One sparse ALS sweep over modes `1..=L`.
///
/// Products over the modes above the current one are tabulated at the start
/// of the sweep; products over the modes below are accumulated as the sweep
/// advances, so each design row costs `O(r)`.
pub fn sparse_sweep(samples: &SampleSet, model: &mut CpModel, cfg: &AlsConfig) -> Result<SweepStats> {
    check_orders(model, samples)?;
    let order = model.order();
    let r = model.rank();
    let m = samples.len();
    let before = model.clone();
    let mut stats = SweepStats::default();
    let mut counter = FlopCounter::new();
    let digit = |p: usize, mode0: usize| ((samples.points[p].index - 1) >> mode0) & 1;

    // suffix[mode0][p * r + k] = Π_{v > mode0} A_v[digit, k]
    let mut suffix = vec![vec![1.0; m * r]; order];
    for mode0 in (0..order.saturating_sub(1)).rev() {
        let f = &model.factors()[mode0 + 1];
        let (head, tail) = suffix.split_at_mut(mode0 + 1);
        let (dst, src) = (&mut head[mode0], &tail[0]);
        for p in 0..m {
            let row = f.row(digit(p, mode0 + 1));
            for k in 0..r {
                dst[p * r + k] = src[p * r + k] * row[k];
            }
        }
    }
    counter.add((order.saturating_sub(1) * m * r) as u64);
    let mut prefix = vec![1.0; m * r];
    let mut design = vec![0.0; m * r];

    for mode0 in 0..order {
        for (d, (a, b)) in design.iter_mut().zip(prefix.iter().zip(&suffix[mode0])) {
            *d = a * b;
        }
        counter.add((m * r) as u64);
        let pinned = cfg.normalized && mode0 + 1 < order;

        for row in 0..2 {
            if pinned && row == 0 {
                continue;
            }
            let members: Vec<usize> = (0..m).filter(|&p| digit(p, mode0) == row).collect();
            if members.is_empty() {
                stats.other_warnings += 1;
                continue;
            }
            if members.len() < r {
                stats.other_warnings += 1;
            }
            let mut gram = DenseMatrix::zeros(r, r);
            let mut rhs = vec![0.0; r];
            for &p in &members {
                let a = &design[p * r..(p + 1) * r];
                let tau = samples.points[p].value;
                for k in 0..r {
                    rhs[k] += a[k] * tau;
                    for l in 0..=k {
                        gram.set(k, l, gram.get(k, l) + a[k] * a[l]);
                    }
                }
            }
            for k in 0..r {
                for l in 0..k {
                    gram.set(l, k, gram.get(k, l));
                }
            }
            counter.add((members.len() * (r * (r + 1) + 2 * r)) as u64);
            stats.gram_builds += 1;
            match solve_spd_multi(&gram, &[&rhs], cfg.regularization) {
                Ok(sol) => {
                    stats.escalations += sol.escalations;
                    model.factors_mut()[mode0].row_mut(row).copy_from_slice(&sol.solutions[0]);
                    counter.add((2 * r * r + r * r * r / 3) as u64);
                }
                Err(QcpError::SolverFailure { .. }) => stats.solver_failed = true,
                Err(e) => return Err(e),
            }
        }

        let f = &model.factors()[mode0];
        for p in 0..m {
            let row = f.row(digit(p, mode0));
            for k in 0..r {
                prefix[p * r + k] *= row[k];
            }
        }
        counter.add((m * r) as u64);
    }

    if cfg.balance_columns && !cfg.normalized {
        balance_columns(model);
    }
    stats.max_change = model.max_abs_diff(&before);
    stats.flops = counter.get();
    Ok(stats)
}

/// Sparse ALS from a given starting model (a single restart).
pub fn als_sparse_fit_from(
    samples: &SampleSet,
    init: CpModel,
    cfg: &AlsConfig,
) -> Result<(CpModel, AlsReport)> {
    cfg.validate()?;
    check_orders(&init, samples)?;
    if init.rank() != cfg.rank {
        return Err(QcpError::InvalidConfig(format!(
            "initial model has rank {}, config asks for {}",
            init.rank(),
            cfg.rank
        )));
    }
    let start = Instant::now();
    let mut model = init;
    let mut report = AlsReport::default();
    for _ in 0..cfg.max_iterations {
        let snapshot = model.clone();
        let stats = sparse_sweep(samples, &mut model, cfg)?;
        report.iterations += 1;
        report.flops += stats.flops;
        report.gram_builds += stats.gram_builds;
        report.condition_warnings += stats.escalations + stats.other_warnings;
        report.sweep_escalations.push(stats.escalations);
        report.final_change = stats.max_change;
        if stats.solver_failed || !model.is_finite() {
            report.solver_failed = true;
            if !model.is_finite() {
                model = snapshot;
            }
            report.objective_trace.push(sampled_objective(&model, samples)?);
            break;
        }
        report.objective_trace.push(sampled_objective(&model, samples)?);
        if stats.max_change < cfg.tolerance {
            report.converged = true;
            break;
        }
    }
    report.max_error = sampled_max_error(&model, samples)?;
    report.seconds = start.elapsed().as_secs_f64();
    Ok((model, report))
}

/// Fits a rank-`cfg.rank` model to the samples only. Restarts are ranked by
/// the largest sampled residual.
pub fn als_sparse_fit(samples: &SampleSet, cfg: &AlsConfig) -> Result<(CpModel, AlsReport)> {
    cfg.validate()?;
    best_of_restarts(cfg, |seed| {
        let init = random_init_with(samples.order(), cfg.rank, seed, cfg.normalized)?;
        als_sparse_fit_from(samples, init, cfg)
    })
}

/// Experiment mode: as [`als_sparse_fit`], but every restart is scored by its
/// max-norm error on the full `reference` vector, which is also what the
/// returned report carries in `max_error`.
pub fn als_sparse_fit_with_reference(
    samples: &SampleSet,
    cfg: &AlsConfig,
    reference: &QuantizedVector,
) -> Result<(CpModel, AlsReport)> {
    cfg.validate()?;
    if reference.order() != samples.order() {
        return Err(QcpError::OrderMismatch { expected: samples.order(), actual: reference.order() });
    }
    best_of_restarts(cfg, |seed| {
        let init = random_init_with(samples.order(), cfg.rank, seed, cfg.normalized)?;
        let (model, mut report) = als_sparse_fit_from(samples, init, cfg)?;
        report.max_error = model.max_error(reference)?;
        Ok((model, report))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::als::random_init;
    use crate::cpmodel::exp_rank1_model;
    use crate::multilinear::FactorMatrix;

    #[test]
    fn sample_set_validation() {
        assert!(SampleSet::new(4, [(1, 1.0), (1, 2.0)]).is_err());
        assert!(SampleSet::new(4, [(17, 1.0)]).is_err());
        assert!(SampleSet::new(4, [(0, 1.0)]).is_err());
        assert!(SampleSet::new(4, []).is_err());
        let s = SampleSet::new(4, [(6, 1.0), (16, 2.0)]).unwrap();
        assert_eq!(s.points()[0].multi_index.digits(), &[2, 1, 2, 1]);
        let part = s.partition(2).unwrap();
        assert_eq!(part.first, vec![0]);
        assert_eq!(part.second, vec![1]);
    }

    #[test]
    fn sampling_strategies() {
        for strategy in [SamplingStrategy::UniformRandom, SamplingStrategy::Stratified] {
            let all = sample_points(strategy, 16, 4, 3).unwrap();
            assert_eq!(all, (1..=16).collect::<Vec<_>>());
            let a = sample_points(strategy, 20, 8, 5).unwrap();
            assert_eq!(a, sample_points(strategy, 20, 8, 5).unwrap());
            let uniq: HashSet<_> = a.iter().collect();
            assert_eq!(uniq.len(), 20);
            assert!(sample_points(strategy, 17, 4, 0).is_err());
        }
        for seed in 0..20 {
            let s = sample_points(SamplingStrategy::Stratified, 4, 4, seed).unwrap();
            for (j, &i) in s.iter().enumerate() {
                assert!((4 * j + 1..=4 * j + 4).contains(&i), "{s:?}");
            }
        }
        assert_eq!("stratified".parse::<SamplingStrategy>().unwrap(), SamplingStrategy::Stratified);
        assert!("adaptive".parse::<SamplingStrategy>().is_err());
    }

    #[test]
    fn ones_model_design_is_all_ones() {
        let model = CpModel::new(vec![FactorMatrix::new(vec![1.0; 2], vec![1.0; 2]).unwrap(); 5]).unwrap();
        let samples = SampleSet::new(5, [(1, 0.5), (4, 1.0), (9, 2.0), (32, 3.0)]).unwrap();
        let d = build_reduced_design(&model, &samples, 3).unwrap();
        assert!(d.first.as_slice().iter().chain(d.second.as_slice()).all(|&v| v == 1.0));
        assert_eq!(d.first.rows() + d.second.rows(), 4);
    }

    #[test]
    fn single_sample_design() {
        let model = random_init(4, 3, 1).unwrap();
        let samples = SampleSet::new(4, [(5, 1.0)]).unwrap();
        let d = build_reduced_design(&model, &samples, 1).unwrap();
        assert_eq!(d.first.shape(), (1, 3));
        assert_eq!(d.second.rows(), 0);
    }

    #[test]
    fn sampled_objective_examples() {
        let model = exp_rank1_model(1.0, 0.0, 1.0, 6).unwrap();
        let full = model.reconstruct();
        let s = SampleSet::from_vector(&full, &[1, 7, 33, 64]).unwrap();
        assert!(sampled_objective(&model, &s).unwrap() <= 1e-20);
        let off = SampleSet::new(6, [(10, full.get(10).unwrap() + 2.0)]).unwrap();
        assert!((sampled_objective(&model, &off).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_skips_empty_partition() {
        // all samples have digit 1 in mode 1
        let data = exp_rank1_model(1.0, 0.0, 1.0, 4).unwrap().reconstruct();
        let s = SampleSet::from_vector(&data, &[1, 3, 5, 7]).unwrap();
        let mut model = random_init(4, 1, 0).unwrap();
        let kept = model.factor(1).row(1).to_vec();
        let stats = sparse_sweep(&s, &mut model, &AlsConfig::with_rank(1)).unwrap();
        assert!(stats.other_warnings >= 1);
        assert_eq!(model.factor(1).row(1), kept.as_slice());
    }
}
