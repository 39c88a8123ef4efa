//! Full-data alternating least squares for the QCP model.
//!
//! Each sweep visits modes `1..=L` in order. For mode `i` the remaining
//! factors form the chain `A_L ⊙ ... ⊙ A_{i+1} ⊙ A_{i-1} ⊙ ... ⊙ A_1`; its Gram
//! matrix `G` is built once and shared by the two right-hand sides obtained
//! from the digit-1 and digit-2 mode slices.

use std::time::Instant;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cpmodel::CpModel;
use crate::error::{QcpError, Result};
use crate::multilinear::{
    gram_chain_counted, mttkrp_chain_counted, DenseMatrix, FactorMatrix, FlopCounter,
};
use crate::quantize::{mode_slice_into, QuantizedVector};
use crate::spd::{solve_spd_multi, RegularizationPolicy};

/// Environment variable read for the number of threads used across restarts.
pub const THREADS_ENV: &str = "QCP_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub struct AlsConfig {
    pub rank: usize,
    /// Stop once the largest entrywise factor change over a sweep is below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Independent random initializations; the best result is kept.
    pub restarts: usize,
    /// Restart `j` uses seed `seed + j`.
    pub seed: u64,
    pub regularization: RegularizationPolicy,
    /// Pin the digit-1 row of modes `1..L-1` to ones.
    pub normalized: bool,
    /// Rescale rank-term columns after each sweep (free format only).
    pub balance_columns: bool,
    /// Worker threads for restarts; `None` reads [`THREADS_ENV`], default 1.
    pub threads: Option<usize>,
}

impl Default for AlsConfig {
    fn default() -> Self {
        Self {
            rank: 1,
            tolerance: 1e-8,
            max_iterations: 1000,
            restarts: 5,
            seed: 0,
            regularization: RegularizationPolicy::default(),
            normalized: false,
            balance_columns: false,
            threads: None,
        }
    }
}

impl AlsConfig {
    pub fn with_rank(rank: usize) -> Self {
        Self { rank, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(QcpError::InvalidConfig(m.to_string()));
        if self.rank == 0 {
            return bad("rank must be at least 1");
        }
        if !(self.tolerance > 0.0) {
            return bad("tolerance must be positive");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1");
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1");
        }
        let reg = self.regularization;
        if !(reg.base >= 0.0) || !(reg.max_level >= reg.base) {
            return bad("regularization levels must satisfy 0 <= base <= max_level");
        }
        Ok(())
    }

    pub(crate) fn thread_count(&self) -> usize {
        self.threads
            .or_else(|| std::env::var(THREADS_ENV).ok()?.parse().ok())
            .unwrap_or(1)
            .max(1)
    }
}

/// Outcome of one fit (the best restart when several were run).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AlsReport {
    pub iterations: usize,
    pub converged: bool,
    /// Largest entrywise factor change in the last sweep.
    pub final_change: f64,
    /// Max-norm error against the fitted data. For sparse fits this is the
    /// largest residual over the samples.
    pub max_error: f64,
    /// Objective after every sweep.
    pub objective_trace: Vec<f64>,
    /// Regularization escalations per sweep.
    pub sweep_escalations: Vec<usize>,
    pub condition_warnings: usize,
    /// A linear solve failed even with the largest regularization.
    pub solver_failed: bool,
    pub seed: u64,
    pub flops: u64,
    pub gram_builds: usize,
    pub seconds: f64,
}

/// Per-sweep bookkeeping.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepStats {
    pub max_change: f64,
    pub escalations: usize,
    pub solver_failed: bool,
    pub flops: u64,
    pub gram_builds: usize,
    /// Warnings that are not regularization escalations (empty partitions,
    /// underdetermined systems in sparse fits).
    pub other_warnings: usize,
}

/// Factors drawn i.i.d. uniform on `(0, 1)` from a seeded ChaCha stream.
pub fn random_init(order: usize, rank: usize, seed: u64) -> Result<CpModel> {
    random_init_with(order, rank, seed, false)
}

/// As [`random_init`]; with `normalized` the digit-1 rows of modes
/// `1..L-1` are overwritten with ones after drawing.
pub fn random_init_with(order: usize, rank: usize, seed: u64, normalized: bool) -> Result<CpModel> {
    if rank == 0 {
        return Err(QcpError::InvalidConfig("rank must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut factors: Vec<FactorMatrix> = (0..order)
        .map(|_| FactorMatrix::from_fn(rank, |_, _| rng.sample::<f64, _>(Open01)))
        .collect();
    if normalized {
        let last = factors.len().saturating_sub(1);
        for f in &mut factors[..last] {
            f.row_mut(0).fill(1.0);
        }
    }
    CpModel::new(factors)
}

/// Factor references for the chain that excludes `mode` (0-based), highest
/// mode first.
pub(crate) fn chain_without(model: &CpModel, mode: usize) -> Vec<&FactorMatrix> {
    let f = model.factors();
    f.iter()
        .enumerate()
        .rev()
        .filter(|&(m, _)| m != mode)
        .map(|(_, a)| a)
        .collect()
}

/// Rescales each rank term so modes `1..L-1` have unit max-norm columns,
/// moving the scale into mode `L`. Terms with a zero column are left alone.
pub(crate) fn balance_columns(model: &mut CpModel) {
    let order = model.order();
    let r = model.rank();
    if order < 2 {
        return;
    }
    let factors = model.factors_mut();
    for k in 0..r {
        let scales: Vec<f64> = factors[..order - 1]
            .iter()
            .map(|f| {
                let [a, b] = f.column(k);
                a.abs().max(b.abs())
            })
            .collect();
        if scales.iter().any(|&s| s == 0.0 || !s.is_finite()) {
            continue;
        }
        let mut total = 1.0;
        for (f, s) in factors[..order - 1].iter_mut().zip(&scales) {
            for row in 0..2 {
                f.set(row, k, f.get(row, k) / s);
            }
            total *= s;
        }
        let last = &mut factors[order - 1];
        for row in 0..2 {
            last.set(row, k, last.get(row, k) * total);
        }
    }
}

/// One full sweep over all modes, updating `model` in place.
///
/// When a solve fails even after regularization, the affected factor keeps
/// its previous values and `solver_failed` is set.
pub fn als_sweep(data: &QuantizedVector, model: &mut CpModel, cfg: &AlsConfig) -> Result<SweepStats> {
    let order = data.order();
    if model.order() != order {
        return Err(QcpError::OrderMismatch { expected: order, actual: model.order() });
    }
    let r = model.rank();
    let before = model.clone();
    let mut stats = SweepStats::default();
    let mut counter = FlopCounter::new();
    let half = data.len() / 2;
    let mut slice1 = Vec::with_capacity(half);
    let mut slice2 = Vec::with_capacity(half);

    for mode in 0..order {
        mode_slice_into(data.values(), mode, 0, &mut slice1);
        mode_slice_into(data.values(), mode, 1, &mut slice2);
        let pinned = cfg.normalized && mode + 1 < order;

        let (gram, b1, b2) = if order == 1 {
            // empty chain: the Khatri-Rao product is a single row of ones
            (
                DenseMatrix::from_fn(r, r, |_, _| 1.0),
                vec![slice1[0]; r],
                vec![slice2[0]; r],
            )
        } else {
            let chain = chain_without(model, mode);
            let gram = gram_chain_counted(&chain, &mut counter)?;
            let b1 = if pinned {
                Vec::new()
            } else {
                mttkrp_chain_counted(&chain, &slice1, &mut counter)?
            };
            let b2 = mttkrp_chain_counted(&chain, &slice2, &mut counter)?;
            (gram, b1, b2)
        };
        stats.gram_builds += 1;

        let rhs: Vec<&[f64]> = if pinned { vec![&b2] } else { vec![&b1, &b2] };
        match solve_spd_multi(&gram, &rhs, cfg.regularization) {
            Ok(sol) => {
                stats.escalations += sol.escalations;
                let factor = &mut model.factors_mut()[mode];
                let mut rows = sol.solutions.into_iter();
                if !pinned {
                    factor.row_mut(0).copy_from_slice(&rows.next().expect("two solutions"));
                }
                factor.row_mut(1).copy_from_slice(&rows.next().expect("row-2 solution"));
                counter.add((rhs.len() * 2 * r * r + r * r * r / 3) as u64);
            }
            Err(QcpError::SolverFailure { .. }) => {
                stats.solver_failed = true;
            }
            Err(e) => return Err(e),
        }
    }

    if cfg.balance_columns && !cfg.normalized {
        balance_columns(model);
    }
    stats.max_change = model.max_abs_diff(&before);
    stats.flops = counter.get();
    Ok(stats)
}

/// Runs ALS from a given starting model (a single restart).
pub fn als_fit_from(
    data: &QuantizedVector,
    init: CpModel,
    cfg: &AlsConfig,
) -> Result<(CpModel, AlsReport)> {
    cfg.validate()?;
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
        let stats = als_sweep(data, &mut model, cfg)?;
        report.iterations += 1;
        report.flops += stats.flops;
        report.gram_builds += stats.gram_builds;
        report.condition_warnings += stats.escalations;
        report.sweep_escalations.push(stats.escalations);
        report.final_change = stats.max_change;
        if stats.solver_failed || !model.is_finite() {
            report.solver_failed = true;
            if !model.is_finite() {
                model = snapshot;
            }
            report.objective_trace.push(model.objective(data)?);
            break;
        }
        report.objective_trace.push(model.objective(data)?);
        if stats.max_change < cfg.tolerance {
            report.converged = true;
            break;
        }
    }
    report.max_error = model.max_error(data)?;
    report.seconds = start.elapsed().as_secs_f64();
    Ok((model, report))
}

/// Fits a rank-`cfg.rank` model to the full data, keeping the restart with
/// the smallest max-norm error (ties go to the smaller seed).
///
/// All-zero data short-circuits to the zero model.
pub fn als_fit(data: &QuantizedVector, cfg: &AlsConfig) -> Result<(CpModel, AlsReport)> {
    cfg.validate()?;
    if data.values().iter().any(|v| !v.is_finite()) {
        return Err(QcpError::NonFinite("data"));
    }
    if data.values().iter().all(|&v| v == 0.0) {
        let model = CpModel::zero(data.order(), cfg.rank)?;
        let report = AlsReport { converged: true, seed: cfg.seed, ..AlsReport::default() };
        return Ok((model, report));
    }
    best_of_restarts(cfg, |seed| {
        let init = random_init_with(data.order(), cfg.rank, seed, cfg.normalized)?;
        als_fit_from(data, init, cfg)
    })
}

/// Runs `fit(seed + j)` for every restart `j`, optionally across threads, and
/// keeps the smallest `max_error`; ties and NaNs resolve to the earlier seed.
pub(crate) fn best_of_restarts<F>(cfg: &AlsConfig, fit: F) -> Result<(CpModel, AlsReport)>
where
    F: Fn(u64) -> Result<(CpModel, AlsReport)> + Sync,
{
    let seeds: Vec<u64> = (0..cfg.restarts as u64).map(|j| cfg.seed.wrapping_add(j)).collect();
    let threads = cfg.thread_count().min(seeds.len());
    let results: Vec<Result<(CpModel, AlsReport)>> = if threads <= 1 {
        seeds.iter().map(|&s| fit(s)).collect()
    } else {
        let chunk = seeds.len().div_ceil(threads);
        std::thread::scope(|scope| {
            let handles: Vec<_> = seeds
                .chunks(chunk)
                .map(|part| {
                    let fit = &fit;
                    scope.spawn(move || part.iter().map(|&s| fit(s)).collect::<Vec<_>>())
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("restart worker panicked"))
                .collect()
        })
    };

    let mut best: Option<(CpModel, AlsReport)> = None;
    for (res, seed) in results.into_iter().zip(seeds) {
        let (model, mut report) = res?;
        report.seed = seed;
        let better = match &best {
            None => true,
            Some((_, b)) => report.max_error < b.max_error || (b.max_error.is_nan() && !report.max_error.is_nan()),
        };
        if better {
            best = Some((model, report));
        }
    }
    Ok(best.expect("at least one restart"))
}
