//! Configuration sweeps for the four published error tables.

use std::time::Instant;

use crate::als::{als_fit, AlsConfig};
use crate::cpmodel::CpModel;
use crate::error::{QcpError, Result};
use crate::sparse::{als_sparse_fit, als_sparse_fit_with_reference, sample_points, SampleSet, SamplingStrategy};

use super::{generate_samples, ExperimentRow, FunctionKind, FunctionSpec};

/// Knobs that override the built-in table settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TableOverrides {
    pub order: Option<usize>,
    pub ranks: Option<Vec<usize>>,
    pub restarts: Option<usize>,
    pub seed: u64,
    pub tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
    pub threads: Option<usize>,
    pub strategy: SamplingStrategy,
    /// Score sparse restarts against the full grid (the reference vector is
    /// available in table runs) instead of the sampled residual.
    pub select_on_full_grid: bool,
}

impl Default for TableOverrides {
    fn default() -> Self {
        Self {
            order: None,
            ranks: None,
            restarts: None,
            seed: 0,
            tolerance: None,
            max_iterations: None,
            threads: None,
            strategy: SamplingStrategy::UniformRandom,
            select_on_full_grid: true,
        }
    }
}

impl TableOverrides {
    fn config(&self, rank: usize, restarts: usize, normalized: bool) -> AlsConfig {
        let base = AlsConfig::default();
        AlsConfig {
            rank,
            restarts: self.restarts.unwrap_or(restarts),
            seed: self.seed,
            tolerance: self.tolerance.unwrap_or(base.tolerance),
            max_iterations: self.max_iterations.unwrap_or(base.max_iterations),
            threads: self.threads,
            normalized,
            ..base
        }
    }
}

struct FullCase {
    kind: FunctionKind,
    interval: (f64, f64),
}

struct SparseCase {
    kind: FunctionKind,
    interval: (f64, f64),
    samples_per_lr: usize,
    /// Ranks beyond this have no published value.
    published_up_to: usize,
}

/// Runs table `table_id` (1 to 4), one row per fit. Rows that fail are
/// recorded with a flag and the sweep continues. Callback `on_row` sees each
/// row as it completes, together with its model.
pub fn run_table(
    table_id: u8,
    overrides: &TableOverrides,
    mut on_row: impl FnMut(&ExperimentRow, Option<&CpModel>),
) -> Result<Vec<ExperimentRow>> {
    let unit = (0.0, 1.0);
    let full = |kinds: &[FunctionKind]| -> Vec<FullCase> {
        kinds.iter().map(|&kind| FullCase { kind, interval: unit }).collect()
    };
    match table_id {
        1 => run_full(&full(&[FunctionKind::Gaussian(1.0)]), overrides, &mut on_row),
        2 => run_full(
            &full(&[FunctionKind::Sine(1.0), FunctionKind::Sine(2.0), FunctionKind::Sine(4.0)]),
            overrides,
            &mut on_row,
        ),
        3 => run_full(
            &full(&[FunctionKind::Monomial(1.0), FunctionKind::Monomial(2.0)]),
            overrides,
            &mut on_row,
        ),
        4 => {
            let cases = [
                SparseCase { kind: FunctionKind::Gaussian(1.0), interval: unit, samples_per_lr: 2, published_up_to: 8 },
                SparseCase { kind: FunctionKind::Gaussian(1.0), interval: unit, samples_per_lr: 4, published_up_to: 6 },
                SparseCase {
                    kind: FunctionKind::Gaussian(50.0),
                    interval: (0.0, 0.25),
                    samples_per_lr: 4,
                    published_up_to: 8,
                },
            ];
            run_sparse(&cases, overrides, &mut on_row)
        }
        other => Err(QcpError::InvalidConfig(format!("no table {other}; expected 1-4"))),
    }
}

fn failed_row(function: String, order: usize, r: usize, samples: usize, err: &QcpError) -> ExperimentRow {
    ExperimentRow {
        function,
        order,
        r,
        samples,
        error: f64::NAN,
        iters: 0,
        seconds: 0.0,
        flags: format!("error: {err}"),
    }
}

fn run_full(
    cases: &[FullCase],
    ov: &TableOverrides,
    on_row: &mut impl FnMut(&ExperimentRow, Option<&CpModel>),
) -> Result<Vec<ExperimentRow>> {
    let order = ov.order.unwrap_or(15);
    let ranks = ov.ranks.clone().unwrap_or_else(|| (1..=10).collect());
    let mut rows = Vec::new();
    for case in cases {
        let spec = FunctionSpec::new(case.kind, case.interval.0, case.interval.1, order)?;
        let data = generate_samples(&spec);
        for &r in &ranks {
            let cfg = ov.config(r, 5, true);
            let start = Instant::now();
            let (row, model) = match als_fit(&data, &cfg) {
                Ok((model, rep)) => (
                    ExperimentRow {
                        function: case.kind.to_string(),
                        order,
                        r,
                        samples: 0,
                        error: rep.max_error,
                        iters: rep.iterations,
                        seconds: start.elapsed().as_secs_f64(),
                        flags: if rep.solver_failed { "solver_failed".into() } else { String::new() },
                    },
                    Some(model),
                ),
                Err(e) => (failed_row(case.kind.to_string(), order, r, 0, &e), None),
            };
            on_row(&row, model.as_ref());
            rows.push(row);
        }
    }
    Ok(rows)
}

fn run_sparse(
    cases: &[SparseCase],
    ov: &TableOverrides,
    on_row: &mut impl FnMut(&ExperimentRow, Option<&CpModel>),
) -> Result<Vec<ExperimentRow>> {
    let order = ov.order.unwrap_or(12);
    let ranks = ov.ranks.clone().unwrap_or_else(|| (1..=8).collect());
    let mut rows = Vec::new();
    for case in cases {
        let spec = FunctionSpec::new(case.kind, case.interval.0, case.interval.1, order)?;
        let reference = generate_samples(&spec);
        for &r in &ranks {
            let m = (case.samples_per_lr * order * r).min(1 << order);
            let cfg = ov.config(r, 10, false);
            let start = Instant::now();
            let fit = sample_points(ov.strategy, m, order, ov.seed)
                .and_then(|idx| SampleSet::from_fn(order, &idx, |i| spec.value_at(i)))
                .and_then(|samples| {
                    if ov.select_on_full_grid {
                        als_sparse_fit_with_reference(&samples, &cfg, &reference)
                    } else {
                        als_sparse_fit(&samples, &cfg)
                    }
                });
            let (row, model) = match fit {
                Ok((model, rep)) => {
                    let mut flags = Vec::new();
                    if r > case.published_up_to {
                        flags.push("extrapolated");
                    }
                    if rep.solver_failed {
                        flags.push("solver_failed");
                    }
                    let error = model.max_error(&reference)?;
                    (
                        ExperimentRow {
                            function: case.kind.to_string(),
                            order,
                            r,
                            samples: m,
                            error,
                            iters: rep.iterations,
                            seconds: start.elapsed().as_secs_f64(),
                            flags: flags.join(";"),
                        },
                        Some(model),
                    )
                }
                Err(e) => (failed_row(case.kind.to_string(), order, r, m, &e), None),
            };
            on_row(&row, model.as_ref());
            rows.push(row);
        }
    }
    Ok(rows)
}
