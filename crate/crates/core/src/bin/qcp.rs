use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qcp::experiments::{format_error, run_table, scaling_probe, write_csv, ExperimentRow, TableOverrides};
use qcp::sparse::{als_sparse_fit, sample_points, SampleSet, SamplingStrategy};
use qcp::{als_fit, generate_samples, AlsConfig, CpModel, FunctionSpec};

#[derive(Parser)]
#[command(name = "qcp", version, about = "Quantized CP approximation of function-generated vectors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to all 2^L samples
    Fit(FitArgs),
    /// Fit a model from M sampled entries
    Interp(InterpArgs),
    /// Reproduce one of the error tables (1-4)
    Table(TableArgs),
    /// Measure per-sweep cost scaling
    Scaling(ScalingArgs),
}

#[derive(Args)]
struct Common {
    /// Function as name[:param]: exp, gaussian, sine, monomial
    #[arg(long, default_value = "gaussian:1")]
    function: String,
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_hyphen_values = true, default_values_t = [0.0, 1.0])]
    interval: Vec<f64>,
    #[arg(short = 'L', default_value_t = 15)]
    order: usize,
    #[arg(short = 'r', default_value_t = 1)]
    rank: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    maxiter: usize,
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    normalized: bool,
    /// CSV output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the fitted model in text format
    #[arg(long)]
    model_out: Option<PathBuf>,
}

impl Common {
    fn spec(&self) -> qcp::Result<FunctionSpec> {
        FunctionSpec::parse(&self.function, self.interval[0], self.interval[1], self.order)
    }

    fn config(&self) -> AlsConfig {
        AlsConfig {
            rank: self.rank,
            tolerance: self.tol,
            max_iterations: self.maxiter,
            restarts: self.restarts,
            seed: self.seed,
            normalized: self.normalized,
            ..AlsConfig::default()
        }
    }
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct InterpArgs {
    #[command(flatten)]
    common: Common,
    /// Number of samples (default 4 L r)
    #[arg(short = 'M')]
    samples: Option<usize>,
    /// uniform or stratified
    #[arg(long, default_value = "uniform")]
    strategy: String,
}

#[derive(Args)]
struct TableArgs {
    /// Table number, 1 to 4
    id: u8,
    #[arg(short = 'L')]
    order: Option<usize>,
    /// Comma-separated ranks
    #[arg(short = 'r', value_delimiter = ',')]
    ranks: Option<Vec<usize>>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    maxiter: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "uniform")]
    strategy: String,
    /// Rank sparse restarts by sampled residual instead of full-grid error
    #[arg(long)]
    select_on_samples: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for one JSON model per row
    #[arg(long)]
    model_out: Option<PathBuf>,
}

#[derive(Args)]
struct ScalingArgs {
    #[arg(long, default_value_t = 12)]
    from: usize,
    #[arg(long, default_value_t = 16)]
    to: usize,
    #[arg(short = 'r', default_value_t = 4)]
    rank: usize,
    #[arg(long, default_value_t = 3)]
    repetitions: usize,
}

fn emit_csv(rows: &[ExperimentRow], out: Option<&PathBuf>) -> io::Result<()> {
    match out {
        Some(path) => write_csv(rows, BufWriter::new(File::create(path)?)),
        None => write_csv(rows, io::stdout().lock()),
    }
}

fn save_model(model: &CpModel, path: Option<&PathBuf>) -> io::Result<()> {
    if let Some(path) = path {
        std::fs::write(path, model.to_text())?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Fit(args) => {
            let c = &args.common;
            let spec = c.spec()?;
            let data = generate_samples(&spec);
            let (model, rep) = als_fit(&data, &c.config())?;
            eprintln!(
                "r={} error={} iters={} warnings={}",
                c.rank,
                format_error(rep.max_error),
                rep.iterations,
                rep.condition_warnings
            );
            let row = ExperimentRow {
                function: spec.kind.to_string(),
                order: c.order,
                r: c.rank,
                samples: 0,
                error: rep.max_error,
                iters: rep.iterations,
                seconds: rep.seconds,
                flags: if rep.solver_failed { "solver_failed".into() } else { String::new() },
            };
            emit_csv(&[row], c.out.as_ref())?;
            save_model(&model, c.model_out.as_ref())?;
            Ok(!rep.solver_failed)
        }
        Command::Interp(args) => {
            let c = &args.common;
            let spec = c.spec()?;
            let strategy: SamplingStrategy = args.strategy.parse()?;
            let m = args.samples.unwrap_or(4 * c.order * c.rank).min(1 << c.order);
            let idx = sample_points(strategy, m, c.order, c.seed)?;
            let samples = SampleSet::from_fn(c.order, &idx, |i| spec.value_at(i))?;
            let (model, rep) = als_sparse_fit(&samples, &c.config())?;
            // full-grid error is reported for inspection only; the fit itself
            // touched just the M samples
            let error = model.max_error(&generate_samples(&spec))?;
            eprintln!(
                "r={} M={m} error={} sampled_max={} iters={}",
                c.rank,
                format_error(error),
                format_error(rep.max_error),
                rep.iterations
            );
            let row = ExperimentRow {
                function: spec.kind.to_string(),
                order: c.order,
                r: c.rank,
                samples: m,
                error,
                iters: rep.iterations,
                seconds: rep.seconds,
                flags: if rep.solver_failed { "solver_failed".into() } else { String::new() },
            };
            emit_csv(&[row], c.out.as_ref())?;
            save_model(&model, c.model_out.as_ref())?;
            Ok(!rep.solver_failed)
        }
        Command::Table(args) => {
            let ov = TableOverrides {
                order: args.order,
                ranks: args.ranks,
                restarts: args.restarts,
                seed: args.seed,
                tolerance: args.tol,
                max_iterations: args.maxiter,
                threads: None,
                strategy: args.strategy.parse()?,
                select_on_full_grid: !args.select_on_samples,
            };
            if let Some(dir) = &args.model_out {
                std::fs::create_dir_all(dir)?;
            }
            let mut io_err = None;
            let rows = run_table(args.id, &ov, |row, model| {
                eprintln!(
                    "{:<14} r={:<2} M={:<4} error={} iters={}{}",
                    row.function,
                    row.r,
                    row.samples,
                    format_error(row.error),
                    row.iters,
                    if row.flags.is_empty() { String::new() } else { format!(" [{}]", row.flags) }
                );
                if let (Some(dir), Some(model)) = (&args.model_out, model) {
                    let name = format!("{}_r{}_M{}.json", row.function.replace(':', "_"), row.r, row.samples);
                    if let Err(e) = std::fs::write(dir.join(name), model.to_json()) {
                        io_err.get_or_insert(e);
                    }
                }
            })?;
            if let Some(e) = io_err {
                return Err(e.into());
            }
            emit_csv(&rows, args.out.as_ref())?;
            Ok(true)
        }
        Command::Scaling(args) => {
            let rep = scaling_probe(args.from..=args.to, args.rank, args.repetitions)?;
            let mut out = io::stdout().lock();
            writeln!(out, "full sweep (r={}):", args.rank)?;
            for (l, t) in &rep.full_sweep_seconds {
                writeln!(out, "  L={l:<3} {:.6} s", t)?;
            }
            writeln!(out, "  ratios L->L+1: {:?}", rep.full_ratios)?;
            writeln!(out, "sparse sweep (L=12):")?;
            for (m, f) in &rep.sparse_flops {
                writeln!(out, "  M={m:<5} {f} flops")?;
            }
            writeln!(out, "  ratios M->2M: {:?}", rep.sparse_ratios)?;
            writeln!(out, "  rank doubling ratio: {:.3}", rep.rank_doubling_ratio)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
