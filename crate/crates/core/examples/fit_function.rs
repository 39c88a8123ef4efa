//! Full-data ALS over a range of ranks.
//!
//! cargo run --release --example fit_function -- sine:2 12

use qcp::{als_fit, generate_samples, AlsConfig, FunctionSpec};

fn main() -> qcp::Result<()> {
    let mut args = std::env::args().skip(1);
    let function = args.next().unwrap_or_else(|| "gaussian:1".into());
    let order: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(12);

    let spec = FunctionSpec::parse(&function, 0.0, 1.0, order)?;
    let data = generate_samples(&spec);
    println!("{function} on [0, 1], L={order} ({} samples)", data.len());
    for r in 1..=6 {
        let cfg = AlsConfig { normalized: true, ..AlsConfig::with_rank(r) };
        let (model, rep) = als_fit(&data, &cfg)?;
        println!(
            "r={r} params={:<4} error={:.4e} sweeps={:<4} warnings={}",
            model.parameter_count(),
            rep.max_error,
            rep.iterations,
            rep.condition_warnings
        );
    }
    Ok(())
}
