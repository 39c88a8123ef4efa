//! Recovering a function on 2^L points from M = 4Lr samples.

use qcp::sparse::als_sparse_fit_with_reference;
use qcp::{als_sparse_fit, generate_samples, sample_points, AlsConfig, FunctionSpec, SampleSet, SamplingStrategy};

fn main() -> qcp::Result<()> {
    let order = 12;
    let spec = FunctionSpec::parse("gaussian:1", 0.0, 1.0, order)?;
    let truth = generate_samples(&spec);

    for r in [2, 4, 6] {
        let m = 4 * order * r;
        let idx = sample_points(SamplingStrategy::UniformRandom, m, order, 0)?;
        let samples = SampleSet::from_fn(order, &idx, |i| spec.value_at(i))?;
        let cfg = AlsConfig { restarts: 10, ..AlsConfig::with_rank(r) };

        // production mode: restarts ranked by sampled residual only
        let (model, rep) = als_sparse_fit(&samples, &cfg)?;
        // experiment mode: restarts ranked against the known full vector
        let (_, best) = als_sparse_fit_with_reference(&samples, &cfg, &truth)?;
        println!(
            "r={r} M={m:<4} ({:.2}% of grid) sampled residual {:.2e}, grid error {:.3e} (best restart {:.3e})",
            100.0 * m as f64 / truth.len() as f64,
            rep.max_error,
            model.max_error(&truth)?,
            best.max_error
        );
    }
    Ok(())
}
