//! e^{-λx} on a uniform grid has rank 1: the closed-form model and an ALS
//! fit both reproduce it to rounding error.

use qcp::{als_fit, exp_rank1_model, generate_samples, AlsConfig, FunctionSpec};

fn main() -> qcp::Result<()> {
    for order in [8, 12, 16, 20] {
        let spec = FunctionSpec::parse("exp:5", 0.0, 1.0, order)?;
        let data = generate_samples(&spec);
        let closed = exp_rank1_model(5.0, 0.0, 1.0, order)?;
        let (_, rep) = als_fit(&data, &AlsConfig::with_rank(1))?;
        println!(
            "L={order:<2} 2^L={:<8} params={:<3} closed-form error {:.2e}, ALS error {:.2e} after {} sweeps",
            data.len(),
            closed.parameter_count(),
            closed.max_error(&data)?,
            rep.max_error,
            rep.iterations
        );
    }
    Ok(())
}
