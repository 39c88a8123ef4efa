//! Quantized canonical (QCP) tensor approximation of function-generated
//! vectors.
//!
//! A vector of length `2^L` is folded into an `L`-th order tensor with two
//! entries per mode and approximated by a rank-`r` canonical model holding
//! only `2 L r` numbers. Models are fitted by alternating least squares,
//! either from the full vector ([`als::als_fit`]) or from a sparse set of
//! samples ([`sparse::als_sparse_fit`]).
//!
//! ```
//! use qcp::{als_fit, AlsConfig, FunctionSpec, generate_samples};
//!
//! let spec = FunctionSpec::parse("exp:1", 0.0, 1.0, 10).unwrap();
//! let data = generate_samples(&spec);
//! let cfg = AlsConfig { restarts: 1, ..AlsConfig::with_rank(1) };
//! let (model, report) = als_fit(&data, &cfg).unwrap();
//! assert!(report.max_error < 1e-10);
//! assert_eq!(model.parameter_count(), 20);
//! ```

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod als;
pub mod cpmodel;
pub mod error;
pub mod experiments;
pub mod multilinear;
pub mod quantize;
pub mod sparse;
pub mod spd;

pub use als::{als_fit, als_fit_from, als_sweep, random_init, AlsConfig, AlsReport};
pub use cpmodel::{exp_rank1_model, CpModel, NormalizedCpModel};
pub use error::{QcpError, Result};
pub use experiments::{generate_samples, FunctionKind, FunctionSpec};
pub use multilinear::{gram_chain, hadamard, khatri_rao, kronecker, mttkrp_chain, DenseMatrix, FactorMatrix};
pub use quantize::{linear_to_multi, mode_slice, multi_to_linear, MultiIndex, QuantizedVector};
pub use sparse::{als_sparse_fit, sample_points, sampled_objective, SampleSet, SamplingStrategy};
pub use spd::{solve_spd, RegularizationPolicy};
