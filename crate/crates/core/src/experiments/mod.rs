//! Function generators, table reproductions and scaling probes.

pub mod scaling;
pub mod tables;

use std::fmt;
use std::io::Write;

use serde::Serialize;

use crate::error::{QcpError, Result};
use crate::quantize::{QuantizedVector, MAX_ORDER};

pub use scaling::{scaling_probe, ScalingReport};
pub use tables::{run_table, TableOverrides};

/// A one-dimensional test function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FunctionKind {
    /// `e^{-λ x}`
    ExpDecay(f64),
    /// `e^{-k x²}`
    Gaussian(f64),
    /// `sin(k π x)`
    Sine(f64),
    /// `x^p`
    Monomial(f64),
}

impl FunctionKind {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Self::ExpDecay(l) => (-l * x).exp(),
            Self::Gaussian(k) => (-k * x * x).exp(),
            Self::Sine(k) => (k * std::f64::consts::PI * x).sin(),
            Self::Monomial(p) => x.powf(p),
        }
    }

    fn parameter(&self) -> f64 {
        match *self {
            Self::ExpDecay(v) | Self::Gaussian(v) | Self::Sine(v) | Self::Monomial(v) => v,
        }
    }

    /// Parses `name[:parameter]`, e.g. `gaussian:50`, `sine:2`, `exp:1`,
    /// `monomial:2`. The parameter defaults to 1.
    pub fn parse(s: &str) -> Result<Self> {
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => (
                n,
                p.parse::<f64>()
                    .map_err(|e| QcpError::InvalidConfig(format!("function parameter {p:?}: {e}")))?,
            ),
            None => (s, 1.0),
        };
        let kind = match name {
            "exp" | "exp_decay" => Self::ExpDecay(param),
            "gaussian" | "gauss" => Self::Gaussian(param),
            "sine" | "sin" => Self::Sine(param),
            "monomial" | "pow" => Self::Monomial(param),
            other => return Err(QcpError::InvalidConfig(format!("unknown function {other:?}"))),
        };
        if !param.is_finite() {
            return Err(QcpError::InvalidConfig("function parameter must be finite".into()));
        }
        Ok(kind)
    }
}

impl fmt::Display for FunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Self::ExpDecay(_) => "exp",
            Self::Gaussian(_) => "gaussian",
            Self::Sine(_) => "sine",
            Self::Monomial(_) => "monomial",
        };
        write!(f, "{name}:{}", self.parameter())
    }
}

/// A function sampled on the uniform grid `a + k h`, `h = (b-a)/(2^L - 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionSpec {
    pub kind: FunctionKind,
    pub a: f64,
    pub b: f64,
    pub order: usize,
}

impl FunctionSpec {
    pub fn new(kind: FunctionKind, a: f64, b: f64, order: usize) -> Result<Self> {
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(QcpError::InvalidConfig(format!("interval [{a}, {b}] is empty")));
        }
        if order == 0 || order > MAX_ORDER {
            return Err(QcpError::InvalidOrder { order, max: MAX_ORDER });
        }
        Ok(Self { kind, a, b, order })
    }

    pub fn parse(function: &str, a: f64, b: f64, order: usize) -> Result<Self> {
        Self::new(FunctionKind::parse(function)?, a, b, order)
    }

    pub fn step(&self) -> f64 {
        (self.b - self.a) / ((1u64 << self.order) - 1) as f64
    }

    /// Grid node for a 0-based position.
    pub fn node(&self, k: usize) -> f64 {
        self.a + k as f64 * self.step()
    }

    /// Function value at a 1-based linear index.
    pub fn value_at(&self, index: usize) -> f64 {
        self.kind.eval(self.node(index - 1))
    }
}

/// Samples the function at all `2^L` grid nodes.
pub fn generate_samples(spec: &FunctionSpec) -> QuantizedVector {
    let values = (0..1usize << spec.order).map(|k| spec.kind.eval(spec.node(k))).collect();
    QuantizedVector::with_order(values, spec.order).expect("spec order is validated")
}

/// One line of a table sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub function: String,
    #[serde(rename = "L")]
    pub order: usize,
    pub r: usize,
    /// Number of samples; 0 for full-data fits.
    #[serde(rename = "M")]
    pub samples: usize,
    pub error: f64,
    pub iters: usize,
    pub seconds: f64,
    /// Free-form markers such as `extrapolated` or `solver_failed`.
    pub flags: String,
}

impl ExperimentRow {
    fn csv_record(&self) -> [String; 8] {
        [
            self.function.clone(),
            self.order.to_string(),
            self.r.to_string(),
            self.samples.to_string(),
            format!("{:.11e}", self.error),
            self.iters.to_string(),
            format!("{:.3}", self.seconds),
            self.flags.clone(),
        ]
    }
}

pub const CSV_HEADER: [&str; 8] = ["function", "L", "r", "M", "error", "iters", "seconds", "flags"];

/// Writes rows as comma-separated values with a header and LF line endings.
/// Errors carry 12 significant digits.
pub fn write_csv<W: Write>(rows: &[ExperimentRow], out: W) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row.csv_record())?;
    }
    w.flush()
}

/// Six significant digits, the precision used for printed errors.
pub fn format_error(e: f64) -> String {
    if e == 0.0 || !e.is_finite() {
        return format!("{e}");
    }
    let digits = 5 - e.abs().log10().floor() as i32;
    if (0..=12).contains(&digits) {
        format!("{e:.*}", digits as usize)
    } else {
        format!("{e:.5e}")
    }
}
