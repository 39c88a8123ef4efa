//! Small dense symmetric positive definite solves with Tikhonov fallback.
//!
//! The plain Cholesky factorization is tried first. If it breaks down, or a
//! pivot falls below `μ₀ · trace(G)/r`, the solve is retried on
//! `G + μ (trace(G)/r) I` with `μ` escalating by decades from `μ₀` to
//! `max_level`. Each escalation is counted as a condition warning.

use crate::error::{QcpError, Result};
use crate::multilinear::DenseMatrix;

/// Starting regularization level when the policy base is zero.
const FALLBACK_BASE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizationPolicy {
    /// `μ₀`, dimensionless; scaled by `trace(G)/r`.
    pub base: f64,
    /// Last level tried before giving up.
    pub max_level: f64,
}

impl Default for RegularizationPolicy {
    fn default() -> Self {
        Self { base: 1e-12, max_level: 1e-6 }
    }
}

impl RegularizationPolicy {
    pub fn with_base(base: f64) -> Self {
        Self { base, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpdSolution {
    /// One solution per right-hand side.
    pub solutions: Vec<Vec<f64>>,
    /// Number of regularization escalations that were needed.
    pub escalations: usize,
    /// Regularization level `μ` actually used, `0` for the plain solve.
    pub level: f64,
}

/// Lower-triangular Cholesky factor, row-major.
struct Cholesky {
    n: usize,
    l: Vec<f64>,
    min_pivot: f64,
}

impl Cholesky {
    fn factor(g: &DenseMatrix, shift: f64) -> Option<Self> {
        let n = g.rows();
        let mut l = vec![0.0; n * n];
        let mut min_pivot = f64::INFINITY;
        for j in 0..n {
            let mut d = g.get(j, j) + shift;
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            min_pivot = min_pivot.min(d);
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in j + 1..n {
                let mut s = g.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Some(Self { n, l, min_pivot })
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = rhs.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.l[i * n + k] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                y[i] -= self.l[k * n + i] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        y
    }
}

/// Solves `G x = rhs`.
pub fn solve_spd(g: &DenseMatrix, rhs: &[f64], policy: RegularizationPolicy) -> Result<(Vec<f64>, usize)> {
    let sol = solve_spd_multi(g, &[rhs], policy)?;
    let escalations = sol.escalations;
    Ok((sol.solutions.into_iter().next().unwrap_or_default(), escalations))
}

/// Solves `G x = b` for every `b` in `rhs` with a single factorization.
pub fn solve_spd_multi(
    g: &DenseMatrix,
    rhs: &[&[f64]],
    policy: RegularizationPolicy,
) -> Result<SpdSolution> {
    let n = g.rows();
    if g.cols() != n || n == 0 {
        return Err(QcpError::ShapeMismatch(format!("SPD solve on {:?} matrix", g.shape())));
    }
    if let Some(b) = rhs.iter().find(|b| b.len() != n) {
        return Err(QcpError::ShapeMismatch(format!(
            "right-hand side of length {} for {n}x{n} system",
            b.len()
        )));
    }
    if g.asymmetry() > 1e-12 {
        return Err(QcpError::ShapeMismatch("matrix is not symmetric".into()));
    }
    let scale = g.trace() / n as f64;
    if !scale.is_finite() {
        return Err(QcpError::NonFinite("Gram matrix"));
    }
    if scale <= 0.0 {
        // a PSD matrix with zero trace is zero; the minimum-norm solution is 0
        return Ok(SpdSolution {
            solutions: vec![vec![0.0; n]; rhs.len()],
            escalations: 1,
            level: 0.0,
        });
    }

    let finish = |c: Cholesky, escalations, level| SpdSolution {
        solutions: rhs.iter().map(|b| c.solve(b)).collect(),
        escalations,
        level,
    };

    if let Some(c) = Cholesky::factor(g, 0.0) {
        if c.min_pivot >= policy.base * scale {
            return Ok(finish(c, 0, 0.0));
        }
    }
    let mut level = if policy.base > 0.0 { policy.base } else { FALLBACK_BASE };
    let mut escalations = 0;
    while level <= policy.max_level * (1.0 + 1e-9) {
        escalations += 1;
        if let Some(c) = Cholesky::factor(g, level * scale) {
            return Ok(finish(c, escalations, level));
        }
        level *= 10.0;
    }
    Err(QcpError::SolverFailure { max_level: policy.max_level })
}
