//! Rank-`r` quantized canonical (QCP) models:
//! `χ ≈ Σ_k a_k^(1) ⊗ a_k^(2) ⊗ ... ⊗ a_k^(L)` with one `2×r` factor per mode.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{QcpError, Result};
use crate::multilinear::FactorMatrix;
use crate::quantize::{MultiIndex, QuantizedVector, MAX_ORDER};

/// Ordered list of `L` factor matrices sharing one rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpModel {
    factors: Vec<FactorMatrix>,
}

impl CpModel {
    pub fn new(factors: Vec<FactorMatrix>) -> Result<Self> {
        let order = factors.len();
        if order == 0 || order > MAX_ORDER {
            return Err(QcpError::InvalidOrder { order, max: MAX_ORDER });
        }
        let r = factors[0].rank();
        if factors.iter().any(|f| f.rank() != r) {
            return Err(QcpError::ShapeMismatch("factors of different rank".into()));
        }
        if factors.iter().any(|f| !f.is_finite()) {
            return Err(QcpError::NonFinite("model factors"));
        }
        Ok(Self { factors })
    }

    /// The model whose every entry is zero.
    pub fn zero(order: usize, rank: usize) -> Result<Self> {
        if rank == 0 {
            return Err(QcpError::InvalidConfig("rank must be at least 1".into()));
        }
        Self::new((0..order).map(|_| FactorMatrix::zeros(rank)).collect())
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn rank(&self) -> usize {
        self.factors[0].rank()
    }

    /// `2 L r`.
    pub fn parameter_count(&self) -> usize {
        2 * self.order() * self.rank()
    }

    pub fn factors(&self) -> &[FactorMatrix] {
        &self.factors
    }

    /// Factor of a 1-based mode.
    pub fn factor(&self, mode: usize) -> &FactorMatrix {
        &self.factors[mode - 1]
    }

    pub(crate) fn factors_mut(&mut self) -> &mut [FactorMatrix] {
        &mut self.factors
    }

    pub fn into_factors(self) -> Vec<FactorMatrix> {
        self.factors
    }

    pub fn is_finite(&self) -> bool {
        self.factors.iter().all(FactorMatrix::is_finite)
    }

    /// Largest entrywise change between two models of equal shape.
    pub fn max_abs_diff(&self, other: &CpModel) -> f64 {
        self.factors
            .iter()
            .zip(&other.factors)
            .fold(0.0, |m, (a, b)| f64::max(m, a.max_abs_diff(b)))
    }

    /// Applies the same column permutation to every factor.
    pub fn permute_terms(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.rank()];
        if perm.len() != self.rank() || perm.iter().any(|&p| p >= seen.len() || std::mem::replace(&mut seen[p], true)) {
            return Err(QcpError::ShapeMismatch("not a permutation of the rank terms".into()));
        }
        Ok(Self { factors: self.factors.iter().map(|f| f.permute_columns(perm)).collect() })
    }

    /// Single entry `Σ_k Π_v A_v[j_v, k]`, `O(L r)`.
    pub fn eval_entry(&self, idx: &MultiIndex) -> Result<f64> {
        if idx.order() != self.order() {
            return Err(QcpError::OrderMismatch { expected: self.order(), actual: idx.order() });
        }
        Ok(self.eval_offset(idx.offset()))
    }

    /// Entry at a 0-based offset into the unfolded vector.
    pub(crate) fn eval_offset(&self, offset: usize) -> f64 {
        let mut sum = 0.0;
        for k in 0..self.rank() {
            let mut prod = 1.0;
            for (v, f) in self.factors.iter().enumerate() {
                prod *= f.get((offset >> v) & 1, k);
            }
            sum += prod;
        }
        sum
    }

    /// Full length-`2^L` vector. Each rank term is expanded by doubling, which
    /// multiplies factors in mode order and so matches [`Self::eval_entry`]
    /// bit for bit.
    pub fn reconstruct(&self) -> QuantizedVector {
        let len = 1usize << self.order();
        let mut out = vec![0.0; len];
        let mut term = vec![0.0; len];
        for k in 0..self.rank() {
            term[0] = 1.0;
            let mut filled = 1;
            for f in &self.factors {
                let [a1, a2] = f.column(k);
                let (lo, hi) = term[..2 * filled].split_at_mut(filled);
                for (h, l) in hi.iter_mut().zip(lo.iter_mut()) {
                    *h = *l * a2;
                    *l *= a1;
                }
                filled *= 2;
            }
            for (o, t) in out.iter_mut().zip(&term) {
                *o += t;
            }
        }
        QuantizedVector::with_order(out, self.order()).expect("order already validated")
    }

    /// Streams `(offset, value)` for every entry in increasing offset order
    /// using two tables of size `O(r 2^(L/2))` instead of the full vector.
    pub fn for_each_entry(&self, mut f: impl FnMut(usize, f64)) {
        let order = self.order();
        let r = self.rank();
        let low_modes = order.div_ceil(2);
        let low = term_table(&self.factors[..low_modes], r);
        let high = term_table(&self.factors[low_modes..], r);
        let low_len = 1usize << low_modes;
        for (u, h) in high.chunks_exact(r).enumerate() {
            for (t, l) in low.chunks_exact(r).enumerate() {
                let v: f64 = l.iter().zip(h).map(|(a, b)| a * b).sum();
                f(u * low_len + t, v);
            }
        }
    }

    /// `max_i |model_i - data_i|`.
    pub fn max_error(&self, data: &QuantizedVector) -> Result<f64> {
        self.check_order(data)?;
        let values = data.values();
        let mut worst = 0.0f64;
        self.for_each_entry(|i, v| worst = worst.max((v - values[i]).abs()));
        Ok(worst)
    }

    /// Frobenius norm of `data - model`, equally the vector 2-norm.
    pub fn residual_norm(&self, data: &QuantizedVector) -> Result<f64> {
        self.check_order(data)?;
        let values = data.values();
        let mut sq = 0.0;
        self.for_each_entry(|i, v| {
            let d = values[i] - v;
            sq += d * d;
        });
        Ok(sq.sqrt())
    }

    /// `½ ‖χ - model‖_F²`.
    pub fn objective(&self, data: &QuantizedVector) -> Result<f64> {
        let n = self.residual_norm(data)?;
        Ok(0.5 * n * n)
    }

    fn check_order(&self, data: &QuantizedVector) -> Result<()> {
        if data.order() != self.order() {
            return Err(QcpError::OrderMismatch { expected: self.order(), actual: data.order() });
        }
        Ok(())
    }

    /// Text format: a header line `L r`, then for each mode two lines (digit 1
    /// row, digit 2 row) of `r` whitespace-separated decimals.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.order(), self.rank());
        for f in &self.factors {
            for row in 0..2 {
                let line: Vec<String> = f.row(row).iter().map(|v| format!("{v:e}")).collect();
                let _ = writeln!(s, "{}", line.join(" "));
            }
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: CpModel = serde_json::from_str(s).map_err(|e| QcpError::Parse(e.to_string()))?;
        Self::new(m.factors)
    }
}

/// Per-term products over a run of modes: entry `t * r + k` is
/// `Π_v A_v[bit_v(t), k]`.
fn term_table(factors: &[FactorMatrix], r: usize) -> Vec<f64> {
    let mut table = vec![1.0; r];
    for f in factors {
        let mut next = Vec::with_capacity(table.len() * 2);
        for row in 0..2 {
            for chunk in table.chunks_exact(r) {
                next.extend(chunk.iter().zip(f.row(row)).map(|(a, b)| a * b));
            }
        }
        table = next;
    }
    table
}

impl FromStr for CpModel {
    type Err = QcpError;

    fn from_str(s: &str) -> Result<Self> {
        let mut tokens = s.split_whitespace();
        let mut next_usize = |what: &str| -> Result<usize> {
            tokens
                .next()
                .ok_or_else(|| QcpError::Parse(format!("missing {what}")))?
                .parse()
                .map_err(|e| QcpError::Parse(format!("{what}: {e}")))
        };
        let order = next_usize("order")?;
        let rank = next_usize("rank")?;
        if rank == 0 || order == 0 || order > MAX_ORDER {
            return Err(QcpError::Parse(format!("bad header {order} {rank}")));
        }
        let values: Vec<f64> = tokens
            .map(|t| t.parse::<f64>().map_err(|e| QcpError::Parse(format!("{t}: {e}"))))
            .collect::<Result<_>>()?;
        if values.len() != 2 * order * rank {
            return Err(QcpError::Parse(format!(
                "expected {} entries, found {}",
                2 * order * rank,
                values.len()
            )));
        }
        let factors = values
            .chunks_exact(2 * rank)
            .map(|c| FactorMatrix::from_row_major(rank, c.to_vec()))
            .collect::<Result<_>>()?;
        Self::new(factors)
    }
}

/// A model in the reduced format: for modes `1..L-1` the digit-1 row is
/// pinned to ones, so only `(L-1) r + 2r` parameters are free.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedCpModel(CpModel);

impl NormalizedCpModel {
    pub fn new(model: CpModel) -> Result<Self> {
        let l = model.order();
        let pinned = model.factors()[..l - 1]
            .iter()
            .all(|f| f.row(0).iter().all(|&v| v == 1.0));
        if !pinned {
            return Err(QcpError::InvalidConfig(
                "leading rows of modes 1..L-1 must be exactly 1".into(),
            ));
        }
        Ok(Self(model))
    }

    pub fn free_parameter_count(&self) -> usize {
        (self.0.order() + 1) * self.0.rank()
    }

    pub fn model(&self) -> &CpModel {
        &self.0
    }

    pub fn into_inner(self) -> CpModel {
        self.0
    }
}

/// Exact rank-1 model of `e^{-λ(x - a)}` on the grid `x_k = a + k h`,
/// `h = (b - a) / (2^L - 1)`: mode `p` carries `(1, q^(2^(p-1)))` with
/// `q = e^{-λ h}`.
pub fn exp_rank1_model(lambda: f64, a: f64, b: f64, order: usize) -> Result<CpModel> {
    if !(b > a) || !lambda.is_finite() || !a.is_finite() || !b.is_finite() {
        return Err(QcpError::InvalidConfig(format!(
            "need finite lambda and a < b, got lambda={lambda}, [{a}, {b}]"
        )));
    }
    if order == 0 || order > MAX_ORDER {
        return Err(QcpError::InvalidOrder { order, max: MAX_ORDER });
    }
    let h = (b - a) / ((1u64 << order) - 1) as f64;
    let factors = (0..order)
        .map(|p| FactorMatrix::column_vector(1.0, (-lambda * h * (1u64 << p) as f64).exp()))
        .collect::<Result<_>>()?;
    CpModel::new(factors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantize::linear_to_multi;

    fn random_model(order: usize, rank: usize, salt: u64) -> CpModel {
        let mut state = salt.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        CpModel::new((0..order).map(|_| FactorMatrix::from_fn(rank, |_, _| next())).collect())
            .unwrap()
    }

    #[test]
    fn exp_model_matches_sixteen_nodes() {
        let m = exp_rank1_model(1.0, 0.0, 1.0, 4).unwrap();
        let q = (-1.0f64 / 15.0).exp();
        for (p, f) in m.factors().iter().enumerate() {
            assert_eq!(f.get(0, 0), 1.0);
            let want = q.powi(1 << p);
            assert!((f.get(1, 0) - want).abs() < 1e-15);
        }
        let v = m.reconstruct();
        for (i, &x) in v.values().iter().enumerate() {
            assert!((x - q.powi(i as i32)).abs() <= 1e-14 * q.powi(i as i32));
        }
    }

    #[test]
    fn exp_model_lambda_zero_is_ones() {
        let m = exp_rank1_model(0.0, 0.0, 1.0, 6).unwrap();
        assert!(m.reconstruct().values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn exp_model_pointwise_l10() {
        let m = exp_rank1_model(2.0, 0.0, 1.0, 10).unwrap();
        let h = 1.0 / 1023.0;
        let v = m.reconstruct();
        for (k, &x) in v.values().iter().enumerate() {
            let want = (-2.0 * k as f64 * h).exp();
            assert!((x - want).abs() <= 1e-14 * want, "k={k}");
        }
        assert!(exp_rank1_model(1.0, 1.0, 1.0, 4).is_err());
    }

    #[test]
    fn ones_model_is_one_everywhere() {
        let m = CpModel::new(vec![FactorMatrix::column_vector(1.0, 1.0).unwrap(); 5]).unwrap();
        for i in 1..=32 {
            assert_eq!(m.eval_entry(&linear_to_multi(i, 5).unwrap()).unwrap(), 1.0);
        }
    }

    #[test]
    fn eval_matches_reconstruct_bitwise() {
        let m = random_model(4, 3, 7);
        let v = m.reconstruct();
        for i in 1..=16 {
            let e = m.eval_entry(&linear_to_multi(i, 4).unwrap()).unwrap();
            assert_eq!(e.to_bits(), v.get(i).unwrap().to_bits());
        }
        assert!(m.eval_entry(&linear_to_multi(1, 3).unwrap()).is_err());
    }

    #[test]
    fn streaming_matches_reconstruct() {
        for order in 1..=7 {
            let m = random_model(order, 2, order as u64);
            let v = m.reconstruct();
            let mut count = 0;
            m.for_each_entry(|i, x| {
                assert_eq!(i, count);
                assert!((x - v.values()[i]).abs() < 1e-14);
                count += 1;
            });
            assert_eq!(count, 1 << order);
        }
    }

    #[test]
    fn zero_model_reconstructs_zero() {
        let mut m = random_model(4, 2, 3);
        m.factors_mut()[2] = FactorMatrix::zeros(2);
        assert!(m.reconstruct().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn max_error_examples() {
        let m = exp_rank1_model(1.0, 0.0, 1.0, 8).unwrap();
        let h = 1.0 / 255.0;
        let data = QuantizedVector::new((0..256).map(|k| (-(k as f64) * h).exp()).collect()).unwrap();
        assert!(m.max_error(&data).unwrap() <= 1e-14);
        let exact = m.reconstruct();
        assert!(m.max_error(&exact).unwrap() <= 1e-14);
        let mut bumped = exact.clone();
        bumped.values_mut()[37] += 0.25;
        assert!((m.max_error(&bumped).unwrap() - 0.25).abs() < 1e-15);
        assert!(m.max_error(&QuantizedVector::zeros(7).unwrap()).is_err());
    }

    #[test]
    fn permuting_terms_keeps_reconstruction() {
        let m = random_model(5, 4, 11);
        let p = m.permute_terms(&[2, 0, 3, 1]).unwrap();
        let (a, b) = (m.reconstruct(), p.reconstruct());
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-14);
        }
        assert!(m.permute_terms(&[0, 0, 1, 2]).is_err());
    }

    #[test]
    fn text_round_trip() {
        let m = random_model(3, 2, 5);
        let text = m.to_text();
        assert!(text.starts_with("3 2\n"));
        assert_eq!(text.lines().count(), 7);
        assert_eq!(text.parse::<CpModel>().unwrap(), m);
        assert_eq!(CpModel::from_json(&m.to_json()).unwrap(), m);
        assert!("3 2 1.0".parse::<CpModel>().is_err());
    }

    #[test]
    fn normalized_flag() {
        let m = exp_rank1_model(1.0, 0.0, 1.0, 4).unwrap();
        let n = NormalizedCpModel::new(m).unwrap();
        assert_eq!(n.free_parameter_count(), 5);
        assert!(NormalizedCpModel::new(random_model(3, 2, 1)).is_err());
    }
}
