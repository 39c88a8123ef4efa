//! Dyadic folding of length-`2^L` vectors into `L`-th order tensors with two
//! entries per mode.
//!
//! Linear indices are 1-based at the API boundary. The binary multi-index
//! `(j_1, ..., j_L)` with `j_v ∈ {1, 2}` satisfies
//! `i - 1 = Σ (j_v - 1) 2^(v-1)`, so mode 1 carries the least-significant bit.
//! The folded tensor is never stored; slices are gathered by bit tests.

use crate::error::{QcpError, Result};

/// Largest supported order. Keeps `2^L` addressable and memory realistic.
pub const MAX_ORDER: usize = 40;

fn check_order(order: usize) -> Result<()> {
    if order == 0 || order > MAX_ORDER {
        return Err(QcpError::InvalidOrder { order, max: MAX_ORDER });
    }
    Ok(())
}

/// A sample vector of length exactly `2^order`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedVector {
    values: Vec<f64>,
    order: usize,
}

impl QuantizedVector {
    /// Wraps `values`, inferring the order from the length.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let len = values.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(QcpError::LengthMismatch {
                len,
                order: len.max(1).ilog2() as usize,
            });
        }
        let order = len.trailing_zeros() as usize;
        check_order(order)?;
        Ok(Self { values, order })
    }

    /// Wraps `values` and checks that the length matches `2^order`.
    pub fn with_order(values: Vec<f64>, order: usize) -> Result<Self> {
        check_order(order)?;
        if values.len() != 1usize << order {
            return Err(QcpError::LengthMismatch { len: values.len(), order });
        }
        Ok(Self { values, order })
    }

    pub fn zeros(order: usize) -> Result<Self> {
        check_order(order)?;
        Ok(Self { values: vec![0.0; 1 << order], order })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Entry at a 1-based linear index.
    pub fn get(&self, index: usize) -> Result<f64> {
        if index == 0 || index > self.values.len() {
            return Err(QcpError::IndexOutOfRange { index, len: self.values.len() });
        }
        Ok(self.values[index - 1])
    }

    /// Entry addressed by a binary multi-index.
    pub fn at(&self, idx: &MultiIndex) -> Result<f64> {
        if idx.order() != self.order {
            return Err(QcpError::OrderMismatch { expected: self.order, actual: idx.order() });
        }
        Ok(self.values[idx.offset()])
    }

    /// Frobenius norm, identical for the vector and its folded tensor.
    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// See [`mode_slice`].
    pub fn mode_slice(&self, mode: usize, digit: u8) -> Result<Vec<f64>> {
        mode_slice(self, mode, digit)
    }
}

/// A binary multi-index `(j_1, ..., j_L)`, each digit in `{1, 2}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    digits: Vec<u8>,
}

impl MultiIndex {
    pub fn new(digits: Vec<u8>) -> Result<Self> {
        if let Some(&d) = digits.iter().find(|&&d| d != 1 && d != 2) {
            return Err(QcpError::InvalidDigit(d));
        }
        check_order(digits.len())?;
        Ok(Self { digits })
    }

    /// Builds from a 0-based offset; `order` must already be validated.
    pub(crate) fn from_offset(offset: usize, order: usize) -> Self {
        let digits = (0..order).map(|v| 1 + ((offset >> v) & 1) as u8).collect();
        Self { digits }
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn order(&self) -> usize {
        self.digits.len()
    }

    /// Digit of a 1-based mode.
    pub fn digit(&self, mode: usize) -> u8 {
        self.digits[mode - 1]
    }

    /// 0-based offset into the underlying vector.
    pub fn offset(&self) -> usize {
        self.digits
            .iter()
            .enumerate()
            .map(|(v, &d)| ((d - 1) as usize) << v)
            .sum()
    }
}

/// 1-based linear index to its binary multi-index of the given order.
pub fn linear_to_multi(index: usize, order: usize) -> Result<MultiIndex> {
    check_order(order)?;
    let len = 1usize << order;
    if index == 0 || index > len {
        return Err(QcpError::IndexOutOfRange { index, len });
    }
    Ok(MultiIndex::from_offset(index - 1, order))
}

/// Inverse of [`linear_to_multi`].
pub fn multi_to_linear(idx: &MultiIndex) -> usize {
    idx.offset() + 1
}

/// Same as [`multi_to_linear`] but starting from raw digits.
pub fn digits_to_linear(digits: &[u8]) -> Result<usize> {
    Ok(multi_to_linear(&MultiIndex::new(digits.to_vec())?))
}

/// Entries whose multi-index has `j_mode == digit`, in increasing linear
/// index order. The result has length `2^(L-1)`; the remaining modes keep the
/// least-significant-first ordering.
pub fn mode_slice(v: &QuantizedVector, mode: usize, digit: u8) -> Result<Vec<f64>> {
    let order = v.order();
    if mode == 0 || mode > order {
        return Err(QcpError::ShapeMismatch(format!(
            "mode {mode} outside 1..={order}"
        )));
    }
    if digit != 1 && digit != 2 {
        return Err(QcpError::InvalidDigit(digit));
    }
    let mut out = Vec::with_capacity(v.len() / 2);
    mode_slice_into(v.values(), mode - 1, (digit - 1) as usize, &mut out);
    Ok(out)
}

/// Gathers the slice for a 0-based mode and 0-based digit into `out`.
/// Contiguous runs of length `2^mode` alternate between the two digits.
pub(crate) fn mode_slice_into(values: &[f64], mode0: usize, digit0: usize, out: &mut Vec<f64>) {
    out.clear();
    let run = 1usize << mode0;
    for block in values.chunks_exact(2 * run) {
        out.extend_from_slice(&block[digit0 * run..(digit0 + 1) * run]);
    }
}

/// Re-merges the two slices of a 1-based mode into the original vector.
pub fn merge_mode_slices(
    mode: usize,
    first: &[f64],
    second: &[f64],
) -> Result<QuantizedVector> {
    if first.len() != second.len() {
        return Err(QcpError::ShapeMismatch(format!(
            "slice lengths {} and {} differ",
            first.len(),
            second.len()
        )));
    }
    let total = first.len() * 2;
    let out = QuantizedVector::new(vec![0.0; total])?;
    let order = out.order();
    if mode == 0 || mode > order {
        return Err(QcpError::ShapeMismatch(format!(
            "mode {mode} outside 1..={order}"
        )));
    }
    let run = 1usize << (mode - 1);
    let mut values = out.into_values();
    for (b, block) in values.chunks_exact_mut(2 * run).enumerate() {
        block[..run].copy_from_slice(&first[b * run..(b + 1) * run]);
        block[run..].copy_from_slice(&second[b * run..(b + 1) * run]);
    }
    QuantizedVector::with_order(values, order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tau16() -> QuantizedVector {
        QuantizedVector::new((1..=16).map(|i| i as f64).collect()).unwrap()
    }

    #[test]
    fn coding_examples() {
        assert_eq!(linear_to_multi(1, 4).unwrap().digits(), &[1, 1, 1, 1]);
        assert_eq!(linear_to_multi(16, 4).unwrap().digits(), &[2, 2, 2, 2]);
        assert_eq!(linear_to_multi(6, 4).unwrap().digits(), &[2, 1, 2, 1]);
        assert_eq!(digits_to_linear(&[1, 1, 1, 1]).unwrap(), 1);
        assert_eq!(digits_to_linear(&[2, 1, 2, 1]).unwrap(), 6);
        assert_eq!(digits_to_linear(&[2, 2, 2, 2]).unwrap(), 16);
    }

    #[test]
    fn coding_errors() {
        assert!(matches!(
            linear_to_multi(0, 4),
            Err(QcpError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            linear_to_multi(17, 4),
            Err(QcpError::IndexOutOfRange { .. })
        ));
        assert_eq!(MultiIndex::new(vec![1, 3]), Err(QcpError::InvalidDigit(3)));
        assert_eq!(MultiIndex::new(vec![0]), Err(QcpError::InvalidDigit(0)));
    }

    #[test]
    fn three_mode_slices() {
        let v = tau16();
        assert_eq!(
            v.mode_slice(1, 1).unwrap(),
            vec![1.0, 3.0, 5.0, 7.0, 9.0, 11.0, 13.0, 15.0]
        );
        assert_eq!(
            v.mode_slice(2, 2).unwrap(),
            vec![3.0, 4.0, 7.0, 8.0, 11.0, 12.0, 15.0, 16.0]
        );
        assert_eq!(
            v.mode_slice(3, 1).unwrap(),
            vec![1.0, 2.0, 3.0, 4.0, 9.0, 10.0, 11.0, 12.0]
        );
        assert_eq!(
            v.mode_slice(4, 2).unwrap(),
            (9..=16).map(|i| i as f64).collect::<Vec<_>>()
        );
        let short = QuantizedVector::new(vec![4.0, 5.0]).unwrap();
        assert_eq!(short.mode_slice(1, 1).unwrap(), vec![4.0]);
        assert!(v.mode_slice(5, 1).is_err());
        assert!(v.mode_slice(0, 1).is_err());
    }

    #[test]
    fn length_checks() {
        assert!(QuantizedVector::new(vec![1.0; 3]).is_err());
        assert!(QuantizedVector::new(vec![1.0]).is_err());
        assert!(QuantizedVector::with_order(vec![1.0; 8], 2).is_err());
        assert_eq!(QuantizedVector::new(vec![1.0; 8]).unwrap().order(), 3);
    }

    #[test]
    fn merge_restores_vector() {
        let v = tau16();
        for mode in 1..=4 {
            let a = v.mode_slice(mode, 1).unwrap();
            let b = v.mode_slice(mode, 2).unwrap();
            assert_eq!(merge_mode_slices(mode, &a, &b).unwrap(), v);
        }
    }
}
