//! Kronecker, Khatri-Rao and Hadamard primitives plus the fast Gram and
//! MTTKRP kernels used by every ALS step.
//!
//! Ordering contract: a factor list is given highest mode first. For the
//! chain `A_L ⊙ ... ⊙ A_{i+1} ⊙ A_{i-1} ⊙ ... ⊙ A_1` the last listed factor
//! indexes the fastest-varying position of the vector it acts on, which is
//! exactly the layout produced by [`crate::quantize::mode_slice`].

use serde::{Deserialize, Serialize};

use crate::error::{QcpError, Result};

/// Running count of floating-point operations (one per multiply, one per add).
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct FlopCounter {
    flops: u64,
}

impl FlopCounter {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, n: u64) {
        self.flops += n;
    }

    pub fn get(&self) -> u64 {
        self.flops
    }
}

/// Dense row-major matrix. Only used at small sizes (`r×r` Gram matrices,
/// design matrices, explicit Khatri-Rao products in tests).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds from row-major data.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(QcpError::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(QcpError::ShapeMismatch("ragged rows".into()));
        }
        Ok(Self { rows: rows.len(), cols, data: rows.concat() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// `M^T M`.
    pub fn gram(&self) -> Self {
        let mut g = Self::zeros(self.cols, self.cols);
        for row in self.data.chunks_exact(self.cols) {
            for k in 0..self.cols {
                for l in 0..self.cols {
                    g.data[k * self.cols + l] += row[k] * row[l];
                }
            }
        }
        g
    }

    /// `M^T x`.
    pub fn transpose_mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.rows {
            return Err(QcpError::ShapeMismatch(format!(
                "vector of length {} against {} rows",
                x.len(),
                self.rows
            )));
        }
        let mut y = vec![0.0; self.cols];
        for (row, &xi) in self.data.chunks_exact(self.cols).zip(x) {
            for (yk, &m) in y.iter_mut().zip(row) {
                *yk += m * xi;
            }
        }
        Ok(y)
    }

    /// `M x`.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(QcpError::ShapeMismatch(format!(
                "vector of length {} against {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok(self
            .data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest `|M_ij - M_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst / scale
    }
}

/// One mode's `2×r` factor matrix. Row 0 holds the coefficients for digit 1,
/// row 1 for digit 2; column `k` is the mode vector of rank term `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorMatrix {
    rank: usize,
    /// Row-major, `2 * rank` entries.
    data: Vec<f64>,
}

impl FactorMatrix {
    /// Builds from the two rows (digit 1 and digit 2).
    pub fn new(first: Vec<f64>, second: Vec<f64>) -> Result<Self> {
        if first.is_empty() || first.len() != second.len() {
            return Err(QcpError::ShapeMismatch(format!(
                "factor rows of length {} and {}",
                first.len(),
                second.len()
            )));
        }
        let rank = first.len();
        let mut data = first;
        data.extend(second);
        Self::from_row_major(rank, data)
    }

    pub fn from_row_major(rank: usize, data: Vec<f64>) -> Result<Self> {
        if rank == 0 || data.len() != 2 * rank {
            return Err(QcpError::ShapeMismatch(format!(
                "{} entries for a 2x{rank} factor",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(QcpError::NonFinite("factor matrix"));
        }
        Ok(Self { rank, data })
    }

    /// Rank-1 factor from a single column `(top, bottom)`.
    pub fn column_vector(top: f64, bottom: f64) -> Result<Self> {
        Self::from_row_major(1, vec![top, bottom])
    }

    pub fn zeros(rank: usize) -> Self {
        Self { rank, data: vec![0.0; 2 * rank] }
    }

    pub fn from_fn(rank: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(2 * rank);
        for row in 0..2 {
            for k in 0..rank {
                data.push(f(row, k));
            }
        }
        Self { rank, data }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Entry for a 0-based row (`digit - 1`) and rank term.
    #[inline]
    pub fn get(&self, row: usize, k: usize) -> f64 {
        self.data[row * self.rank + k]
    }

    #[inline]
    pub fn set(&mut self, row: usize, k: usize, v: f64) {
        self.data[row * self.rank + k] = v;
    }

    /// Row for a 0-based digit.
    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.rank..(row + 1) * self.rank]
    }

    pub fn row_mut(&mut self, row: usize) -> &mut [f64] {
        &mut self.data[row * self.rank..(row + 1) * self.rank]
    }

    #[inline]
    pub fn column(&self, k: usize) -> [f64; 2] {
        [self.data[k], self.data[self.rank + k]]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix { rows: 2, cols: self.rank, data: self.data.clone() }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &FactorMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
    }

    /// Reorders columns: new column `k` is old column `perm[k]`.
    pub fn permute_columns(&self, perm: &[usize]) -> Self {
        Self::from_fn(self.rank, |row, k| self.get(row, perm[k]))
    }

    /// `A^T A`, an `r×r` matrix.
    pub fn gram(&self) -> DenseMatrix {
        let r = self.rank;
        DenseMatrix::from_fn(r, r, |k, l| {
            self.get(0, k) * self.get(0, l) + self.get(1, k) * self.get(1, l)
        })
    }
}

/// Kronecker product of two vectors: `out[p * n2 + q] = b[p] * c[q]`.
pub fn kronecker(b: &[f64], c: &[f64]) -> Vec<f64> {
    b.iter().flat_map(|&bp| c.iter().map(move |&cq| bp * cq)).collect()
}

/// Column-wise Kronecker product `B ⊙ C`.
pub fn khatri_rao(b: &DenseMatrix, c: &DenseMatrix) -> Result<DenseMatrix> {
    if b.cols != c.cols {
        return Err(QcpError::ShapeMismatch(format!(
            "Khatri-Rao column counts {} and {}",
            b.cols, c.cols
        )));
    }
    let r = b.cols;
    let mut out = DenseMatrix::zeros(b.rows * c.rows, r);
    for p in 0..b.rows {
        for q in 0..c.rows {
            let row = p * c.rows + q;
            for k in 0..r {
                out.data[row * r + k] = b.get(p, k) * c.get(q, k);
            }
        }
    }
    Ok(out)
}

/// Elementwise product of equally shaped matrices.
pub fn hadamard(m: &DenseMatrix, n: &DenseMatrix) -> Result<DenseMatrix> {
    if m.shape() != n.shape() {
        return Err(QcpError::ShapeMismatch(format!(
            "Hadamard of {:?} and {:?}",
            m.shape(),
            n.shape()
        )));
    }
    let data = m.data.iter().zip(&n.data).map(|(a, b)| a * b).collect();
    Ok(DenseMatrix { rows: m.rows, cols: m.cols, data })
}

fn common_rank(factors: &[&FactorMatrix]) -> Result<usize> {
    let first = factors
        .first()
        .ok_or_else(|| QcpError::ShapeMismatch("empty factor list".into()))?;
    let r = first.rank();
    if let Some(bad) = factors.iter().find(|f| f.rank() != r) {
        return Err(QcpError::ShapeMismatch(format!(
            "factor with {} columns in a rank-{r} chain",
            bad.rank()
        )));
    }
    Ok(r)
}

/// `K^T K` for the Khatri-Rao chain `K` of `factors`, computed as the
/// Hadamard product of the per-factor Gram matrices in `O(p r^2)`.
pub fn gram_chain(factors: &[&FactorMatrix]) -> Result<DenseMatrix> {
    gram_chain_counted(factors, &mut FlopCounter::new())
}

pub fn gram_chain_counted(
    factors: &[&FactorMatrix],
    counter: &mut FlopCounter,
) -> Result<DenseMatrix> {
    let r = common_rank(factors)?;
    let mut g = DenseMatrix { rows: r, cols: r, data: vec![1.0; r * r] };
    for f in factors {
        let (top, bottom) = (f.row(0), f.row(1));
        for k in 0..r {
            // symmetric: fill the lower triangle and mirror
            for l in 0..=k {
                let v = g.data[k * r + l] * (top[k] * top[l] + bottom[k] * bottom[l]);
                g.data[k * r + l] = v;
                g.data[l * r + k] = v;
            }
        }
    }
    counter.add(4 * (factors.len() * r * (r + 1) / 2) as u64);
    Ok(g)
}

/// `K^T x` for the Khatri-Rao chain `K` of `factors` (highest mode first),
/// without forming `K`.
///
/// For each rank term the highest mode is contracted first: the vector is
/// viewed as two halves (digit 1 and digit 2 of that mode) and replaced by
/// `a_1 * lower + a_2 * upper`, then the next factor is applied to the
/// half-length result. Cost is `3 r (2^p - 1)` flops.
pub fn mttkrp_chain(factors: &[&FactorMatrix], x: &[f64]) -> Result<Vec<f64>> {
    mttkrp_chain_counted(factors, x, &mut FlopCounter::new())
}

pub fn mttkrp_chain_counted(
    factors: &[&FactorMatrix],
    x: &[f64],
    counter: &mut FlopCounter,
) -> Result<Vec<f64>> {
    let r = common_rank(factors)?;
    let p = factors.len();
    if p >= usize::BITS as usize || x.len() != 1usize << p {
        return Err(QcpError::ShapeMismatch(format!(
            "vector of length {} for a chain of {p} binary factors",
            x.len()
        )));
    }
    let half = x.len() / 2;
    let mut cur = vec![0.0; half];
    let mut next = vec![0.0; half];
    let mut out = Vec::with_capacity(r);
    for k in 0..r {
        let [a1, a2] = factors[0].column(k);
        contract(x, a1, a2, &mut cur);
        let mut len = half;
        for f in &factors[1..] {
            let [a1, a2] = f.column(k);
            len /= 2;
            contract(&cur[..2 * len], a1, a2, &mut next[..len]);
            std::mem::swap(&mut cur, &mut next);
        }
        out.push(cur[0]);
    }
    counter.add(3 * (r as u64) * (x.len() as u64 - 1));
    Ok(out)
}

#[inline]
fn contract(src: &[f64], a1: f64, a2: f64, dst: &mut [f64]) {
    let (lo, hi) = src.split_at(dst.len());
    for ((d, &u), &v) in dst.iter_mut().zip(lo).zip(hi) {
        *d = a1 * u + a2 * v;
    }
}
