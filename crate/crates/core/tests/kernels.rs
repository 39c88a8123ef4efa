use nalgebra::DMatrix;
use proptest::prelude::*;
use qcp::multilinear::{gram_chain_counted, mttkrp_chain_counted, FlopCounter};
use qcp::{gram_chain, hadamard, khatri_rao, kronecker, mttkrp_chain, DenseMatrix, FactorMatrix};

/// Explicit `F[0] ⊙ F[1] ⊙ ...` built with the library's pairwise product,
/// so the chain kernels are checked against the definition.
fn explicit_chain(factors: &[FactorMatrix]) -> DenseMatrix {
    let mut acc = factors[0].to_dense();
    for f in &factors[1..] {
        acc = khatri_rao(&acc, &f.to_dense()).unwrap();
    }
    acc
}

fn to_na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn factor_chain() -> impl Strategy<Value = (Vec<FactorMatrix>, Vec<f64>)> {
    (1usize..=10, 1usize..=6).prop_flat_map(|(p, r)| {
        (
            prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 2 * r), p)
                .prop_map(move |fs| fs.into_iter().map(|d| FactorMatrix::from_row_major(r, d).unwrap()).collect()),
            prop::collection::vec(-1.0f64..1.0, 1 << p),
        )
    })
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(1e-300f64, |m, x| m.max(x.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

#[test]
fn small_products_by_hand() {
    assert_eq!(kronecker(&[1.0, 2.0], &[3.0, 4.0]), [3.0, 4.0, 6.0, 8.0]);
    let b = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
    let c = DenseMatrix::from_rows(&[vec![5.0, 6.0], vec![7.0, 8.0]]).unwrap();
    let kr = khatri_rao(&b, &c).unwrap();
    assert_eq!(kr.column(0), [5.0, 7.0, 15.0, 21.0]);
    assert_eq!(kr.column(1), [12.0, 16.0, 24.0, 32.0]);
    assert_eq!(hadamard(&b, &c).unwrap().as_slice(), [5.0, 12.0, 21.0, 32.0]);
}

#[test]
fn mttkrp_flops_match_the_bound() {
    for p in 1..=8 {
        let r = 3;
        let fs: Vec<FactorMatrix> = (0..p).map(|t| FactorMatrix::from_fn(r, |i, k| (t + i + k) as f64)).collect();
        let refs: Vec<&FactorMatrix> = fs.iter().collect();
        let mut c = FlopCounter::new();
        mttkrp_chain_counted(&refs, &vec![1.0; 1 << p], &mut c).unwrap();
        assert_eq!(c.get(), 3 * r as u64 * ((1u64 << p) - 1));
        let mut g = FlopCounter::new();
        gram_chain_counted(&refs, &mut g).unwrap();
        assert!(g.get() > 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn gram_chain_matches_explicit_product((fs, _) in factor_chain()) {
        let refs: Vec<&FactorMatrix> = fs.iter().collect();
        let kr = to_na(&explicit_chain(&fs));
        let oracle = kr.transpose() * &kr;
        let g = gram_chain(&refs).unwrap();
        prop_assert_eq!(g.asymmetry(), 0.0);
        prop_assert!(max_rel(to_na(&g).as_slice(), oracle.as_slice()) <= 1e-12);
    }

    #[test]
    fn mttkrp_matches_explicit_transpose_product((fs, x) in factor_chain()) {
        let refs: Vec<&FactorMatrix> = fs.iter().collect();
        let oracle = explicit_chain(&fs).transpose_mul_vec(&x).unwrap();
        prop_assert!(max_rel(&mttkrp_chain(&refs, &x).unwrap(), &oracle) <= 1e-12);
    }

    /// Contracting one factor at a time through reshapes agrees with the
    /// single Khatri-Rao transpose product.
    #[test]
    fn reshaped_contraction_identity((fs, x) in factor_chain()) {
        let r = fs[0].rank();
        let refs: Vec<&FactorMatrix> = fs.iter().collect();
        let fast = mttkrp_chain(&refs, &x).unwrap();
        for k in 0..r {
            // contract the leading factor's digit, then recurse column-wise
            let mut v = x.clone();
            for f in &fs {
                let half = v.len() / 2;
                v = (0..half).map(|q| f.get(0, k) * v[q] + f.get(1, k) * v[half + q]).collect();
            }
            prop_assert!((v[0] - fast[k]).abs() <= 1e-12 * fast.iter().fold(1e-300f64, |m, y| m.max(y.abs())));
        }
    }

    #[test]
    fn gram_chain_is_positive_semidefinite((fs, _) in factor_chain()) {
        let refs: Vec<&FactorMatrix> = fs.iter().collect();
        let g = to_na(&gram_chain(&refs).unwrap());
        let r = g.nrows();
        let shifted = &g + DMatrix::identity(r, r) * (1e-12 * g.trace() / r as f64);
        prop_assert!(shifted.cholesky().is_some());
    }
}
