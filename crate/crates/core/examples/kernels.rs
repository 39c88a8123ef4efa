//! Gram and MTTKRP chains without forming the Khatri-Rao product, checked
//! against the explicit product.

use qcp::multilinear::{mttkrp_chain_counted, FlopCounter};
use qcp::{gram_chain, khatri_rao, random_init, FactorMatrix};

fn main() -> qcp::Result<()> {
    let (p, r) = (12, 4);
    let model = random_init(p, r, 1)?;
    let chain: Vec<&FactorMatrix> = model.factors().iter().collect();
    let x: Vec<f64> = (0..1 << p).map(|i| (i as f64 * 0.01).cos()).collect();

    let g = gram_chain(&chain)?;
    let mut flops = FlopCounter::new();
    let b = mttkrp_chain_counted(&chain, &x, &mut flops)?;

    let mut explicit = chain[0].to_dense();
    for f in &chain[1..] {
        explicit = khatri_rao(&explicit, &f.to_dense())?;
    }
    let g_ref = explicit.gram();
    let b_ref = explicit.transpose_mul_vec(&x)?;

    let dg = g.as_slice().iter().zip(g_ref.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let db = b.iter().zip(&b_ref).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("explicit Khatri-Rao: {} x {}", explicit.rows(), explicit.cols());
    println!("gram difference  {dg:.2e}");
    println!("mttkrp difference {db:.2e}");
    println!("mttkrp flops {} (3 r (2^p - 1) = {})", flops.get(), 3 * r * ((1 << p) - 1));
    Ok(())
}
