//! Per-sweep cost: full sweeps roughly double with each extra mode, sparse
//! sweeps grow linearly in the number of samples.

use qcp::experiments::scaling_probe;

fn main() -> qcp::Result<()> {
    let rep = scaling_probe(12..=17, 4, 5)?;
    for (i, (l, t)) in rep.full_sweep_seconds.iter().enumerate() {
        let ratio = i.checked_sub(1).map_or(String::new(), |j| format!("  x{:.2}", rep.full_ratios[j]));
        println!("L={l:<2} {:>9.3} ms/sweep{ratio}", t * 1e3);
    }
    for (m, f) in &rep.sparse_flops {
        println!("M={m:<4} {f:>9} flops/sweep");
    }
    println!("M->2M ratios {:?}, rank doubling {:.2}", rep.sparse_ratios, rep.rank_doubling_ratio);
    Ok(())
}
