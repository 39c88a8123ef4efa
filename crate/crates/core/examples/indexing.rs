//! Binary folding of a length-2^L vector into an L-way tensor.

use qcp::{linear_to_multi, mode_slice, multi_to_linear, QuantizedVector};

fn main() -> qcp::Result<()> {
    let v = QuantizedVector::new((1..=8).map(f64::from).collect())?;
    println!("order {} vector: {:?}", v.order(), v.values());

    for i in 1..=v.len() {
        let idx = linear_to_multi(i, v.order())?;
        assert_eq!(multi_to_linear(&idx), i);
        println!("  i={i} digits(mode 1..L)={:?}", idx.digits());
    }

    for mode in 1..=v.order() {
        println!(
            "mode {mode}: digit 1 -> {:?}, digit 2 -> {:?}",
            mode_slice(&v, mode, 1)?,
            mode_slice(&v, mode, 2)?
        );
    }
    Ok(())
}
