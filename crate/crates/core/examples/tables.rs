//! Runs one of the error tables and prints CSV to stdout.
//!
//! cargo run --release --example tables -- 4

use qcp::experiments::{format_error, run_table, write_csv, TableOverrides};

fn main() -> qcp::Result<()> {
    let id: u8 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let rows = run_table(id, &TableOverrides::default(), |row, _| {
        eprintln!("{} r={} M={} error={}", row.function, row.r, row.samples, format_error(row.error));
    })?;
    write_csv(&rows, std::io::stdout().lock()).map_err(|e| qcp::QcpError::InvalidConfig(e.to_string()))?;
    Ok(())
}
