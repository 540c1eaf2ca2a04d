//! A short run of the timing protocol.
//!
//! cargo run --release --example benchmark [trials] [keys]

use tabhash::bench::{run_benchmark, BenchConfig};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let trials = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5);
    let keys = args
        .next()
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(200_000);
    let cfg = BenchConfig {
        trials,
        keys_per_trial: keys,
        passes: 10,
        machine_label: "example".into(),
        ..BenchConfig::default()
    };
    let report = run_benchmark(&cfg)?;
    print!("{}", report.to_csv());
    println!();
    print!("{}", report.to_markdown());
    Ok(())
}
