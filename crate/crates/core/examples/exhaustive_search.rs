//! Search small grids for dependent key sets of a given size.
//!
//! cargo run --release --example exhaustive_search

use std::time::Instant;

use tabhash::independence::{find_bad_arrangement, k_max_bounded, ExhaustionCache, SearchOptions};
use tabhash::DerivationSpec;

fn main() -> anyhow::Result<()> {
    let opts = SearchOptions {
        parity_shortcut: false,
        ..SearchOptions::default()
    };
    for (d, n) in [(2, 5), (3, 5), (4, 4)] {
        let spec = DerivationSpec::curve(2, d)?;
        for k in 1..=2 * d {
            let start = Instant::now();
            let found = find_bad_arrangement(&spec, n, k, &opts)?;
            let verdict = match &found {
                None => "none".to_string(),
                Some(keys) => keys
                    .iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(" "),
            };
            println!("d={d} [{n}]^2 k={k}: {verdict} ({:.1?})", start.elapsed());
        }
    }

    let spec = DerivationSpec::curve(2, 2)?;
    let bound = k_max_bounded(&spec, 3, 4, &SearchOptions::default())?;
    println!(
        "bounded k_max for the (2,2)-curve on [3]^2: {}",
        bound.k_max
    );

    // Verdicts can be memoized in a plain text file.
    let dir = std::env::temp_dir().join("tabhash-example-cache.txt");
    let mut cache = ExhaustionCache::open(&dir)?;
    cache.find_bad_arrangement(&spec, 4, 3, &opts)?;
    println!("cache at {} holds {} verdicts", dir.display(), cache.len());
    Ok(())
}
