//! Hash 32-bit keys with a few named families and count table reads.
//!
//! cargo run --example hash_keys

use tabhash::tabulation::{fill_tables_random, Hasher, LookupCounter};
use tabhash::HashFamily;

fn main() -> anyhow::Result<()> {
    let inputs = [0u32, 1, 0xdead_beef, 0xffff_ffff];
    for id in ["id", "curve2_4", "tz2_6", "tz4_16", "tz5"] {
        let family: HashFamily = id.parse()?;
        let tables = fill_tables_random(2024, &family.table_sizes()?, 32)?;
        let bytes = tables.byte_size();
        let hasher = Hasher::new(family.spec().clone(), tables, family.universe_bound())?;

        let mut counter = LookupCounter::default();
        let hashes = inputs
            .iter()
            .map(|&x| hasher.hash_probed(&family.split_u32(x), &mut counter))
            .collect::<Result<Vec<_>, _>>()?;
        println!(
            "{id:>9}  k={:<2} d={:<2} tables={:>8}B  reads/key={}",
            family.guaranteed_k(),
            family.lookups(),
            bytes,
            counter.lookups / inputs.len() as u64
        );
        for (x, h) in inputs.iter().zip(hashes) {
            println!("           {x:#010x} -> {h:#010x}");
        }
    }
    Ok(())
}
