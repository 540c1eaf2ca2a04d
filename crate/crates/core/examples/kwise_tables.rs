//! Fill tables with k-wise independent polynomial values and save them.
//!
//! cargo run --example kwise_tables

use std::fs::File;
use std::io::{BufReader, BufWriter};

use tabhash::tabulation::{fill_tables_kwise, Hasher, LookupTables};
use tabhash::HashFamily;

fn main() -> anyhow::Result<()> {
    let family: HashFamily = "curve2_3".parse()?;
    let k = family.guaranteed_k();
    let sizes = family.table_sizes()?;
    println!("{family}: table sizes {sizes:?}, filling with {k}-wise independent values");
    // Polynomial tables are limited to 2^16 cells, so use 8-bit characters here.
    let spec = family.spec().clone();
    let small = spec.table_index_bounds(256)?;
    let tables = fill_tables_kwise(99, &small, 16, k)?;
    println!("tables {:?}, {} bytes", tables.lens(), tables.byte_size());

    let path = std::env::temp_dir().join("tabhash-example.tbh");
    tables.write_to(BufWriter::new(File::create(&path)?))?;
    let loaded = LookupTables::read_from(BufReader::new(File::open(&path)?))?;
    assert_eq!(loaded, tables);

    let hasher = Hasher::new(spec, loaded, 256)?;
    for key in [[0, 0], [1, 2], [255, 255]] {
        println!("{:?} -> {:#06x}", key, hasher.hash(&key.into())?);
    }
    Ok(())
}
