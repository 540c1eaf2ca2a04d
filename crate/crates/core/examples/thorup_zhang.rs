//! The linear-map derivation over GF(2^c): every q x q submatrix of the
//! generator must be invertible, which makes small key sets independent.
//!
//! cargo run --example thorup_zhang

use tabhash::family::thorup_zhang_k;
use tabhash::gf2::{build_vandermonde, BinaryField};
use tabhash::independence::{enumerate_universe, find_bad_arrangement, SearchOptions};
use tabhash::DerivationSpec;

fn main() -> anyhow::Result<()> {
    let field = BinaryField::new(2)?;
    let g = build_vandermonde(&field, 2, 4)?;
    println!(
        "GF(4), modulus {:#b}, generator matrix {g:?}",
        field.modulus()
    );
    let spec = DerivationSpec::tz_with_matrix(field, g)?;
    for x in enumerate_universe(2, 4).iter().take(6) {
        println!("  {x} -> {:?}", spec.derive(x)?.0);
    }

    let opts = SearchOptions {
        parity_shortcut: false,
        ..SearchOptions::default()
    };
    let k = thorup_zhang_k(2, 4);
    println!("guaranteed independence for q=2, d=4: {k}");
    for size in 1..=6 {
        let found = find_bad_arrangement(&spec, 4, size, &opts)?;
        println!(
            "  dependent set of size {size} in GF(4)^2: {}",
            found.is_some()
        );
    }

    let gf256 = BinaryField::new(8)?;
    println!("GF(256): 0x57 * 0x83 = {:#x}", gf256.mul(0x57, 0x83));
    Ok(())
}
