//! Decide independence of a key set with the GF(2) rank test.
//!
//! Simple tabulation fails on the four corners of a rectangle; a curve with
//! three derived characters does not.
//!
//! cargo run --example rank_certificate

use tabhash::independence::{incidence_matrix, is_independent_set, is_peelable};
use tabhash::{DerivationSpec, Key};

fn report(name: &str, spec: &DerivationSpec, keys: &[Key]) -> anyhow::Result<()> {
    let m = incidence_matrix(spec, keys)?;
    let v = is_independent_set(spec, keys)?;
    println!(
        "{name}: {} keys, {} cells, rank {}",
        keys.len(),
        v.used_cells,
        v.rank
    );
    println!("{m:?}");
    println!("  peelable: {}", is_peelable(spec, keys)?);
    match v.witness {
        None => println!("  independent"),
        Some(w) => {
            let w: Vec<String> = w.iter().map(Key::to_string).collect();
            println!("  dependent: {}", w.join(" "));
        }
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    let rectangle = [[1, 3], [1, 6], [2, 3], [2, 6]].map(Key::from);
    report(
        "simple tabulation",
        &DerivationSpec::identity(2)?,
        &rectangle,
    )?;
    report("(2,3)-curve", &DerivationSpec::curve(2, 3)?, &rectangle)?;
    Ok(())
}
