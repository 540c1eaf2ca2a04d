//! Build bad (2, d, 2^d)-arrangements by repeated doubling and check them.
//!
//! cargo run --example bad_arrangements

use tabhash::arrangements::{
    construct_bad_arrangement, curve_value, double_arrangement_auto, verify_bad, Arrangement,
};
use tabhash::Key;

fn main() -> anyhow::Result<()> {
    let d3 = construct_bad_arrangement(3)?;
    print!("{d3}");
    for z in 0..3 {
        let values: Vec<i128> = d3
            .keys()
            .iter()
            .map(|k| curve_value(k, z))
            .collect::<Result<_, _>>()?;
        println!("column {z}: {values:?}");
    }

    for d in 1..=10 {
        let arr = construct_bad_arrangement(d)?;
        println!(
            "d={d:>2}: {:>4} keys, characters in 0..={:<5} bad: {}",
            arr.len(),
            arr.max_char().unwrap_or(0),
            verify_bad(&arr)
        );
    }

    // Doubling also works for higher-degree curves.
    let mut arr = Arrangement::new(3, 1, vec![Key::from([0, 0, 0]), Key::from([0, 1, 0])])?;
    while arr.len() < 16 {
        arr = double_arrangement_auto(&arr)?;
        println!(
            "q=3: {} keys bad on columns 0..{}: {}",
            arr.len(),
            arr.d() - 1,
            verify_bad(&arr)
        );
    }

    let text = construct_bad_arrangement(2)?.to_string();
    let back: Arrangement = text.parse()?;
    assert_eq!(back, construct_bad_arrangement(2)?);
    Ok(())
}
