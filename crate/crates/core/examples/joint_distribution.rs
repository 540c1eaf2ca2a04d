//! Exact joint law of hash values by enumerating every table filling,
//! compared with a sampled estimate.
//!
//! cargo run --release --example joint_distribution

use tabhash::independence::{
    exact_joint_distribution, exact_joint_distribution_of, sample_joint_counts,
};
use tabhash::{DerivationSpec, DerivedKey, Key};

fn main() -> anyhow::Result<()> {
    let derived = [
        DerivedKey::from([4, 5, 6]),
        DerivedKey::from([4, 7, 8]),
        DerivedKey::from([5, 7, 9]),
    ];
    let exact = exact_joint_distribution_of(&derived, 1)?;
    println!("three keys, 1-bit output, {} fillings", exact.fillings());
    for (outcome, p) in exact.support() {
        println!("  {outcome:?}  {p}");
    }
    println!("uniform: {}", exact.is_uniform());

    let samples = 200_000;
    let counts = sample_joint_counts(&derived, 1, samples, 1)?;
    let freq: Vec<String> = counts
        .iter()
        .map(|&c| format!("{:.4}", c as f64 / samples as f64))
        .collect();
    println!("sampled: {}", freq.join(" "));

    let rectangle = [[1, 3], [1, 6], [2, 3], [2, 6]].map(Key::from);
    let dist = exact_joint_distribution(&DerivationSpec::identity(2)?, &rectangle, 1)?;
    println!(
        "rectangle under simple tabulation: {} of 16 outcomes possible, XOR always 0: {}",
        dist.support_size(),
        dist.xor_vanishes(&[0, 1, 2, 3])
    );
    Ok(())
}
