//! Exact and sampled joint distributions of `(h(x_0), ..., h(x_{k-1}))`.

use std::collections::{BTreeMap, HashMap};

use num_rational::Ratio;

use crate::derivation::{DerivationSpec, DerivedKey, Key};
use crate::error::{Error, Result};
use crate::gf2::CellLabel;
use crate::tabulation::fill_tables_random;

use super::derive_all;

/// Upper limit on `ell * used_cells` for exhaustive enumeration.
pub const MAX_ENUMERATION_BITS: usize = 24;

/// The law of the hash-value tuple of `k` keys under fully random tables.
/// Outcomes with probability zero are not stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointDistribution {
    k: usize,
    ell: u32,
    total: u64,
    counts: BTreeMap<Vec<u32>, u64>,
}

impl JointDistribution {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    /// Number of table fillings enumerated.
    pub fn fillings(&self) -> u64 {
        self.total
    }

    pub fn probability(&self, outcome: &[u32]) -> Ratio<u64> {
        Ratio::new(self.counts.get(outcome).copied().unwrap_or(0), self.total)
    }

    /// Outcomes with nonzero probability.
    pub fn support(&self) -> impl Iterator<Item = (&[u32], Ratio<u64>)> + '_ {
        self.counts
            .iter()
            .map(|(o, &c)| (o.as_slice(), Ratio::new(c, self.total)))
    }

    pub fn support_size(&self) -> usize {
        self.counts.len()
    }

    /// Every outcome in `[2^ell]^k` has probability exactly `2^(-ell k)`.
    pub fn is_uniform(&self) -> bool {
        let bits = self.ell as usize * self.k;
        if bits >= 64 {
            return false;
        }
        let uniform = Ratio::new(1u64, 1u64 << bits);
        self.counts.len() as u64 == 1u64 << bits && self.support().all(|(_, p)| p == uniform)
    }

    /// The XOR of the hash values of `keys` is zero with probability 1.
    pub fn xor_vanishes(&self, keys: &[usize]) -> bool {
        self.counts
            .keys()
            .all(|o| keys.iter().fold(0u32, |acc, &t| acc ^ o[t]) == 0)
    }
}

pub fn exact_joint_distribution(
    spec: &DerivationSpec,
    keys: &[Key],
    ell: u32,
) -> Result<JointDistribution> {
    exact_joint_distribution_of(&derive_all(spec, keys)?, ell)
}

/// Enumerates all `2^(ell w)` fillings of the `w` used cells in Gray-code
/// order, so each step flips one bit of one cell and updates the packed
/// outcome with a single XOR.
pub fn exact_joint_distribution_of(derived: &[DerivedKey], ell: u32) -> Result<JointDistribution> {
    let k = derived.len();
    if ell == 0 || ell > 32 {
        return Err(Error::InvalidParameter(format!(
            "output width {ell} must be in 1..=32"
        )));
    }
    let (cells, touch) = cell_incidence(derived);
    let bits = ell as usize * cells;
    if bits > MAX_ENUMERATION_BITS {
        return Err(Error::BudgetExceeded {
            size: 1u128 << bits,
            budget: 1u128 << MAX_ENUMERATION_BITS,
        });
    }
    if ell as usize * k > 64 {
        return Err(Error::InvalidParameter(format!(
            "{k} keys of {ell} bits do not pack into one word"
        )));
    }
    // spread[c]: one bit at position t*ell for every key t that reads cell c.
    let spread: Vec<u64> = touch
        .iter()
        .map(|keys| {
            keys.iter()
                .fold(0u64, |acc, &t| acc | 1 << (t * ell as usize))
        })
        .collect();

    let total = 1u64 << bits;
    let mut packed_counts: HashMap<u64, u64> = HashMap::new();
    let mut dense = (ell as usize * k <= 20).then(|| vec![0u64; 1 << (ell as usize * k)]);
    let mut outcome = 0u64;
    let mut record = |o: u64| match &mut dense {
        Some(v) => v[o as usize] += 1,
        None => *packed_counts.entry(o).or_default() += 1,
    };
    record(outcome);
    for step in 1..total {
        let bit = step.trailing_zeros() as usize;
        let (cell, shift) = (bit / ell as usize, bit % ell as usize);
        outcome ^= spread[cell] << shift;
        record(outcome);
    }
    if let Some(v) = dense {
        packed_counts = v
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .map(|(o, c)| (o as u64, c))
            .collect();
    }
    let mask = if ell == 32 {
        u32::MAX as u64
    } else {
        (1u64 << ell) - 1
    };
    let counts = packed_counts
        .into_iter()
        .map(|(o, c)| {
            let tuple = (0..k)
                .map(|t| ((o >> (t * ell as usize)) & mask) as u32)
                .collect();
            (tuple, c)
        })
        .collect();
    Ok(JointDistribution {
        k,
        ell,
        total,
        counts,
    })
}

/// Distinct cells, and for each the keys that read it.
fn cell_incidence(derived: &[DerivedKey]) -> (usize, Vec<Vec<usize>>) {
    let mut index: BTreeMap<CellLabel, Vec<usize>> = BTreeMap::new();
    for (t, dk) in derived.iter().enumerate() {
        for cell in dk.entries() {
            index.entry(cell).or_default().push(t);
        }
    }
    (index.len(), index.into_values().collect())
}

/// Monte Carlo counterpart: hashes the keys under `samples` independent
/// fillings from [`fill_tables_random`] and counts each outcome tuple, packed
/// as `sum_t y_t << (t * ell)`.
pub fn sample_joint_counts(
    derived: &[DerivedKey],
    ell: u32,
    samples: u64,
    seed: u64,
) -> Result<Vec<u64>> {
    let k = derived.len();
    let out_bits = ell as usize * k;
    if out_bits > 20 {
        return Err(Error::InvalidParameter(
            "too many outcome bits to tabulate".into(),
        ));
    }
    let d = derived.first().map_or(0, DerivedKey::d);
    let sizes: Vec<u64> = (0..d)
        .map(|i| derived.iter().map(|dk| dk.0[i] + 1).max().unwrap_or(0))
        .collect();
    let mut counts = vec![0u64; 1 << out_bits];
    for s in 0..samples {
        let tables = fill_tables_random(
            seed.wrapping_add(s.wrapping_mul(0x9e3779b97f4a7c15)),
            &sizes,
            ell,
        )?;
        let mut packed = 0usize;
        for (t, dk) in derived.iter().enumerate() {
            let h = dk
                .entries()
                .fold(0u32, |acc, (i, a)| acc ^ tables.table(i)[a as usize]);
            packed |= (h as usize) << (t * ell as usize);
        }
        counts[packed] += 1;
    }
    Ok(counts)
}
