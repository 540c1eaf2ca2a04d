//! Deciding k-wise independence of a tabulation scheme.
//!
//! A set of keys hashes uniformly and independently under fully random tables
//! exactly when the rows of its derivation incidence matrix are linearly
//! independent over GF(2). This module builds those matrices, runs the rank
//! test, and provides the peeling shortcut, exhaustive searches for dependent
//! key sets, and an exact enumeration oracle for the joint distribution.

mod distribution;
mod search;

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::derivation::{DerivationSpec, DerivedKey, Key};
use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, CellLabel};

pub use distribution::{
    exact_joint_distribution, exact_joint_distribution_of, sample_joint_counts, JointDistribution,
    MAX_ENUMERATION_BITS,
};
pub use search::{
    enumerate_universe, find_bad_arrangement, find_bad_subset, k_max_bounded, smallest_bad_subset,
    ExhaustionCache, KmaxBound, SearchOptions,
};

/// Outcome of the rank test on one key set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndependenceVerdict {
    pub independent: bool,
    /// Keys whose incidence rows XOR to zero; present iff not independent.
    pub witness: Option<Vec<Key>>,
    pub rank: usize,
    /// Number of distinct `(table, character)` cells used by the keys.
    pub used_cells: usize,
}

fn check_distinct(keys: &[Key]) -> Result<()> {
    let mut seen = HashSet::with_capacity(keys.len());
    for key in keys {
        if !seen.insert(key) {
            return Err(Error::DuplicateKey(key.clone()));
        }
    }
    Ok(())
}

pub fn derive_all(spec: &DerivationSpec, keys: &[Key]) -> Result<Vec<DerivedKey>> {
    check_distinct(keys)?;
    keys.iter().map(|k| spec.derive(k)).collect()
}

/// One row per key, one column per distinct `(i, D_i(x))`, columns in
/// lexicographic label order.
pub fn incidence_matrix(spec: &DerivationSpec, keys: &[Key]) -> Result<BitMatrix> {
    Ok(incidence_matrix_of(&derive_all(spec, keys)?))
}

pub fn incidence_matrix_of(derived: &[DerivedKey]) -> BitMatrix {
    let labels: BTreeSet<CellLabel> = derived.iter().flat_map(|dk| dk.entries()).collect();
    let index: HashMap<CellLabel, usize> =
        labels.iter().enumerate().map(|(c, &l)| (l, c)).collect();
    let mut m = BitMatrix::zeros(derived.len(), labels.len());
    for (r, dk) in derived.iter().enumerate() {
        for cell in dk.entries() {
            m.set(r, index[&cell], true);
        }
    }
    m.with_col_labels(labels.into_iter().collect())
        .expect("labels come from a set")
}

pub fn is_independent_set(spec: &DerivationSpec, keys: &[Key]) -> Result<IndependenceVerdict> {
    let m = incidence_matrix(spec, keys)?;
    let rank = m.rank();
    let witness = m.find_dependent_rows().map(|rows| {
        rows.into_iter()
            .map(|r| keys[r].clone())
            .collect::<Vec<_>>()
    });
    Ok(IndependenceVerdict {
        independent: witness.is_none(),
        witness,
        rank,
        used_cells: m.cols(),
    })
}

/// True iff repeatedly removing a key that owns a derived character no other
/// remaining key shares empties the set.
pub fn is_peelable(spec: &DerivationSpec, keys: &[Key]) -> Result<bool> {
    Ok(is_peelable_derived(&derive_all(spec, keys)?))
}

pub fn is_peelable_derived(derived: &[DerivedKey]) -> bool {
    let mut counts: HashMap<CellLabel, usize> = HashMap::new();
    for cell in derived.iter().flat_map(|dk| dk.entries()) {
        *counts.entry(cell).or_default() += 1;
    }
    let mut alive = vec![true; derived.len()];
    let mut left = derived.len();
    while left > 0 {
        let Some(x) = (0..derived.len())
            .find(|&x| alive[x] && derived[x].entries().any(|cell| counts[&cell] == 1))
        else {
            return false;
        };
        alive[x] = false;
        left -= 1;
        for cell in derived[x].entries() {
            *counts.get_mut(&cell).unwrap() -= 1;
        }
    }
    true
}

/// Every column has an even number of ones (equivalently, all rows XOR to zero).
pub fn columns_all_even(m: &BitMatrix) -> bool {
    (0..m.cols()).all(|c| m.column_weight(c).is_multiple_of(2))
}
