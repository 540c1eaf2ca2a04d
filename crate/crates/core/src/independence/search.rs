//! Exhaustive search for key sets whose incidence rows XOR to zero.
//!
//! Subsets are enumerated in lexicographic order of universe index while the
//! XOR of the chosen rows is maintained incrementally. A branch is cut when
//!
//! * some odd cell can no longer be touched by any later key, or
//! * some table has more odd cells than keys left to choose (every key
//!   touches exactly one cell per table).
//!
//! Both cuts are exact, so an empty result is a proof by exhaustion.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::derivation::{DerivationSpec, DerivedKey, Key};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct SearchOptions {
    /// Largest admissible `C(|universe|, k)`.
    pub budget: u128,
    /// Report odd `k` as witness-free without searching. Every table gets one
    /// cell per key, so an odd number of rows can never XOR to zero.
    pub parity_shortcut: bool,
    pub parallel: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            budget: 10_000_000_000,
            parity_shortcut: true,
            parallel: true,
        }
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// All keys of `[n]^q` in lexicographic order.
pub fn enumerate_universe(q: usize, n: u64) -> Vec<Key> {
    let total = (n as u128).pow(q as u32);
    let mut out = Vec::with_capacity(total.min(1 << 24) as usize);
    let mut chars = vec![0i64; q];
    if n == 0 {
        return out;
    }
    loop {
        out.push(Key(chars.clone()));
        let mut pos = q;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            chars[pos] += 1;
            if (chars[pos] as u64) < n {
                break;
            }
            chars[pos] = 0;
        }
    }
}

struct Searcher {
    k: usize,
    n: usize,
    words: usize,
    rows: Vec<u64>,
    // Per table: (word, mask) pieces of its cell range.
    tables: Vec<Vec<(usize, u64)>>,
    // dead[j]: cells no key with index > j touches.
    dead: Vec<u64>,
}

impl Searcher {
    fn new(derived: &[DerivedKey], k: usize) -> Self {
        let d = derived.first().map_or(0, DerivedKey::d);
        let mut cells: Vec<(usize, u64)> = derived.iter().flat_map(|dk| dk.entries()).collect();
        cells.sort_unstable();
        cells.dedup();
        let index: HashMap<(usize, u64), usize> =
            cells.iter().enumerate().map(|(c, &l)| (l, c)).collect();
        let words = cells.len().div_ceil(64).max(1);
        let n = derived.len();

        let mut rows = vec![0u64; n * words];
        let mut last_touch = vec![0usize; cells.len()];
        for (x, dk) in derived.iter().enumerate() {
            for cell in dk.entries() {
                let c = index[&cell];
                rows[x * words + c / 64] |= 1 << (c % 64);
                last_touch[c] = x;
            }
        }

        let mut tables = vec![Vec::new(); d];
        for (c, &(t, _)) in cells.iter().enumerate() {
            let pieces: &mut Vec<(usize, u64)> = &mut tables[t];
            match pieces.last_mut() {
                Some((w, mask)) if *w == c / 64 => *mask |= 1 << (c % 64),
                _ => pieces.push((c / 64, 1 << (c % 64))),
            }
        }

        let mut dead = vec![0u64; n * words];
        for (c, &x) in last_touch.iter().enumerate() {
            for j in x..n {
                dead[j * words + c / 64] |= 1 << (c % 64);
            }
        }

        Searcher {
            k,
            n,
            words,
            rows,
            tables,
            dead,
        }
    }

    fn row(&self, x: usize) -> &[u64] {
        &self.rows[x * self.words..(x + 1) * self.words]
    }

    fn hopeless(&self, parity: &[u64], last: usize, remaining: usize) -> bool {
        let dead = &self.dead[last * self.words..(last + 1) * self.words];
        if parity.iter().zip(dead).any(|(p, d)| p & d != 0) {
            return true;
        }
        self.tables.iter().any(|pieces| {
            pieces
                .iter()
                .map(|&(w, mask)| (parity[w] & mask).count_ones() as usize)
                .sum::<usize>()
                > remaining
        })
    }

    /// Searches subsets whose smallest index is `first`.
    fn search_from(&self, first: usize) -> Option<Vec<usize>> {
        let mut stack = vec![vec![0u64; self.words]; self.k + 1];
        stack[1].copy_from_slice(self.row(first));
        let mut chosen = vec![first];
        if self.k == 1 {
            return stack[1].iter().all(|&w| w == 0).then_some(chosen);
        }
        if self.hopeless(&stack[1], first, self.k - 1) {
            return None;
        }
        self.extend_from(&mut chosen, &mut stack, first + 1)
            .then_some(chosen)
    }

    fn extend_from(&self, chosen: &mut Vec<usize>, stack: &mut [Vec<u64>], from: usize) -> bool {
        let depth = chosen.len();
        let remaining = self.k - depth;
        if from + remaining > self.n {
            return false;
        }
        for x in from..=self.n - remaining {
            let (head, tail) = stack.split_at_mut(depth + 1);
            for ((o, &p), &r) in tail[0].iter_mut().zip(head[depth].iter()).zip(self.row(x)) {
                *o = p ^ r;
            }
            let next = &tail[0];
            if remaining == 1 {
                if next.iter().all(|&w| w == 0) {
                    chosen.push(x);
                    return true;
                }
                continue;
            }
            if self.hopeless(next, x, remaining - 1) {
                continue;
            }
            chosen.push(x);
            if self.extend_from(chosen, stack, x + 1) {
                return true;
            }
            chosen.pop();
        }
        false
    }
}

/// Finds `k` distinct members of `universe` whose incidence rows XOR to zero.
/// Returns their indices (ascending), or `None` if no such subset exists. The
/// lexicographically first witness is returned, also when run in parallel.
pub fn find_bad_subset(
    universe: &[DerivedKey],
    k: usize,
    opts: &SearchOptions,
) -> Result<Option<Vec<usize>>> {
    if k == 0 {
        return Err(Error::InvalidParameter(
            "subset size must be at least 1".into(),
        ));
    }
    let size = binomial(universe.len(), k);
    if size > opts.budget {
        return Err(Error::BudgetExceeded {
            size,
            budget: opts.budget,
        });
    }
    if k > universe.len() || (opts.parity_shortcut && k % 2 == 1) {
        return Ok(None);
    }
    let searcher = Searcher::new(universe, k);
    let firsts = 0..=universe.len() - k;
    let found = if opts.parallel {
        firsts
            .into_par_iter()
            .find_map_first(|x| searcher.search_from(x))
    } else {
        firsts.into_iter().find_map(|x| searcher.search_from(x))
    };
    Ok(found)
}

/// Smallest `k <= k_limit` with a zero-sum subset of that size, with the
/// lexicographically first witness.
pub fn smallest_bad_subset(
    universe: &[DerivedKey],
    k_limit: usize,
    opts: &SearchOptions,
) -> Result<Option<Vec<usize>>> {
    for k in 1..=k_limit {
        if let Some(w) = find_bad_subset(universe, k, opts)? {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

/// A bad arrangement of exactly `k` keys from `[n]^q`, if one exists.
pub fn find_bad_arrangement(
    spec: &DerivationSpec,
    n: u64,
    k: usize,
    opts: &SearchOptions,
) -> Result<Option<Vec<Key>>> {
    let keys = enumerate_universe(spec.q(), n);
    let size = binomial(keys.len(), k);
    if size > opts.budget {
        return Err(Error::BudgetExceeded {
            size,
            budget: opts.budget,
        });
    }
    let derived = keys
        .iter()
        .map(|x| spec.derive(x))
        .collect::<Result<Vec<_>>>()?;
    Ok(find_bad_subset(&derived, k, opts)?
        .map(|idx| idx.into_iter().map(|i| keys[i].clone()).collect()))
}

/// Bounded analogue of `k_max`: the largest `k <= k_limit` such that `[n]^q`
/// holds no bad arrangement of any size `<= k`.
///
/// This certifies independence only for keys drawn from `[n]^q`; a witness
/// refutes `(k + 1)`-wise independence for every universe containing it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KmaxBound {
    pub k_max: usize,
    pub n: u64,
    pub k_limit: usize,
    /// The smallest bad arrangement found, of size `k_max + 1`.
    pub witness: Option<Vec<Key>>,
}

pub fn k_max_bounded(
    spec: &DerivationSpec,
    n: u64,
    k_limit: usize,
    opts: &SearchOptions,
) -> Result<KmaxBound> {
    for k in 1..=k_limit {
        if let Some(witness) = find_bad_arrangement(spec, n, k, opts)? {
            return Ok(KmaxBound {
                k_max: k - 1,
                n,
                k_limit,
                witness: Some(witness),
            });
        }
    }
    Ok(KmaxBound {
        k_max: k_limit,
        n,
        k_limit,
        witness: None,
    })
}

fn cache_label(spec: &DerivationSpec) -> Option<String> {
    match spec {
        DerivationSpec::TzLinear { field, matrix } => {
            // FNV-1a over the matrix entries tells custom matrices apart.
            let mut h: u64 = 0xcbf29ce484222325;
            for v in matrix.iter().flatten() {
                for b in v.to_le_bytes() {
                    h = (h ^ b as u64).wrapping_mul(0x100000001b3);
                }
            }
            Some(format!("tz_linear/c{}/{:016x}", field.bits(), h))
        }
        DerivationSpec::Explicit { .. } => None,
        other => Some(other.variant_name().to_string()),
    }
}

type CacheKey = (String, usize, usize, u64, usize);

/// Text ledger of finished searches, one line per `(variant, q, d, n, k)`:
///
/// ```text
/// curve 2 3 6 6 none
/// curve 2 2 3 4 found 0,1;0,2;1,0;1,1
/// ```
#[derive(Debug, Default)]
pub struct ExhaustionCache {
    path: Option<PathBuf>,
    entries: BTreeMap<CacheKey, Option<Vec<Key>>>,
}

impl ExhaustionCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Loads the ledger at `path`; a missing file is an empty ledger.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut entries = BTreeMap::new();
        if path.exists() {
            for (i, line) in fs::read_to_string(&path)?.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, verdict) = parse_cache_line(line)
                    .ok_or_else(|| Error::parse(i + 1, "malformed cache entry"))?;
                entries.insert(key, verdict);
            }
        }
        Ok(ExhaustionCache {
            path: Some(path),
            entries,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// [`find_bad_arrangement`] with memoization. Witnesses read back from the
    /// ledger are re-checked before being returned.
    pub fn find_bad_arrangement(
        &mut self,
        spec: &DerivationSpec,
        n: u64,
        k: usize,
        opts: &SearchOptions,
    ) -> Result<Option<Vec<Key>>> {
        let Some(label) = cache_label(spec) else {
            return find_bad_arrangement(spec, n, k, opts);
        };
        let key = (label, spec.q(), spec.d(), n, k);
        if let Some(hit) = self.entries.get(&key) {
            let valid = match hit {
                None => true,
                Some(w) => super::incidence_matrix(spec, w)
                    .is_ok_and(|m| m.rows_sum_to_zero(&(0..w.len()).collect::<Vec<_>>())),
            };
            if valid {
                return Ok(hit.clone());
            }
        }
        let verdict = find_bad_arrangement(spec, n, k, opts)?;
        self.entries.insert(key, verdict.clone());
        self.save()?;
        Ok(verdict)
    }

    fn save(&self) -> Result<()> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let mut out = String::from("# variant q d n k verdict\n");
        for ((label, q, d, n, k), verdict) in &self.entries {
            out.push_str(&format!("{label} {q} {d} {n} {k} "));
            match verdict {
                None => out.push_str("none"),
                Some(w) => {
                    let keys: Vec<String> = w
                        .iter()
                        .map(|x| {
                            x.chars()
                                .iter()
                                .map(i64::to_string)
                                .collect::<Vec<_>>()
                                .join(",")
                        })
                        .collect();
                    out.push_str("found ");
                    out.push_str(&keys.join(";"));
                }
            }
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }
}

fn parse_cache_line(line: &str) -> Option<(CacheKey, Option<Vec<Key>>)> {
    let mut it = line.split_whitespace();
    let label = it.next()?.to_string();
    let q = it.next()?.parse().ok()?;
    let d = it.next()?.parse().ok()?;
    let n = it.next()?.parse().ok()?;
    let k = it.next()?.parse().ok()?;
    let verdict = match it.next()? {
        "none" => None,
        "found" => Some(
            it.next()?
                .split(';')
                .map(|key| {
                    key.split(',')
                        .map(|c| c.parse().ok())
                        .collect::<Option<Vec<i64>>>()
                        .map(Key)
                })
                .collect::<Option<Vec<_>>>()?,
        ),
        _ => return None,
    };
    Some(((label, q, d, n, k), verdict))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::independence::incidence_matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn serial() -> SearchOptions {
        SearchOptions {
            parallel: false,
            ..SearchOptions::default()
        }
    }

    /// Plain enumeration of all k-subsets, no pruning.
    fn brute_force(derived: &[DerivedKey], k: usize) -> Option<Vec<usize>> {
        let m = crate::independence::incidence_matrix_of(derived);
        let n = derived.len();
        let mut idx: Vec<usize> = (0..k).collect();
        if k > n {
            return None;
        }
        loop {
            if m.rows_sum_to_zero(&idx) {
                return Some(idx);
            }
            let mut i = k;
            loop {
                if i == 0 {
                    return None;
                }
                i -= 1;
                if idx[i] < n - k + i {
                    idx[i] += 1;
                    for j in i + 1..k {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    #[test]
    fn universe_order() {
        let u = enumerate_universe(2, 2);
        assert_eq!(
            u,
            vec![
                Key::from([0, 0]),
                Key::from([0, 1]),
                Key::from([1, 0]),
                Key::from([1, 1])
            ]
        );
        assert_eq!(enumerate_universe(3, 3).len(), 27);
        assert!(enumerate_universe(2, 0).is_empty());
    }

    #[test]
    fn search_examples() {
        let d1 = DerivationSpec::curve(2, 1).unwrap();
        assert_eq!(
            find_bad_arrangement(&d1, 2, 2, &serial()).unwrap(),
            Some(vec![Key::from([0, 0]), Key::from([0, 1])])
        );
        let d2 = DerivationSpec::curve(2, 2).unwrap();
        assert_eq!(find_bad_arrangement(&d2, 5, 3, &serial()).unwrap(), None);
        let no_shortcut = SearchOptions {
            parity_shortcut: false,
            ..serial()
        };
        assert_eq!(find_bad_arrangement(&d2, 5, 3, &no_shortcut).unwrap(), None);
        let w = find_bad_arrangement(&d2, 3, 4, &serial()).unwrap().unwrap();
        assert_eq!(w.len(), 4);
        let m = incidence_matrix(&d2, &w).unwrap();
        assert!(m.rows_sum_to_zero(&[0, 1, 2, 3]));
    }

    #[test]
    fn parallel_and_serial_agree() {
        let d2 = DerivationSpec::curve(2, 2).unwrap();
        let a = find_bad_arrangement(&d2, 4, 4, &serial()).unwrap();
        let b = find_bad_arrangement(&d2, 4, 4, &SearchOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn budget_is_enforced() {
        let d2 = DerivationSpec::curve(2, 2).unwrap();
        let tight = SearchOptions {
            budget: 100,
            ..serial()
        };
        assert!(matches!(
            find_bad_arrangement(&d2, 5, 4, &tight),
            Err(Error::BudgetExceeded {
                size: 12650,
                budget: 100
            })
        ));
        assert!(find_bad_subset(&[], 0, &serial()).is_err());
    }

    #[test]
    fn pruned_search_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xBAD);
        for _ in 0..300 {
            let n = rng.gen_range(3..11);
            let d = rng.gen_range(1..4);
            let range = rng.gen_range(1..5);
            let mut derived: Vec<DerivedKey> = Vec::new();
            while derived.len() < n {
                let dk = DerivedKey((0..d).map(|_| rng.gen_range(0..range)).collect());
                if !derived.contains(&dk) {
                    derived.push(dk);
                }
                if derived.len() as u64 == range.pow(d as u32) {
                    break;
                }
            }
            let opts = SearchOptions {
                parity_shortcut: false,
                ..serial()
            };
            for k in 1..=derived.len().min(6) {
                assert_eq!(
                    find_bad_subset(&derived, k, &opts).unwrap(),
                    brute_force(&derived, k),
                    "{derived:?} k={k}"
                );
            }
        }
    }

    #[test]
    fn kmax_examples() {
        let d2 = DerivationSpec::curve(2, 2).unwrap();
        let b = k_max_bounded(&d2, 3, 4, &SearchOptions::default()).unwrap();
        assert_eq!(b.k_max, 3);
        assert_eq!(b.witness.as_ref().map(Vec::len), Some(4));
        let d1 = DerivationSpec::curve(2, 1).unwrap();
        assert_eq!(
            k_max_bounded(&d1, 2, 4, &SearchOptions::default())
                .unwrap()
                .k_max,
            1
        );
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.txt");
        let d2 = DerivationSpec::curve(2, 2).unwrap();
        let opts = SearchOptions::default();
        let mut cache = ExhaustionCache::open(&path).unwrap();
        let w = cache.find_bad_arrangement(&d2, 3, 4, &opts).unwrap();
        assert!(cache
            .find_bad_arrangement(&d2, 4, 3, &opts)
            .unwrap()
            .is_none());
        let reopened = ExhaustionCache::open(&path).unwrap();
        assert_eq!(reopened.len(), 2);
        let mut reopened = reopened;
        assert_eq!(reopened.find_bad_arrangement(&d2, 3, 4, &opts).unwrap(), w);

        std::fs::write(&path, "curve 2 2 3\n").unwrap();
        assert!(ExhaustionCache::open(&path).is_err());
    }
}
