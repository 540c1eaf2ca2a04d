//! Lookup tables and the tabulation hash `h(x) = XOR_i T_i[D_i(x)]`.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::derivation::{DerivationSpec, DerivedKey, Key};
use crate::error::{Error, Result};
use crate::gf2::BinaryField;

pub const MAX_OUTPUT_BITS: u32 = 32;
const TABLE_MAGIC: &[u8; 4] = b"TBH1";

/// `d` tables of `ell`-bit values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LookupTables {
    tables: Vec<Vec<u32>>,
    ell: u32,
}

impl LookupTables {
    pub fn new(tables: Vec<Vec<u32>>, ell: u32) -> Result<Self> {
        check_ell(ell)?;
        let limit = value_mask(ell);
        if tables.iter().flatten().any(|&v| v > limit) {
            return Err(Error::InvalidParameter(format!(
                "table entry exceeds {ell} bits"
            )));
        }
        Ok(LookupTables { tables, ell })
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn d(&self) -> usize {
        self.tables.len()
    }

    pub fn table(&self, i: usize) -> &[u32] {
        &self.tables[i]
    }

    pub fn tables(&self) -> &[Vec<u32>] {
        &self.tables
    }

    pub fn lens(&self) -> Vec<u64> {
        self.tables.iter().map(|t| t.len() as u64).collect()
    }

    pub fn byte_size(&self) -> usize {
        self.tables.iter().map(|t| t.len() * 4).sum()
    }

    /// Writes the `TBH1` format: magic, `d`, `ell` and the `d` table lengths as
    /// little-endian u64, then every entry as a little-endian u32.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(TABLE_MAGIC)?;
        w.write_all(&(self.d() as u64).to_le_bytes())?;
        w.write_all(&(self.ell as u64).to_le_bytes())?;
        for t in &self.tables {
            w.write_all(&(t.len() as u64).to_le_bytes())?;
        }
        for t in &self.tables {
            for v in t {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != TABLE_MAGIC {
            return Err(Error::TableFormat("missing TBH1 magic".into()));
        }
        let read_u64 = |r: &mut R| -> Result<u64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(u64::from_le_bytes(b))
        };
        let d = read_u64(&mut r)?;
        let ell = read_u64(&mut r)?;
        if ell == 0 || ell > MAX_OUTPUT_BITS as u64 || d > 1 << 16 {
            return Err(Error::TableFormat(format!(
                "implausible header d={d} ell={ell}"
            )));
        }
        let lens = (0..d)
            .map(|_| read_u64(&mut r))
            .collect::<Result<Vec<_>>>()?;
        let mut tables = Vec::with_capacity(d as usize);
        for len in lens {
            let mut bytes = vec![0u8; len as usize * 4];
            r.read_exact(&mut bytes)?;
            tables.push(
                bytes
                    .chunks_exact(4)
                    .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            );
        }
        LookupTables::new(tables, ell as u32).map_err(|e| Error::TableFormat(e.to_string()))
    }
}

fn check_ell(ell: u32) -> Result<()> {
    if !(1..=MAX_OUTPUT_BITS).contains(&ell) {
        return Err(Error::InvalidParameter(format!(
            "output width {ell} must be in 1..={MAX_OUTPUT_BITS}"
        )));
    }
    Ok(())
}

fn value_mask(ell: u32) -> u32 {
    if ell >= 32 {
        u32::MAX
    } else {
        (1 << ell) - 1
    }
}

/// The generator for table `index` under `seed`: one ChaCha stream per table.
pub fn table_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Fills every cell with an independent uniform `ell`-bit value.
pub fn fill_tables_random(seed: u64, sizes: &[u64], ell: u32) -> Result<LookupTables> {
    check_ell(ell)?;
    let mask = value_mask(ell);
    let tables = sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let mut rng = table_rng(seed, i as u64);
            (0..n).map(|_| rng.gen::<u32>() & mask).collect()
        })
        .collect();
    Ok(LookupTables { tables, ell })
}

/// Fills table `i` with a uniformly random polynomial of degree `< k` over
/// GF(2^b), `b = max(ell, ceil(log2 n_i))`, evaluated at `0..n_i` and truncated
/// to the low `ell` bits. Cells of one table are then exactly `k`-wise
/// independent and uniform, and tables are independent of each other.
pub fn fill_tables_kwise(seed: u64, sizes: &[u64], ell: u32, k: usize) -> Result<LookupTables> {
    check_ell(ell)?;
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let mut fields: Vec<Option<BinaryField>> = vec![None; 17];
    let mut tables = Vec::with_capacity(sizes.len());
    for (i, &n) in sizes.iter().enumerate() {
        let index_bits = if n <= 1 {
            0
        } else {
            64 - (n - 1).leading_zeros()
        };
        let bits = ell.max(index_bits);
        if bits > 16 {
            return Err(Error::UnsupportedFieldWidth(bits));
        }
        let field = match &mut fields[bits as usize] {
            Some(f) => f,
            slot => slot.insert(BinaryField::new(bits)?),
        };
        let mut rng = table_rng(seed, i as u64);
        let coeffs: Vec<u32> = (0..k).map(|_| rng.gen_range(0..field.order())).collect();
        tables.push(poly_table(field, &coeffs, n, ell));
    }
    Ok(LookupTables { tables, ell })
}

/// Evaluates `coeffs` (lowest degree first) at the field elements `0..n`,
/// keeping the low `ell` bits.
pub fn poly_table(field: &BinaryField, coeffs: &[u32], n: u64, ell: u32) -> Vec<u32> {
    let mask = value_mask(ell);
    (0..n as u32)
        .map(|x| {
            coeffs
                .iter()
                .rev()
                .fold(0u32, |acc, &c| field.mul(acc, x) ^ c)
                & mask
        })
        .collect()
}

/// Observer for table reads.
pub trait LookupProbe {
    fn on_lookup(&mut self, table: usize);
}

impl LookupProbe for () {
    #[inline(always)]
    fn on_lookup(&mut self, _table: usize) {}
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LookupCounter {
    pub lookups: u64,
}

impl LookupProbe for LookupCounter {
    #[inline]
    fn on_lookup(&mut self, _table: usize) {
        self.lookups += 1;
    }
}

/// A tabulation hash function: a derivation plus filled tables.
#[derive(Clone, Debug)]
pub struct Hasher {
    spec: DerivationSpec,
    tables: LookupTables,
}

impl Hasher {
    /// Pairs tables with a derivation, checking that the tables cover every
    /// derived character of the universe `[n]^q`.
    pub fn new(spec: DerivationSpec, tables: LookupTables, universe_bound: u64) -> Result<Self> {
        if tables.d() != spec.d() {
            return Err(Error::InvalidParameter(format!(
                "{} tables for a derivation with d = {}",
                tables.d(),
                spec.d()
            )));
        }
        let bounds = spec.table_index_bounds(universe_bound)?;
        for (i, (&need, have)) in bounds.iter().zip(tables.lens()).enumerate() {
            if have < need {
                return Err(Error::TableTooSmall {
                    table: i,
                    value: need - 1,
                    len: have as usize,
                });
            }
        }
        Ok(Hasher { spec, tables })
    }

    /// Builds a hasher with fully random tables sized for `[n]^q`.
    pub fn random(spec: DerivationSpec, universe_bound: u64, ell: u32, seed: u64) -> Result<Self> {
        let sizes = spec.table_index_bounds(universe_bound)?;
        let tables = fill_tables_random(seed, &sizes, ell)?;
        Ok(Hasher { spec, tables })
    }

    pub fn spec(&self) -> &DerivationSpec {
        &self.spec
    }

    pub fn tables(&self) -> &LookupTables {
        &self.tables
    }

    pub fn hash(&self, key: &Key) -> Result<u32> {
        self.hash_probed(key, &mut ())
    }

    pub fn hash_probed(&self, key: &Key, probe: &mut impl LookupProbe) -> Result<u32> {
        let derived = self.spec.derive(key)?;
        self.hash_derived(&derived, probe)
    }

    pub fn hash_derived(&self, derived: &DerivedKey, probe: &mut impl LookupProbe) -> Result<u32> {
        let mut h = 0u32;
        for (i, a) in derived.entries() {
            let table = self.tables.table(i);
            let v = *table.get(a as usize).ok_or(Error::TableTooSmall {
                table: i,
                value: a,
                len: table.len(),
            })?;
            probe.on_lookup(i);
            h ^= v;
        }
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_fill_is_deterministic() {
        let a = fill_tables_random(42, &[4], 1).unwrap();
        let b = fill_tables_random(42, &[4], 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.table(0).len(), 4);
        assert!(a.table(0).iter().all(|&v| v < 2));
        assert_ne!(
            fill_tables_random(42, &[64], 32).unwrap(),
            fill_tables_random(43, &[64], 32).unwrap()
        );
        assert_eq!(fill_tables_random(1, &[], 8).unwrap().d(), 0);
        assert!(fill_tables_random(1, &[1], 0).is_err());
        assert!(fill_tables_random(1, &[1], 33).is_err());
    }

    #[test]
    fn random_fill_is_balanced() {
        // Mean of 1e5 fair bits: 5 sigma is 0.0079.
        let t = fill_tables_random(9, &[100_000], 1).unwrap();
        let mean = t.table(0).iter().map(|&v| v as f64).sum::<f64>() / 1e5;
        assert!((0.49..=0.51).contains(&mean), "mean {mean}");
    }

    #[test]
    fn tables_are_independent_streams() {
        let t = fill_tables_random(5, &[32, 32], 32).unwrap();
        assert_ne!(t.table(0), t.table(1));
    }

    #[test]
    fn kwise_fill_basics() {
        let a = fill_tables_kwise(3, &[16, 300], 4, 5).unwrap();
        assert_eq!(a, fill_tables_kwise(3, &[16, 300], 4, 5).unwrap());
        assert_eq!(a.lens(), vec![16, 300]);
        assert!(a.tables().iter().flatten().all(|&v| v < 16));
        // Degree-0 polynomials give constant tables.
        let c = fill_tables_kwise(11, &[10, 10], 3, 1).unwrap();
        for t in c.tables() {
            assert!(t.iter().all(|&v| v == t[0]));
        }
        assert!(fill_tables_kwise(1, &[1 << 17], 4, 2).is_err());
        assert!(fill_tables_kwise(1, &[4], 4, 0).is_err());
    }

    #[test]
    fn pairwise_polynomials_are_exactly_uniform() {
        // All 16 degree <= 1 polynomials over GF(4): every pair of values at
        // two distinct points occurs exactly once.
        let f = BinaryField::new(2).unwrap();
        for x in 0..4usize {
            for y in 0..4usize {
                if x == y {
                    continue;
                }
                let mut seen = [[0u32; 4]; 4];
                for c0 in 0..4 {
                    for c1 in 0..4 {
                        let t = poly_table(&f, &[c0, c1], 4, 2);
                        seen[t[x] as usize][t[y] as usize] += 1;
                    }
                }
                assert!(seen.iter().flatten().all(|&c| c == 1));
            }
        }
    }

    #[test]
    fn kwise_cells_are_uniform_over_all_polynomials() {
        // b = 2, k = 3: the 64 polynomials of degree <= 2 hit every triple of
        // values at three distinct points exactly once.
        let f = BinaryField::new(2).unwrap();
        let mut seen = vec![0u32; 64];
        for c in 0..64u32 {
            let t = poly_table(&f, &[c & 3, (c >> 2) & 3, c >> 4], 4, 2);
            seen[(t[0] | t[1] << 2 | t[3] << 4) as usize] += 1;
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn hash_examples() {
        let spec = DerivationSpec::curve(2, 3).unwrap();
        let mut tables = vec![vec![0u32; 4], vec![0u32; 9], vec![0u32; 14]];
        tables[0][3] = 5;
        tables[1][8] = 6;
        tables[2][13] = 3;
        let h = Hasher::new(spec.clone(), LookupTables::new(tables, 3).unwrap(), 4).unwrap();
        assert_eq!(h.hash(&Key::from([3, 5])).unwrap(), 0);

        let zero = fill_tables_random(0, &[4, 9, 14], 8).unwrap();
        let zero =
            LookupTables::new(zero.tables().iter().map(|t| vec![0; t.len()]).collect(), 8).unwrap();
        let h = Hasher::new(spec, zero, 4).unwrap();
        assert_eq!(h.hash(&Key::from([2, 1])).unwrap(), 0);

        let id = DerivationSpec::identity(1).unwrap();
        let h = Hasher::random(id, 16, 16, 1).unwrap();
        for x in 0..16 {
            assert_eq!(
                h.hash(&Key::from([x])).unwrap(),
                h.tables().table(0)[x as usize]
            );
        }
    }

    #[test]
    fn mis_sized_tables_are_reported() {
        let spec = DerivationSpec::curve(2, 2).unwrap();
        let small = fill_tables_random(0, &[4, 4], 8).unwrap();
        assert!(matches!(
            Hasher::new(spec.clone(), small.clone(), 4),
            Err(Error::TableTooSmall { table: 1, .. })
        ));
        let h = Hasher {
            spec,
            tables: small,
        };
        assert!(matches!(
            h.hash(&Key::from([3, 3])),
            Err(Error::TableTooSmall {
                table: 1,
                value: 6,
                ..
            })
        ));
        assert!(Hasher::new(
            DerivationSpec::curve(2, 3).unwrap(),
            fill_tables_random(0, &[4, 7], 8).unwrap(),
            4
        )
        .is_err());
    }

    #[test]
    fn exactly_d_lookups_per_key() {
        let spec = DerivationSpec::curve(2, 6).unwrap();
        let h = Hasher::random(spec, 50, 32, 3).unwrap();
        let mut counter = LookupCounter::default();
        for a in 0..50 {
            h.hash_probed(&Key::from([a, 49 - a]), &mut counter)
                .unwrap();
        }
        assert_eq!(counter.lookups, 50 * 6);
    }

    #[test]
    fn table_file_round_trip() {
        let t = fill_tables_random(8, &[3, 0, 70], 17).unwrap();
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"TBH1");
        assert_eq!(buf.len(), 4 + 8 * 2 + 8 * 3 + 4 * 73);
        assert_eq!(u64::from_le_bytes(buf[4..12].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(buf[12..20].try_into().unwrap()), 17);
        assert_eq!(LookupTables::read_from(&buf[..]).unwrap(), t);

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(
            LookupTables::read_from(&bad[..]),
            Err(Error::TableFormat(_))
        ));
        assert!(LookupTables::read_from(&buf[..buf.len() - 1]).is_err());
    }
}
