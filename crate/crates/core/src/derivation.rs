//! Derivation functions: how a key is turned into the `d` characters that
//! index the lookup tables.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gf2::{build_vandermonde, BinaryField};

/// A key of `q` input characters. Characters are signed so that arrangements
/// over the integers can be represented; derivations reject negatives.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Key(pub Vec<i64>);

impl Key {
    pub fn new(chars: impl Into<Vec<i64>>) -> Self {
        Key(chars.into())
    }

    pub fn chars(&self) -> &[i64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Debug for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

impl<const N: usize> From<[i64; N]> for Key {
    fn from(chars: [i64; N]) -> Self {
        Key(chars.to_vec())
    }
}

/// The derived characters `D_0(x), ..., D_{d-1}(x)`; position `i` is the
/// character used to index table `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DerivedKey(pub Vec<u64>);

impl DerivedKey {
    pub fn d(&self) -> usize {
        self.0.len()
    }

    /// `(table index, derived character)` pairs.
    pub fn entries(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.0.iter().copied().enumerate()
    }
}

impl<const N: usize> From<[u64; N]> for DerivedKey {
    fn from(chars: [u64; N]) -> Self {
        DerivedKey(chars.to_vec())
    }
}

#[derive(Clone, Debug)]
pub enum DerivationSpec {
    /// `D_i(a) = sum_r a_r * i^r` over the integers.
    Curve { q: usize, d: usize },
    /// `x -> xG` over GF(2^c), `G` a `q x d` matrix.
    TzLinear {
        field: Arc<BinaryField>,
        matrix: Vec<Vec<u32>>,
    },
    /// `(a, b) -> (a, b, a + b)`.
    Tz5,
    /// Simple tabulation, `D_i(x) = x_i`.
    Identity { q: usize },
    /// An arbitrary derivation given as a lookup table over a finite universe.
    Explicit {
        q: usize,
        d: usize,
        table: Arc<HashMap<Key, DerivedKey>>,
    },
}

impl DerivationSpec {
    pub fn curve(q: usize, d: usize) -> Result<Self> {
        if q < 2 || d < 1 {
            return Err(Error::InvalidParameter(format!(
                "curve derivation needs q >= 2 and d >= 1 (got q={q}, d={d})"
            )));
        }
        Ok(DerivationSpec::Curve { q, d })
    }

    /// Thorup-Zhang derivation with the Vandermonde matrix of
    /// [`build_vandermonde`] over GF(2^bits).
    pub fn tz_linear(bits: u32, q: usize, d: usize) -> Result<Self> {
        if !matches!(bits, 2 | 8 | 16) {
            return Err(Error::UnsupportedFieldWidth(bits));
        }
        let field = BinaryField::new(bits)?;
        let matrix = build_vandermonde(&field, q, d)?;
        Self::tz_with_matrix(field, matrix)
    }

    pub fn tz_with_matrix(field: BinaryField, matrix: Vec<Vec<u32>>) -> Result<Self> {
        let q = matrix.len();
        let d = matrix.first().map_or(0, Vec::len);
        if q == 0 || d < q || matrix.iter().any(|row| row.len() != d) {
            return Err(Error::InvalidParameter(format!(
                "linear derivation needs a q x d matrix with d >= q >= 1 (got {q} x {d})"
            )));
        }
        if matrix.iter().flatten().any(|&g| g >= field.order()) {
            return Err(Error::InvalidParameter(
                "matrix entry outside the field".into(),
            ));
        }
        Ok(DerivationSpec::TzLinear {
            field: Arc::new(field),
            matrix,
        })
    }

    pub fn tz5() -> Self {
        DerivationSpec::Tz5
    }

    pub fn identity(q: usize) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidParameter(
                "identity derivation needs q >= 1".into(),
            ));
        }
        Ok(DerivationSpec::Identity { q })
    }

    pub fn explicit(
        q: usize,
        entries: impl IntoIterator<Item = (Key, DerivedKey)>,
    ) -> Result<Self> {
        let mut table = HashMap::new();
        let mut d = None;
        for (key, derived) in entries {
            if key.len() != q {
                return Err(Error::KeyLength {
                    expected: q,
                    found: key.len(),
                });
            }
            if *d.get_or_insert(derived.d()) != derived.d() {
                return Err(Error::InvalidParameter(
                    "derived keys differ in length".into(),
                ));
            }
            if table.insert(key.clone(), derived).is_some() {
                return Err(Error::DuplicateKey(key));
            }
        }
        let d = d.unwrap_or(0);
        if d == 0 {
            return Err(Error::InvalidParameter(
                "explicit derivation needs d >= 1".into(),
            ));
        }
        Ok(DerivationSpec::Explicit {
            q,
            d,
            table: Arc::new(table),
        })
    }

    pub fn q(&self) -> usize {
        match self {
            DerivationSpec::Curve { q, .. } => *q,
            DerivationSpec::TzLinear { matrix, .. } => matrix.len(),
            DerivationSpec::Tz5 => 2,
            DerivationSpec::Identity { q } => *q,
            DerivationSpec::Explicit { q, .. } => *q,
        }
    }

    pub fn d(&self) -> usize {
        match self {
            DerivationSpec::Curve { d, .. } => *d,
            DerivationSpec::TzLinear { matrix, .. } => matrix[0].len(),
            DerivationSpec::Tz5 => 3,
            DerivationSpec::Identity { q } => *q,
            DerivationSpec::Explicit { d, .. } => *d,
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            DerivationSpec::Curve { .. } => "curve",
            DerivationSpec::TzLinear { .. } => "tz_linear",
            DerivationSpec::Tz5 => "tz5",
            DerivationSpec::Identity { .. } => "identity",
            DerivationSpec::Explicit { .. } => "explicit",
        }
    }

    /// Derives the key under this spec.
    pub fn derive(&self, key: &Key) -> Result<DerivedKey> {
        if key.len() != self.q() {
            return Err(Error::KeyLength {
                expected: self.q(),
                found: key.len(),
            });
        }
        match self {
            DerivationSpec::Curve { d, .. } => derive_curve(key, *d),
            DerivationSpec::TzLinear { field, matrix } => derive_tz(key, field, matrix),
            DerivationSpec::Tz5 => derive_tz5(key),
            DerivationSpec::Identity { .. } => {
                let chars = key
                    .chars()
                    .iter()
                    .map(|&c| nonneg(c))
                    .collect::<Result<_>>()?;
                Ok(DerivedKey(chars))
            }
            DerivationSpec::Explicit { table, .. } => table
                .get(key)
                .cloned()
                .ok_or_else(|| Error::UnknownKey(key.clone())),
        }
    }

    /// `(n_0, ..., n_{d-1})` with `n_i` one more than the largest `i`-th
    /// derived character over the universe `[n]^q`.
    ///
    /// For the linear variant the bound is exact when `n` is `2^c` or the
    /// universe has at most 2^20 keys; otherwise `2^c` is returned, which is
    /// always sufficient.
    pub fn table_index_bounds(&self, n: u64) -> Result<Vec<u64>> {
        if n == 0 {
            return Ok(vec![0; self.d()]);
        }
        let top = n - 1;
        match self {
            DerivationSpec::Curve { q, d } => (0..*d as u64)
                .map(|i| {
                    let mut power_sum: u64 = 0;
                    let mut p: u64 = 1;
                    for r in 0..*q {
                        if r > 0 {
                            p = p.checked_mul(i).ok_or(Error::Overflow)?;
                        }
                        power_sum = power_sum.checked_add(p).ok_or(Error::Overflow)?;
                    }
                    top.checked_mul(power_sum)
                        .and_then(|v| v.checked_add(1))
                        .ok_or(Error::Overflow)
                })
                .collect(),
            DerivationSpec::Identity { q } => Ok(vec![n; *q]),
            DerivationSpec::Tz5 => Ok(vec![n, n, 2 * top + 1]),
            DerivationSpec::TzLinear { field, matrix } => {
                let order = field.order() as u64;
                if n > order {
                    return Err(Error::CharacterOutOfRange {
                        value: top as i64,
                        bound: order,
                    });
                }
                let q = matrix.len() as u32;
                let d = matrix[0].len();
                if n == order || (n as f64).powi(q as i32) > (1u64 << 20) as f64 {
                    return Ok(vec![order; d]);
                }
                let mut bounds = vec![0u64; d];
                let mut chars = vec![0i64; q as usize];
                loop {
                    let derived = derive_tz(&Key(chars.clone()), field, matrix)?;
                    for (b, v) in bounds.iter_mut().zip(derived.0) {
                        *b = (*b).max(v + 1);
                    }
                    // Odometer over [n]^q.
                    let mut pos = 0;
                    loop {
                        if pos == chars.len() {
                            return Ok(bounds);
                        }
                        chars[pos] += 1;
                        if (chars[pos] as u64) < n {
                            break;
                        }
                        chars[pos] = 0;
                        pos += 1;
                    }
                }
            }
            DerivationSpec::Explicit { table, d, .. } => {
                let mut bounds = vec![0u64; *d];
                for derived in table.values() {
                    for (b, &v) in bounds.iter_mut().zip(&derived.0) {
                        *b = (*b).max(v + 1);
                    }
                }
                Ok(bounds)
            }
        }
    }
}

fn nonneg(c: i64) -> Result<u64> {
    u64::try_from(c).map_err(|_| Error::CharacterOutOfRange {
        value: c,
        bound: u64::MAX,
    })
}

/// `D_i(a) = sum_r a_r * i^r` for `i` in `0..d`, in exact checked arithmetic.
pub fn derive_curve(key: &Key, d: usize) -> Result<DerivedKey> {
    let chars = key
        .chars()
        .iter()
        .map(|&c| nonneg(c).map(u128::from))
        .collect::<Result<Vec<_>>>()?;
    let values = (0..d as u128)
        .map(|i| {
            // Horner from the highest coefficient.
            let mut acc: u128 = 0;
            for &a in chars.iter().rev() {
                acc = acc
                    .checked_mul(i)
                    .and_then(|v| v.checked_add(a))
                    .ok_or(Error::Overflow)?;
            }
            u64::try_from(acc).map_err(|_| Error::Overflow)
        })
        .collect::<Result<_>>()?;
    Ok(DerivedKey(values))
}

/// `z = xG` over the field: entry `j` is the XOR over `i` of `x_i * G[i][j]`.
pub fn derive_tz(key: &Key, field: &BinaryField, matrix: &[Vec<u32>]) -> Result<DerivedKey> {
    let order = field.order() as u64;
    let mut chars = Vec::with_capacity(key.len());
    for &c in key.chars() {
        let v = nonneg(c)?;
        if v >= order {
            return Err(Error::CharacterOutOfRange {
                value: c,
                bound: order,
            });
        }
        chars.push(v as u32);
    }
    let d = matrix.first().map_or(0, Vec::len);
    let values = (0..d)
        .map(|j| {
            chars
                .iter()
                .zip(matrix)
                .fold(0u32, |acc, (&x, row)| acc ^ field.mul(x, row[j])) as u64
        })
        .collect();
    Ok(DerivedKey(values))
}

/// `(a, b) -> (a, b, a + b)` with integer addition.
pub fn derive_tz5(key: &Key) -> Result<DerivedKey> {
    let [a, b] = key.chars() else {
        return Err(Error::KeyLength {
            expected: 2,
            found: key.len(),
        });
    };
    let (a, b) = (nonneg(*a)?, nonneg(*b)?);
    Ok(DerivedKey(vec![
        a,
        b,
        a.checked_add(b).ok_or(Error::Overflow)?,
    ]))
}
