//! Named hash families.
//!
//! | id              | derivation                     | input characters |
//! |-----------------|--------------------------------|------------------|
//! | `curve{q}_{d}`  | `(q, d)`-curve                 | `32 / q` bits    |
//! | `tz{q}_{d}`     | linear map over GF(2^(32/q))   | `32 / q` bits    |
//! | `tz{q}_{d}_c{c}`| linear map over GF(2^c)        | `c` bits         |
//! | `tz5`           | `(a, b, a + b)`                | 16 bits          |
//! | `id`, `id{q}`   | simple tabulation              | `32 / q` bits    |
//!
//! The linear families only accept `c` in {2, 8, 16}.

use std::fmt;
use std::str::FromStr;

use crate::derivation::{DerivationSpec, Key};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct HashFamily {
    name: String,
    spec: DerivationSpec,
    char_bits: u32,
}

impl HashFamily {
    pub fn new(name: impl Into<String>, spec: DerivationSpec, char_bits: u32) -> Self {
        HashFamily {
            name: name.into(),
            spec,
            char_bits,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn spec(&self) -> &DerivationSpec {
        &self.spec
    }

    pub fn char_bits(&self) -> u32 {
        self.char_bits
    }

    /// Number of values an input character can take.
    pub fn universe_bound(&self) -> u64 {
        1u64 << self.char_bits
    }

    pub fn lookups(&self) -> usize {
        self.spec.d()
    }

    pub fn table_sizes(&self) -> Result<Vec<u64>> {
        self.spec.table_index_bounds(self.universe_bound())
    }

    /// Splits a 32-bit key into `q` characters, least significant first.
    /// Families whose characters cover fewer than 32 bits ignore the rest.
    pub fn split_u32(&self, x: u32) -> Key {
        let mask = (self.universe_bound() - 1) as u32;
        Key((0..self.spec.q())
            .map(|i| {
                let shift = i as u32 * self.char_bits;
                if shift >= 32 {
                    0
                } else {
                    ((x >> shift) & mask) as i64
                }
            })
            .collect())
    }

    /// The independence degree this family is proven to reach with fully
    /// random (or sufficiently independent) tables.
    pub fn guaranteed_k(&self) -> usize {
        let d = self.spec.d();
        match &self.spec {
            DerivationSpec::Curve { q: 2, d } => 2 * d - 1,
            DerivationSpec::Curve { q, d } => with_odd_step(curve_k(*q, *d)),
            DerivationSpec::TzLinear { matrix, .. } => thorup_zhang_k(matrix.len(), d),
            DerivationSpec::Tz5 => 5,
            DerivationSpec::Identity { .. } => 3,
            DerivationSpec::Explicit { .. } => 0,
        }
    }
}

/// An even degree of independence for a tabulation class carries over to the
/// next odd degree.
fn with_odd_step(k: usize) -> usize {
    if k >= 2 && k.is_multiple_of(2) {
        k + 1
    } else {
        k
    }
}

/// Largest `k` with `d >= (k - 1)(q - 1) + 1`, lifted to `(k - 2)(q - 1) + 1`
/// for odd `k`.
pub fn thorup_zhang_k(q: usize, d: usize) -> usize {
    if d == 0 {
        return 0;
    }
    if q == 1 {
        return usize::MAX;
    }
    let j = (d - 1) / (q - 1);
    if (j + 2) % 2 == 1 {
        j + 2
    } else {
        j + 1
    }
}

/// Largest `k` with `d >= ceil(2(q-1)(k-1) / (2q-1)) * (q-1) + 1`.
pub fn curve_k(q: usize, d: usize) -> usize {
    let needed = |k: usize| (2 * (q - 1) * (k - 1)).div_ceil(2 * q - 1) * (q - 1) + 1;
    if d == 0 {
        return 0;
    }
    let mut k = 1;
    while needed(k + 1) <= d {
        k += 1;
    }
    k
}

fn parse_usize(s: &str, id: &str) -> Result<usize> {
    s.parse().map_err(|_| Error::UnknownFamily(id.to_string()))
}

impl FromStr for HashFamily {
    type Err = Error;

    fn from_str(id: &str) -> Result<Self> {
        let unknown = || Error::UnknownFamily(id.to_string());
        let width = |q: usize| -> Result<u32> {
            if q == 0 || q > 32 {
                Err(unknown())
            } else {
                Ok(32 / q as u32)
            }
        };
        if id == "tz5" {
            return Ok(HashFamily::new(id, DerivationSpec::tz5(), 16));
        }
        if let Some(rest) = id.strip_prefix("id") {
            let q = if rest.is_empty() {
                2
            } else {
                parse_usize(rest, id)?
            };
            return Ok(HashFamily::new(id, DerivationSpec::identity(q)?, width(q)?));
        }
        if let Some(rest) = id.strip_prefix("curve") {
            let (q, d) = rest.split_once('_').ok_or_else(unknown)?;
            let (q, d) = (parse_usize(q, id)?, parse_usize(d, id)?);
            return Ok(HashFamily::new(id, DerivationSpec::curve(q, d)?, width(q)?));
        }
        if let Some(rest) = id.strip_prefix("tz") {
            let mut parts = rest.split('_');
            let q = parse_usize(parts.next().ok_or_else(unknown)?, id)?;
            let d = parse_usize(parts.next().ok_or_else(unknown)?, id)?;
            let bits = match parts.next() {
                None => width(q)?,
                Some(c) => parse_usize(c.strip_prefix('c').ok_or_else(unknown)?, id)? as u32,
            };
            if parts.next().is_some() {
                return Err(unknown());
            }
            return Ok(HashFamily::new(
                id,
                DerivationSpec::tz_linear(bits, q, d)?,
                bits,
            ));
        }
        Err(unknown())
    }
}

impl fmt::Display for HashFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}
