//! Key curves and bad arrangements.
//!
//! A key `a_0 ... a_{q-1}` is read as the polynomial curve
//! `z -> sum_i a_i z^i`. A set of keys is *bad* on column `c` when every
//! value at `z = c` is attained by an even number of the curves; a set bad on
//! columns `0..d` is exactly a set whose `(q, d)`-curve incidence rows XOR to
//! zero. Arrangements here live over the integers, so characters may be
//! negative until [`normalize_nonneg`] shifts them back.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::derivation::Key;
use crate::error::{Error, Result};

pub const MAX_CONSTRUCTED_D: usize = 12;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Arrangement {
    q: usize,
    d: usize,
    keys: Vec<Key>,
}

impl Arrangement {
    pub fn new(q: usize, d: usize, keys: Vec<Key>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(keys.len());
        for key in &keys {
            if key.len() != q {
                return Err(Error::KeyLength {
                    expected: q,
                    found: key.len(),
                });
            }
            if !seen.insert(key) {
                return Err(Error::DuplicateKey(key.clone()));
            }
        }
        Ok(Arrangement { q, d, keys })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Number of columns, `0..d`, the arrangement claims to be bad on.
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn keys(&self) -> &[Key] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Largest character over all keys, if any.
    pub fn max_char(&self) -> Option<i64> {
        self.keys
            .iter()
            .flat_map(|k| k.chars().iter().copied())
            .max()
    }

    pub fn min_char(&self) -> Option<i64> {
        self.keys
            .iter()
            .flat_map(|k| k.chars().iter().copied())
            .min()
    }

    pub fn sorted(mut self) -> Self {
        self.keys.sort();
        self
    }
}

/// `sum_i a_i z^i` over the integers.
pub fn curve_value(key: &Key, z: i64) -> Result<i128> {
    key.chars().iter().rev().try_fold(0i128, |acc, &a| {
        acc.checked_mul(z as i128)
            .and_then(|v| v.checked_add(a as i128))
            .ok_or(Error::Overflow)
    })
}

/// First column in `0..d` that is not bad, if any.
pub fn first_good_column(arr: &Arrangement) -> Option<usize> {
    (0..arr.d).find(|&c| !column_is_bad(&arr.keys, c as i64))
}

fn column_is_bad(keys: &[Key], c: i64) -> bool {
    let Ok(mut values) = keys
        .iter()
        .map(|k| curve_value(k, c))
        .collect::<Result<Vec<_>>>()
    else {
        return false;
    };
    values.sort_unstable();
    values.chunk_by(|a, b| a == b).all(|run| run.len() % 2 == 0)
}

/// True iff every column `0..arr.d()` is bad.
pub fn verify_bad(arr: &Arrangement) -> bool {
    first_good_column(arr).is_none()
}

/// Coefficients (lowest degree first) of `scale * prod_{i < q-1} ((d + i) - z)`,
/// which vanishes on columns `d .. d + q - 2`.
fn shift_polynomial(q: usize, d: usize, scale: i64) -> Result<Vec<i64>> {
    let mut coeffs = vec![scale];
    for i in 0..q - 1 {
        let root = (d + i) as i64;
        let mut next = vec![0i64; coeffs.len() + 1];
        for (j, &c) in coeffs.iter().enumerate() {
            next[j] = next[j]
                .checked_add(c.checked_mul(root).ok_or(Error::Overflow)?)
                .ok_or(Error::Overflow)?;
            next[j + 1] = next[j + 1].checked_sub(c).ok_or(Error::Overflow)?;
        }
        coeffs = next;
    }
    Ok(coeffs)
}

/// Doubles a bad arrangement: adds the curves `P + Q` for every curve `P`,
/// where `Q(z) = scale * prod_{i < q-1} ((d + i) - z)`. The result has twice
/// the keys and is bad on `d + q - 1` columns.
pub fn double_arrangement(arr: &Arrangement, scale: i64) -> Result<Arrangement> {
    if arr.q < 1 {
        return Err(Error::InvalidParameter("arrangement needs q >= 1".into()));
    }
    if !verify_bad(arr) {
        return Err(Error::InvalidParameter(format!(
            "input is not bad on columns 0..{}",
            arr.d
        )));
    }
    if scale == 0 {
        return Err(Error::NotDisjoint);
    }
    let shift = shift_polynomial(arr.q, arr.d, scale)?;
    let originals: HashSet<&Key> = arr.keys.iter().collect();
    let mut keys = arr.keys.clone();
    for key in &arr.keys {
        let moved = Key(key
            .chars()
            .iter()
            .zip(&shift)
            .map(|(&a, &s)| a.checked_add(s).ok_or(Error::Overflow))
            .collect::<Result<_>>()?);
        if originals.contains(&moved) {
            return Err(Error::NotDisjoint);
        }
        keys.push(moved);
    }
    let doubled = Arrangement::new(arr.q, arr.d + arr.q - 1, keys)?;
    debug_assert!(verify_bad(&doubled));
    Ok(doubled)
}

/// [`double_arrangement`] with a scale chosen to keep the copies disjoint:
/// starts at one more than the spread of first characters and doubles on
/// collision.
pub fn double_arrangement_auto(arr: &Arrangement) -> Result<Arrangement> {
    let firsts = arr.keys.iter().map(|k| k.chars()[0]);
    let spread = match (firsts.clone().min(), firsts.max()) {
        (Some(lo), Some(hi)) => hi - lo,
        _ => 0,
    };
    let mut scale = spread.checked_add(1).ok_or(Error::Overflow)?;
    loop {
        match double_arrangement(arr, scale) {
            Err(Error::NotDisjoint) => scale = scale.checked_mul(2).ok_or(Error::Overflow)?,
            other => return other,
        }
    }
}

fn shift_second(arr: &Arrangement, delta: i64) -> Result<Arrangement> {
    let keys = arr
        .keys
        .iter()
        .map(|k| {
            let mut chars = k.chars().to_vec();
            chars[1] = chars[1].checked_add(delta).ok_or(Error::Overflow)?;
            Ok(Key(chars))
        })
        .collect::<Result<_>>()?;
    Arrangement::new(arr.q, arr.d, keys)
}

/// Shifts every second character (the slope of a line) by a constant so the
/// smallest is zero. Badness is unaffected.
pub fn normalize_nonneg(arr: &Arrangement) -> Result<Arrangement> {
    if arr.q != 2 {
        return Err(Error::InvalidParameter(
            "normalization is defined for q = 2".into(),
        ));
    }
    let min = arr.keys.iter().map(|k| k.chars()[1]).min().unwrap_or(0);
    if min >= 0 {
        return Ok(arr.clone());
    }
    let out = shift_second(arr, -min)?;
    debug_assert_eq!(verify_bad(arr), verify_bad(&out));
    Ok(out)
}

fn lines(raw: &[[i64; 2]], d: usize) -> Arrangement {
    Arrangement::new(2, d, raw.iter().map(|&k| Key::from(k)).collect()).expect("distinct keys")
}

/// A bad `(2, d, 2^d)`-arrangement with non-negative characters.
///
/// `d <= 3` are fixed base cases; larger `d` double the previous arrangement
/// with `Q(z) = 2^(d'-1) (d' - z)` and then raise every slope by `2^(d'-1)`.
/// For `d >= 3` all characters are at most `2^(d-1) (d-2) + 1`.
pub fn construct_bad_arrangement(d: usize) -> Result<Arrangement> {
    match d {
        0 => Err(Error::InvalidParameter("d must be at least 1".into())),
        1 => Ok(lines(&[[0, 0], [0, 1]], 1)),
        2 => Ok(lines(&[[0, 1], [0, 2], [1, 0], [1, 1]], 2)),
        3 => Ok(lines(
            &[
                [0, 3],
                [0, 4],
                [1, 2],
                [1, 3],
                [4, 1],
                [4, 2],
                [5, 0],
                [5, 1],
            ],
            3,
        )),
        d if d > MAX_CONSTRUCTED_D => Err(Error::InvalidParameter(format!(
            "d = {d} exceeds the supported maximum of {MAX_CONSTRUCTED_D}"
        ))),
        d => {
            let mut arr = construct_bad_arrangement(3)?;
            for step in 3..d {
                let half = 1i64 << (step - 1);
                arr = double_arrangement(&arr, half)?;
                arr = shift_second(&arr, half)?;
            }
            Ok(arr)
        }
    }
}

impl fmt::Display for Arrangement {
    /// `q d k`, then one key per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {} {}", self.q, self.d, self.keys.len())?;
        for key in &self.keys {
            let chars: Vec<String> = key.chars().iter().map(i64::to_string).collect();
            writeln!(f, "{}", chars.join(" "))?;
        }
        Ok(())
    }
}

impl FromStr for Arrangement {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut content = text.lines().enumerate().filter_map(|(i, line)| {
            let line = line.split('#').next().unwrap_or("").trim();
            (!line.is_empty()).then_some((i + 1, line))
        });
        let (line_no, header) = content
            .next()
            .ok_or_else(|| Error::parse(1, "missing header `q d k`"))?;
        let header: Vec<usize> = header
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::parse(line_no, format!("bad header field {t:?}")))
            })
            .collect::<Result<_>>()?;
        let [q, d, k] = header[..] else {
            return Err(Error::parse(line_no, "header must be `q d k`"));
        };
        let mut keys = Vec::with_capacity(k);
        for (line_no, line) in content {
            let chars = line
                .split_whitespace()
                .map(|t| {
                    t.parse()
                        .map_err(|_| Error::parse(line_no, format!("bad character {t:?}")))
                })
                .collect::<Result<Vec<i64>>>()?;
            if chars.len() != q {
                return Err(Error::parse(
                    line_no,
                    format!("expected {q} characters, found {}", chars.len()),
                ));
            }
            keys.push(Key(chars));
        }
        if keys.len() != k {
            return Err(Error::parse(
                line_no,
                format!("header announces {k} keys, found {}", keys.len()),
            ));
        }
        Arrangement::new(q, d, keys)
    }
}
