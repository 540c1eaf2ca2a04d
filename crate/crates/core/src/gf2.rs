//! Arithmetic over GF(2) and GF(2^c).
//!
//! [`BitMatrix`] is a dense, word-packed 0/1 matrix used for derivation
//! incidence matrices. Rank and dependency extraction are plain Gaussian
//! elimination with XOR row operations.
//!
//! [`BinaryField`] is GF(2^c) for `1 <= c <= 16`, with multiplication through
//! log/antilog tables built once at construction.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

const WORD: usize = 64;

/// A column label of an incidence matrix: `(table index, derived character)`.
pub type CellLabel = (usize, u64);

#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    words: Vec<u64>,
    col_labels: Option<Vec<CellLabel>>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = cols.div_ceil(WORD);
        BitMatrix {
            rows,
            cols,
            stride,
            words: vec![0; rows * stride],
            col_labels: None,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from rows written as strings of `0` and `1`.
    pub fn from_bit_strings<S: AsRef<str>>(rows: &[S]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = Self::zeros(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::InvalidParameter(format!(
                    "row {r} has {} columns, expected {cols}",
                    row.len()
                )));
            }
            for (c, ch) in row.chars().enumerate() {
                match ch {
                    '0' => {}
                    '1' => m.set(r, c, true),
                    _ => {
                        return Err(Error::InvalidParameter(format!(
                            "unexpected character {ch:?} in bit row"
                        )))
                    }
                }
            }
        }
        Ok(m)
    }

    /// Attaches column labels. Labels must be distinct and cover every column.
    pub fn with_col_labels(mut self, labels: Vec<CellLabel>) -> Result<Self> {
        if labels.len() != self.cols {
            return Err(Error::InvalidParameter(format!(
                "{} labels for {} columns",
                labels.len(),
                self.cols
            )));
        }
        let distinct: HashSet<_> = labels.iter().collect();
        if distinct.len() != labels.len() {
            return Err(Error::InvalidParameter(
                "column labels are not distinct".into(),
            ));
        }
        self.col_labels = Some(labels);
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn col_labels(&self) -> Option<&[CellLabel]> {
        self.col_labels.as_deref()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        assert!(row < self.rows && col < self.cols);
        (self.words[row * self.stride + col / WORD] >> (col % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        assert!(row < self.rows && col < self.cols);
        let w = &mut self.words[row * self.stride + col / WORD];
        let mask = 1u64 << (col % WORD);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    /// The packed words of one row; bits past `cols` are always zero.
    pub fn row_words(&self, row: usize) -> &[u64] {
        &self.words[row * self.stride..(row + 1) * self.stride]
    }

    pub fn row_weight(&self, row: usize) -> usize {
        self.row_words(row)
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    pub fn column_weight(&self, col: usize) -> usize {
        (0..self.rows).filter(|&r| self.get(r, col)).count()
    }

    /// XOR of the given rows, as packed words.
    pub fn xor_rows(&self, rows: &[usize]) -> Vec<u64> {
        let mut acc = vec![0u64; self.stride];
        for &r in rows {
            for (a, w) in acc.iter_mut().zip(self.row_words(r)) {
                *a ^= w;
            }
        }
        acc
    }

    pub fn rows_sum_to_zero(&self, rows: &[usize]) -> bool {
        self.xor_rows(rows).iter().all(|&w| w == 0)
    }

    /// Row rank over GF(2).
    pub fn rank(&self) -> usize {
        let mut work = self.words.clone();
        let stride = self.stride;
        let mut rank = 0;
        for col in 0..self.cols {
            let (wi, bit) = (col / WORD, 1u64 << (col % WORD));
            let Some(pivot) = (rank..self.rows).find(|&r| work[r * stride + wi] & bit != 0) else {
                continue;
            };
            if pivot != rank {
                for w in 0..stride {
                    work.swap(pivot * stride + w, rank * stride + w);
                }
            }
            for r in rank + 1..self.rows {
                if work[r * stride + wi] & bit != 0 {
                    for w in wi..stride {
                        work[r * stride + w] ^= work[rank * stride + w];
                    }
                }
            }
            rank += 1;
            if rank == self.rows {
                break;
            }
        }
        rank
    }

    /// A nonempty set of rows whose XOR is zero, or `None` when the matrix has
    /// full row rank. Indices are returned in ascending order.
    pub fn find_dependent_rows(&self) -> Option<Vec<usize>> {
        let combo_stride = self.rows.div_ceil(WORD);
        // Each basis vector is zero at the pivots of all earlier ones.
        let mut basis: Vec<(usize, Vec<u64>, Vec<u64>)> = Vec::new();
        for r in 0..self.rows {
            let mut v = self.row_words(r).to_vec();
            let mut combo = vec![0u64; combo_stride];
            combo[r / WORD] |= 1 << (r % WORD);
            for (pivot, bv, bc) in &basis {
                if v[pivot / WORD] >> (pivot % WORD) & 1 == 1 {
                    v.iter_mut().zip(bv).for_each(|(a, b)| *a ^= b);
                    combo.iter_mut().zip(bc).for_each(|(a, b)| *a ^= b);
                }
            }
            match v.iter().position(|&w| w != 0) {
                None => return Some(bit_indices(&combo)),
                Some(wi) => {
                    let pivot = wi * WORD + v[wi].trailing_zeros() as usize;
                    basis.push((pivot, v, combo));
                }
            }
        }
        None
    }
}

fn bit_indices(words: &[u64]) -> Vec<usize> {
    let mut out = Vec::new();
    for (wi, &w) in words.iter().enumerate() {
        let mut w = w;
        while w != 0 {
            out.push(wi * WORD + w.trailing_zeros() as usize);
            w &= w - 1;
        }
    }
    out
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        if let Some(labels) = &self.col_labels {
            let labels: Vec<String> = labels.iter().map(|(i, a)| format!("({i},{a})")).collect();
            writeln!(f, "  {}", labels.join(" "))?;
        }
        for r in 0..self.rows {
            let row: String = (0..self.cols)
                .map(|c| if self.get(r, c) { '1' } else { '0' })
                .collect();
            writeln!(f, "  {row}")?;
        }
        Ok(())
    }
}

/// Carry-less product of `a` and `b` reduced modulo `modulus`, a polynomial of
/// degree `bits`. This is the slow shift-and-add reference multiplication.
pub fn carryless_mul_mod(a: u32, b: u32, modulus: u32, bits: u32) -> u32 {
    let top = 1u32 << bits;
    let (mut a, mut b, mut acc) = (a, b, 0u32);
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a & top != 0 {
            a ^= modulus;
        }
    }
    acc
}

fn degree(p: u32) -> u32 {
    31 - p.leading_zeros()
}

fn poly_rem(mut a: u32, b: u32) -> u32 {
    let db = degree(b);
    while a != 0 && degree(a) >= db {
        a ^= b << (degree(a) - db);
    }
    a
}

/// Exhaustive divisor check: `poly` has degree `bits` and no factor of degree
/// `1..=bits/2`.
pub fn is_irreducible(poly: u32, bits: u32) -> bool {
    if bits == 0 || bits > 16 || poly >> bits != 1 {
        return false;
    }
    for deg in 1..=bits / 2 {
        for divisor in (1u32 << deg)..(1u32 << (deg + 1)) {
            if poly_rem(poly, divisor) == 0 {
                return false;
            }
        }
    }
    true
}

/// Default modulus for GF(2^bits): the standard choices for 2, 8 and 16 bits,
/// otherwise the numerically smallest irreducible polynomial.
pub fn default_modulus(bits: u32) -> Result<u32> {
    match bits {
        2 => Ok(0b111),
        8 => Ok(0x11b),
        16 => Ok(0x1100b),
        1..=16 => ((1u32 << bits)..(1u32 << (bits + 1)))
            .find(|&p| is_irreducible(p, bits))
            .ok_or(Error::UnsupportedFieldWidth(bits)),
        _ => Err(Error::UnsupportedFieldWidth(bits)),
    }
}

/// GF(2^c) with log/antilog multiplication tables.
#[derive(Clone)]
pub struct BinaryField {
    bits: u32,
    modulus: u32,
    // exp has 2 * (order - 1) entries so log sums never need reducing.
    exp: Vec<u16>,
    log: Vec<u16>,
}

impl BinaryField {
    pub fn new(bits: u32) -> Result<Self> {
        Self::with_modulus(bits, default_modulus(bits)?)
    }

    pub fn with_modulus(bits: u32, modulus: u32) -> Result<Self> {
        if !(1..=16).contains(&bits) {
            return Err(Error::UnsupportedFieldWidth(bits));
        }
        if !is_irreducible(modulus, bits) {
            return Err(Error::NotIrreducible { bits, modulus });
        }
        let order = 1u32 << bits;
        let group = (order - 1) as usize;
        let mut exp = vec![0u16; 2 * group];
        let mut log = vec![0u16; order as usize];
        // The modulus need not be primitive, so search for a generator.
        'gen: for g in 1..order {
            let mut x = 1u32;
            for (i, e) in exp.iter_mut().take(group).enumerate() {
                if i > 0 && x == 1 {
                    continue 'gen;
                }
                *e = x as u16;
                log[x as usize] = i as u16;
                x = carryless_mul_mod(x, g, modulus, bits);
            }
            break;
        }
        for i in group..2 * group {
            exp[i] = exp[i - group];
        }
        Ok(BinaryField {
            bits,
            modulus,
            exp,
            log,
        })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    /// Number of field elements, `2^c`.
    pub fn order(&self) -> u32 {
        1 << self.bits
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        let s = self.log[a as usize] as usize + self.log[b as usize] as usize;
        self.exp[s] as u32
    }

    /// Discrete logarithm of a nonzero element to the table's generator.
    #[inline]
    pub fn log(&self, a: u32) -> Option<u32> {
        (a != 0).then(|| self.log[a as usize] as u32)
    }

    /// Generator raised to `e`, for `e < 2 (order - 1)`.
    #[inline]
    pub fn exp(&self, e: u32) -> u32 {
        self.exp[e as usize] as u32
    }

    pub fn inv(&self, a: u32) -> Option<u32> {
        if a == 0 {
            return None;
        }
        let group = self.order() as usize - 1;
        Some(self.exp[(group - self.log[a as usize] as usize) % group] as u32)
    }

    pub fn pow(&self, a: u32, e: u64) -> u32 {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let group = self.order() as u64 - 1;
        let s = (self.log[a as usize] as u64 * (e % group)) % group;
        self.exp[s as usize] as u32
    }

    /// Row rank of a matrix with entries in this field.
    pub fn matrix_rank(&self, matrix: &[Vec<u32>]) -> usize {
        let mut m: Vec<Vec<u32>> = matrix.to_vec();
        let cols = m.first().map_or(0, Vec::len);
        let mut rank = 0;
        for col in 0..cols {
            let Some(p) = (rank..m.len()).find(|&r| m[r][col] != 0) else {
                continue;
            };
            m.swap(rank, p);
            let inv = self.inv(m[rank][col]).expect("pivot is nonzero");
            let pivot = m[rank].clone();
            for (r, row) in m.iter_mut().enumerate() {
                if r != rank && row[col] != 0 {
                    let factor = self.mul(row[col], inv);
                    for (x, &p) in row.iter_mut().zip(&pivot).skip(col) {
                        *x ^= self.mul(factor, p);
                    }
                }
            }
            rank += 1;
        }
        rank
    }
}

impl fmt::Debug for BinaryField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BinaryField")
            .field("bits", &self.bits)
            .field("modulus", &format_args!("{:#x}", self.modulus))
            .finish()
    }
}

impl PartialEq for BinaryField {
    fn eq(&self, other: &Self) -> bool {
        self.bits == other.bits && self.modulus == other.modulus
    }
}

impl Eq for BinaryField {}

/// The `q x d` matrix with entry `(i, j) = α_j^i`, where `α_j` is the field
/// element encoded by `j`. Row 0 is all ones; column 0 is zero below row 0.
pub fn build_vandermonde(field: &BinaryField, q: usize, d: usize) -> Result<Vec<Vec<u32>>> {
    if d as u64 > field.order() as u64 {
        return Err(Error::InvalidParameter(format!(
            "{d} evaluation points exceed the {} elements of GF(2^{})",
            field.order(),
            field.bits()
        )));
    }
    Ok((0..q)
        .map(|i| (0..d).map(|j| field.pow(j as u32, i as u64)).collect())
        .collect())
}
