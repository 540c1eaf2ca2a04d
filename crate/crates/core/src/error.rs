use thiserror::Error;

use crate::derivation::Key;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported field width {0} (expected 1..=16)")]
    UnsupportedFieldWidth(u32),

    #[error("polynomial {modulus:#x} is not an irreducible polynomial of degree {bits}")]
    NotIrreducible { bits: u32, modulus: u32 },

    #[error("invalid parameters: {0}")]
    InvalidParameter(String),

    #[error("key has {found} characters, expected {expected}")]
    KeyLength { expected: usize, found: usize },

    #[error("input character {value} out of range (must be in 0..{bound})")]
    CharacterOutOfRange { value: i64, bound: u64 },

    #[error("integer overflow while evaluating a derived character")]
    Overflow,

    #[error("derived character {value} does not fit table {table} of length {len}")]
    TableTooSmall {
        table: usize,
        value: u64,
        len: usize,
    },

    #[error("duplicate key {0}")]
    DuplicateKey(Key),

    #[error("key {0} is not covered by the explicit derivation table")]
    UnknownKey(Key),

    #[error("search space of {size} candidates exceeds the budget of {budget}")]
    BudgetExceeded { size: u128, budget: u128 },

    #[error("doubled curves intersect the original arrangement; use a larger shift scale")]
    NotDisjoint,

    #[error("unknown hash family `{0}`")]
    UnknownFamily(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("bad table file: {0}")]
    TableFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
