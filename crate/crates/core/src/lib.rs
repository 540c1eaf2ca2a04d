//! Tabulation hashing with derived characters.
//!
//! Keys are split into `q` characters, mapped to `d` derived characters, and
//! hashed by XOR-ing one random table entry per derived character. The crate
//! builds such schemes, certifies which key sets they hash independently,
//! searches for dependent key sets, constructs bad arrangements for the
//! polynomial-curve derivation, and benchmarks the resulting hash functions.

pub mod arrangements;
pub mod bench;
pub mod cli;
pub mod derivation;
pub mod error;
pub mod family;
pub mod gf2;
pub mod independence;
pub mod tabulation;

pub use derivation::{DerivationSpec, DerivedKey, Key};
pub use error::{Error, Result};
pub use family::HashFamily;
pub use tabulation::{Hasher, LookupTables};
