use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Size and search limits shared by every construction in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bounds {
    /// Largest universe any constructed algebra may have.
    pub universe: usize,
    /// Largest number of entries in a single operation table (or function table).
    pub table_entries: usize,
    /// Largest universe for which full congruence lattices are enumerated.
    pub con_universe: usize,
    /// Candidate applications examined by term enumeration and transformer search.
    pub enumeration: u64,
    /// Assignments examined by equation checks and entailment.
    pub assignments: u64,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            universe: 1_000_000,
            table_entries: 1 << 24,
            con_universe: 64,
            enumeration: 50_000_000,
            assignments: 10_000_000,
        }
    }
}

impl Bounds {
    pub(crate) fn check_universe(&self, what: &'static str, size: u128) -> Result<usize> {
        if size > self.universe as u128 {
            return Err(Error::SizeBound {
                what,
                size,
                bound: self.universe as u128,
            });
        }
        Ok(size as usize)
    }

    pub(crate) fn check_table(&self, what: &'static str, entries: u128) -> Result<usize> {
        if entries > self.table_entries as u128 {
            return Err(Error::SizeBound {
                what,
                size: entries,
                bound: self.table_entries as u128,
            });
        }
        Ok(entries as usize)
    }
}

/// `base^exp` without overflow; saturates at `u128::MAX`.
pub(crate) fn checked_pow(base: usize, exp: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = match acc.checked_mul(base as u128) {
            Some(v) => v,
            None => return u128::MAX,
        };
    }
    acc
}
