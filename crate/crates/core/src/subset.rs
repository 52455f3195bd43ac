use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// A set of distinct variable indices, stored as a bit mask.
///
/// Ordered by size first, then lexicographically on the sorted index lists,
/// so `{0,1} < {0,2} < {1,2} < {0,1,2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Subset(u32);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    /// Builds a subset of `{0, .., n-1}`, rejecting repeats and out-of-range indices.
    pub fn from_indices(indices: &[usize], n: usize) -> Result<Self> {
        let mut mask = 0u32;
        for &i in indices {
            if i >= n {
                return Err(Error::InvalidSubset(format!(
                    "index {i} out of range for dimension {n}"
                )));
            }
            if mask & (1 << i) != 0 {
                return Err(Error::InvalidSubset(format!("index {i} repeated")));
            }
            mask |= 1 << i;
        }
        Ok(Self(mask))
    }

    pub fn from_mask(mask: u32) -> Self {
        Self(mask)
    }

    pub fn full(n: usize) -> Self {
        Self(((1u64 << n) - 1) as u32)
    }

    pub fn mask(self) -> u32 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, i: usize) -> bool {
        i < 32 && self.0 & (1 << i) != 0
    }

    pub fn indices(self) -> impl Iterator<Item = usize> {
        let mask = self.0;
        (0..32).filter(move |&i| mask & (1 << i) != 0)
    }

    /// Complement within `{0, .., n-1}`.
    pub fn complement(self, n: usize) -> Self {
        Self(!self.0 & Self::full(n).0)
    }

    /// Every subset of `{0, .., n-1}` with at least two elements, in canonical order.
    pub fn all_with_min_len(n: usize, min_len: usize) -> Vec<Subset> {
        let mut all: Vec<Subset> = (0..(1u32 << n))
            .map(Subset)
            .filter(|s| s.len() >= min_len)
            .collect();
        all.sort();
        all
    }
}

impl Ord for Subset {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.indices().cmp(other.indices()))
    }
}

impl PartialOrd for Subset {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// 1-based, e.g. `{1,2,3}`.
impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.indices().map(|i| (i + 1).to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}
