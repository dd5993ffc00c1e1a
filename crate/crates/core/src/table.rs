use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Accuracy of a server that trains no model at all: a fair coin on a
/// two-class task.
pub const CHANCE_ACCURACY: f64 = 0.5;

/// Global-model accuracy `U(k|i)` for `0 <= k <= i <= n`: `i` clients
/// admitted, `k` of them poisoned.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyTable {
    n: usize,
    // row-major lower triangle: entry (i, k) at i (i + 1) / 2 + k
    entries: Vec<f64>,
    /// Monte Carlo trials behind each entry (0 when not estimated).
    pub trials: usize,
    pub seed: u64,
}

fn slot(i: usize, k: usize) -> usize {
    i * (i + 1) / 2 + k
}

/// Number of `(i, k)` cells for `n` clients.
pub fn cell_count(n: usize) -> usize {
    (n + 1) * (n + 2) / 2
}

/// All `(i, k)` cells in row order: by `i`, then by `k`.
pub fn cells(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..=n).flat_map(|i| (0..=i).map(move |k| (i, k)))
}

impl AccuracyTable {
    /// Builds a table from entries listed in [`cells`] order.
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != cell_count(n) {
            return Err(Error::Length {
                what: "accuracy table entries",
                expected: cell_count(n),
                actual: entries.len(),
            });
        }
        for &u in &entries {
            if !(0.0..=1.0).contains(&u) {
                return Err(Error::OutOfRange {
                    what: "accuracy",
                    value: u,
                });
            }
        }
        Ok(AccuracyTable {
            n,
            entries,
            trials: 0,
            seed: 0,
        })
    }

    pub fn from_fn<F: FnMut(usize, usize) -> f64>(n: usize, mut f: F) -> Result<Self> {
        AccuracyTable::new(n, cells(n).map(|(i, k)| f(i, k)).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `U(k|i)`. Panics outside `0 <= k <= i <= n`.
    pub fn get(&self, i: usize, k: usize) -> f64 {
        assert!(
            k <= i && i <= self.n,
            "no cell ({i}, {k}) for n = {}",
            self.n
        );
        self.entries[slot(i, k)]
    }

    pub fn try_get(&self, i: usize, k: usize) -> Option<f64> {
        (k <= i && i <= self.n).then(|| self.entries[slot(i, k)])
    }

    /// `((i, k), U(k|i))` in row order.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        cells(self.n).zip(self.entries.iter().cloned())
    }

    pub fn require_n(&self, n: usize) -> Result<()> {
        if self.n == n {
            Ok(())
        } else {
            Err(Error::TableSize {
                expected: n,
                actual: self.n,
            })
        }
    }
}
