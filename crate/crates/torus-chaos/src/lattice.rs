//! Centered boxes on the integer lattice `Z^n`.
//!
//! A [`LatticeBox`] is the index set `{-K,...,K}^n`. Dense arrays over a box
//! are stored row-major with the slowest axis first and index `-K` first, so
//! the flat position of a point `k` is `sum_i (k_i + K) * stride_i`.

use crate::error::{Error, Result};

/// Hard cap on dense array sizes; growth past this is reported, never truncated.
pub const MAX_DENSE_POINTS: u128 = 1 << 26;

/// The index set `{-K,...,K}^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeBox {
    dim: usize,
    cutoff: i64,
}

impl LatticeBox {
    pub fn new(dim: usize, cutoff: i64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter {
                name: "dim",
                reason: "must be at least 1".into(),
            });
        }
        if cutoff < 1 {
            return Err(Error::InvalidParameter {
                name: "cutoff",
                reason: format!("must be a positive integer, got {cutoff}"),
            });
        }
        let side = 2u128 * cutoff as u128 + 1;
        let mut len = 1u128;
        for _ in 0..dim {
            len = len.saturating_mul(side);
        }
        if len > MAX_DENSE_POINTS {
            return Err(Error::BudgetExceeded {
                what: "lattice box",
                needed: len,
                limit: MAX_DENSE_POINTS,
            });
        }
        Ok(Self { dim, cutoff })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> i64 {
        self.cutoff
    }

    /// Points per axis, `2K + 1`.
    pub fn side(&self) -> usize {
        (2 * self.cutoff + 1) as usize
    }

    /// Total number of lattice points, `(2K + 1)^n`.
    pub fn len(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, point: &[i64]) -> bool {
        point.len() == self.dim && point.iter().all(|&c| c.abs() <= self.cutoff)
    }

    /// Flat row-major position of `point`, or `None` if outside the box.
    pub fn flat_index(&self, point: &[i64]) -> Option<usize> {
        if !self.contains(point) {
            return None;
        }
        let side = self.side();
        let mut idx = 0usize;
        for &c in point {
            idx = idx * side + (c + self.cutoff) as usize;
        }
        Some(idx)
    }

    /// Lattice point at flat position `idx`.
    pub fn point_at(&self, idx: usize) -> Vec<i64> {
        let mut point = vec![0i64; self.dim];
        self.fill_point(idx, &mut point);
        point
    }

    /// Non-allocating variant of [`point_at`](Self::point_at).
    pub fn fill_point(&self, idx: usize, point: &mut [i64]) {
        debug_assert!(idx < self.len());
        let side = self.side();
        let mut rest = idx;
        for axis in (0..self.dim).rev() {
            point[axis] = (rest % side) as i64 - self.cutoff;
            rest /= side;
        }
    }

    /// Flat position of `-k` given the flat position of `k`.
    ///
    /// Centered row-major storage makes this the reversal `len - 1 - idx`.
    pub fn mirror(&self, idx: usize) -> usize {
        self.len() - 1 - idx
    }

    /// Flat position of the origin.
    pub fn center(&self) -> usize {
        (self.len() - 1) / 2
    }

    /// Iterate all lattice points in flat order.
    pub fn points(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        (0..self.len()).map(move |idx| self.point_at(idx))
    }
}

/// Render a lattice point for CSV/CLI output: coordinates joined by `:`.
pub fn format_point(point: &[i64]) -> String {
    point
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(":")
}

/// Parse a lattice point in the `k1:k2:...` syntax used by the CLI.
pub fn parse_point(text: &str, dim: usize) -> Result<Vec<i64>> {
    let coords: Vec<i64> = text
        .split(':')
        .map(|part| {
            part.trim()
                .parse::<i64>()
                .map_err(|_| Error::InvalidParameter {
                    name: "frequency",
                    reason: format!("`{text}` is not a lattice point"),
                })
        })
        .collect::<Result<_>>()?;
    if coords.len() != dim {
        return Err(Error::DimensionMismatch {
            left: coords.len(),
            right: dim,
        });
    }
    Ok(coords)
}
