//! Coordinate-wise trimmed mean.
//!
//! For each coordinate the received values are sorted by `(value, sender)`,
//! the `b` lowest and `b` highest positions are discarded and the rest are
//! averaged. Removal is positional, so duplicates are trimmed one at a time.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::numerics::Vector;

/// The vectors one agent received in one round, its own included.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageSet {
    dim: usize,
    entries: Vec<(usize, Vector)>,
}

impl MessageSet {
    pub fn new(dim: usize) -> Self {
        MessageSet { dim, entries: Vec::new() }
    }

    pub fn with_capacity(dim: usize, capacity: usize) -> Self {
        MessageSet { dim, entries: Vec::with_capacity(capacity) }
    }

    pub fn push(&mut self, sender: usize, value: Vector) -> Result<()> {
        if value.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: value.len() });
        }
        if !value.is_finite() {
            return Err(Error::NonFinite);
        }
        self.entries.push((sender, value));
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(usize, Vector)] {
        &self.entries
    }

    /// `(sender, value)` pairs for one coordinate.
    pub fn coordinate(&self, k: usize) -> Vec<(usize, f64)> {
        self.entries.iter().map(|(s, v)| (*s, v[k])).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrimmedMean {
    pub mean: f64,
    /// Senders whose value survived trimming, in sorted-value order.
    pub surviving: Vec<usize>,
}

fn by_value_then_sender(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))
}

fn check_count(len: usize, b: usize) -> Result<()> {
    let needed = 2 * b + 1;
    if len < needed {
        return Err(Error::TooFewValues { got: len, needed, b });
    }
    Ok(())
}

pub fn trimmed_mean_scalar(values: &[(usize, f64)], b: usize) -> Result<TrimmedMean> {
    check_count(values.len(), b)?;
    let mut sorted = values.to_vec();
    sorted.sort_by(by_value_then_sender);
    let kept = &sorted[b..sorted.len() - b];
    let mean = kept.iter().map(|(_, v)| v).sum::<f64>() / kept.len() as f64;
    Ok(TrimmedMean { mean, surviving: kept.iter().map(|(s, _)| *s).collect() })
}

/// Applies the scalar trimmed mean to every coordinate independently; the
/// surviving senders may differ between coordinates.
pub fn coordinate_trimmed_aggregate(msgs: &MessageSet, b: usize) -> Result<Vector> {
    check_count(msgs.len(), b)?;
    let mut scratch: Vec<(usize, f64)> = Vec::with_capacity(msgs.len());
    let mut out = Vec::with_capacity(msgs.dim);
    for k in 0..msgs.dim {
        scratch.clear();
        scratch.extend(msgs.entries.iter().map(|(s, v)| (*s, v[k])));
        scratch.sort_unstable_by(by_value_then_sender);
        let kept = &scratch[b..scratch.len() - b];
        out.push(kept.iter().map(|(_, v)| v).sum::<f64>() / kept.len() as f64);
    }
    Ok(Vector::from(out))
}

/// Per-coordinate sorted copy of a message set heard by many receivers.
///
/// [`trimmed_aggregate_with_extra`] merges a receiver's private messages
/// into it instead of re-sorting the shared part for every receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedColumns {
    dim: usize,
    len: usize,
    /// Column `k` occupies `[k * len, (k + 1) * len)`.
    cells: Vec<(usize, f64)>,
}

impl SortedColumns {
    pub fn new(msgs: &MessageSet) -> Self {
        let len = msgs.len();
        let mut cells = Vec::with_capacity(len * msgs.dim);
        for k in 0..msgs.dim {
            let start = cells.len();
            cells.extend(msgs.entries.iter().map(|(s, v)| (*s, v[k])));
            cells[start..].sort_unstable_by(by_value_then_sender);
        }
        SortedColumns { dim: msgs.dim, len, cells }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn column(&self, k: usize) -> &[(usize, f64)] {
        &self.cells[k * self.len..(k + 1) * self.len]
    }
}

/// Same result, bit for bit, as [`coordinate_trimmed_aggregate`] on the
/// union of `shared` and `extra`. Senders must be distinct across both.
pub fn trimmed_aggregate_with_extra(shared: &SortedColumns, extra: &[(usize, &Vector)], b: usize) -> Result<Vector> {
    let total = shared.len + extra.len();
    check_count(total, b)?;
    if let Some((_, v)) = extra.iter().find(|(_, v)| v.len() != shared.dim) {
        return Err(Error::DimensionMismatch { expected: shared.dim, actual: v.len() });
    }
    if extra.iter().any(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let (lo, hi) = (b, total - b);
    let mut scratch: Vec<(usize, f64)> = Vec::with_capacity(extra.len());
    let mut out = Vec::with_capacity(shared.dim);
    for k in 0..shared.dim {
        scratch.clear();
        scratch.extend(extra.iter().map(|(s, v)| (*s, v[k])));
        scratch.sort_unstable_by(by_value_then_sender);
        let col = shared.column(k);
        let (mut i, mut j, mut pos) = (0, 0, 0);
        let mut sum = 0.0;
        while pos < hi {
            let take_shared = match (col.get(i), scratch.get(j)) {
                (Some(a), Some(c)) => by_value_then_sender(a, c) != Ordering::Greater,
                (Some(_), None) => true,
                _ => false,
            };
            let value = if take_shared {
                i += 1;
                col[i - 1].1
            } else {
                j += 1;
                scratch[j - 1].1
            };
            if pos >= lo {
                sum += value;
            }
            pos += 1;
        }
        out.push(sum / (hi - lo) as f64);
    }
    Ok(Vector::from(out))
}

/// Can `aggregate` be written as `Σ β_j v_j` over the good values with
/// `β ≥ 0`, `Σβ = 1` and every `β_j ≤ 1/(φ − b)`?
///
/// The extreme points put the full cap on the `φ − b` smallest (or largest)
/// values, so the achievable set is the interval between those two means.
pub fn bounded_weight_feasible(good_values: &[f64], aggregate: f64, phi: usize, b: usize) -> bool {
    let Some((lo, hi)) = bounded_weight_range(good_values, phi, b) else {
        return false;
    };
    let scale = good_values.iter().fold(aggregate.abs(), |m, v| m.max(v.abs())).max(1.0);
    let slack = 1e-9 * scale;
    aggregate >= lo - slack && aggregate <= hi + slack
}

/// The interval `[lo, hi]` of values reachable by capped convex weights.
pub fn bounded_weight_range(good_values: &[f64], phi: usize, b: usize) -> Option<(f64, f64)> {
    if good_values.len() != phi || phi <= b {
        return None;
    }
    let mut sorted = good_values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let take = phi - b;
    let lo = sorted[..take].iter().sum::<f64>() / take as f64;
    let hi = sorted[phi - take..].iter().sum::<f64>() / take as f64;
    Some((lo, hi))
}
