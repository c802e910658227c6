//! Radial projection sizes, exceptional sets, and the per-line incidence
//! ledger `(e(l), t(l))` over lines meeting E or T.

use crate::geom::{LineKey, PointIdx, Space};
use num::rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap, HashSet};

/// A set of points of `F_q^d`, stored as packed indices.
///
/// Serializes as a sorted packed-index array.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointSet {
    members: BTreeSet<PointIdx>,
}

impl PointSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> u64 {
        self.members.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, idx: PointIdx) -> bool {
        self.members.contains(&idx)
    }

    pub fn insert(&mut self, idx: PointIdx) -> bool {
        self.members.insert(idx)
    }

    pub fn iter(&self) -> impl Iterator<Item = PointIdx> + '_ {
        self.members.iter().copied()
    }

    pub fn to_sorted_vec(&self) -> Vec<PointIdx> {
        self.members.iter().copied().collect()
    }

    pub fn is_subset(&self, other: &PointSet) -> bool {
        self.members.is_subset(&other.members)
    }

    pub fn intersection_len(&self, other: &PointSet) -> u64 {
        self.members.intersection(&other.members).count() as u64
    }
}

impl FromIterator<PointIdx> for PointSet {
    fn from_iter<I: IntoIterator<Item = PointIdx>>(iter: I) -> Self {
        PointSet {
            members: iter.into_iter().collect(),
        }
    }
}

/// Inclusive or strict comparison of a projection size against a rational
/// threshold. The theorems mix `<= M` and `< M`, so the strictness always
/// travels with the threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Threshold {
    pub value: Ratio<i64>,
    pub strict: bool,
}

impl Threshold {
    pub fn at_most(value: Ratio<i64>) -> Self {
        Threshold {
            value,
            strict: false,
        }
    }

    pub fn less_than(value: Ratio<i64>) -> Self {
        Threshold {
            value,
            strict: true,
        }
    }

    pub fn at_most_int(m: u64) -> Self {
        Self::at_most(Ratio::from_integer(m as i64))
    }

    pub fn less_than_int(m: u64) -> Self {
        Self::less_than(Ratio::from_integer(m as i64))
    }

    pub fn admits(&self, size: u64) -> bool {
        let size = Ratio::from_integer(size as i64);
        if self.strict {
            size < self.value
        } else {
            size <= self.value
        }
    }
}

/// `|pi^y(E)|`: the number of distinct canonical directions from `y` into
/// `E \ {y}`, by direction bucketing.
pub fn projection_size(space: &Space, e_set: &PointSet, y: PointIdx) -> u64 {
    let mut dirs = HashSet::new();
    for x in e_set.iter() {
        if x != y {
            dirs.insert(space.direction_between(y, x));
        }
    }
    dirs.len() as u64
}

/// Independent oracle for [`projection_size`]: materializes the line
/// through `y` and each point of `E` and counts distinct line keys.
pub fn projection_size_oracle(space: &Space, e_set: &PointSet, y: PointIdx) -> u64 {
    let mut lines = HashSet::new();
    for x in e_set.iter() {
        if x != y {
            lines.insert(space.line_through(y, x).expect("points are distinct"));
        }
    }
    lines.len() as u64
}

/// The lines through `y` hit by `E \ {y}`; `lines.len()` is `|pi^y(E)|`.
#[derive(Clone, Debug)]
pub struct ProjectionImage {
    pub center: PointIdx,
    pub lines: HashSet<LineKey>,
}

pub fn projection_image(space: &Space, e_set: &PointSet, y: PointIdx) -> ProjectionImage {
    let mut lines = HashSet::new();
    for x in e_set.iter() {
        if x != y {
            lines.insert(space.line_through(y, x).expect("points are distinct"));
        }
    }
    ProjectionImage { center: y, lines }
}

/// The exceptional set `T`: all centers whose projection of `E` is small.
pub fn exceptional_set(space: &Space, e_set: &PointSet, threshold: Threshold) -> PointSet {
    let centers: Vec<PointIdx> = space.points().collect();
    centers
        .par_iter()
        .filter(|&&y| threshold.admits(projection_size(space, e_set, y)))
        .copied()
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

/// [`exceptional_set`] recomputed through the oracle path; used to confirm
/// flagged instances before they are reported.
pub fn exceptional_set_oracle(space: &Space, e_set: &PointSet, threshold: Threshold) -> PointSet {
    let centers: Vec<PointIdx> = space.points().collect();
    centers
        .par_iter()
        .filter(|&&y| threshold.admits(projection_size_oracle(space, e_set, y)))
        .copied()
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

/// Per-line counts `(e, t)` over lines meeting `E` or `T`. Empty lines are
/// not stored; sums over all of `G` add their analytically known zero (or
/// constant) contribution.
#[derive(Clone, Debug, Default)]
pub struct IncidenceLedger {
    counts: HashMap<LineKey, (u32, u32)>,
}

impl IncidenceLedger {
    pub fn build(space: &Space, e_set: &PointSet, t_set: &PointSet) -> Self {
        let mut counts: HashMap<LineKey, (u32, u32)> = HashMap::new();
        for x in e_set.iter() {
            space.for_lines_through(x, |key| {
                counts.entry(key).or_default().0 += 1;
            });
        }
        for y in t_set.iter() {
            space.for_lines_through(y, |key| {
                counts.entry(key).or_default().1 += 1;
            });
        }
        counts.retain(|_, &mut (e, t)| e > 0 || t > 0);
        IncidenceLedger { counts }
    }

    /// Counts for E alone (t identically zero).
    pub fn of(space: &Space, e_set: &PointSet) -> Self {
        Self::build(space, e_set, &PointSet::new())
    }

    pub fn get(&self, key: &LineKey) -> (u32, u32) {
        self.counts.get(key).copied().unwrap_or((0, 0))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LineKey, u32, u32)> {
        self.counts.iter().map(|(k, &(e, t))| (k, e, t))
    }

    /// Number of stored (non-empty) lines.
    pub fn len(&self) -> u64 {
        self.counts.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Sum of `f(e, t)` over stored lines passing `filter`. Lines with
    /// `e = t = 0` contribute nothing here by construction.
    pub fn sum_where(
        &self,
        filter: impl Fn(u32, u32) -> bool,
        f: impl Fn(u32, u32) -> u128,
    ) -> u128 {
        self.counts
            .values()
            .filter(|&&(e, t)| filter(e, t))
            .map(|&(e, t)| f(e, t))
            .sum()
    }

    pub fn count_where(&self, filter: impl Fn(u32, u32) -> bool) -> u64 {
        self.counts.values().filter(|&&(e, t)| filter(e, t)).count() as u64
    }

    /// `sum e(l) t(l)` over `L`, the lines meeting both E and T.
    pub fn sum_et_over_l(&self) -> u128 {
        self.sum_where(|e, t| e >= 1 && t >= 1, |e, t| e as u128 * t as u128)
    }

    /// `sum e(l)^2` over all of `G` (empty lines contribute zero).
    pub fn sum_e_sq(&self) -> u128 {
        self.sum_where(|_, _| true, |e, _| (e as u128) * (e as u128))
    }

    pub fn sum_t_sq(&self) -> u128 {
        self.sum_where(|_, _| true, |_, t| (t as u128) * (t as u128))
    }

    pub fn sum_e(&self) -> u128 {
        self.sum_where(|_, _| true, |e, _| e as u128)
    }

    pub fn max_e(&self) -> u32 {
        self.counts.values().map(|&(e, _)| e).max().unwrap_or(0)
    }

    /// Lines of `G` with `e = 0` and `t = 0`, recovered from the total.
    pub fn empty_line_count(&self, space: &Space) -> u64 {
        space.lines_total() - self.len()
    }
}

/// Maximum number of points of `E` on any single line.
pub fn max_line_intersection(space: &Space, e_set: &PointSet) -> u32 {
    IncidenceLedger::of(space, e_set).max_e()
}
