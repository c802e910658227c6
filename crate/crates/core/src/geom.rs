//! Points, projective directions, canonical lines, and the counting
//! constants of `F_q^d`.
//!
//! A point packs bijectively into an integer in `[0, q^d)` by mixed-radix
//! base-q encoding, coordinate 0 least significant. A direction is the
//! unique scalar multiple of a nonzero vector whose first nonzero
//! coordinate (the pivot) is 1. A line is a `(dir, base)` pair with
//! `base[pivot] = 0`; for every line of `F_q^d` exactly one such pair
//! exists, so the pair of packed integers is a stable line key.

use crate::gf::{Elem, FieldSpec};
use serde::{Deserialize, Serialize};
use std::sync::{Arc, OnceLock};
use thiserror::Error;

/// Line-enumeration desk cap.
pub const MAX_LINES: u64 = 100_000_000;

/// Dimensions above this are beyond any desk-scale workload here.
pub const MAX_DIM: usize = 16;

pub type PointIdx = u64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeomError {
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("a line requires two distinct points")]
    IdenticalPoints,
    #[error("dimension {0} out of range 1..={MAX_DIM}")]
    BadDimension(usize),
    #[error("point count {0} overflows the packing range")]
    SpaceTooLarge(u64),
    #[error("line count {0} exceeds the enumeration cap {MAX_LINES}")]
    LineCapExceeded(u64),
}

/// Canonical projective direction: `vec[pivot] = 1`, zeros before the pivot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Direction {
    pub vec: Vec<Elem>,
    pub pivot: usize,
}

/// Canonical line key: packed direction vector and packed base point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LineKey {
    pub dir: PointIdx,
    pub base: PointIdx,
}

/// Closed-form counts, each cross-checked against enumeration in tests.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountingConstants {
    pub qbinom: u64,
    pub lines_total: u64,
    pub points_total: u64,
}

struct DirectionData {
    packed: PointIdx,
    vec: Vec<Elem>,
    pivot: usize,
}

/// The ambient space `F_q^d`. Immutable; operations are pure.
pub struct Space {
    field: Arc<FieldSpec>,
    d: usize,
    q: u64,
    points_total: u64,
    qbinom: u64,
    lines_total: u64,
    directions: OnceLock<Vec<DirectionData>>,
}

impl Space {
    pub fn new(field: Arc<FieldSpec>, d: usize) -> Result<Self, GeomError> {
        if !(1..=MAX_DIM).contains(&d) {
            return Err(GeomError::BadDimension(d));
        }
        let q = field.q();
        let mut points_total: u64 = 1;
        for _ in 0..d {
            points_total = points_total
                .checked_mul(q)
                .ok_or(GeomError::SpaceTooLarge(u64::MAX))?;
        }
        let qbinom = (points_total - 1) / (q - 1);
        let lines_total = (points_total / q)
            .checked_mul(qbinom)
            .ok_or(GeomError::SpaceTooLarge(points_total))?;
        Ok(Space {
            field,
            d,
            q,
            points_total,
            qbinom,
            lines_total,
            directions: OnceLock::new(),
        })
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn field_arc(&self) -> Arc<FieldSpec> {
        Arc::clone(&self.field)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn points_total(&self) -> u64 {
        self.points_total
    }

    /// `(q^d - 1)/(q - 1)`: lines through a point, equivalently directions.
    pub fn qbinom(&self) -> u64 {
        self.qbinom
    }

    pub fn lines_total(&self) -> u64 {
        self.lines_total
    }

    pub fn counting_constants(&self) -> CountingConstants {
        CountingConstants {
            qbinom: self.qbinom,
            lines_total: self.lines_total,
            points_total: self.points_total,
        }
    }

    pub fn points(&self) -> impl Iterator<Item = PointIdx> {
        0..self.points_total
    }

    pub fn pack(&self, coords: &[Elem]) -> PointIdx {
        debug_assert_eq!(coords.len(), self.d);
        let mut out = 0;
        for &c in coords.iter().rev() {
            debug_assert!(c < self.q);
            out = out * self.q + c;
        }
        out
    }

    pub fn unpack(&self, idx: PointIdx) -> Vec<Elem> {
        let mut buf = vec![0; self.d];
        self.unpack_into(idx, &mut buf);
        buf
    }

    pub fn unpack_into(&self, mut idx: PointIdx, buf: &mut [Elem]) {
        debug_assert!(idx < self.points_total);
        for c in buf[..self.d].iter_mut() {
            *c = idx % self.q;
            idx /= self.q;
        }
    }

    /// The unique scalar multiple of `v` whose first nonzero coordinate is 1.
    pub fn canonical_direction(&self, v: &[Elem]) -> Result<Direction, GeomError> {
        let pivot = v.iter().position(|&c| c != 0).ok_or(GeomError::ZeroVector)?;
        let scale = self
            .field
            .inv(v[pivot])
            .expect("pivot coordinate is nonzero");
        let vec = v.iter().map(|&c| self.field.mul(c, scale)).collect();
        Ok(Direction { vec, pivot })
    }

    /// Packed canonical direction of `to - from`; the hot path behind
    /// projection counting. `from` and `to` must differ.
    pub fn direction_between(&self, from: PointIdx, to: PointIdx) -> PointIdx {
        debug_assert_ne!(from, to);
        let f = &*self.field;
        let mut a = from;
        let mut b = to;
        let mut diff = [0u64; MAX_DIM];
        let mut pivot = usize::MAX;
        for (i, slot) in diff[..self.d].iter_mut().enumerate() {
            let c = f.sub(b % self.q, a % self.q);
            a /= self.q;
            b /= self.q;
            *slot = c;
            if c != 0 && pivot == usize::MAX {
                pivot = i;
            }
        }
        debug_assert_ne!(pivot, usize::MAX);
        let scale = f.inv(diff[pivot]).expect("pivot coordinate is nonzero");
        let mut out = 0;
        for &c in diff[..self.d].iter().rev() {
            out = out * self.q + f.mul(c, scale);
        }
        out
    }

    /// The canonical line through two distinct points.
    pub fn line_through(&self, p1: PointIdx, p2: PointIdx) -> Result<LineKey, GeomError> {
        if p1 == p2 {
            return Err(GeomError::IdenticalPoints);
        }
        let dir = self.direction_between(p1, p2);
        Ok(self.line_with_direction(p1, dir))
    }

    /// The canonical line through `point` with the given packed canonical
    /// direction: base = point - point[pivot] * dir.
    fn line_with_direction(&self, point: PointIdx, dir: PointIdx) -> LineKey {
        let f = &*self.field;
        let mut dv = [0u64; MAX_DIM];
        self.unpack_into(dir, &mut dv[..self.d]);
        let pivot = dv[..self.d]
            .iter()
            .position(|&c| c != 0)
            .expect("direction is nonzero");
        let mut pv = [0u64; MAX_DIM];
        self.unpack_into(point, &mut pv[..self.d]);
        let t = pv[pivot];
        let mut base = 0;
        for i in (0..self.d).rev() {
            base = base * self.q + f.sub(pv[i], f.mul(t, dv[i]));
        }
        LineKey { dir, base }
    }

    /// The `q` points of a line, in parameter order `base + t * dir`.
    pub fn line_points(&self, line: LineKey) -> Vec<PointIdx> {
        let f = &*self.field;
        let mut dv = [0u64; MAX_DIM];
        let mut bv = [0u64; MAX_DIM];
        self.unpack_into(line.dir, &mut dv[..self.d]);
        self.unpack_into(line.base, &mut bv[..self.d]);
        (0..self.q)
            .map(|t| {
                let mut out = 0;
                for i in (0..self.d).rev() {
                    out = out * self.q + f.add(bv[i], f.mul(t, dv[i]));
                }
                out
            })
            .collect()
    }

    pub fn line_contains(&self, line: LineKey, point: PointIdx) -> bool {
        if point == line.base {
            return true;
        }
        self.direction_between(line.base, point) == line.dir
    }

    /// The pencil of `y`: one canonical line per direction, each through `y`.
    pub fn lines_through(&self, y: PointIdx) -> Vec<LineKey> {
        let mut out = Vec::with_capacity(self.qbinom as usize);
        self.for_lines_through(y, |key| out.push(key));
        out
    }

    /// Visits the pencil of `y` without building a vector.
    pub fn for_lines_through(&self, y: PointIdx, mut visit: impl FnMut(LineKey)) {
        let f = &*self.field;
        let mut pv = [0u64; MAX_DIM];
        self.unpack_into(y, &mut pv[..self.d]);
        for dir in self.directions() {
            let t = pv[dir.pivot];
            let mut base = 0;
            for i in (0..self.d).rev() {
                base = base * self.q + f.sub(pv[i], f.mul(t, dir.vec[i]));
            }
            visit(LineKey {
                dir: dir.packed,
                base,
            });
        }
    }

    /// Every canonical line exactly once: directions in increasing packed
    /// index, bases in increasing packed index.
    pub fn enumerate_lines(&self) -> Result<impl Iterator<Item = LineKey> + '_, GeomError> {
        if self.lines_total > MAX_LINES {
            return Err(GeomError::LineCapExceeded(self.lines_total));
        }
        let bases_per_dir = self.points_total / self.q;
        Ok(self.directions().iter().flat_map(move |dir| {
            let low_stride = self.q.pow(dir.pivot as u32);
            (0..bases_per_dir).map(move |m| {
                // Insert a zero digit at the pivot position; monotone in m.
                let low = m % low_stride;
                let high = m / low_stride;
                LineKey {
                    dir: dir.packed,
                    base: low + high * low_stride * self.q,
                }
            })
        }))
    }

    fn directions(&self) -> &[DirectionData] {
        self.directions.get_or_init(|| {
            let mut dirs = Vec::with_capacity(self.qbinom as usize);
            for pivot in 0..self.d {
                let upper_count = self.q.pow((self.d - 1 - pivot) as u32);
                let pivot_stride = self.q.pow(pivot as u32);
                for upper in 0..upper_count {
                    let packed = pivot_stride + upper * pivot_stride * self.q;
                    let vec = self.unpack(packed);
                    dirs.push(DirectionData { packed, vec, pivot });
                }
            }
            dirs.sort_by_key(|d| d.packed);
            debug_assert_eq!(dirs.len() as u64, self.qbinom);
            dirs
        })
    }

    /// Packed indices of all canonical directions, ascending.
    pub fn direction_indices(&self) -> Vec<PointIdx> {
        self.directions().iter().map(|d| d.packed).collect()
    }
}
