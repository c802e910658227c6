//! Generators for the point-set families used as examples, sharpness
//! witnesses, and sweep fodder.

use crate::geom::{GeomError, LineKey, PointIdx, Space};
use crate::gf::{Elem, FieldError, FieldSpec};
use crate::radial::{max_line_intersection, PointSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

const MAX_REJECTIONS: u32 = 10_000;

#[derive(Debug, Error)]
pub enum ConstructionError {
    #[error("subspace dimension {k} out of range 0..={d}")]
    BadSubspaceDim { k: usize, d: usize },
    #[error("pencil size {m} out of range 1..={qbinom}")]
    BadPencilSize { m: u64, qbinom: u64 },
    #[error("requested {n} points but the space has only {total}")]
    TooManyPoints { n: u64, total: u64 },
    #[error("collinearity cap {cap} infeasible for {n} points after {MAX_REJECTIONS} rejections")]
    InfeasibleCap { cap: u32, n: u64 },
    #[error("product factors must be nonempty")]
    EmptyFactor,
    #[error("product sets require dimension 2, got {0}")]
    NotAPlane(usize),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// Catalog entry for a generated family; the CLI config speaks this type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilySpec {
    Subspace {
        k: usize,
        #[serde(default)]
        shift: PointIdx,
    },
    Subplane {
        p: u64,
    },
    Collinear {
        n: u64,
    },
    ConcurrentLines {
        m: u64,
        #[serde(default)]
        apex: PointIdx,
        #[serde(default = "default_true")]
        include_apex: bool,
    },
    Random {
        n: u64,
        seed: u64,
        #[serde(default)]
        max_collinear: Option<u32>,
    },
    Product {
        a: Vec<Elem>,
        b: Vec<Elem>,
    },
}

fn default_true() -> bool {
    true
}

impl FamilySpec {
    pub fn label(&self) -> String {
        match self {
            FamilySpec::Subspace { k, .. } => format!("subspace(k={k})"),
            FamilySpec::Subplane { p } => format!("subplane(p={p})"),
            FamilySpec::Collinear { n } => format!("collinear(n={n})"),
            FamilySpec::ConcurrentLines { m, .. } => format!("concurrent_lines(m={m})"),
            FamilySpec::Random {
                n, max_collinear, ..
            } => match max_collinear {
                Some(cap) => format!("random(n={n},cap={cap})"),
                None => format!("random(n={n})"),
            },
            FamilySpec::Product { a, b } => format!("product({}x{})", a.len(), b.len()),
        }
    }

    /// Generates the family in `space`. `Subplane` ignores `space`'s field
    /// and builds its own; use [`subfield_subplane`] directly for that.
    pub fn generate(&self, space: &Space) -> Result<PointSet, ConstructionError> {
        match self {
            FamilySpec::Subspace { k, shift } => affine_subspace_set(space, *k, *shift),
            FamilySpec::Subplane { p } => {
                let (_, set) = subfield_subplane(*p)?;
                Ok(set)
            }
            FamilySpec::Collinear { n } => collinear_set(space, *n),
            FamilySpec::ConcurrentLines {
                m,
                apex,
                include_apex,
            } => concurrent_lines_set(space, *m, *apex, *include_apex),
            FamilySpec::Random {
                n,
                seed,
                max_collinear,
            } => random_set(space, *n, *seed, *max_collinear),
            FamilySpec::Product { a, b } => product_set(space, a, b),
        }
    }
}

/// The `q^k` points of the coordinate subspace spanned by the first `k`
/// axes, translated by `shift`.
pub fn affine_subspace_set(
    space: &Space,
    k: usize,
    shift: PointIdx,
) -> Result<PointSet, ConstructionError> {
    if k > space.d() {
        return Err(ConstructionError::BadSubspaceDim { k, d: space.d() });
    }
    let f = space.field();
    let shift_coords = space.unpack(shift);
    let q = space.q();
    let count = q.pow(k as u32);
    let mut out = PointSet::new();
    let mut coords = vec![0u64; space.d()];
    for m in 0..count {
        let mut rest = m;
        for i in 0..space.d() {
            let free = if i < k { rest % q } else { 0 };
            if i < k {
                rest /= q;
            }
            coords[i] = f.add(free, shift_coords[i]);
        }
        out.insert(space.pack(&coords));
    }
    Ok(out)
}

/// First `n` points of the coordinate axis: `(t, 0, ..., 0)` for `t < n`.
pub fn collinear_set(space: &Space, n: u64) -> Result<PointSet, ConstructionError> {
    if n > space.q() {
        return Err(ConstructionError::TooManyPoints {
            n,
            total: space.q(),
        });
    }
    let mut coords = vec![0u64; space.d()];
    Ok((0..n)
        .map(|t| {
            coords[0] = t;
            space.pack(&coords)
        })
        .collect())
}

/// Sharpness witness for the projection bounds: the subplane of `F_{p^2}^2` whose
/// coordinates lie in the prime subfield. Every internal center sees
/// exactly `p + 1` directions.
pub fn subfield_subplane(p: u64) -> Result<(Space, PointSet), ConstructionError> {
    let field = Arc::new(FieldSpec::new(p, 2)?);
    let space = Space::new(field, 2)?;
    let sub = space.field().subfield_elements();
    let mut set = PointSet::new();
    for &a in &sub {
        for &b in &sub {
            set.insert(space.pack(&[a, b]));
        }
    }
    Ok((space, set))
}

/// Union of the first `m` canonical lines through `apex`, optionally
/// without the apex itself.
pub fn concurrent_lines_set(
    space: &Space,
    m: u64,
    apex: PointIdx,
    include_apex: bool,
) -> Result<PointSet, ConstructionError> {
    if m < 1 || m > space.qbinom() {
        return Err(ConstructionError::BadPencilSize {
            m,
            qbinom: space.qbinom(),
        });
    }
    let mut out = PointSet::new();
    for line in space.lines_through(apex).into_iter().take(m as usize) {
        for pt in space.line_points(line) {
            out.insert(pt);
        }
    }
    if !include_apex {
        let mut trimmed = PointSet::new();
        for pt in out.iter() {
            if pt != apex {
                trimmed.insert(pt);
            }
        }
        out = trimmed;
    }
    Ok(out)
}

/// Uniform `n`-point set, rejection-resampled until no line carries more
/// than `max_collinear` points when a cap is given. Deterministic for a
/// fixed seed.
pub fn random_set(
    space: &Space,
    n: u64,
    seed: u64,
    max_collinear: Option<u32>,
) -> Result<PointSet, ConstructionError> {
    let total = space.points_total();
    if n > total {
        return Err(ConstructionError::TooManyPoints { n, total });
    }
    if let Some(cap) = max_collinear {
        if (cap as u64).saturating_mul(space.lines_total()) < n {
            return Err(ConstructionError::InfeasibleCap { cap, n });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match max_collinear {
        None => Ok(sample_distinct(&mut rng, n, total)),
        Some(cap) => {
            // Points are drawn one at a time and rejected individually when
            // they would push a line over the cap; a stalled draw restarts
            // the whole set. Whole-set resampling has a vanishing success
            // rate already at cap 3 in F_7^2.
            let set = sample_capped(&mut rng, space, n, cap)
                .ok_or(ConstructionError::InfeasibleCap { cap, n })?;
            debug_assert!(n < 2 || max_line_intersection(space, &set) <= cap);
            Ok(set)
        }
    }
}

fn sample_distinct(rng: &mut ChaCha8Rng, n: u64, total: u64) -> PointSet {
    if n == total {
        return (0..total).collect();
    }
    let mut set = PointSet::new();
    while set.len() < n {
        set.insert(rng.gen_range(0..total));
    }
    set
}

fn sample_capped(rng: &mut ChaCha8Rng, space: &Space, n: u64, cap: u32) -> Option<PointSet> {
    let total = space.points_total();
    const STALL_LIMIT: u32 = 1_000;
    for _restart in 0..MAX_REJECTIONS / STALL_LIMIT {
        let mut set = PointSet::new();
        let mut line_counts: std::collections::HashMap<LineKey, u32> =
            std::collections::HashMap::new();
        let mut stalled = 0;
        while set.len() < n && stalled < STALL_LIMIT {
            let cand = rng.gen_range(0..total);
            if set.contains(cand) {
                stalled += 1;
                continue;
            }
            let mut fits = true;
            space.for_lines_through(cand, |key| {
                if line_counts.get(&key).copied().unwrap_or(0) + 1 > cap {
                    fits = false;
                }
            });
            if !fits {
                stalled += 1;
                continue;
            }
            space.for_lines_through(cand, |key| {
                *line_counts.entry(key).or_insert(0) += 1;
            });
            set.insert(cand);
            stalled = 0;
        }
        if set.len() == n {
            return Some(set);
        }
    }
    None
}

/// The grid `A x B` in `F_q^2`.
pub fn product_set(space: &Space, a: &[Elem], b: &[Elem]) -> Result<PointSet, ConstructionError> {
    if space.d() != 2 {
        return Err(ConstructionError::NotAPlane(space.d()));
    }
    if a.is_empty() || b.is_empty() {
        return Err(ConstructionError::EmptyFactor);
    }
    let mut out = PointSet::new();
    for &x in a {
        for &y in b {
            out.insert(space.pack(&[x, y]));
        }
    }
    Ok(out)
}
