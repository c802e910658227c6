//! Sweep configuration: a flat key-value document (TOML) that the shared
//! CLI flags override field by field.

use anyhow::{bail, Context, Result};
use num::rational::Ratio;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use qradial_core::gf::{FieldSpec, MAX_Q};
use qradial_core::Space;
use std::sync::Arc;

/// Hard cap on `q^d` for sweep cells: exceptional-set scans walk every
/// point, so cells beyond this are rejected up front, by name.
pub const MAX_CELL_POINTS: u64 = 1_000_000;

pub const ALL_THEOREMS: &[&str] = &[
    "identity", "variance", "et", "1.2", "4.2", "1.4", "4.4", "1.5", "1.7", "1.8", "3.2",
];

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Field characteristic grid; crossed with `e`.
    pub p: Vec<u64>,
    /// Field extension-degree grid.
    pub e: Vec<u32>,
    /// Dimension grid.
    pub d: Vec<usize>,
    /// Family name: random | subspace | collinear | concurrent | subplane | product.
    pub family: String,
    /// Point-count grid (meaning varies per family; see README).
    pub size: Vec<u64>,
    /// Projection-size threshold grid.
    pub m: Vec<u64>,
    /// Rational C grid for the C-threshold bound, e.g. "3/2".
    pub c: Vec<String>,
    /// Subspace dimension grid (subspace family and hunt cells).
    pub k: Vec<u32>,
    /// Checker selection; see [`ALL_THEOREMS`].
    pub theorems: Vec<String>,
    /// Instances per (field, dimension, size) cell.
    pub trials: u64,
    /// Master seed; per-cell seeds are hash-derived from it.
    pub seed: u64,
    /// Worker threads; 0 = rayon default. Never affects report content.
    pub jobs: usize,
    pub out: Option<PathBuf>,
    /// json | csv.
    pub format: String,
}

impl Default for SweepConfig {
    fn default() -> Self {
        // The built-in smoke configuration: identity-level checks over the
        // two smallest interesting planes.
        SweepConfig {
            p: vec![3, 5],
            e: vec![1],
            d: vec![2],
            family: "random".into(),
            size: vec![4, 8],
            m: vec![1, 2],
            c: vec!["2".into()],
            k: vec![1],
            theorems: ALL_THEOREMS.iter().map(|s| s.to_string()).collect(),
            trials: 10,
            seed: 0,
            jobs: 0,
            out: None,
            format: "json".into(),
        }
    }
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: SweepConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    /// Hex SHA-256 of the canonical serialized config, with the fields that
    /// cannot change report content (output path, parallelism) zeroed so
    /// the digest is stable across them.
    pub fn digest(&self) -> String {
        let mut canonical = self.clone();
        canonical.jobs = 0;
        canonical.out = None;
        let text = toml::to_string(&canonical).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(text.as_bytes());
        hex_string(&hasher.finalize())
    }

    pub fn parsed_c(&self) -> Result<Vec<Ratio<i64>>> {
        self.c.iter().map(|s| parse_ratio(s)).collect()
    }

    /// Static feasibility of every sweep cell, under the desk caps; the
    /// first offending cell is named in the error.
    pub fn validate(&self) -> Result<()> {
        if self.format != "json" && self.format != "csv" {
            bail!("format must be json or csv, got {:?}", self.format);
        }
        for name in &self.theorems {
            if !ALL_THEOREMS.contains(&name.as_str()) {
                bail!("unknown theorem selector {name:?} (known: {ALL_THEOREMS:?})");
            }
        }
        self.parsed_c()?;
        if self.p.is_empty() || self.e.is_empty() || self.d.is_empty() {
            bail!("p, e, and d grids must be nonempty");
        }
        for &p in &self.p {
            for &e in &self.e {
                let q = match p.checked_pow(e) {
                    Some(q) if q <= MAX_Q => q,
                    _ => bail!("cell (p={p}, e={e}): q exceeds the field cap {MAX_Q}"),
                };
                FieldSpec::new(p, e).map_err(|err| {
                    anyhow::anyhow!("cell (p={p}, e={e}): invalid field: {err}")
                })?;
                for &d in &self.d {
                    let points = (0..d).try_fold(1u64, |acc, _| acc.checked_mul(q));
                    match points {
                        Some(points) if points <= MAX_CELL_POINTS => {}
                        _ => bail!(
                            "cell (p={p}, e={e}, d={d}): q^d exceeds the sweep cap {MAX_CELL_POINTS}"
                        ),
                    }
                    let points = points.unwrap();
                    for &n in &self.size {
                        if self.family != "subspace" && self.family != "subplane" && n > points {
                            bail!(
                                "cell (p={p}, e={e}, d={d}, family={}, size={n}): \
                                 only {points} points exist",
                                self.family
                            );
                        }
                    }
                }
            }
        }
        match self.family.as_str() {
            "random" | "subspace" | "collinear" | "concurrent" | "subplane" | "product" => {}
            other => bail!("unknown family {other:?}"),
        }
        Ok(())
    }

    pub fn spaces(&self) -> Result<Vec<Space>> {
        let mut out = Vec::new();
        for &p in &self.p {
            for &e in &self.e {
                let field = Arc::new(FieldSpec::new(p, e)?);
                for &d in &self.d {
                    out.push(Space::new(Arc::clone(&field), d)?);
                }
            }
        }
        Ok(out)
    }
}

pub fn parse_ratio(s: &str) -> Result<Ratio<i64>> {
    let ratio = match s.split_once('/') {
        Some((n, d)) => {
            let n = n.trim().parse::<i64>().context("rational numerator")?;
            let d = d.trim().parse::<i64>().context("rational denominator")?;
            if d == 0 {
                bail!("rational {s:?} has a zero denominator");
            }
            Ratio::new(n, d)
        }
        None => Ratio::from_integer(s.trim().parse::<i64>().context("rational value")?),
    };
    Ok(ratio)
}

pub fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
