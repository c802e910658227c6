//! Exact-arithmetic radial projections over finite vector spaces.
//!
//! The crate computes radial projections of point sets in `F_q^d`,
//! constructs the extremal example families, and checks the associated
//! counting theorems and identities at desk scale: finite fields in `gf`,
//! points and canonical lines in `geom`, projection sizes and the
//! incidence ledger in `radial`, example generators in `constructions`,
//! and the bound evaluators and checkers in `theorems`.

pub mod constructions;
pub mod exact;
pub mod geom;
pub mod gf;
pub mod radial;
pub mod theorems;

pub use constructions::FamilySpec;
pub use geom::{CountingConstants, Direction, LineKey, PointIdx, Space};
pub use gf::{Elem, FieldDescriptor, FieldSpec};
pub use radial::{IncidenceLedger, PointSet, Threshold};
pub use theorems::{BoundReport, ConjectureWitness, Verdict};
