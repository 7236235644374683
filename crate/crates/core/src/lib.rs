//! Spaces of group equivariant non-expansive operators (GENEOs) on periodic
//! image grids, and a repulsion-energy procedure for picking a small,
//! well-spread set of operators out of a parametric family.
//!
//! Module map:
//! * [`grid`]: torus grids, signals, weighted signal spaces.
//! * [`group`]: grid isometries as pixel permutations.
//! * [`metrics`]: pseudo-metrics on sites and group elements, ε-nets.
//! * [`geneo`]: operators, operator norms, the shift-mixture family, Gram matrices.
//! * [`select`]: repulsion energy, Riemannian descent on spheres, η evaluation.
//! * [`ingest`]: IDX parsing, letter frequency tables, synthetic glyphs.

// Negated comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geneo;
pub mod grid;
pub mod group;
pub mod ingest;
pub mod metrics;
pub mod select;
pub mod sum;

pub use error::{GeneoError, Result};
pub use grid::{inner_product, norm_inf, norm_v, Signal, Site, TorusGrid, WeightedSignalSpace};
pub use group::{act, enumerate_group, Axis, GridIsometry};

/// Version tag embedded in reports.
pub const VERSION: &str = concat!("geneo-core ", env!("CARGO_PKG_VERSION"));
