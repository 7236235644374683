use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::Operator;
use crate::error::{GeneoError, Result};
use crate::grid::{Signal, TorusGrid};

/// Tolerance on `|‖u‖₂ − 1|` beyond which construction reports a renormalization.
pub const UNIT_NORM_NOTICE: f64 = 1e-9;

/// Pixel offset of the sample point `r · a · π / n` away from a pixel centre.
///
/// Pixel cells are the half-open arcs `[−π/n, π/n)` around each centre, so an
/// odd `a` puts the sample on a cell boundary and it belongs to the cell on
/// the positive side.
pub fn half_cell_offset(r: i64, a: i64) -> i64 {
    (r * a + 1).div_euclid(2)
}

/// The fixed part of the shift-mixture family: grid and integer tuples `k`, `h`.
///
/// `S_t φ` is the sum of the four copies of `φ` read at offsets
/// `(δ(r, k_t), δ(s, h_t))` for `r, s ∈ {−1, 1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftBasis {
    grid: TorusGrid,
    k: Vec<u32>,
    h: Vec<u32>,
    table: Vec<[(i64, i64); 4]>,
}

impl ShiftBasis {
    pub fn new(grid: TorusGrid, k: Vec<u32>, h: Vec<u32>) -> Result<Self> {
        if k.is_empty() {
            return Err(GeneoError::InvalidOperator("m must be at least 1".into()));
        }
        if k.len() != h.len() {
            return Err(GeneoError::InvalidOperator(format!("k has {} entries, h has {}", k.len(), h.len())));
        }
        if k.iter().chain(&h).any(|&v| v == 0) {
            return Err(GeneoError::InvalidOperator("k and h entries must be positive integers".into()));
        }
        let table = k
            .iter()
            .zip(&h)
            .map(|(&kt, &ht)| {
                let mut row = [(0, 0); 4];
                let mut idx = 0;
                for r in [-1, 1] {
                    for s in [-1, 1] {
                        row[idx] = (half_cell_offset(r, kt as i64), half_cell_offset(s, ht as i64));
                        idx += 1;
                    }
                }
                row
            })
            .collect();
        Ok(Self { grid, k, h, table })
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn m(&self) -> usize {
        self.k.len()
    }

    pub fn k(&self) -> &[u32] {
        &self.k
    }

    pub fn h(&self) -> &[u32] {
        &self.h
    }

    /// Offsets for term `t`, ordered `(r, s) = (−1,−1), (−1,1), (1,−1), (1,1)`.
    pub fn offsets(&self, t: usize) -> &[(i64, i64); 4] {
        &self.table[t]
    }

    /// `1 / (4√m)`.
    pub fn scale(&self) -> f64 {
        1.0 / (4.0 * (self.m() as f64).sqrt())
    }

    /// True when every offset set is symmetric under negation, which holds
    /// exactly when all `k_t` and `h_t` are even. Axis reflections then
    /// commute with the operator.
    pub fn reflection_symmetric(&self) -> bool {
        self.k.iter().chain(&self.h).all(|v| v % 2 == 0)
    }

    /// True when `k == h`, so swapping axes commutes with the operator.
    pub fn swap_symmetric(&self) -> bool {
        self.k == self.h
    }

    /// `S_t φ` for term `t`.
    pub fn shift_sum(&self, t: usize, phi: &Signal) -> Result<Signal> {
        self.grid.ensure_same(&phi.grid())?;
        let mut w = vec![0.0; self.m()];
        w[t] = 1.0;
        Ok(self.mix_unscaled(&w, phi))
    }

    /// `(1 / (4√m)) Σ_t w_t S_t φ` for arbitrary weights.
    pub fn mix(&self, weights: &[f64], phi: &Signal) -> Result<Signal> {
        self.grid.ensure_same(&phi.grid())?;
        if weights.len() != self.m() {
            return Err(GeneoError::Dimension(format!("{} weights for m = {}", weights.len(), self.m())));
        }
        let scaled: Vec<f64> = weights.iter().map(|w| w * self.scale()).collect();
        Ok(self.mix_unscaled(&scaled, phi))
    }

    fn mix_unscaled(&self, weights: &[f64], phi: &Signal) -> Signal {
        let n = self.grid.n();
        let values = phi.values();
        let wrap = |x: i64| x.rem_euclid(n as i64) as usize;
        let mut out = vec![0.0; self.grid.len()];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for (t, row) in self.table.iter().enumerate() {
                    let wt = weights[t];
                    if wt == 0.0 {
                        continue;
                    }
                    for &(di, dj) in row {
                        acc += wt * values[wrap(i as i64 + di) * n + wrap(j as i64 + dj)];
                    }
                }
                out[i * n + j] = acc;
            }
        }
        Signal::from_raw(self.grid, out)
    }
}

/// A member `F_u` of the shift-mixture family, `u` on the unit sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftMixtureGeneo {
    basis: Arc<ShiftBasis>,
    u: Vec<f64>,
    renormalized: bool,
}

impl ShiftMixtureGeneo {
    /// Builds `F_u`, normalizing `u` to unit length.
    pub fn new(basis: Arc<ShiftBasis>, u: Vec<f64>) -> Result<Self> {
        if u.len() != basis.m() {
            return Err(GeneoError::Dimension(format!("u has {} entries, m = {}", u.len(), basis.m())));
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(GeneoError::InvalidOperator("u has non-finite entries".into()));
        }
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(GeneoError::InvalidOperator("u is the zero vector".into()));
        }
        let renormalized = (norm - 1.0).abs() > UNIT_NORM_NOTICE;
        let u = if norm == 1.0 { u } else { u.into_iter().map(|v| v / norm).collect() };
        Ok(Self { basis, u, renormalized })
    }

    /// Convenience constructor that builds its own basis.
    pub fn make(grid: TorusGrid, u: Vec<f64>, k: Vec<u32>, h: Vec<u32>) -> Result<Self> {
        Self::new(Arc::new(ShiftBasis::new(grid, k, h)?), u)
    }

    pub fn basis(&self) -> &Arc<ShiftBasis> {
        &self.basis
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn m(&self) -> usize {
        self.u.len()
    }

    /// Whether the supplied `u` was off the unit sphere by more than the notice tolerance.
    pub fn was_renormalized(&self) -> bool {
        self.renormalized
    }

    pub fn to_json_repr(&self) -> ShiftMixtureJson {
        ShiftMixtureJson {
            n: self.basis.grid().n(),
            m: self.m(),
            u: self.u.clone(),
            k: self.basis.k().to_vec(),
            h: self.basis.h().to_vec(),
        }
    }

    pub fn from_json_repr(repr: ShiftMixtureJson) -> Result<Self> {
        if repr.m != repr.u.len() {
            return Err(GeneoError::Dimension(format!("m = {} but u has {} entries", repr.m, repr.u.len())));
        }
        Self::make(TorusGrid::new(repr.n)?, repr.u, repr.k, repr.h)
    }
}

impl Operator for ShiftMixtureGeneo {
    fn domain(&self) -> TorusGrid {
        self.basis.grid()
    }

    fn codomain(&self) -> TorusGrid {
        self.basis.grid()
    }

    fn apply(&self, phi: &Signal) -> Result<Signal> {
        self.basis.mix(&self.u, phi)
    }
}

/// The shift-mixture map for an arbitrary weight vector. Convex combinations
/// of family members land here: still GENEOs, but off the unit sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftMixtureMap {
    basis: Arc<ShiftBasis>,
    weights: Vec<f64>,
}

impl ShiftMixtureMap {
    pub fn new(basis: Arc<ShiftBasis>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != basis.m() {
            return Err(GeneoError::Dimension(format!("{} weights for m = {}", weights.len(), basis.m())));
        }
        Ok(Self { basis, weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl Operator for ShiftMixtureMap {
    fn domain(&self) -> TorusGrid {
        self.basis.grid()
    }

    fn codomain(&self) -> TorusGrid {
        self.basis.grid()
    }

    fn apply(&self, phi: &Signal) -> Result<Signal> {
        self.basis.mix(&self.weights, phi)
    }
}

/// JSON form `{n, m, u, k, h}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftMixtureJson {
    pub n: usize,
    pub m: usize,
    pub u: Vec<f64>,
    pub k: Vec<u32>,
    pub h: Vec<u32>,
}
