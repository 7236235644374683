//! Periodic pixel grids, signals on them, and finite weighted signal spaces.
//!
//! A [`TorusGrid`] of size `n` samples the torus `S¹ × S¹` at the points
//! `(2πi/n, 2πj/n)`. A [`Signal`] is one real value per site, stored
//! row-major so that site `(i, j)` lives at flat index `i * n + j`.
//!
//! The inner product on signals is the plain Euclidean dot product of the
//! pixel arrays. Every group element acts by permuting pixels, so the inner
//! product and both norms are invariant under the action.

use std::fmt;
use std::io::{BufRead, Write};
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{GeneoError, Result};
use crate::sum::{max_or_zero, ordered_sum};

/// Tolerance on `|Σ weights − 1|` below which renormalization is silent.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct TorusGrid {
    n: usize,
}

impl TorusGrid {
    pub const MIN_SIZE: usize = 2;

    pub fn new(n: usize) -> Result<Self> {
        if n < Self::MIN_SIZE {
            return Err(GeneoError::GridTooSmall { got: n, min: Self::MIN_SIZE });
        }
        Ok(Self { n })
    }

    /// Sites per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of sites, `n²`.
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Reduces a signed coordinate modulo `n`.
    pub fn wrap(&self, x: i64) -> usize {
        x.rem_euclid(self.n as i64) as usize
    }

    /// Flat index of site `(i, j)`, with both coordinates taken mod `n`.
    pub fn index_wrapped(&self, i: i64, j: i64) -> usize {
        self.wrap(i) * self.n + self.wrap(j)
    }

    pub fn index(&self, site: Site) -> Result<usize> {
        self.check_site(site)?;
        Ok(site.i * self.n + site.j)
    }

    pub fn site(&self, index: usize) -> Site {
        Site { i: index / self.n, j: index % self.n }
    }

    pub fn check_site(&self, site: Site) -> Result<()> {
        if site.i >= self.n || site.j >= self.n {
            return Err(GeneoError::SiteOutOfRange { i: site.i, j: site.j, n: self.n });
        }
        Ok(())
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.len()).map(move |idx| self.site(idx))
    }

    pub(crate) fn ensure_same(&self, other: &TorusGrid) -> Result<()> {
        if self.n != other.n {
            return Err(GeneoError::GridMismatch { expected: self.n, got: other.n });
        }
        Ok(())
    }

    /// Constants `(α, β)` with `α‖φ‖_∞ ≤ ‖φ‖_V ≤ β‖φ‖_∞` for every signal.
    ///
    /// For the Euclidean norm on `n²` entries these are `(1, n)`: a single
    /// pixel attains the lower bound and a constant image the upper one.
    pub fn equivalence_constants(&self) -> (f64, f64) {
        (1.0, self.n as f64)
    }
}

impl TryFrom<usize> for TorusGrid {
    type Error = GeneoError;

    fn try_from(n: usize) -> Result<Self> {
        TorusGrid::new(n)
    }
}

impl From<TorusGrid> for usize {
    fn from(grid: TorusGrid) -> usize {
        grid.n
    }
}

/// A grid site `(i, j)` with `0 ≤ i, j < n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub i: usize,
    pub j: usize,
}

impl Site {
    pub fn new(i: usize, j: usize) -> Self {
        Self { i, j }
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.i, self.j)
    }
}

/// A real-valued image on a [`TorusGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl Signal {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(GeneoError::SignalLength { n: grid.n(), expected: grid.len(), got: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(GeneoError::NonFiniteValue { index });
        }
        Ok(Self { grid, values })
    }

    /// Builds a signal without validation. Callers guarantee length and finiteness.
    pub(crate) fn from_raw(grid: TorusGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    /// The pixel basis function: one at `site`, zero elsewhere.
    pub fn basis(grid: TorusGrid, site: Site) -> Result<Self> {
        let idx = grid.index(site)?;
        let mut values = vec![0.0; grid.len()];
        values[idx] = 1.0;
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: TorusGrid, mut f: impl FnMut(Site) -> f64) -> Result<Self> {
        let values = grid.sites().map(&mut f).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, site: Site) -> Result<f64> {
        Ok(self.values[self.grid.index(site)?])
    }

    pub fn at_index(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn scale(&self, c: f64) -> Signal {
        Signal::from_raw(self.grid, self.values.iter().map(|v| c * v).collect())
    }

    /// `self + c · other`.
    pub fn axpy(&self, c: f64, other: &Signal) -> Result<Signal> {
        self.grid.ensure_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect();
        Ok(Signal::from_raw(self.grid, values))
    }

    /// Circular shift: the result at `(i, j)` is this signal at `(i + di, j + dj)`.
    pub fn shifted(&self, di: i64, dj: i64) -> Signal {
        let n = self.grid.n();
        let mut out = Vec::with_capacity(self.grid.len());
        for i in 0..n as i64 {
            let row = self.grid.wrap(i + di) * n;
            for j in 0..n as i64 {
                out.push(self.values[row + self.grid.wrap(j + dj)]);
            }
        }
        Signal::from_raw(self.grid, out)
    }

    /// Reads `n` lines of `n` comma-separated reals.
    pub fn read_csv(reader: impl BufRead) -> Result<Signal> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| GeneoError::Parse(format!("line {}: {e}", lineno + 1)))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<f64>()
                        .map_err(|e| GeneoError::Parse(format!("line {}: {:?}: {e}", lineno + 1, tok.trim())))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let n = rows.len();
        if let Some((r, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != n) {
            return Err(GeneoError::Parse(format!(
                "row {} has {} entries, expected {n} for a square image",
                r + 1,
                row.len()
            )));
        }
        let grid = TorusGrid::new(n)?;
        Signal::new(grid, rows.concat())
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        for row in self.values.chunks(self.grid.n()) {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

impl Add for &Signal {
    type Output = Signal;

    /// Panics on grid mismatch; use [`Signal::axpy`] for a fallible version.
    fn add(self, rhs: &Signal) -> Signal {
        self.axpy(1.0, rhs).expect("signals on different grids")
    }
}

impl Sub for &Signal {
    type Output = Signal;

    fn sub(self, rhs: &Signal) -> Signal {
        self.axpy(-1.0, rhs).expect("signals on different grids")
    }
}

/// Euclidean inner product of two signals on the same grid.
pub fn inner_product(a: &Signal, b: &Signal) -> Result<f64> {
    a.grid.ensure_same(&b.grid)?;
    Ok(ordered_sum(a.values.iter().zip(&b.values).map(|(x, y)| x * y).collect()))
}

pub fn norm_v(phi: &Signal) -> f64 {
    ordered_sum(phi.values.iter().map(|v| v * v).collect()).sqrt()
}

pub fn norm_inf(phi: &Signal) -> f64 {
    max_or_zero(phi.values.iter().map(|v| v.abs()))
}

/// A finite set of admissible signals carrying probability weights.
#[derive(Clone, Debug)]
pub struct WeightedSignalSpace {
    grid: TorusGrid,
    signals: Vec<Signal>,
    weights: Vec<f64>,
    raw_weight_sum: f64,
}

impl WeightedSignalSpace {
    /// Builds the space, renormalizing weights to sum to one.
    pub fn new(signals: Vec<Signal>, weights: Vec<f64>) -> Result<Self> {
        let first = signals.first().ok_or(GeneoError::Empty("signal list"))?;
        let grid = first.grid();
        if signals.len() != weights.len() {
            return Err(GeneoError::InvalidWeights(format!("{} signals but {} weights", signals.len(), weights.len())));
        }
        for s in &signals {
            grid.ensure_same(&s.grid())?;
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(**w >= 0.0) || !w.is_finite()) {
            return Err(GeneoError::InvalidWeights(format!("weight {i} is {w}, must be finite and nonnegative")));
        }
        let raw_weight_sum = ordered_sum(weights.clone());
        if raw_weight_sum <= 0.0 {
            return Err(GeneoError::InvalidWeights("weights sum to zero".into()));
        }
        let weights = weights.into_iter().map(|w| w / raw_weight_sum).collect();
        Ok(Self { grid, signals, weights, raw_weight_sum })
    }

    /// Equal weights `1/N`.
    pub fn uniform(signals: Vec<Signal>) -> Result<Self> {
        let weights = vec![1.0; signals.len()];
        Self::new(signals, weights)
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty()
    }

    pub fn signals(&self) -> &[Signal] {
        &self.signals
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Signal, f64)> {
        self.signals.iter().zip(self.weights.iter().copied())
    }

    /// Sum of the weights as supplied, before renormalization.
    pub fn raw_weight_sum(&self) -> f64 {
        self.raw_weight_sum
    }

    /// True when the supplied weights were off from one by more than the tolerance.
    pub fn renormalization_flagged(&self) -> bool {
        (self.raw_weight_sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE
    }

    /// Probability of a subset of the support, given by signal indices.
    pub fn measure(&self, indices: impl IntoIterator<Item = usize>) -> f64 {
        ordered_sum(indices.into_iter().map(|i| self.weights[i]).collect())
    }
}
