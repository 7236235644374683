//! Group equivariant operators between signal spaces.
//!
//! Operators are behavioural: anything that maps a [`Signal`] to a [`Signal`]
//! implements [`Operator`]. The norms and the `L²` inner product are finite
//! sums and maxima over the admissible signals of an [`OperatorContext`].

mod gram;
mod shift;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use gram::{gram_matrix, GramMatrix, PSD_TOLERANCE};
pub use shift::{half_cell_offset, ShiftBasis, ShiftMixtureGeneo, ShiftMixtureJson, ShiftMixtureMap, UNIT_NORM_NOTICE};

use crate::error::{GeneoError, Result};
use crate::grid::{inner_product, norm_inf, norm_v, Signal, TorusGrid, WeightedSignalSpace};
use crate::group::{act, GridIsometry};
use crate::sum::{max_or_zero, ordered_sum};

pub trait Operator: Send + Sync + fmt::Debug {
    fn domain(&self) -> TorusGrid;
    fn codomain(&self) -> TorusGrid;
    fn apply(&self, phi: &Signal) -> Result<Signal>;
}

impl<T: Operator + ?Sized> Operator for Arc<T> {
    fn domain(&self) -> TorusGrid {
        (**self).domain()
    }

    fn codomain(&self) -> TorusGrid {
        (**self).codomain()
    }

    fn apply(&self, phi: &Signal) -> Result<Signal> {
        (**self).apply(phi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityOperator(pub TorusGrid);

impl Operator for IdentityOperator {
    fn domain(&self) -> TorusGrid {
        self.0
    }

    fn codomain(&self) -> TorusGrid {
        self.0
    }

    fn apply(&self, phi: &Signal) -> Result<Signal> {
        self.0.ensure_same(&phi.grid())?;
        Ok(phi.clone())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeroOperator {
    pub domain: TorusGrid,
    pub codomain: TorusGrid,
}

impl Operator for ZeroOperator {
    fn domain(&self) -> TorusGrid {
        self.domain
    }

    fn codomain(&self) -> TorusGrid {
        self.codomain
    }

    fn apply(&self, phi: &Signal) -> Result<Signal> {
        self.domain.ensure_same(&phi.grid())?;
        Ok(Signal::zeros(self.codomain))
    }
}

/// `φ ↦ Σ_i c_i F_i(φ)`.
#[derive(Clone, Debug)]
pub struct LinearCombination {
    domain: TorusGrid,
    codomain: TorusGrid,
    terms: Vec<(f64, Arc<dyn Operator>)>,
}

impl LinearCombination {
    pub fn new(terms: Vec<(f64, Arc<dyn Operator>)>) -> Result<Self> {
        let (_, first) = terms.first().ok_or(GeneoError::Empty("operator terms"))?;
        let (domain, codomain) = (first.domain(), first.codomain());
        for (_, op) in &terms {
            domain.ensure_same(&op.domain())?;
            codomain.ensure_same(&op.codomain())?;
        }
        Ok(Self { domain, codomain, terms })
    }

    pub fn scaled(op: Arc<dyn Operator>, c: f64) -> Self {
        Self { domain: op.domain(), codomain: op.codomain(), terms: vec![(c, op)] }
    }

    /// `F1 − F2`.
    pub fn difference(a: Arc<dyn Operator>, b: Arc<dyn Operator>) -> Result<Self> {
        Self::new(vec![(1.0, a), (-1.0, b)])
    }
}

impl Operator for LinearCombination {
    fn domain(&self) -> TorusGrid {
        self.domain
    }

    fn codomain(&self) -> TorusGrid {
        self.codomain
    }

    fn apply(&self, phi: &Signal) -> Result<Signal> {
        let mut acc = Signal::zeros(self.codomain);
        for (c, op) in &self.terms {
            acc = acc.axpy(*c, &op.apply(phi)?)?;
        }
        Ok(acc)
    }
}

/// `F_t(φ) = (1 − t) F1(φ) + t F2(φ)`.
pub fn convex_combo(f1: Arc<dyn Operator>, f2: Arc<dyn Operator>, t: f64) -> Result<LinearCombination> {
    if !(0.0..=1.0).contains(&t) {
        return Err(GeneoError::InvalidMixWeight(t));
    }
    LinearCombination::new(vec![(1.0 - t, f1), (t, f2)])
}

/// A group homomorphism `T: G₁ → G₂`.
pub trait Homomorphism: Send + Sync + fmt::Debug {
    fn map(&self, g: &GridIsometry) -> Result<GridIsometry>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityHomomorphism;

impl Homomorphism for IdentityHomomorphism {
    fn map(&self, g: &GridIsometry) -> Result<GridIsometry> {
        Ok(g.clone())
    }
}

/// Domain space `(Φ₁, f)`, codomain grid and homomorphism for a class of operators.
#[derive(Clone, Debug)]
pub struct OperatorContext {
    pub domain_space: WeightedSignalSpace,
    pub codomain_grid: TorusGrid,
    pub homomorphism: Arc<dyn Homomorphism>,
}

impl OperatorContext {
    /// `Φ₁ = Φ₂`, `T = id`.
    pub fn endomorphisms(space: WeightedSignalSpace) -> Self {
        let grid = space.grid();
        Self { domain_space: space, codomain_grid: grid, homomorphism: Arc::new(IdentityHomomorphism) }
    }

    /// `(α₁, β₁, α₂, β₂)`.
    pub fn equivalence_constants(&self) -> (f64, f64, f64, f64) {
        let (a1, b1) = self.domain_space.grid().equivalence_constants();
        let (a2, b2) = self.codomain_grid.equivalence_constants();
        (a1, b1, a2, b2)
    }

    /// Checks `T(id) = id` and `T(g1 g2) = T(g1) T(g2)` on the given pairs.
    pub fn check_homomorphism(&self, pairs: &[(GridIsometry, GridIsometry)]) -> Result<bool> {
        let id = GridIsometry::identity(self.domain_space.grid());
        if !self.homomorphism.map(&id)?.is_identity() {
            return Ok(false);
        }
        for (a, b) in pairs {
            let lhs = self.homomorphism.map(&a.compose(b)?)?;
            let rhs = self.homomorphism.map(a)?.compose(&self.homomorphism.map(b)?)?;
            if lhs != rhs {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn check_operator(&self, op: &dyn Operator) -> Result<()> {
        self.domain_space.grid().ensure_same(&op.domain())?;
        self.codomain_grid.ensure_same(&op.codomain())
    }
}

/// `⟨F1, F2⟩ = Σ_s f(φ_s) ⟨F1(φ_s), F2(φ_s)⟩`.
pub fn op_inner(f1: &dyn Operator, f2: &dyn Operator, ctx: &OperatorContext) -> Result<f64> {
    ctx.check_operator(f1)?;
    ctx.check_operator(f2)?;
    let mut terms = Vec::with_capacity(ctx.domain_space.len());
    for (phi, w) in ctx.domain_space.iter() {
        terms.push(w * inner_product(&f1.apply(phi)?, &f2.apply(phi)?)?);
    }
    Ok(ordered_sum(terms))
}

/// `max_s ‖F(φ_s)‖_∞`.
pub fn op_norm_inf(f: &dyn Operator, ctx: &OperatorContext) -> Result<f64> {
    ctx.check_operator(f)?;
    let values = ctx.domain_space.signals().iter().map(|phi| f.apply(phi).map(|y| norm_inf(&y)));
    Ok(max_or_zero(values.collect::<Result<Vec<_>>>()?))
}

/// `max_s ‖F(φ_s)‖_V`.
pub fn op_norm_v2(f: &dyn Operator, ctx: &OperatorContext) -> Result<f64> {
    ctx.check_operator(f)?;
    let values = ctx.domain_space.signals().iter().map(|phi| f.apply(phi).map(|y| norm_v(&y)));
    Ok(max_or_zero(values.collect::<Result<Vec<_>>>()?))
}

/// `(Σ_s f(φ_s) ‖F(φ_s)‖²_V)^{1/2}`.
pub fn op_norm_l2(f: &dyn Operator, ctx: &OperatorContext) -> Result<f64> {
    ctx.check_operator(f)?;
    let mut terms = Vec::with_capacity(ctx.domain_space.len());
    for (phi, w) in ctx.domain_space.iter() {
        terms.push(w * norm_v(&f.apply(phi)?).powi(2));
    }
    Ok(ordered_sum(terms).sqrt())
}

/// Outcome of a non-expansiveness sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonExpansiveReport {
    pub trials: usize,
    /// Largest `‖F(φ) − F(φ′)‖_V / ‖φ − φ′‖_V` seen.
    pub max_ratio: f64,
    pub worst_trial: usize,
    pub tolerance: f64,
    pub passed: bool,
}

/// Evaluates the Lipschitz ratio on every pair; pairs with `φ = φ′` are skipped.
pub fn check_nonexpansive(f: &dyn Operator, pairs: &[(Signal, Signal)], tol: f64) -> Result<NonExpansiveReport> {
    let mut max_ratio = 0.0f64;
    let mut worst_trial = 0;
    let mut trials = 0;
    for (idx, (a, b)) in pairs.iter().enumerate() {
        let denom = norm_v(&a.axpy(-1.0, b)?);
        if denom == 0.0 {
            continue;
        }
        trials += 1;
        let ratio = norm_v(&f.apply(a)?.axpy(-1.0, &f.apply(b)?)?) / denom;
        if ratio > max_ratio {
            max_ratio = ratio;
            worst_trial = idx;
        }
    }
    Ok(NonExpansiveReport { trials, max_ratio, worst_trial, tolerance: tol, passed: max_ratio <= 1.0 + tol })
}

/// Outcome of an equivariance sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivarianceReport {
    pub checks: usize,
    /// Largest `‖F(φ g) − F(φ) T(g)‖_∞`.
    pub max_defect: f64,
    pub worst_element: Option<String>,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn check_equivariance(
    f: &dyn Operator,
    group_sample: &[GridIsometry],
    signals: &[Signal],
    hom: &dyn Homomorphism,
    tol: f64,
) -> Result<EquivarianceReport> {
    if group_sample.is_empty() || signals.is_empty() {
        return Err(GeneoError::Empty("equivariance samples"));
    }
    let mut max_defect = 0.0f64;
    let mut worst_element = None;
    for phi in signals {
        let f_phi = f.apply(phi)?;
        for g in group_sample {
            let lhs = f.apply(&act(phi, g)?)?;
            let rhs = act(&f_phi, &hom.map(g)?)?;
            let defect = norm_inf(&lhs.axpy(-1.0, &rhs)?);
            if defect > max_defect {
                max_defect = defect;
                worst_element = Some(g.label());
            }
        }
    }
    Ok(EquivarianceReport {
        checks: group_sample.len() * signals.len(),
        max_defect,
        worst_element,
        tolerance: tol,
        passed: max_defect <= tol,
    })
}

/// Random signal pairs with entries uniform in `[-1, 1)`.
///
/// Every fourth pair differs by a constant offset instead. Averaging shift
/// operators shrink most random differences, but not constant ones, so these
/// pairs probe the Lipschitz bound where it is tight.
pub fn random_signal_pairs<R: Rng + ?Sized>(grid: TorusGrid, count: usize, rng: &mut R) -> Vec<(Signal, Signal)> {
    (0..count)
        .map(|i| {
            let a = Signal::from_fn(grid, |_| rng.random_range(-1.0..1.0)).expect("finite by construction");
            let b = if i % 4 == 3 {
                let c = rng.random_range(-1.0..1.0);
                Signal::from_fn(grid, |s| a.at_index(grid.index(s).unwrap()) + c).expect("finite")
            } else {
                Signal::from_fn(grid, |_| rng.random_range(-1.0..1.0)).expect("finite by construction")
            };
            (a, b)
        })
        .collect()
}

/// All ordered pairs of distinct signals from a space.
pub fn space_pairs(space: &WeightedSignalSpace) -> Vec<(Signal, Signal)> {
    let sig = space.signals();
    let mut out = Vec::new();
    for a in 0..sig.len() {
        for b in (a + 1)..sig.len() {
            out.push((sig[a].clone(), sig[b].clone()));
        }
    }
    out
}
