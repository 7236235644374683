use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use super::shift::ShiftBasis;
use crate::error::{GeneoError, Result};
use crate::grid::{inner_product, WeightedSignalSpace};
use crate::sum::ordered_sum;

/// Relative tolerance (times the trace) on negative eigenvalues.
pub const PSD_TOLERANCE: f64 = 1e-9;

/// The `m × m` matrix `Q` with `(u − u′)ᵀ Q (u − u′) = |||F_u − F_{u′}|||²_{L²}`.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    q: DMatrix<f64>,
}

impl GramMatrix {
    pub fn from_matrix(q: DMatrix<f64>) -> Result<Self> {
        if !q.is_square() || q.nrows() == 0 {
            return Err(GeneoError::Dimension(format!(
                "Gram matrix must be square and nonempty, got {}x{}",
                q.nrows(),
                q.ncols()
            )));
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(GeneoError::Dimension("Gram matrix has non-finite entries".into()));
        }
        Ok(Self { q })
    }

    pub fn identity(m: usize) -> Self {
        Self { q: DMatrix::identity(m, m) }
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.q[(a, b)]
    }

    pub fn trace(&self) -> f64 {
        self.q.trace()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { q: &self.q * c }
    }

    /// `Q x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let m = self.dim();
        (0..m).map(|a| (0..m).map(|b| self.q[(a, b)] * x[b]).sum()).collect()
    }

    /// `xᵀ Q x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let qx = self.apply(x);
        x.iter().zip(&qx).map(|(a, b)| a * b).sum()
    }

    /// `(a − b)ᵀ Q (a − b)`.
    pub fn distance_sq(&self, a: &[f64], b: &[f64]) -> f64 {
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        self.quad_form(&diff)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let m = self.dim();
        (0..m).all(|a| (0..a).all(|b| (self.q[(a, b)] - self.q[(b, a)]).abs() <= tol))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let sym = (&self.q + self.q.transpose()) * 0.5;
        let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn is_psd(&self) -> bool {
        let floor = -PSD_TOLERANCE * self.trace().abs().max(f64::MIN_POSITIVE);
        self.eigenvalues().first().is_none_or(|&lo| lo >= floor)
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        for a in 0..self.dim() {
            let row: Vec<String> = (0..self.dim()).map(|b| format!("{}", self.q[(a, b)])).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// `Q_ab = (1 / 16m) Σ_s f(φ_s) ⟨S_a φ_s, S_b φ_s⟩`.
///
/// Per-signal contributions are computed in parallel and reduced in a fixed
/// order, so the result does not depend on thread scheduling.
pub fn gram_matrix(basis: &ShiftBasis, space: &WeightedSignalSpace) -> Result<GramMatrix> {
    basis.grid().ensure_same(&space.grid())?;
    let m = basis.m();
    let per_signal: Vec<Vec<f64>> = space
        .signals()
        .par_iter()
        .zip(space.weights().par_iter())
        .map(|(phi, &w)| {
            let shifted = (0..m).map(|t| basis.shift_sum(t, phi)).collect::<Result<Vec<_>>>()?;
            let mut block = vec![0.0; m * m];
            for a in 0..m {
                for b in a..m {
                    let v = w * inner_product(&shifted[a], &shifted[b])?;
                    block[a * m + b] = v;
                    block[b * m + a] = v;
                }
            }
            Ok(block)
        })
        .collect::<Result<_>>()?;
    let norm = 1.0 / (16.0 * m as f64);
    let q = DMatrix::from_fn(m, m, |a, b| norm * ordered_sum(per_signal.iter().map(|blk| blk[a * m + b]).collect()));
    GramMatrix::from_matrix(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{norm_v, Signal, TorusGrid};

    #[test]
    fn constant_signal_gives_rank_one() {
        let g = TorusGrid::new(6).unwrap();
        let phi = Signal::constant(g, 0.5);
        let space = WeightedSignalSpace::uniform(vec![phi.clone()]).unwrap();
        let basis = ShiftBasis::new(g, vec![1, 2, 3], vec![2, 2, 5]).unwrap();
        let q = gram_matrix(&basis, &space).unwrap();
        let expected = norm_v(&phi).powi(2) / 3.0;
        for a in 0..3 {
            for b in 0..3 {
                assert!((q.get(a, b) - expected).abs() < 1e-12);
            }
        }
        let ev = q.eigenvalues();
        assert!(ev[0].abs() < 1e-12 && ev[1].abs() < 1e-12);
        assert!((ev[2] - 3.0 * expected).abs() < 1e-12);
        assert!(q.is_psd());
    }

    #[test]
    fn one_by_one() {
        let g = TorusGrid::new(4).unwrap();
        let space =
            WeightedSignalSpace::uniform(vec![Signal::basis(g, crate::grid::Site::new(1, 2)).unwrap()]).unwrap();
        let q = gram_matrix(&ShiftBasis::new(g, vec![2], vec![2]).unwrap(), &space).unwrap();
        assert_eq!(q.dim(), 1);
        assert!(q.get(0, 0) >= 0.0);
    }

    #[test]
    fn quadratic_forms() {
        let q = GramMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0])).unwrap();
        assert_eq!(q.quad_form(&[1.0, 0.0]), 2.0);
        assert_eq!(q.distance_sq(&[1.0, 1.0], &[0.0, 0.0]), 7.0);
        assert!(q.is_symmetric(0.0));
        let mut buf = Vec::new();
        q.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "2,1\n1,3\n");
        assert!(GramMatrix::from_matrix(DMatrix::zeros(2, 3)).is_err());
        let neg = GramMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])).unwrap();
        assert!(!neg.is_psd());
    }
}
