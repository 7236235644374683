//! Pseudo-metrics induced by a weighted signal space.
//!
//! On grid sites:
//! * `Δ_X(x1, x2) = Σ_s f(φ_s) |φ_s(x1) − φ_s(x2)|`
//! * `D_X(x1, x2) = max_s |φ_s(x1) − φ_s(x2)|`
//!
//! On group elements:
//! * `Δ_G(g1, g2) = Σ_s f(φ_s) ‖φ_s g1 − φ_s g2‖_V`
//! * `D_G(g1, g2) = max_s ‖φ_s g1 − φ_s g2‖_∞`
//!
//! plus distance tables, an axiom checker, and greedy ε-nets.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeneoError, Result};
use crate::grid::{norm_inf, norm_v, Site, WeightedSignalSpace};
use crate::group::{act, GridIsometry};
use crate::sum::{max_or_zero, ordered_sum};

/// Absolute slack allowed on the triangle inequality.
pub const TRIANGLE_SLACK: f64 = 1e-9;

fn site_pair(space: &WeightedSignalSpace, x1: Site, x2: Site) -> Result<(usize, usize)> {
    let grid = space.grid();
    Ok((grid.index(x1)?, grid.index(x2)?))
}

pub fn delta_x(space: &WeightedSignalSpace, x1: Site, x2: Site) -> Result<f64> {
    let (a, b) = site_pair(space, x1, x2)?;
    Ok(ordered_sum(space.iter().map(|(phi, w)| w * (phi.at_index(a) - phi.at_index(b)).abs()).collect()))
}

pub fn dmax_x(space: &WeightedSignalSpace, x1: Site, x2: Site) -> Result<f64> {
    let (a, b) = site_pair(space, x1, x2)?;
    Ok(max_or_zero(space.signals().iter().map(|phi| (phi.at_index(a) - phi.at_index(b)).abs())))
}

pub fn delta_g(space: &WeightedSignalSpace, g1: &GridIsometry, g2: &GridIsometry) -> Result<f64> {
    let mut terms = Vec::with_capacity(space.len());
    for (phi, w) in space.iter() {
        terms.push(w * norm_v(&(&act(phi, g1)? - &act(phi, g2)?)));
    }
    Ok(ordered_sum(terms))
}

pub fn dmax_g(space: &WeightedSignalSpace, g1: &GridIsometry, g2: &GridIsometry) -> Result<f64> {
    let mut best = 0.0f64;
    for phi in space.signals() {
        best = best.max(norm_inf(&(&act(phi, g1)? - &act(phi, g2)?)));
    }
    Ok(best)
}

/// A symmetric table of pairwise pseudo-distances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoMetricTable {
    labels: Vec<String>,
    /// Row-major `len × len`.
    d: Vec<f64>,
}

impl PseudoMetricTable {
    /// Wraps a precomputed matrix without checking it.
    pub fn from_rows(labels: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = labels.len();
        if rows.len() != k || rows.iter().any(|r| r.len() != k) {
            return Err(GeneoError::Dimension(format!("table rows must be {k} x {k}")));
        }
        Ok(Self { labels, d: rows.concat() })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.d[a * self.len() + b]
    }

    pub fn set(&mut self, a: usize, b: usize, value: f64) {
        let k = self.len();
        self.d[a * k + b] = value;
    }

    pub fn row(&self, a: usize) -> &[f64] {
        let k = self.len();
        &self.d[a * k..(a + 1) * k]
    }

    pub fn diameter(&self) -> f64 {
        max_or_zero(self.d.iter().copied())
    }

    /// CSV with a header row of labels; each row starts with its label.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "label,{}", self.labels.join(","))?;
        for (a, label) in self.labels.iter().enumerate() {
            let row: Vec<String> = self.row(a).iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{label},{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<&[f64]> = (0..self.len()).map(|a| self.row(a)).collect();
        serde_json::json!({ "labels": self.labels, "d": rows })
    }
}

/// Evaluates `metric` on all pairs `a ≤ b` in parallel and mirrors the result.
pub fn build_table<P, F>(points: &[P], labels: Vec<String>, metric: F) -> Result<PseudoMetricTable>
where
    P: Sync,
    F: Fn(&P, &P) -> Result<f64> + Sync,
{
    if points.is_empty() {
        return Err(GeneoError::Empty("point list"));
    }
    if labels.len() != points.len() {
        return Err(GeneoError::Dimension(format!("{} labels for {} points", labels.len(), points.len())));
    }
    let k = points.len();
    let upper: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|a| {
            (a..k)
                .map(|b| {
                    let value = metric(&points[a], &points[b])?;
                    if !value.is_finite() || value < 0.0 {
                        return Err(GeneoError::InvalidDistance { a, b, value });
                    }
                    Ok(value)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut d = vec![0.0; k * k];
    for (a, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let b = a + off;
            d[a * k + b] = v;
            d[b * k + a] = v;
        }
    }
    Ok(PseudoMetricTable { labels, d })
}

/// Which site pseudo-metric to tabulate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SiteMetric {
    Delta,
    Max,
}

/// Which group pseudo-metric to tabulate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupMetric {
    Delta,
    Max,
}

pub fn site_table(space: &WeightedSignalSpace, kind: SiteMetric) -> Result<PseudoMetricTable> {
    let sites: Vec<Site> = space.grid().sites().collect();
    let labels = sites.iter().map(|s| format!("{}_{}", s.i, s.j)).collect();
    build_table(&sites, labels, |a, b| match kind {
        SiteMetric::Delta => delta_x(space, *a, *b),
        SiteMetric::Max => dmax_x(space, *a, *b),
    })
}

pub fn group_table(
    space: &WeightedSignalSpace,
    elements: &[GridIsometry],
    kind: GroupMetric,
) -> Result<PseudoMetricTable> {
    let labels = elements.iter().enumerate().map(|(i, g)| format!("{i}:{}", g.label())).collect();
    build_table(elements, labels, |a, b| match kind {
        GroupMetric::Delta => delta_g(space, a, b),
        GroupMetric::Max => dmax_g(space, a, b),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NonzeroDiagonal { a: usize, value: f64 },
    Negative { a: usize, b: usize, value: f64 },
    Asymmetric { a: usize, b: usize, difference: f64 },
    Triangle { a: usize, b: usize, c: usize, excess: f64 },
}

/// Result of [`check_pseudometric`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub points: usize,
    pub slack: f64,
    pub violation_count: usize,
    /// First few violations; `violation_count` has the total.
    pub violations: Vec<Violation>,
    /// Largest of `d(a,c) − d(a,b) − d(b,c)`, `|d(a,b) − d(b,a)|`, `|d(a,a)|`.
    pub worst_excess: f64,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }
}

const MAX_LISTED_VIOLATIONS: usize = 100;

/// Checks zero diagonal, nonnegativity, symmetry, and the triangle inequality.
pub fn check_pseudometric(table: &PseudoMetricTable, slack: f64) -> AxiomReport {
    let k = table.len();
    let mut violations = Vec::new();
    let mut count = 0usize;
    let mut worst = 0.0f64;
    let mut record = |v: Violation, count: &mut usize| {
        *count += 1;
        if violations.len() < MAX_LISTED_VIOLATIONS {
            violations.push(v);
        }
    };
    for a in 0..k {
        let diag = table.get(a, a);
        worst = worst.max(diag.abs());
        if diag.abs() > slack {
            record(Violation::NonzeroDiagonal { a, value: diag }, &mut count);
        }
        for b in 0..k {
            let v = table.get(a, b);
            if v < 0.0 {
                record(Violation::Negative { a, b, value: v }, &mut count);
            }
            if b > a {
                let diff = (v - table.get(b, a)).abs();
                worst = worst.max(diff);
                if diff > slack {
                    record(Violation::Asymmetric { a, b, difference: diff }, &mut count);
                }
            }
        }
    }
    // Triangle: d(a,c) ≤ d(a,b) + d(b,c).
    let triangle: Vec<(f64, Vec<Violation>, usize)> = (0..k)
        .into_par_iter()
        .map(|a| {
            let mut local = Vec::new();
            let mut local_count = 0;
            let mut local_worst = f64::NEG_INFINITY;
            let row_a = table.row(a);
            for b in 0..k {
                let dab = row_a[b];
                let row_b = table.row(b);
                for c in 0..k {
                    let excess = row_a[c] - dab - row_b[c];
                    if excess > local_worst {
                        local_worst = excess;
                    }
                    if excess > slack {
                        local_count += 1;
                        if local.len() < MAX_LISTED_VIOLATIONS {
                            local.push(Violation::Triangle { a, b, c, excess });
                        }
                    }
                }
            }
            (local_worst, local, local_count)
        })
        .collect();
    for (w, vs, c) in triangle {
        worst = worst.max(w);
        count += c;
        for v in vs {
            if violations.len() < MAX_LISTED_VIOLATIONS {
                violations.push(v);
            }
        }
    }
    AxiomReport { points: k, slack, violation_count: count, violations, worst_excess: worst }
}

/// A greedy ε-net and the cover radius it achieves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonNet {
    pub epsilon: f64,
    pub indices: Vec<usize>,
    pub labels: Vec<String>,
    /// `max_p min_{q ∈ net} d(p, q)`; at most `epsilon`.
    pub cover_radius: f64,
}

/// Farthest-point greedy ε-net.
///
/// Starts from the point with the largest mean distance (lowest index on
/// ties) and keeps adding the point farthest from the current net until every
/// point is within `epsilon`. Each added point is more than `epsilon` from all
/// earlier ones, so net points are pairwise `> epsilon` apart.
pub fn greedy_epsilon_net(table: &PseudoMetricTable, epsilon: f64) -> Result<EpsilonNet> {
    if !(epsilon > 0.0) {
        return Err(GeneoError::NonPositiveEpsilon(epsilon));
    }
    let k = table.len();
    if k == 0 {
        return Err(GeneoError::Empty("distance table"));
    }
    let mut seed = 0;
    let mut best_mean = f64::NEG_INFINITY;
    for a in 0..k {
        let mean = ordered_sum(table.row(a).to_vec()) / k as f64;
        if mean > best_mean {
            best_mean = mean;
            seed = a;
        }
    }
    let mut indices = vec![seed];
    let mut to_net: Vec<f64> = table.row(seed).to_vec();
    loop {
        let (far, far_dist) =
            to_net.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc });
        if far_dist <= epsilon {
            let labels = indices.iter().map(|&i| table.labels()[i].clone()).collect();
            return Ok(EpsilonNet { epsilon, indices, labels, cover_radius: far_dist.max(0.0) });
        }
        indices.push(far);
        for (d, &e) in to_net.iter_mut().zip(table.row(far)) {
            if e < *d {
                *d = e;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Signal, TorusGrid};
    use crate::group::{enumerate_group, DEFAULT_GROUP_BUDGET};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_space(n: usize, count: usize, seed: u64) -> WeightedSignalSpace {
        let g = TorusGrid::new(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let signals = (0..count).map(|_| Signal::from_fn(g, |_| rng.random_range(0.0..1.0)).unwrap()).collect();
        let weights = (0..count).map(|_| rng.random_range(0.1..1.0)).collect();
        WeightedSignalSpace::new(signals, weights).unwrap()
    }

    fn labels(k: usize) -> Vec<String> {
        (0..k).map(|i| i.to_string()).collect()
    }

    #[test]
    fn constant_signal_gives_degenerate_metric() {
        let g = TorusGrid::new(3).unwrap();
        let space = WeightedSignalSpace::uniform(vec![Signal::constant(g, 0.7)]).unwrap();
        for a in g.sites() {
            for b in g.sites() {
                assert_eq!(delta_x(&space, a, b).unwrap(), 0.0);
                assert_eq!(dmax_x(&space, a, b).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn two_pixel_hand_example() {
        let g = TorusGrid::new(2).unwrap();
        let space = WeightedSignalSpace::new(
            vec![Signal::basis(g, Site::new(0, 0)).unwrap(), Signal::basis(g, Site::new(1, 1)).unwrap()],
            vec![0.5, 0.5],
        )
        .unwrap();
        let (a, b) = (Site::new(0, 0), Site::new(1, 1));
        assert_eq!(delta_x(&space, a, b).unwrap(), 1.0);
        assert_eq!(dmax_x(&space, a, b).unwrap(), 1.0);
        // (0,0) vs (0,1): only the first image differs, by 1.
        assert_eq!(delta_x(&space, a, Site::new(0, 1)).unwrap(), 0.5);
        assert!(delta_x(&space, a, Site::new(2, 0)).is_err());
    }

    #[test]
    fn single_signal_delta_equals_max() {
        let space = random_space(4, 1, 5);
        for a in space.grid().sites() {
            for b in space.grid().sites() {
                assert_eq!(delta_x(&space, a, b).unwrap(), dmax_x(&space, a, b).unwrap());
            }
        }
    }

    #[test]
    fn delta_bounded_by_max() {
        let space = random_space(4, 6, 9);
        let dt = site_table(&space, SiteMetric::Delta).unwrap();
        let mt = site_table(&space, SiteMetric::Max).unwrap();
        for a in 0..dt.len() {
            for b in 0..dt.len() {
                assert!(dt.get(a, b) <= mt.get(a, b) + 1e-15);
            }
        }
        assert!(check_pseudometric(&dt, TRIANGLE_SLACK).passed());
        assert!(check_pseudometric(&mt, TRIANGLE_SLACK).passed());
    }

    #[test]
    fn group_metrics_basics() {
        let space = random_space(3, 4, 21);
        let group = enumerate_group(space.grid(), DEFAULT_GROUP_BUDGET).unwrap();
        let beta = space.grid().equivalence_constants().1;
        for g in &group[..10] {
            assert_eq!(delta_g(&space, g, g).unwrap(), 0.0);
            for h in &group {
                let d = delta_g(&space, g, h).unwrap();
                assert!(d <= beta * dmax_g(&space, g, h).unwrap() + 1e-12);
            }
        }
        let t = group_table(&space, &group, GroupMetric::Delta).unwrap();
        assert!(check_pseudometric(&t, TRIANGLE_SLACK).passed());
    }

    #[test]
    fn table_construction() {
        let pts = vec![0.0, 1.0, 1.0, 3.0];
        let t = build_table(&pts, labels(4), |a: &f64, b: &f64| Ok((a - b).abs())).unwrap();
        assert_eq!(t.len(), 4);
        assert!((0..4).all(|i| t.get(i, i) == 0.0));
        assert_eq!(t.row(1), t.row(2));
        assert_eq!(t.get(1, 2), 0.0);

        let bad = build_table(&pts, labels(4), |_: &f64, _: &f64| Ok(-1.0));
        assert!(matches!(bad, Err(GeneoError::InvalidDistance { .. })));
        let nan = build_table(&pts, labels(4), |_: &f64, _: &f64| Ok(f64::NAN));
        assert!(nan.is_err());
        let empty: Vec<f64> = Vec::new();
        assert!(build_table(&empty, Vec::new(), |_: &f64, _: &f64| Ok(0.0)).is_err());
    }

    #[test]
    fn corrupted_table_is_flagged() {
        let pts = vec![0.0, 1.0, 2.5];
        let mut t = build_table(&pts, labels(3), |a: &f64, b: &f64| Ok((a - b).abs())).unwrap();
        assert!(check_pseudometric(&t, TRIANGLE_SLACK).passed());
        t.set(0, 1, 1.5);
        let report = check_pseudometric(&t, TRIANGLE_SLACK);
        assert!(!report.passed());
        assert!(report.violations.iter().any(|v| matches!(v, Violation::Asymmetric { a: 0, b: 1, .. })));
        assert!((report.worst_excess - 0.5).abs() < 1e-12);

        let mut t2 = build_table(&pts, labels(3), |a: &f64, b: &f64| Ok((a - b).abs())).unwrap();
        t2.set(0, 2, 10.0);
        t2.set(2, 0, 10.0);
        let report = check_pseudometric(&t2, TRIANGLE_SLACK);
        assert!(report.violations.iter().any(|v| matches!(v, Violation::Triangle { .. })));
    }

    #[test]
    fn epsilon_net_examples() {
        let pts: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
        let t = build_table(&pts, labels(20), |a: &f64, b: &f64| Ok((a - b).abs())).unwrap();
        let big = greedy_epsilon_net(&t, 100.0).unwrap();
        assert_eq!(big.indices.len(), 1);
        let tiny = greedy_epsilon_net(&t, 1e-12).unwrap();
        assert_eq!(tiny.indices.len(), 20);
        assert_eq!(tiny.cover_radius, 0.0);
        assert!(greedy_epsilon_net(&t, 0.0).is_err());
        assert!(greedy_epsilon_net(&t, -1.0).is_err());

        let net = greedy_epsilon_net(&t, 1.2).unwrap();
        assert!(net.cover_radius <= 1.2);
        for (x, &a) in net.indices.iter().enumerate() {
            for &b in &net.indices[x + 1..] {
                assert!(t.get(a, b) > 1.2);
            }
        }
    }

    #[test]
    fn epsilon_net_size_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let pts: Vec<[f64; 2]> = (0..150).map(|_| [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]).collect();
        let t = build_table(&pts, labels(150), |a: &[f64; 2], b: &[f64; 2]| {
            Ok(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt())
        })
        .unwrap();
        let mut last = usize::MAX;
        for step in 1..=40 {
            let eps = step as f64 * 0.025;
            let net = greedy_epsilon_net(&t, eps).unwrap();
            assert!(net.indices.len() <= last);
            last = net.indices.len();
            for p in 0..t.len() {
                assert!(net.indices.iter().any(|&q| t.get(p, q) <= eps));
            }
        }
    }

    #[test]
    fn csv_and_json_export() {
        let pts = vec![0.0, 2.0];
        let t = build_table(&pts, vec!["a".into(), "b".into()], |a: &f64, b: &f64| Ok((a - b).abs())).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "label,a,b\na,0,2\nb,2,0\n");
        assert_eq!(t.to_json()["d"][0][1], 2.0);
    }
}
