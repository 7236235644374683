//! Selection of `r` well-separated family members by minimizing a repulsion
//! energy on the product of unit spheres `(S^{m−1})^r`.
//!
//! With `Q` the Gram matrix of the family, the squared `L²` distance between
//! members `F_u` and `F_v` is `d(u, v) = (u − v)ᵀ Q (u − v)`, and the energy is
//!
//! ```text
//! E(u_1, …, u_r) = Σ_{i<j} 1 / d(u_i, u_j)
//! ```
//!
//! The optimizer is Riemannian gradient descent: the Euclidean gradient is
//! projected onto each sphere's tangent space, a step is taken, and the point
//! is retracted back onto the sphere by normalization. Step lengths come from
//! a backtracking Armijo search.

pub mod experiment;
pub mod plot;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{GeneoError, Result};
use crate::geneo::GramMatrix;
use crate::sum::ordered_sum;

/// Tolerance on `|‖u_i‖₂ − 1|` for configuration points.
pub const UNIT_TOLERANCE: f64 = 1e-12;
/// Pairwise distances must exceed this multiple of `trace(Q)`.
pub const COLLISION_FACTOR: f64 = 1e-12;
/// Draws allowed before `random_configuration` gives up.
pub const MAX_RESAMPLES: usize = 100;

/// `r` points on the unit sphere of `ℝ^m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    points: Vec<Vec<f64>>,
}

impl Configuration {
    /// Normalizes every point onto the sphere.
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let m = points.first().ok_or(GeneoError::Empty("configuration"))?.len();
        if m == 0 {
            return Err(GeneoError::Dimension("points must have at least one coordinate".into()));
        }
        let mut out = Vec::with_capacity(points.len());
        for (i, p) in points.into_iter().enumerate() {
            if p.len() != m {
                return Err(GeneoError::Dimension(format!("point {i} has {} coordinates, expected {m}", p.len())));
            }
            out.push(normalize(&p).ok_or_else(|| GeneoError::Dimension(format!("point {i} is zero or not finite")))?);
        }
        Ok(Self { points: out })
    }

    pub fn r(&self) -> usize {
        self.points.len()
    }

    pub fn m(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    /// Largest `|‖u_i‖₂ − 1|`.
    pub fn max_unit_error(&self) -> f64 {
        self.points.iter().map(|p| (dot(p, p).sqrt() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Angles `atan2(u_2, u_1)` in `[0, 2π)`; only meaningful for `m = 2`.
    pub fn angles(&self) -> Vec<f64> {
        self.points.iter().map(|p| p[1].atan2(p[0]).rem_euclid(std::f64::consts::TAU)).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &[f64]) -> Option<Vec<f64>> {
    let norm = dot(v, v).sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return None;
    }
    Some(v.iter().map(|x| x / norm).collect())
}

pub fn collision_guard(q: &GramMatrix) -> f64 {
    COLLISION_FACTOR * q.trace()
}

fn check_dims(points: &[Vec<f64>], q: &GramMatrix) -> Result<()> {
    if let Some(p) = points.iter().find(|p| p.len() != q.dim()) {
        return Err(GeneoError::Dimension(format!(
            "points have {} coordinates, Q is {}x{}",
            p.len(),
            q.dim(),
            q.dim()
        )));
    }
    Ok(())
}

fn pair_distances(points: &[Vec<f64>], q: &GramMatrix) -> Result<Vec<(usize, usize, f64)>> {
    check_dims(points, q)?;
    let guard = collision_guard(q);
    let mut out = Vec::with_capacity(points.len() * points.len().saturating_sub(1) / 2);
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let dist = q.distance_sq(&points[i], &points[j]);
            if !(dist > guard) {
                return Err(GeneoError::Collision { i, j, dist, guard });
            }
            out.push((i, j, dist));
        }
    }
    Ok(out)
}

/// Repulsion energy of arbitrary (not necessarily unit) points.
pub fn energy_of_points(points: &[Vec<f64>], q: &GramMatrix) -> Result<f64> {
    let pairs = pair_distances(points, q)?;
    Ok(ordered_sum(pairs.into_iter().map(|(_, _, d)| 1.0 / d).collect()))
}

/// `Σ_{i<j} 1 / ((u_i − u_j)ᵀ Q (u_i − u_j))`.
pub fn energy(cfg: &Configuration, q: &GramMatrix) -> Result<f64> {
    energy_of_points(&cfg.points, q)
}

/// Euclidean gradient `∂E/∂u_i = Σ_{j≠i} −2 Q (u_i − u_j) / d_ij²`.
pub fn energy_gradient_of_points(points: &[Vec<f64>], q: &GramMatrix) -> Result<Vec<Vec<f64>>> {
    let pairs = pair_distances(points, q)?;
    let m = q.dim();
    let mut grad = vec![vec![0.0; m]; points.len()];
    for (i, j, d) in pairs {
        let diff: Vec<f64> = points[i].iter().zip(&points[j]).map(|(a, b)| a - b).collect();
        let qd = q.apply(&diff);
        let c = -2.0 / (d * d);
        for t in 0..m {
            grad[i][t] += c * qd[t];
            grad[j][t] -= c * qd[t];
        }
    }
    Ok(grad)
}

pub fn energy_gradient(cfg: &Configuration, q: &GramMatrix) -> Result<Vec<Vec<f64>>> {
    energy_gradient_of_points(&cfg.points, q)
}

/// Projects each `g_i` onto the tangent space at `u_i`: `g_i − (g_iᵀ u_i) u_i`.
pub fn riemannian_gradient(cfg: &Configuration, euclid_grad: &[Vec<f64>]) -> Vec<Vec<f64>> {
    cfg.points
        .iter()
        .zip(euclid_grad)
        .map(|(u, g)| {
            let radial = dot(g, u);
            g.iter().zip(u).map(|(gi, ui)| gi - radial * ui).collect()
        })
        .collect()
}

/// `(u + step) / ‖u + step‖`, or `None` if the sum vanishes.
pub fn retract(u: &[f64], step: &[f64]) -> Option<Vec<f64>> {
    let moved: Vec<f64> = u.iter().zip(step).map(|(a, b)| a + b).collect();
    normalize(&moved)
}

/// Uniform point on `S^{m−1}`: a normalized standard normal vector.
pub fn sample_sphere<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        if let Some(u) = normalize(&v) {
            return u;
        }
    }
}

/// `r` independent uniform points, redrawn until no pair collides.
pub fn random_configuration<R: Rng + ?Sized>(r: usize, m: usize, rng: &mut R, q: &GramMatrix) -> Result<Configuration> {
    if r == 0 || m == 0 {
        return Err(GeneoError::Dimension("r and m must be positive".into()));
    }
    if m != q.dim() {
        return Err(GeneoError::Dimension(format!("m = {m} but Q is {}x{}", q.dim(), q.dim())));
    }
    for _ in 0..MAX_RESAMPLES {
        let points: Vec<Vec<f64>> = (0..r).map(|_| sample_sphere(m, rng)).collect();
        if pair_distances(&points, q).is_ok() {
            return Configuration::new(points);
        }
    }
    Err(GeneoError::PersistentCollision(MAX_RESAMPLES))
}

/// `min_i d(u, u_i) / min_j d(u, u_j⁰)` over the optimized and baseline sets.
pub fn eta(u: &[f64], optimized: &Configuration, baseline: &Configuration, q: &GramMatrix) -> Result<f64> {
    check_dims(optimized.points(), q)?;
    check_dims(baseline.points(), q)?;
    if u.len() != q.dim() {
        return Err(GeneoError::Dimension(format!("evaluation point has {} coordinates", u.len())));
    }
    let nearest = |cfg: &Configuration| {
        cfg.points().iter().enumerate().map(|(i, p)| (i, q.distance_sq(u, p))).fold((0, f64::INFINITY), |acc, x| {
            if x.1 < acc.1 {
                x
            } else {
                acc
            }
        })
    };
    let (_, num) = nearest(optimized);
    let (j, den) = nearest(baseline);
    let guard = collision_guard(q);
    if !(den > guard) {
        return Err(GeneoError::Collision { i: usize::MAX, j, dist: den, guard });
    }
    Ok(num / den)
}

/// Line search and stopping parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    /// Stop once the largest per-point Riemannian gradient norm is below this.
    pub tol: f64,
    /// Cap on energy evaluations, line-search trials included.
    pub max_evals: usize,
    pub initial_step: f64,
    pub shrink: f64,
    pub sufficient_decrease: f64,
    /// Each line search starts from `growth` times the last accepted step.
    pub growth: f64,
    /// Backtracks allowed in a single line search before declaring a stall.
    pub max_backtracks: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_evals: 3000,
            initial_step: 1.0,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            growth: 2.0,
            max_backtracks: 80,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ToleranceMet,
    MaxEvals,
    Stalled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub initial: Configuration,
    #[serde(rename = "final")]
    pub final_config: Configuration,
    /// Energy of every accepted iterate, starting with the initial configuration.
    pub energy_trace: Vec<f64>,
    /// Largest per-point Riemannian gradient norm at the final iterate.
    pub grad_norm: f64,
    pub evals: usize,
    pub iterations: usize,
    pub termination: Termination,
    pub seed: Option<u64>,
}

impl SelectionResult {
    pub fn final_energy(&self) -> f64 {
        *self.energy_trace.last().expect("trace holds the initial energy")
    }
}

fn max_norm(vectors: &[Vec<f64>]) -> f64 {
    vectors.iter().map(|v| dot(v, v).sqrt()).fold(0.0, f64::max)
}

/// Riemannian gradient descent with backtracking Armijo line search.
///
/// Iterates stay on the spheres by construction. A trial step that makes two
/// points collide counts as a failed trial and the step is shrunk.
pub fn optimize(cfg0: &Configuration, q: &GramMatrix, opts: &OptimizerOptions) -> Result<SelectionResult> {
    if opts.max_evals == 0 {
        return Err(GeneoError::Dimension("max_evals must be positive".into()));
    }
    let mut x = cfg0.clone();
    let mut e = energy(&x, q)?;
    let mut evals = 1;
    let mut trace = vec![e];
    let mut step = opts.initial_step;
    let mut iterations = 0;

    let finish = |x: Configuration, trace: Vec<f64>, grad_norm, evals, iterations, termination| SelectionResult {
        initial: cfg0.clone(),
        final_config: x,
        energy_trace: trace,
        grad_norm,
        evals,
        iterations,
        termination,
        seed: None,
    };

    loop {
        let rgrad = riemannian_gradient(&x, &energy_gradient(&x, q)?);
        let grad_norm = max_norm(&rgrad);
        if grad_norm < opts.tol {
            return Ok(finish(x, trace, grad_norm, evals, iterations, Termination::ToleranceMet));
        }
        if evals >= opts.max_evals {
            return Ok(finish(x, trace, grad_norm, evals, iterations, Termination::MaxEvals));
        }
        let slope = ordered_sum(rgrad.iter().map(|g| dot(g, g)).collect());

        let mut alpha = step;
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            if evals >= opts.max_evals {
                return Ok(finish(x, trace, grad_norm, evals, iterations, Termination::MaxEvals));
            }
            let trial: Option<Vec<Vec<f64>>> = x
                .points
                .iter()
                .zip(&rgrad)
                .map(|(u, g)| retract(u, &g.iter().map(|v| -alpha * v).collect::<Vec<_>>()))
                .collect();
            let Some(points) = trial else {
                alpha *= opts.shrink;
                continue;
            };
            evals += 1;
            match energy_of_points(&points, q) {
                Ok(et) if et <= e - opts.sufficient_decrease * alpha * slope => {
                    accepted = Some((Configuration { points }, et));
                    break;
                }
                Ok(_) | Err(GeneoError::Collision { .. }) => alpha *= opts.shrink,
                Err(other) => return Err(other),
            }
        }
        match accepted {
            Some((next, et)) => {
                x = next;
                e = et;
                trace.push(e);
                iterations += 1;
                step = alpha * opts.growth;
            }
            None => return Ok(finish(x, trace, grad_norm, evals, iterations, Termination::Stalled)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn circle(r: usize, offset: f64) -> Configuration {
        let pts = (0..r)
            .map(|i| {
                let th = offset + std::f64::consts::TAU * i as f64 / r as f64;
                vec![th.cos(), th.sin()]
            })
            .collect();
        Configuration::new(pts).unwrap()
    }

    #[test]
    fn antipodal_energy() {
        let q = GramMatrix::identity(2);
        let cfg = Configuration::new(vec![vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        assert_eq!(energy(&cfg, &q).unwrap(), 0.25);
        let scaled = q.scaled(3.0);
        assert!((energy(&cfg, &scaled).unwrap() - 0.25 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn coincident_points_collide() {
        let q = GramMatrix::identity(2);
        let cfg = Configuration::new(vec![vec![0.6, 0.8], vec![0.6, 0.8]]).unwrap();
        assert!(matches!(energy(&cfg, &q), Err(GeneoError::Collision { i: 0, j: 1, .. })));
        assert!(energy_gradient(&cfg, &q).is_err());
    }

    #[test]
    fn antipodal_is_stationary() {
        let q = GramMatrix::identity(2);
        let cfg = Configuration::new(vec![vec![0.6, 0.8], vec![-0.6, -0.8]]).unwrap();
        let g = energy_gradient(&cfg, &q).unwrap();
        // Purely radial.
        assert!((g[0][0] * 0.8 - g[0][1] * 0.6).abs() < 1e-15);
        let rg = riemannian_gradient(&cfg, &g);
        assert!(max_norm(&rg) < 1e-15);
        let res = optimize(&cfg, &q, &OptimizerOptions::default()).unwrap();
        assert_eq!(res.evals, 1);
        assert_eq!(res.termination, Termination::ToleranceMet);
        assert_eq!(res.iterations, 0);
    }

    #[test]
    fn projection_and_retraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let u = sample_sphere(4, &mut rng);
            let cfg = Configuration::new(vec![u.clone()]).unwrap();
            let radial = vec![u.iter().map(|v| 3.0 * v).collect::<Vec<_>>()];
            assert!(max_norm(&riemannian_gradient(&cfg, &radial)) < 1e-15);
            let g: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let p = &riemannian_gradient(&cfg, &[g])[0];
            assert!(dot(p, &u).abs() <= 1e-12);
            let moved = retract(&u, p).unwrap();
            assert!((dot(&moved, &moved).sqrt() - 1.0).abs() <= UNIT_TOLERANCE);
        }
        let u = vec![0.6, 0.8];
        assert_eq!(retract(&u, &[0.0, 0.0]).unwrap(), u);
        assert!(retract(&u, &[-0.6, -0.8]).is_none());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let q = GramMatrix::from_matrix(DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 0.5]))
            .unwrap();
        for _ in 0..5 {
            let cfg = random_configuration(5, 3, &mut rng, &q).unwrap();
            let g = energy_gradient(&cfg, &q).unwrap();
            let h = 1e-6;
            for i in 0..5 {
                for t in 0..3 {
                    let mut plus = cfg.points().to_vec();
                    let mut minus = cfg.points().to_vec();
                    plus[i][t] += h;
                    minus[i][t] -= h;
                    let fd = (energy_of_points(&plus, &q).unwrap() - energy_of_points(&minus, &q).unwrap()) / (2.0 * h);
                    assert!((fd - g[i][t]).abs() <= 1e-5 * g[i][t].abs().max(1.0), "{fd} vs {}", g[i][t]);
                }
            }
        }
    }

    #[test]
    fn permutation_and_sign_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let q = GramMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[1.5, 0.4, 0.4, 0.7])).unwrap();
        let cfg = random_configuration(6, 2, &mut rng, &q).unwrap();
        let e = energy(&cfg, &q).unwrap();
        let mut perm = cfg.points().to_vec();
        perm.rotate_left(2);
        perm.swap(0, 3);
        let pcfg = Configuration::new(perm.clone()).unwrap();
        assert_eq!(energy(&pcfg, &q).unwrap(), e);
        let flipped =
            Configuration::new(cfg.points().iter().map(|p| p.iter().map(|v| -v).collect()).collect()).unwrap();
        assert_eq!(energy(&flipped, &q).unwrap(), e);

        let g = energy_gradient(&cfg, &q).unwrap();
        let pg = energy_gradient(&pcfg, &q).unwrap();
        for (p, pt) in perm.iter().enumerate() {
            let orig = cfg.points().iter().position(|c| c == pt).unwrap();
            for t in 0..2 {
                assert!((pg[p][t] - g[orig][t]).abs() <= 1e-12 * g[orig][t].abs().max(1.0));
            }
        }
    }

    #[test]
    fn two_points_converge_to_antipodes() {
        let q = GramMatrix::identity(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = random_configuration(2, 2, &mut rng, &q).unwrap();
        let res = optimize(&cfg, &q, &OptimizerOptions::default()).unwrap();
        assert_eq!(res.termination, Termination::ToleranceMet);
        assert!((res.final_energy() - 0.25).abs() < 1e-6);
        assert!(res.energy_trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(res.final_config.max_unit_error() <= UNIT_TOLERANCE);
    }

    #[test]
    fn ten_points_spread_evenly() {
        let q = GramMatrix::identity(2);
        let target = energy(&circle(10, 0.3), &q).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cfg = random_configuration(10, 2, &mut rng, &q).unwrap();
        let res = optimize(&cfg, &q, &OptimizerOptions::default()).unwrap();
        assert!((res.final_energy() - target).abs() <= 1e-3 * target, "{} vs {target}", res.final_energy());
    }

    #[test]
    fn eval_cap_is_exact() {
        let q = GramMatrix::identity(2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = random_configuration(12, 2, &mut rng, &q).unwrap();
        let opts = OptimizerOptions { max_evals: 7, ..Default::default() };
        let res = optimize(&cfg, &q, &opts).unwrap();
        assert_eq!(res.termination, Termination::MaxEvals);
        assert_eq!(res.evals, 7);
    }

    #[test]
    fn sphere_sampling() {
        let mut a = ChaCha8Rng::seed_from_u64(77);
        let mut b = ChaCha8Rng::seed_from_u64(77);
        assert_eq!(sample_sphere(5, &mut a), sample_sphere(5, &mut b));

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut mean = [0.0; 3];
        let count = 10_000;
        for _ in 0..count {
            let u = sample_sphere(3, &mut rng);
            for t in 0..3 {
                mean[t] += u[t] / count as f64;
            }
        }
        assert!(mean.iter().all(|m| m.abs() < 0.05), "{mean:?}");
    }

    #[test]
    fn circle_angles_are_uniform() {
        // Kolmogorov–Smirnov statistic against the uniform law on [0, 2π).
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let count = 5000;
        let cfg = Configuration::new((0..count).map(|_| sample_sphere(2, &mut rng)).collect()).unwrap();
        let mut angles = cfg.angles();
        angles.sort_by(f64::total_cmp);
        let ks = angles
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let cdf = a / std::f64::consts::TAU;
                (cdf - i as f64 / count as f64).abs().max((cdf - (i + 1) as f64 / count as f64).abs())
            })
            .fold(0.0, f64::max);
        // 1% critical value is about 1.63 / sqrt(count).
        assert!(ks < 1.63 / (count as f64).sqrt(), "KS = {ks}");
    }

    #[test]
    fn random_configuration_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let q = GramMatrix::identity(2);
        assert!(random_configuration(0, 2, &mut rng, &q).is_err());
        assert!(random_configuration(3, 3, &mut rng, &q).is_err());
        // A zero Gram matrix makes every pair collide.
        let zero = GramMatrix::from_matrix(DMatrix::zeros(2, 2)).unwrap();
        assert!(matches!(random_configuration(3, 2, &mut rng, &zero), Err(GeneoError::PersistentCollision(_))));
    }

    #[test]
    fn eta_examples() {
        let q = GramMatrix::identity(2);
        let a = circle(4, 0.0);
        let b = circle(4, 0.4);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..20 {
            let u = sample_sphere(2, &mut rng);
            assert_eq!(eta(&u, &a, &a, &q).unwrap(), 1.0);
        }
        assert_eq!(eta(a.point(1), &a, &b, &q).unwrap(), 0.0);
        assert!(eta(b.point(0), &a, &b, &q).is_err());
    }
}
