//! The full selection experiment: Gram matrix, random baselines, optimized
//! sets, and η evaluation over several seeds and set sizes.

use std::fmt::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::plot::{circle_svg, Panel};
use super::{eta, optimize, random_configuration, sample_sphere, Configuration, OptimizerOptions, Termination};
use crate::error::{GeneoError, Result};
use crate::geneo::{gram_matrix, GramMatrix, ShiftBasis};
use crate::grid::WeightedSignalSpace;
use crate::sum::ordered_sum;

/// Stream reserved for the evaluation set; set sizes use their own value of `r`.
const EVAL_STREAM: u64 = 0;
/// Draws allowed per evaluation point before giving up.
const EVAL_RESAMPLES: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub k: Vec<u32>,
    pub h: Vec<u32>,
    /// Sizes of the selected sets.
    pub rs: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Size of the random evaluation set.
    pub eval_count: usize,
    pub options: OptimizerOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            k: vec![1, 2],
            h: vec![1, 2],
            rs: vec![10, 20],
            seeds: (1..=5).collect(),
            eval_count: 100,
            options: OptimizerOptions::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn m(&self) -> usize {
        self.k.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.k.is_empty() || self.k.len() != self.h.len() {
            return Err(GeneoError::Dimension("k and h must be nonempty and of equal length".into()));
        }
        if self.rs.is_empty() || self.rs.iter().any(|&r| r < 2) {
            return Err(GeneoError::Dimension("every r must be at least 2".into()));
        }
        if self.seeds.is_empty() {
            return Err(GeneoError::Empty("seed list"));
        }
        if self.eval_count == 0 {
            return Err(GeneoError::Empty("evaluation set"));
        }
        Ok(())
    }
}

/// One optimization run for a given `(r, seed)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub r: usize,
    pub seed: u64,
    pub initial: Vec<Vec<f64>>,
    #[serde(rename = "final")]
    pub final_points: Vec<Vec<f64>>,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub energy_trace: Vec<f64>,
    pub evals: usize,
    pub iterations: usize,
    pub termination: Termination,
    pub grad_norm: f64,
    pub mean_eta: f64,
    pub median_eta: f64,
    /// Share of evaluation points with `η < 1`.
    pub below_one_fraction: f64,
    pub etas: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub r: usize,
    /// Mean over seeds of the per-seed mean η.
    pub grand_mean_eta: f64,
    pub min_mean_eta: f64,
    pub max_mean_eta: f64,
    pub all_below_one: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: String,
    pub dataset: String,
    pub n: usize,
    pub config: ExperimentConfig,
    pub weights: Vec<f64>,
    pub gram: Vec<Vec<f64>>,
    /// Shared by every `r` for a given seed; indexed like `config.seeds`.
    pub evaluation_sets: Vec<Vec<Vec<f64>>>,
    pub runs: Vec<RunRecord>,
    pub summary: Vec<SizeSummary>,
}

impl ExperimentReport {
    /// Rows `r,seed,final_energy,evals,mean_eta,median_eta,below_one_fraction`.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("r,seed,final_energy,evals,mean_eta,median_eta,below_one_fraction\n");
        for run in &self.runs {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                run.r, run.seed, run.final_energy, run.evals, run.mean_eta, run.median_eta, run.below_one_fraction
            );
        }
        out
    }

    /// Rows `r,seed,set,index,angle` with `set` either `initial` or `final`; `m = 2` only.
    pub fn angles_csv(&self) -> Option<String> {
        if self.config.m() != 2 {
            return None;
        }
        let mut out = String::from("r,seed,set,index,angle\n");
        for run in &self.runs {
            for (set, pts) in [("initial", &run.initial), ("final", &run.final_points)] {
                for (i, p) in pts.iter().enumerate() {
                    let a = p[1].atan2(p[0]).rem_euclid(std::f64::consts::TAU);
                    let _ = writeln!(out, "{},{},{set},{i},{a}", run.r, run.seed);
                }
            }
        }
        Some(out)
    }

    /// Circle plot for one seed: one row per `r`, baseline on the left and
    /// optimized set on the right. `m = 2` only.
    pub fn circle_svg(&self, seed: u64) -> Option<String> {
        if self.config.m() != 2 {
            return None;
        }
        let angles = |pts: &[Vec<f64>]| -> Vec<f64> {
            pts.iter().map(|p| p[1].atan2(p[0]).rem_euclid(std::f64::consts::TAU)).collect()
        };
        let mut panels = Vec::new();
        for run in self.runs.iter().filter(|run| run.seed == seed) {
            panels.push(Panel { title: format!("M0_{} (seed {})", run.r, seed), angles: angles(&run.initial) });
            panels.push(Panel { title: format!("M_{} (seed {})", run.r, seed), angles: angles(&run.final_points) });
        }
        if panels.is_empty() {
            return None;
        }
        Some(circle_svg(&panels, 2))
    }
}

/// The evaluation set for a seed; identical for every `r`.
fn evaluation_set(seed: u64, count: usize, m: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(EVAL_STREAM);
    (0..count).map(|_| sample_sphere(m, &mut rng)).collect()
}

fn single_run(
    q: &GramMatrix,
    r: usize,
    seed: u64,
    eval_set: &[Vec<f64>],
    options: &OptimizerOptions,
) -> Result<RunRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r as u64);
    let m = q.dim();
    let baseline = random_configuration(r, m, &mut rng, q)?;
    let mut result = optimize(&baseline, q, options)?;
    result.seed = Some(seed);

    let mut etas = Vec::with_capacity(eval_set.len());
    for u in eval_set {
        let mut point = u.clone();
        let mut value = eta(&point, &result.final_config, &baseline, q);
        let mut tries = 0;
        while matches!(value, Err(GeneoError::Collision { .. })) && tries < EVAL_RESAMPLES {
            point = sample_sphere(m, &mut rng);
            value = eta(&point, &result.final_config, &baseline, q);
            tries += 1;
        }
        etas.push(value?);
    }
    let mean_eta = ordered_sum(etas.clone()) / etas.len() as f64;
    let mut sorted = etas.clone();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median_eta = if sorted.len() % 2 == 1 { sorted[mid] } else { 0.5 * (sorted[mid - 1] + sorted[mid]) };
    let below_one_fraction = etas.iter().filter(|&&e| e < 1.0).count() as f64 / etas.len() as f64;
    Ok(RunRecord {
        r,
        seed,
        initial: baseline.points().to_vec(),
        final_points: result.final_config.points().to_vec(),
        initial_energy: result.energy_trace[0],
        final_energy: result.final_energy(),
        energy_trace: result.energy_trace,
        evals: result.evals,
        iterations: result.iterations,
        termination: result.termination,
        grad_norm: result.grad_norm,
        mean_eta,
        median_eta,
        below_one_fraction,
        etas,
    })
}

/// Evaluation sets (one per seed) and run records.
pub type Runs = (Vec<Vec<Vec<f64>>>, Vec<RunRecord>);

/// Runs every `(r, seed)` pair against a precomputed Gram matrix.
///
/// Runs execute in parallel; the output order is `config.rs` × `config.seeds`.
pub fn run_with_gram(q: &GramMatrix, config: &ExperimentConfig) -> Result<Runs> {
    config.validate()?;
    if q.dim() != config.m() {
        return Err(GeneoError::Dimension(format!("Q is {}x{}, m = {}", q.dim(), q.dim(), config.m())));
    }
    let eval_sets: Vec<Vec<Vec<f64>>> =
        config.seeds.iter().map(|&s| evaluation_set(s, config.eval_count, config.m())).collect();
    let jobs: Vec<(usize, usize)> =
        config.rs.iter().flat_map(|&r| (0..config.seeds.len()).map(move |si| (r, si))).collect();
    let runs = jobs
        .par_iter()
        .map(|&(r, si)| single_run(q, r, config.seeds[si], &eval_sets[si], &config.options))
        .collect::<Result<Vec<_>>>()?;
    Ok((eval_sets, runs))
}

fn summarize(config: &ExperimentConfig, runs: &[RunRecord]) -> Vec<SizeSummary> {
    config
        .rs
        .iter()
        .map(|&r| {
            let means: Vec<f64> = runs.iter().filter(|run| run.r == r).map(|run| run.mean_eta).collect();
            SizeSummary {
                r,
                grand_mean_eta: ordered_sum(means.clone()) / means.len() as f64,
                min_mean_eta: means.iter().copied().fold(f64::INFINITY, f64::min),
                max_mean_eta: means.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                all_below_one: means.iter().all(|&v| v < 1.0),
            }
        })
        .collect()
}

/// Builds the Gram matrix of the family on `space` and runs the experiment.
pub fn run_experiment(
    space: &WeightedSignalSpace,
    dataset: &str,
    config: &ExperimentConfig,
) -> Result<ExperimentReport> {
    config.validate()?;
    let basis = ShiftBasis::new(space.grid(), config.k.clone(), config.h.clone())?;
    let q = gram_matrix(&basis, space)?;
    let (evaluation_sets, runs) = run_with_gram(&q, config)?;
    let summary = summarize(config, &runs);
    let m = q.dim();
    Ok(ExperimentReport {
        version: crate::VERSION.to_string(),
        dataset: dataset.to_string(),
        n: space.grid().n(),
        config: config.clone(),
        weights: space.weights().to_vec(),
        gram: (0..m).map(|a| (0..m).map(|b| q.get(a, b)).collect()).collect(),
        evaluation_sets,
        runs,
        summary,
    })
}

/// Rebuilds a [`Configuration`] from a record's final points.
pub fn final_configuration(run: &RunRecord) -> Result<Configuration> {
    Configuration::new(run.final_points.clone())
}
