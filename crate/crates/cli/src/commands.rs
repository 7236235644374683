use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use anyhow::{bail, Result};
use geneo_core::geneo::{
    check_equivariance, check_nonexpansive, convex_combo, gram_matrix, op_norm_l2, random_signal_pairs, space_pairs,
    IdentityHomomorphism, LinearCombination, Operator, OperatorContext, ShiftBasis, ShiftMixtureGeneo,
};
use geneo_core::group::{enumerate_group, orbit_closure, random_element, translations};
use geneo_core::ingest::letter_of;
use geneo_core::metrics::{
    check_pseudometric, greedy_epsilon_net, group_table, site_table, AxiomReport, GroupMetric, PseudoMetricTable,
    SiteMetric, TRIANGLE_SLACK,
};
use geneo_core::select::experiment::{run_experiment, ExperimentConfig, ExperimentReport};
use geneo_core::select::{sample_sphere, OptimizerOptions};
use geneo_core::{Axis, GridIsometry, Signal, VERSION};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::args::{DataArgs, MetricsArgs, NetArgs, SelectArgs, VerifyArgs};
use crate::data::{load_space, resolve_family, DatasetInfo};
use crate::output::{write_atomic, write_json};
use crate::{UsageError, VerificationFailed};

const NONEXPANSIVE_TOL: f64 = 1e-12;
const EQUIVARIANCE_TOL: f64 = 1e-12;
const GRAM_REL_TOL: f64 = 1e-10;
/// Largest group `verify --group-full` accepts (n = 4).
const FULL_GROUP_LIMIT: usize = 128;

#[derive(Serialize)]
struct SelectOutput<'a> {
    version: &'static str,
    run_config: &'a SelectArgs,
    dataset: &'a DatasetInfo,
    report: &'a ExperimentReport,
}

pub fn select(args: &SelectArgs) -> Result<()> {
    let (k, h) = resolve_family(&args.family)?;
    if args.seeds.is_empty() {
        bail!(UsageError("--seeds must not be empty".into()));
    }
    if args.eval_count == 0 || args.max_evals == 0 || !(args.tol > 0.0) {
        bail!(UsageError("--eval-count, --max-evals and --tol must be positive".into()));
    }
    let (space, info) = load_space(&args.data)?;
    if info.weights_renormalized {
        eprintln!("notice: weights did not sum to 1 and were renormalized");
    }
    let config = ExperimentConfig {
        k,
        h,
        rs: args.r.iter().map(|&r| r as usize).collect(),
        seeds: args.seeds.clone(),
        eval_count: args.eval_count,
        options: OptimizerOptions { tol: args.tol, max_evals: args.max_evals, ..OptimizerOptions::default() },
    };
    let report = run_experiment(&space, &info.source, &config)?;

    let out = &args.out;
    write_json(
        out,
        "report.json",
        &SelectOutput { version: VERSION, run_config: args, dataset: &info, report: &report },
    )?;
    write_atomic(out, "summary.csv", report.summary_csv().as_bytes())?;
    if let Some(angles) = report.angles_csv() {
        write_atomic(out, "angles.csv", angles.as_bytes())?;
    }
    for &seed in &config.seeds {
        if let Some(svg) = report.circle_svg(seed) {
            write_atomic(out, &format!("circles_seed{seed}.svg"), svg.as_bytes())?;
        }
    }

    println!("dataset: {} (n = {}, {} signals, weights: {})", info.source, info.n, info.signals, info.weights);
    println!("k = {:?}, h = {:?}", config.k, config.h);
    for run in &report.runs {
        println!(
            "r={:<3} seed={:<4} energy {:.6e} -> {:.6e}  evals={:<5} {:?}  mean_eta={:.4} median_eta={:.4}",
            run.r,
            run.seed,
            run.initial_energy,
            run.final_energy,
            run.evals,
            run.termination,
            run.mean_eta,
            run.median_eta
        );
    }
    for s in &report.summary {
        println!(
            "r={}: grand mean eta {:.4} (per-seed range {:.4} .. {:.4}), all below 1: {}",
            s.r, s.grand_mean_eta, s.min_mean_eta, s.max_mean_eta, s.all_below_one
        );
    }
    println!("reports written to {}", out.display());
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
enum Status {
    Pass,
    Fail,
    /// Measured and reported, not asserted.
    Info,
}

#[derive(Debug, Serialize)]
struct Property {
    name: String,
    status: Status,
    worst: f64,
    tolerance: f64,
    detail: String,
}

impl Property {
    fn new(name: &str, asserted: bool, passed: bool, worst: f64, tolerance: f64, detail: String) -> Self {
        let status = match (asserted, passed) {
            (false, _) => Status::Info,
            (true, true) => Status::Pass,
            (true, false) => Status::Fail,
        };
        Self { name: name.into(), status, worst, tolerance, detail }
    }

    fn axioms(name: &str, report: &AxiomReport) -> Self {
        Self::new(
            name,
            true,
            report.passed(),
            report.worst_excess,
            report.slack,
            format!("{} points, {} violations", report.points, report.violation_count),
        )
    }
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    version: &'static str,
    run_config: &'a VerifyArgs,
    dataset: &'a DatasetInfo,
    properties: &'a [Property],
    passed: bool,
}

fn random_operators(basis: &Arc<ShiftBasis>, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Arc<dyn Operator>>> {
    (0..count)
        .map(|_| {
            let u = sample_sphere(basis.m(), rng);
            Ok(Arc::new(ShiftMixtureGeneo::new(basis.clone(), u)?) as Arc<dyn Operator>)
        })
        .collect()
}

fn inject(ops: Vec<Arc<dyn Operator>>, scale: Option<f64>) -> Vec<Arc<dyn Operator>> {
    match scale {
        Some(c) => ops.into_iter().map(|op| Arc::new(LinearCombination::scaled(op, c)) as Arc<dyn Operator>).collect(),
        None => ops,
    }
}

fn equivariance(
    name: &str,
    asserted: bool,
    ops: &[Arc<dyn Operator>],
    elements: &[GridIsometry],
    signals: &[Signal],
) -> Result<Property> {
    let mut worst = 0.0f64;
    let mut worst_element = None;
    let mut checks = 0;
    for op in ops {
        let rep = check_equivariance(op.as_ref(), elements, signals, &IdentityHomomorphism, EQUIVARIANCE_TOL)?;
        checks += rep.checks;
        if rep.max_defect > worst || worst_element.is_none() {
            worst = worst.max(rep.max_defect);
            worst_element = rep.worst_element;
        }
    }
    Ok(Property::new(
        name,
        asserted,
        worst <= EQUIVARIANCE_TOL,
        worst,
        EQUIVARIANCE_TOL,
        format!("{checks} checks, worst element {}", worst_element.unwrap_or_default()),
    ))
}

/// Closure under composition and inverses, checked by brute force.
fn group_axioms(elements: &[GridIsometry]) -> Result<Property> {
    let perms: HashSet<&[usize]> = elements.iter().map(|g| g.perm()).collect();
    let mut failures = 0usize;
    for a in elements {
        if !perms.contains(a.inverse().perm()) {
            failures += 1;
        }
        for b in elements {
            if !perms.contains(a.compose(b)?.perm()) {
                failures += 1;
            }
        }
    }
    let has_identity = elements.iter().any(|g| g.is_identity());
    Ok(Property::new(
        "group_axioms",
        true,
        failures == 0 && has_identity && perms.len() == elements.len(),
        failures as f64,
        0.0,
        format!("{} elements, {failures} closure failures, identity present: {has_identity}", elements.len()),
    ))
}

fn entrywise_bound(name: &str, lower: &PseudoMetricTable, upper: &PseudoMetricTable, factor: f64) -> Property {
    let mut worst = f64::NEG_INFINITY;
    for a in 0..lower.len() {
        for b in 0..lower.len() {
            worst = worst.max(lower.get(a, b) - factor * upper.get(a, b));
        }
    }
    Property::new(name, true, worst <= TRIANGLE_SLACK, worst, TRIANGLE_SLACK, format!("factor {factor}"))
}

/// Largest `|Δ(g1 g3, g2 g3) − Δ(g1, g2)|` over all triples (or with `g3` on
/// the left), read from the table of a group closed under composition.
fn invariance_defect(elements: &[GridIsometry], table: &PseudoMetricTable, left: bool) -> Result<f64> {
    let index: HashMap<&[usize], usize> = elements.iter().enumerate().map(|(i, g)| (g.perm(), i)).collect();
    let mut products = vec![vec![0usize; elements.len()]; elements.len()];
    for (a, g) in elements.iter().enumerate() {
        for (c, h) in elements.iter().enumerate() {
            let p = if left { h.compose(g)? } else { g.compose(h)? };
            products[a][c] = *index.get(p.perm()).ok_or_else(|| anyhow::anyhow!("element set is not closed"))?;
        }
    }
    let mut worst = 0.0f64;
    for a in 0..elements.len() {
        for b in 0..elements.len() {
            for (pa, pb) in products[a].iter().zip(&products[b]) {
                worst = worst.max((table.get(*pa, *pb) - table.get(a, b)).abs());
            }
        }
    }
    Ok(worst)
}

pub fn verify(args: &VerifyArgs) -> Result<()> {
    let (k, h) = resolve_family(&args.family)?;
    if args.trials == 0 || args.operators == 0 {
        bail!(UsageError("--trials and --operators must be positive".into()));
    }
    let (space, info) = load_space(&args.data)?;
    let grid = space.grid();
    let basis = Arc::new(ShiftBasis::new(grid, k, h)?);
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut props = Vec::new();

    let ctx = OperatorContext::endomorphisms(space.clone());
    let sample_pairs: Vec<(GridIsometry, GridIsometry)> =
        (0..16).map(|_| (random_element(grid, &mut rng), random_element(grid, &mut rng))).collect();
    let hom_ok = ctx.check_homomorphism(&sample_pairs)?;
    props.push(Property::new("homomorphism", true, hom_ok, 0.0, 0.0, "T = identity".into()));

    let q = gram_matrix(&basis, &space)?;
    let min_eig = q.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
    props.push(Property::new(
        "gram_psd",
        true,
        q.is_psd() && q.is_symmetric(1e-12 * q.trace().max(1.0)),
        min_eig,
        0.0,
        format!("smallest eigenvalue {min_eig:e}, trace {:e}", q.trace()),
    ));

    let mut gram_worst = 0.0f64;
    for _ in 0..20 {
        let u = sample_sphere(basis.m(), &mut rng);
        let v = sample_sphere(basis.m(), &mut rng);
        let fu: Arc<dyn Operator> = Arc::new(ShiftMixtureGeneo::new(basis.clone(), u.clone())?);
        let fv: Arc<dyn Operator> = Arc::new(ShiftMixtureGeneo::new(basis.clone(), v.clone())?);
        let direct = op_norm_l2(&LinearCombination::difference(fu, fv)?, &ctx)?.powi(2);
        let quad = q.distance_sq(&u, &v);
        gram_worst = gram_worst.max((direct - quad).abs() / direct.abs().max(quad.abs()).max(f64::MIN_POSITIVE));
    }
    props.push(Property::new(
        "gram_identity",
        true,
        gram_worst <= GRAM_REL_TOL,
        gram_worst,
        GRAM_REL_TOL,
        "20 random pairs, relative error".into(),
    ));

    let ops = inject(random_operators(&basis, args.operators, &mut rng)?, args.inject_scale);
    let mut pairs = random_signal_pairs(grid, args.trials, &mut rng);
    pairs.extend(space_pairs(&space));
    let mut worst_ratio = 0.0f64;
    let mut trials = 0;
    for op in &ops {
        let rep = check_nonexpansive(op.as_ref(), &pairs, NONEXPANSIVE_TOL)?;
        worst_ratio = worst_ratio.max(rep.max_ratio);
        trials += rep.trials;
    }
    props.push(Property::new(
        "nonexpansive",
        true,
        worst_ratio <= 1.0 + NONEXPANSIVE_TOL,
        worst_ratio,
        1.0 + NONEXPANSIVE_TOL,
        format!("{trials} trials over {} operators, max ratio", ops.len()),
    ));

    let probe: Vec<Signal> = space.signals().iter().take(3).cloned().collect();
    props.push(equivariance("equivariance_translations", true, &ops, &translations(grid), &probe)?);
    let reflections = [GridIsometry::reflection(grid, Axis::X), GridIsometry::reflection(grid, Axis::Y)];
    let reflections_asserted = basis.reflection_symmetric();
    let mut refl = equivariance("equivariance_reflections", reflections_asserted, &ops, &reflections, &probe)?;
    if !reflections_asserted {
        refl.detail.push_str("; not asserted: odd k or h makes the half-cell offsets asymmetric");
    }
    props.push(refl);
    let swap_asserted = basis.swap_symmetric();
    let mut swap = equivariance("equivariance_swap", swap_asserted, &ops, &[GridIsometry::swap_axes(grid)], &probe)?;
    if !swap_asserted {
        swap.detail.push_str("; not asserted: k differs from h");
    }
    props.push(swap);

    let base_ops = inject(random_operators(&basis, 6, &mut rng)?, args.inject_scale);
    let mut combos: Vec<Arc<dyn Operator>> = Vec::new();
    for pair in base_ops.chunks(2) {
        for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
            combos.push(Arc::new(convex_combo(pair[0].clone(), pair[1].clone(), t)?));
        }
    }
    let combo_pairs: Vec<_> = pairs.iter().take(40).cloned().collect();
    let mut combo_ratio = 0.0f64;
    for op in &combos {
        combo_ratio = combo_ratio.max(check_nonexpansive(op.as_ref(), &combo_pairs, NONEXPANSIVE_TOL)?.max_ratio);
    }
    let combo_equi = equivariance("convexity_equivariance", true, &combos, &translations(grid), &probe[..1])?;
    props.push(Property::new(
        "convexity_nonexpansive",
        true,
        combo_ratio <= 1.0 + NONEXPANSIVE_TOL,
        combo_ratio,
        1.0 + NONEXPANSIVE_TOL,
        format!("{} convex combinations", combos.len()),
    ));
    props.push(combo_equi);

    let dx = site_table(&space, SiteMetric::Delta)?;
    let mx = site_table(&space, SiteMetric::Max)?;
    props.push(Property::axioms("delta_x_axioms", &check_pseudometric(&dx, TRIANGLE_SLACK)));
    props.push(Property::axioms("dmax_x_axioms", &check_pseudometric(&mx, TRIANGLE_SLACK)));
    props.push(entrywise_bound("delta_x_le_dmax_x", &dx, &mx, 1.0));

    let (metric_space, elements) = if args.group_full {
        let elements = enumerate_group(grid, FULL_GROUP_LIMIT).map_err(|_| {
            UsageError(format!("--group-full checks every triple of elements; use n <= 4 (n = {})", grid.n()))
        })?;
        props.push(group_axioms(&elements)?);
        let ops_full = inject(random_operators(&basis, 2, &mut rng)?, args.inject_scale);
        let (mut kept, mut skipped) = (Vec::new(), Vec::new());
        for g in &elements {
            let d = g.descriptor().expect("enumerated elements carry descriptors");
            let ok = (!(d.flip_x || d.flip_y) || basis.reflection_symmetric()) && (!d.swap || basis.swap_symmetric());
            if ok {
                kept.push(g.clone())
            } else {
                skipped.push(g.clone())
            }
        }
        props.push(equivariance("equivariance_full_group", true, &ops_full, &kept, &probe)?);
        if !skipped.is_empty() {
            props.push(equivariance("equivariance_full_group_other", false, &ops_full, &skipped, &probe)?);
        }
        (orbit_closure(&space, &elements)?, elements)
    } else {
        let mut elements = vec![GridIsometry::identity(grid)];
        elements.extend((0..7).map(|_| random_element(grid, &mut rng)));
        (space.clone(), elements)
    };
    let dg = group_table(&metric_space, &elements, GroupMetric::Delta)?;
    let mg = group_table(&metric_space, &elements, GroupMetric::Max)?;
    props.push(Property::axioms("delta_g_axioms", &check_pseudometric(&dg, TRIANGLE_SLACK)));
    props.push(Property::axioms("dmax_g_axioms", &check_pseudometric(&mg, TRIANGLE_SLACK)));
    props.push(entrywise_bound("delta_g_le_n_dmax_g", &dg, &mg, grid.n() as f64));
    if args.group_full {
        let right = invariance_defect(&elements, &dg, false)?;
        let left = invariance_defect(&elements, &dg, true)?;
        props.push(Property::new("delta_g_right_invariance", true, right == 0.0, right, 0.0, "exact".into()));
        props.push(Property::new(
            "delta_g_left_invariance",
            true,
            left == 0.0,
            left,
            0.0,
            "exact, on the orbit closure of the space".into(),
        ));
    }

    let passed = props.iter().all(|p| p.status != Status::Fail);
    for p in &props {
        let tag = match p.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Info => "INFO",
        };
        println!("{tag} {:<28} worst={:.3e} tol={:.1e} {}", p.name, p.worst, p.tolerance, p.detail);
    }
    if let Some(out) = &args.out {
        write_json(
            out,
            "verify.json",
            &VerifyOutput { version: VERSION, run_config: args, dataset: &info, properties: &props, passed },
        )?;
    }
    if !passed {
        bail!(VerificationFailed(props.iter().filter(|p| p.status == Status::Fail).count()));
    }
    Ok(())
}

#[derive(Serialize)]
struct MetricsOutput<'a> {
    version: &'static str,
    run_config: &'a MetricsArgs,
    dataset: &'a DatasetInfo,
    group_elements: Vec<String>,
    delta_x: serde_json::Value,
    dmax_x: serde_json::Value,
    delta_g: serde_json::Value,
    dmax_g: serde_json::Value,
}

fn csv(table: &PseudoMetricTable) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    Ok(buf)
}

pub fn metrics(args: &MetricsArgs) -> Result<()> {
    let (space, info) = load_space(&args.data)?;
    let grid = space.grid();
    let elements = if args.group_full {
        enumerate_group(grid, args.group_budget)?
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        let mut elements = vec![GridIsometry::identity(grid)];
        elements.extend((1..args.group_sample.max(1)).map(|_| random_element(grid, &mut rng)));
        elements
    };
    let dx = site_table(&space, SiteMetric::Delta)?;
    let mx = site_table(&space, SiteMetric::Max)?;
    let dg = group_table(&space, &elements, GroupMetric::Delta)?;
    let mg = group_table(&space, &elements, GroupMetric::Max)?;
    let out = &args.out;
    write_atomic(out, "delta_x.csv", &csv(&dx)?)?;
    write_atomic(out, "dmax_x.csv", &csv(&mx)?)?;
    write_atomic(out, "delta_g.csv", &csv(&dg)?)?;
    write_atomic(out, "dmax_g.csv", &csv(&mg)?)?;
    write_json(
        out,
        "metrics.json",
        &MetricsOutput {
            version: VERSION,
            run_config: args,
            dataset: &info,
            group_elements: dg.labels().to_vec(),
            delta_x: dx.to_json(),
            dmax_x: mx.to_json(),
            delta_g: dg.to_json(),
            dmax_g: mg.to_json(),
        },
    )?;
    println!(
        "sites: {} (diameter delta_x {:.6e}, dmax_x {:.6e}); group elements: {} (diameter delta_g {:.6e}, dmax_g {:.6e})",
        dx.len(),
        dx.diameter(),
        mx.diameter(),
        dg.len(),
        dg.diameter(),
        mg.diameter()
    );
    println!("tables written to {}", out.display());
    Ok(())
}

#[derive(Serialize)]
struct NetOutput<'a> {
    version: &'static str,
    run_config: &'a NetArgs,
    dataset: &'a DatasetInfo,
    samples: Vec<Vec<f64>>,
    diameter: f64,
    net: geneo_core::metrics::EpsilonNet,
}

pub fn net(args: &NetArgs) -> Result<()> {
    if !(args.epsilon > 0.0) || !args.epsilon.is_finite() {
        bail!(UsageError(format!("--epsilon must be a positive number, got {}", args.epsilon)));
    }
    if args.samples == 0 {
        bail!(UsageError("--samples must be positive".into()));
    }
    let (k, h) = resolve_family(&args.family)?;
    let (space, info) = load_space(&args.data)?;
    let basis = ShiftBasis::new(space.grid(), k, h)?;
    let q = gram_matrix(&basis, &space)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let samples: Vec<Vec<f64>> = (0..args.samples).map(|_| sample_sphere(basis.m(), &mut rng)).collect();
    let labels = (0..samples.len()).map(|i| format!("u{i}")).collect();
    let table = geneo_core::metrics::build_table(&samples, labels, |a, b| Ok(q.distance_sq(a, b).max(0.0).sqrt()))?;
    let net = greedy_epsilon_net(&table, args.epsilon)?;
    println!("epsilon {} samples {} diameter {:.6e}", args.epsilon, samples.len(), table.diameter());
    println!("net size {} cover radius {:.6e}", net.indices.len(), net.cover_radius);
    for &i in &net.indices {
        let u = &samples[i];
        let coords: Vec<String> = u.iter().map(|x| format!("{x:.6}")).collect();
        println!("u{i} [{}]", coords.join(", "));
    }
    if let Some(out) = &args.out {
        write_json(
            out,
            "net.json",
            &NetOutput { version: VERSION, run_config: args, dataset: &info, diameter: table.diameter(), samples, net },
        )?;
    }
    Ok(())
}

pub fn ingest_check(args: &DataArgs) -> Result<()> {
    let (space, info) = load_space(args)?;
    if info.weights_renormalized {
        eprintln!("notice: weights did not sum to 1 and were renormalized");
    }
    println!("source: {}", info.source);
    println!("grid: {0}x{0}, signals: {1}, weights: {2}", info.n, info.signals, info.weights);
    let (lo, hi) = space
        .signals()
        .iter()
        .flat_map(|s| s.values().iter().copied())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    println!("value range: [{lo:.6e}, {hi:.6e}]");
    let mut min_gap = f64::INFINITY;
    for (a, b) in space_pairs(&space) {
        min_gap = min_gap.min(geneo_core::norm_v(&(&a - &b)));
    }
    if space.len() > 1 {
        println!("smallest pairwise distance: {min_gap:.6e}");
    }
    for (i, w) in space.weights().iter().enumerate() {
        let label = if space.len() == 26 { letter_of(i).to_string() } else { i.to_string() };
        println!("{label}\t{w:.6}");
    }
    Ok(())
}
