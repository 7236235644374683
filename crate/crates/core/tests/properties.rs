use std::sync::Arc;

use geneo_core::geneo::{
    check_nonexpansive, convex_combo, gram_matrix, op_norm_l2, LinearCombination, Operator, OperatorContext,
    ShiftBasis, ShiftMixtureGeneo,
};
use geneo_core::group::{enumerate_group, orbit_closure, DEFAULT_GROUP_BUDGET};
use geneo_core::ingest::{letter_of, parse_idx, serialize_idx, FrequencyTable, IdxData, IdxImageSet};
use geneo_core::metrics::{delta_g, delta_x};
use geneo_core::select::{energy_of_points, sample_sphere};
use geneo_core::{act, norm_inf, norm_v, Signal, TorusGrid, WeightedSignalSpace};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn signal(n: usize) -> impl Strategy<Value = Signal> {
    prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| Signal::new(TorusGrid::new(n).unwrap(), v).unwrap())
}

fn space(n: usize) -> impl Strategy<Value = WeightedSignalSpace> {
    prop::collection::vec((signal(n), 0.05f64..1.0), 1..4).prop_map(|items| {
        let (s, w): (Vec<_>, Vec<_>) = items.into_iter().unzip();
        WeightedSignalSpace::new(s, w).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn idx_round_trip(count in 0usize..4, rows in 1usize..6, cols in 1usize..6, seed in any::<u64>()) {
        let pixels: Vec<u8> = (0..count * rows * cols).map(|i| (seed.wrapping_mul(i as u64 + 1) >> 7) as u8).collect();
        let images = IdxData::Images(IdxImageSet::new(count, rows, cols, pixels.clone()).unwrap());
        prop_assert_eq!(parse_idx(&serialize_idx(&images)).unwrap(), images);
        let labels = IdxData::Labels(pixels);
        prop_assert_eq!(parse_idx(&serialize_idx(&labels)).unwrap(), labels);
    }

    #[test]
    fn frequency_normalization_is_idempotent(raw in prop::collection::vec(0.01f64..50.0, 26)) {
        let text: String = raw.iter().enumerate().map(|(c, w)| format!("{}={w}\n", letter_of(c))).collect();
        let once = FrequencyTable::parse(&text).unwrap();
        let again: String = once.entries().iter().map(|(c, w)| format!("{c}={w:e}\n")).collect();
        let twice = FrequencyTable::parse(&again).unwrap();
        for (a, b) in once.weights().iter().zip(twice.weights()) {
            prop_assert!((a - b).abs() <= 1e-15);
        }
        prop_assert!((once.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn group_action_preserves_norms_exactly(phi in signal(4), pick in 0usize..128) {
        let group = enumerate_group(phi.grid(), DEFAULT_GROUP_BUDGET).unwrap();
        let g = &group[pick % group.len()];
        let moved = act(&phi, g).unwrap();
        prop_assert_eq!(norm_v(&moved), norm_v(&phi));
        prop_assert_eq!(norm_inf(&moved), norm_inf(&phi));
    }

    #[test]
    fn group_acts_isometrically_on_sites_of_invariant_spaces(sp in space(3), pick in 0usize..72, a in 0usize..9, b in 0usize..9) {
        let grid = sp.grid();
        let group = enumerate_group(grid, DEFAULT_GROUP_BUDGET).unwrap();
        let closed = orbit_closure(&sp, &group).unwrap();
        let g = &group[pick % group.len()];
        let (x1, x2) = (grid.site(a), grid.site(b));
        let (y1, y2) = (grid.site(g.apply_index(a)), grid.site(g.apply_index(b)));
        prop_assert_eq!(delta_x(&closed, y1, y2).unwrap(), delta_x(&closed, x1, x2).unwrap());
    }

    #[test]
    fn delta_g_inverse_isometry(sp in space(3), i in 0usize..72, j in 0usize..72) {
        let group = enumerate_group(sp.grid(), DEFAULT_GROUP_BUDGET).unwrap();
        let closed = orbit_closure(&sp, &group).unwrap();
        let (g1, g2) = (&group[i], &group[j]);
        prop_assert_eq!(
            delta_g(&closed, &g1.inverse(), &g2.inverse()).unwrap(),
            delta_g(&closed, g1, g2).unwrap()
        );
    }

    #[test]
    fn family_members_are_nonexpansive(
        m in 1usize..5,
        seed in any::<u64>(),
        pairs in prop::collection::vec((signal(6), signal(6)), 1..6),
    ) {
        let grid = TorusGrid::new(6).unwrap();
        let k: Vec<u32> = (1..=m as u32).collect();
        let h: Vec<u32> = k.iter().rev().copied().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = ShiftMixtureGeneo::make(grid, sample_sphere(m, &mut rng), k, h).unwrap();
        prop_assert!(check_nonexpansive(&f, &pairs, 1e-12).unwrap().passed);
    }

    #[test]
    fn convex_combinations_stay_nonexpansive(
        t in 0.0f64..=1.0,
        seed in any::<u64>(),
        pairs in prop::collection::vec((signal(5), signal(5)), 1..6),
    ) {
        let grid = TorusGrid::new(5).unwrap();
        let basis = Arc::new(ShiftBasis::new(grid, vec![1, 3], vec![2, 2]).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f1: Arc<dyn Operator> = Arc::new(ShiftMixtureGeneo::new(basis.clone(), sample_sphere(2, &mut rng)).unwrap());
        let f2: Arc<dyn Operator> = Arc::new(ShiftMixtureGeneo::new(basis, sample_sphere(2, &mut rng)).unwrap());
        let f = convex_combo(f1, f2, t).unwrap();
        prop_assert!(check_nonexpansive(&f, &pairs, 1e-12).unwrap().passed);
    }

    #[test]
    fn gram_quadratic_form_matches_operator_distance(sp in space(5), seed in any::<u64>()) {
        let basis = Arc::new(ShiftBasis::new(sp.grid(), vec![1, 2, 3], vec![3, 1, 2]).unwrap());
        let q = gram_matrix(&basis, &sp).unwrap();
        prop_assert!(q.is_psd());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (u, v) = (sample_sphere(3, &mut rng), sample_sphere(3, &mut rng));
        let fu: Arc<dyn Operator> = Arc::new(ShiftMixtureGeneo::new(basis.clone(), u.clone()).unwrap());
        let fv: Arc<dyn Operator> = Arc::new(ShiftMixtureGeneo::new(basis, v.clone()).unwrap());
        let ctx = OperatorContext::endomorphisms(sp);
        let direct = op_norm_l2(&LinearCombination::difference(fu, fv).unwrap(), &ctx).unwrap().powi(2);
        let quad = q.distance_sq(&u, &v);
        prop_assert!((direct - quad).abs() <= 1e-10 * direct.max(quad).max(1e-300));
    }

    #[test]
    fn energy_is_invariant_under_relabeling(seed in any::<u64>(), r in 2usize..8, shift in 0usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = geneo_core::geneo::GramMatrix::identity(3);
        let pts: Vec<Vec<f64>> = (0..r).map(|_| sample_sphere(3, &mut rng)).collect();
        let mut rotated = pts.clone();
        rotated.rotate_left(shift % r);
        let negated: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|x| -x).collect()).collect();
        let e = energy_of_points(&pts, &q).unwrap();
        prop_assert_eq!(energy_of_points(&rotated, &q).unwrap(), e);
        prop_assert_eq!(energy_of_points(&negated, &q).unwrap(), e);
    }
}
