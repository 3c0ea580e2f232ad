mod common;

use aggseek::equilibrium::{aggregation_map, best_response, solve_equilibrium, vi_gap, SolverConfig};
use aggseek::flow::{integrate, step, IntegratorConfig};
use aggseek::geometry::ConvexSet;
use aggseek::linalg::{dot, norm2, Matrix};
use aggseek::lyapunov::{
    broadcast_input, check_gain_condition, compare_conditions, decay_report, lambda_min_dense,
    lambda_min_reduced, m_matrix, storage_inequality_check, MVariant,
};
use aggseek::model::SystemState;
use aggseek::rng::SplitMix64;
use proptest::prelude::*;

use common::*;

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(p, q)| p - q).collect()
}

fn set_strategy() -> impl Strategy<Value = ConvexSet> {
    let boxed = (1usize..4).prop_flat_map(|n| {
        (
            prop::collection::vec(-2.0..1.0f64, n),
            prop::collection::vec(0.0..2.0f64, n),
        )
            .prop_map(|(lo, w)| {
                let hi = lo.iter().zip(&w).map(|(l, w)| l + w).collect();
                ConvexSet::new_box(lo, hi).unwrap()
            })
    });
    let ball = (1usize..4).prop_flat_map(|n| {
        (prop::collection::vec(-1.0..1.0f64, n), 0.01..2.0f64)
            .prop_map(|(c, r)| ConvexSet::new_ball(c, r).unwrap())
    });
    prop_oneof![boxed, ball]
}

fn set_and_points() -> impl Strategy<Value = (ConvexSet, Vec<f64>, Vec<f64>)> {
    set_strategy().prop_flat_map(|s| {
        let n = s.dim();
        (
            Just(s),
            prop::collection::vec(-4.0..4.0f64, n),
            prop::collection::vec(-4.0..4.0f64, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn projection_lands_in_set_and_is_idempotent((set, y, _) in set_and_points()) {
        let p = set.project(&y).unwrap();
        prop_assert!(set.contains(&p, 1e-12));
        let pp = set.project(&p).unwrap();
        prop_assert!(norm2(&sub(&pp, &p)) <= 1e-12);
    }

    #[test]
    fn projection_is_nonexpansive((set, y, z) in set_and_points()) {
        let py = set.project(&y).unwrap();
        let pz = set.project(&z).unwrap();
        prop_assert!(norm2(&sub(&py, &pz)) <= norm2(&sub(&y, &z)) + 1e-12);
    }

    #[test]
    fn projection_satisfies_variational_inequality((set, y, seed) in set_and_points().prop_flat_map(|(s, y, _)| (Just(s), Just(y), any::<u64>()))) {
        // (y − P y)ᵀ(w − P y) ≤ 0 for every member w
        let p = set.project(&y).unwrap();
        let mut rng = SplitMix64::new(seed);
        for _ in 0..20 {
            let w = random_member(&mut rng, &set);
            prop_assert!(dot(&sub(&y, &p), &sub(&w, &p)) <= 1e-9);
        }
    }

    #[test]
    fn tangent_and_normal_parts_split_orthogonally((set, y, v) in set_and_points()) {
        let x = set.project(&y).unwrap();
        let t = set.tangent_project(&x, &v).unwrap();
        let nrm = set.normal_project(&x, &v).unwrap();
        let sum: Vec<f64> = t.iter().zip(&nrm).map(|(a, b)| a + b).collect();
        prop_assert!(norm2(&sub(&sum, &v)) <= 1e-12);
        prop_assert!(dot(&t, &nrm).abs() <= 1e-9);
        // the tangent part never points further out than v
        prop_assert!(norm2(&t) <= norm2(&v) + 1e-12);
    }

    #[test]
    fn tangent_projection_matches_the_difference_quotient((set, y, v) in set_and_points()) {
        let x = set.project(&y).unwrap();
        let t = set.tangent_project(&x, &v).unwrap();
        let eps = 1e-7;
        let moved: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + eps * b).collect();
        let q = set.project(&moved).unwrap();
        let quotient: Vec<f64> = q.iter().zip(&x).map(|(a, b)| (a - b) / eps).collect();
        prop_assert!(norm2(&sub(&quotient, &t)) <= 1e-4 * (1.0 + norm2(&v)));
    }

    #[test]
    fn normal_part_lies_in_normal_cone((set, y, v, seed) in set_and_points().prop_flat_map(|(s, y, v)| (Just(s), Just(y), Just(v), any::<u64>()))) {
        let x = set.project(&y).unwrap();
        let nrm = set.normal_project(&x, &v).unwrap();
        let mut rng = SplitMix64::new(seed);
        for _ in 0..20 {
            let w = random_member(&mut rng, &set);
            prop_assert!(dot(&sub(&w, &x), &nrm) <= 1e-9);
        }
    }

    #[test]
    fn min_directional_lower_bounds_samples((set, y, g, seed) in set_and_points().prop_flat_map(|(s, y, g)| (Just(s), Just(y), Just(g), any::<u64>()))) {
        let x = set.project(&y).unwrap();
        let m = set.min_directional(&x, &g);
        prop_assert!(m <= 1e-12);
        let mut rng = SplitMix64::new(seed);
        for _ in 0..50 {
            let z = random_member(&mut rng, &set);
            prop_assert!(m <= dot(&sub(&z, &x), &g) + 1e-12);
        }
        // attained at the projection of a far point along −g
        let far: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - 1e6 * b).collect();
        let z = set.project(&far).unwrap();
        prop_assert!((dot(&sub(&z, &x), &g) - m).abs() <= 1e-6 * (1.0 + m.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn best_response_beats_sampled_members(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let n = 1 + (seed % 3) as usize;
        let g = random_game(&mut rng, n, &GameRanges { agents: (1, 4), ..Default::default() });
        let sigma = random_point(&mut rng, n, 1.5);
        for i in 0..g.agent_count() {
            let br = best_response(&g, i, &sigma).unwrap();
            let best = g.cost_j(i, &br, &sigma).unwrap();
            prop_assert!(best.is_finite());
            for _ in 0..30 {
                let z = random_member(&mut rng, &g.agents[i].set);
                prop_assert!(best <= g.cost_j(i, &z, &sigma).unwrap() + 1e-12);
            }
        }
    }

    #[test]
    fn scalar_best_response_matches_grid(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let g = demand_response();
        let i = (rng.next_u64() % g.agent_count() as u64) as usize;
        let sigma = [rng.uniform(-1.0, 1.5)];
        let grid = grid_best_response(&g, i, &sigma, 1e-5);
        prop_assert!((best_response(&g, i, &sigma).unwrap()[0] - grid).abs() <= 2e-5);
    }

    #[test]
    fn scalar_aggregation_map_is_nonincreasing(a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let g = demand_response();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(aggregation_map(&g, &[hi]).unwrap()[0] <= aggregation_map(&g, &[lo]).unwrap()[0]);
    }

    #[test]
    fn solver_output_is_a_verified_equilibrium(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let n = 1 + (seed % 2) as usize;
        let g = random_game(&mut rng, n, &GameRanges { agents: (1, 20), ..Default::default() });
        prop_assume!(aggseek::lyapunov::strictly_monotone(&g));
        let eq = solve_equilibrium(&g, &SolverConfig::default()).unwrap();
        prop_assert!(eq.vi_gap_value <= 1e-8);
        prop_assert!(eq.unique);
        let avg = aggseek::model::average(&eq.xbar, n);
        prop_assert!(norm2(&sub(&avg, &eq.sigmabar)) == 0.0);
        // fixed point of the aggregation map
        let t = aggregation_map(&g, &eq.sigmabar).unwrap();
        prop_assert!(norm2(&sub(&t, &eq.sigmabar)) <= 1e-8);
    }

    #[test]
    fn euler_steps_stay_feasible(seed in any::<u64>(), h in 1e-4..0.2f64) {
        let mut rng = SplitMix64::new(seed);
        let n = 1 + (seed % 3) as usize;
        let g = random_game(&mut rng, n, &GameRanges { agents: (1, 10), ..Default::default() });
        let mut s = g.initial_state();
        for _ in 0..20 {
            s = step(&g, &s, h).unwrap();
            prop_assert!(g.check_feasible(&s.x).is_ok());
        }
    }

    #[test]
    fn condition_margin_nondecreasing_in_population(
        ell in 0.1..3.0f64, k in 0.01..5.0f64, c in -2.0..2.0f64, n1 in 1usize..500, extra in 0usize..500,
    ) {
        let cm = Matrix::from_rows(&[vec![c]]).unwrap();
        let small = check_gain_condition(ell, k, &cm, n1).margin;
        let large = check_gain_condition(ell, k, &cm, n1 + extra).margin;
        prop_assert!(large >= small);
    }

    #[test]
    fn dense_and_reduced_spectra_agree(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let n = 1 + (seed % 3) as usize;
        let agents = 1 + (rng.next_u64() % 30) as usize;
        let rows: Vec<Vec<f64>> = (0..n).map(|_| random_point(&mut rng, n, 2.0)).collect();
        let c = Matrix::from_rows(&rows).unwrap();
        let (ell, k) = (rng.uniform(0.1, 3.0), rng.uniform(0.05, 5.0));
        for v in [MVariant::Negated, MVariant::Symmetrized] {
            let d = lambda_min_dense(&m_matrix(ell, k, &c, agents, v));
            let r = lambda_min_reduced(ell, k, &c, agents, v);
            prop_assert!((d - r).abs() <= 1e-10);
        }
    }

    #[test]
    fn storage_inequality_on_random_states(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let n = 1 + (seed % 2) as usize;
        let g = random_game(&mut rng, n, &GameRanges { agents: (1, 10), ..Default::default() });
        prop_assume!(aggseek::lyapunov::strictly_monotone(&g));
        let eq = solve_equilibrium(&g, &SolverConfig::default()).unwrap();
        for _ in 0..20 {
            let x: Vec<f64> = g.agents.iter().flat_map(|a| random_member(&mut rng, &a.set)).collect();
            let state = SystemState::new(x, random_point(&mut rng, n, 2.0));
            let u = if rng.next_unit() < 0.5 {
                broadcast_input(&g, &state.sigma)
            } else {
                random_point(&mut rng, n * g.agent_count(), 2.0)
            };
            let chk = storage_inequality_check(&g, &state, &u, &eq).unwrap();
            prop_assert!(chk.holds, "lhs {} rhs {}", chk.lhs, chk.rhs);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Wherever the symmetrized matrix is positive definite, sampled
    /// trajectories stay under the exponential envelope.
    #[test]
    fn certificate_is_sound(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let n = 1 + (seed % 2) as usize;
        let ranges = GameRanges { c: 0.3, ell: (1.0, 2.0), k: (0.3, 1.5), agents: (1, 8) };
        let g = random_game(&mut rng, n, &ranges);
        let cert = compare_conditions(&g);
        prop_assume!(cert.certificate_rate().is_some());
        let eq = solve_equilibrium(&g, &SolverConfig::default()).unwrap();
        let x: Vec<f64> = g.agents.iter().flat_map(|a| random_member(&mut rng, &a.set)).collect();
        let init = SystemState::new(x, random_point(&mut rng, n, 1.0));
        let cfg = IntegratorConfig::new(1e-3, 10.0, 20).unwrap();
        let traj = integrate(&g, &init, &cfg, Some(&eq)).unwrap();
        let rep = decay_report(&traj, &eq, &cert).unwrap();
        prop_assert_eq!(rep.certified, Some(true), "worst ratio {:?}", rep.worst_envelope_ratio);
    }
}

#[test]
fn flow_endpoint_has_small_gap_on_demand_response() {
    let g = demand_response();
    let cfg = IntegratorConfig::new(1e-3, 30.0, 1000).unwrap();
    let traj = integrate(&g, &g.initial_state(), &cfg, None).unwrap();
    assert!(vi_gap(&g, &traj.final_state().x).unwrap() <= 1e-6);
}
