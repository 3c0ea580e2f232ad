//! Shared fixtures and oracles for the integration tests.
#![allow(dead_code)]

use aggseek::geometry::ConvexSet;
use aggseek::linalg::Matrix;
use aggseek::model::{Agent, GameSpec, QuadraticCost};
use aggseek::rng::SplitMix64;

pub fn demand_response() -> GameSpec {
    aggseek::load_scenario(aggseek::model::DEMAND_RESPONSE_SCENARIO).unwrap()
}

pub fn weak_coupling() -> GameSpec {
    aggseek::load_scenario(include_str!("../../scenarios/weak_coupling.json")).unwrap()
}

pub struct GameRanges {
    pub c: f64,
    pub ell: (f64, f64),
    pub k: (f64, f64),
    pub agents: (usize, usize),
}

impl Default for GameRanges {
    fn default() -> Self {
        Self {
            c: 0.8,
            ell: (1.0, 2.0),
            k: (0.3, 1.0),
            agents: (2, 50),
        }
    }
}

pub fn random_set(rng: &mut SplitMix64, n: usize) -> ConvexSet {
    if rng.next_unit() < 0.5 {
        let lo: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 0.5)).collect();
        let hi = lo.iter().map(|l| l + rng.uniform(0.1, 1.5)).collect();
        ConvexSet::new_box(lo, hi).unwrap()
    } else {
        let center = (0..n).map(|_| rng.uniform(-0.5, 0.5)).collect();
        ConvexSet::new_ball(center, rng.uniform(0.1, 1.0)).unwrap()
    }
}

/// Random game with mixed box and ball sets.
pub fn random_game(rng: &mut SplitMix64, n: usize, r: &GameRanges) -> GameSpec {
    let count = r.agents.0 + (rng.next_u64() % (r.agents.1 - r.agents.0 + 1) as u64) as usize;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.uniform(-r.c, r.c)).collect())
        .collect();
    let k = rng.uniform(r.k.0, r.k.1);
    let agents = (0..count)
        .map(|_| {
            let ell = rng.uniform(r.ell.0, r.ell.1);
            let xstar = (0..n).map(|_| rng.uniform(-1.5, 1.5)).collect();
            let linear = (0..n).map(|_| rng.uniform(-0.5, 0.5)).collect();
            Agent {
                cost: QuadraticCost::new(ell, xstar, linear).unwrap(),
                set: random_set(rng, n),
            }
        })
        .collect();
    GameSpec::new(Matrix::from_rows(&rows).unwrap(), k, agents).unwrap()
}

/// Uniform point of the set by rejection from its bounding box.
pub fn random_member(rng: &mut SplitMix64, set: &ConvexSet) -> Vec<f64> {
    match set {
        ConvexSet::Box { lo, hi } => lo.iter().zip(hi).map(|(&l, &h)| rng.uniform(l, h)).collect(),
        ConvexSet::Ball { center, radius } => loop {
            let y: Vec<f64> = center.iter().map(|c| rng.uniform(c - radius, c + radius)).collect();
            let r2: f64 = y.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
            if r2 <= radius * radius {
                return y;
            }
        },
    }
}

pub fn random_point(rng: &mut SplitMix64, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.uniform(-scale, scale)).collect()
}

/// Minimiser of agent `i`'s cost over a uniform grid of its (scalar) box.
pub fn grid_best_response(game: &GameSpec, i: usize, sigma: &[f64], step: f64) -> f64 {
    let ConvexSet::Box { lo, hi } = &game.agents[i].set else {
        panic!("grid oracle is for scalar boxes");
    };
    let cost = &game.agents[i].cost;
    let coupling = game.c.row(0)[0] * sigma[0];
    let cells = ((hi[0] - lo[0]) / step).ceil() as usize;
    let mut best = (f64::INFINITY, lo[0]);
    for j in 0..=cells {
        let x = (lo[0] + j as f64 * step).min(hi[0]);
        let d = x - cost.xstar[0];
        let v = 0.5 * cost.ell * d * d + (cost.linear[0] + coupling) * x;
        if v < best.0 {
            best = (v, x);
        }
    }
    best.1
}
