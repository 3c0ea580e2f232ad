//! Reference equilibria by averaged fixed-point iteration on the aggregate,
//! and equilibrium verification through the variational inequality.
//!
//! Given a signal `σ`, every agent's best response has a closed form (the
//! costs are isotropic quadratics), so the aggregation map
//! `T(σ) = avg_i BRᵢ(σ)` is cheap. Its fixed points are exactly the averages
//! of aggregative equilibria, and the iteration
//! `σ ← (1 − λ)σ + λT(σ)` is the discrete counterpart of the integral signal
//! dynamics (`λ = 1` plain Picard, `λ < 1` Krasnoselskij averaging).

use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dist2, norm_inf};
use crate::model::{average, GameSpec};
use crate::parallel;

pub const DEFAULT_LAMBDA: f64 = 0.5;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    pub lambda: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                message: format!("relaxation must lie in (0, 1], got {}", self.lambda),
            });
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tol",
                message: format!("tolerance must be positive, got {}", self.tol),
            });
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter {
                name: "max_iter",
                message: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumResult {
    pub xbar: Vec<f64>,
    /// `avg(xbar)`.
    pub sigmabar: Vec<f64>,
    pub iterations: usize,
    pub final_update_norm: f64,
    pub vi_gap_value: f64,
    /// Whether the pseudo-gradient is strictly monotone, which makes this
    /// equilibrium the unique one.
    pub unique: bool,
}

/// Minimiser of `Jᵢ(·, σ)` over the agent's set.
pub fn best_response(game: &GameSpec, i: usize, sigma: &[f64]) -> Result<Vec<f64>> {
    check_dim("signal", game.n, sigma.len())?;
    let c_sigma = game.c.mul_vec(sigma);
    let mut out = vec![0.0; game.n];
    best_response_into(game, i, &c_sigma, &mut out);
    Ok(out)
}

/// Unconstrained minimiser `x* − (Cσ + b)/ℓ`, projected. The projection is
/// exact for any convex set because the quadratic is isotropic.
fn best_response_into(game: &GameSpec, i: usize, c_sigma: &[f64], out: &mut [f64]) {
    let agent = &game.agents[i];
    let cost = &agent.cost;
    for j in 0..out.len() {
        out[j] = cost.xstar[j] - (c_sigma[j] + cost.linear[j]) / cost.ell;
    }
    agent.set.project_in_place(out);
}

fn stacked_best_responses(game: &GameSpec, sigma: &[f64]) -> Vec<f64> {
    let c_sigma = game.c.mul_vec(sigma);
    let mut x = vec![0.0; game.n * game.agent_count()];
    parallel::for_each_chunk_mut(&mut x, game.n, |i, out| {
        best_response_into(game, i, &c_sigma, out)
    });
    x
}

/// `T(σ) = avg_i BRᵢ(σ)`.
pub fn aggregation_map(game: &GameSpec, sigma: &[f64]) -> Result<Vec<f64>> {
    check_dim("signal", game.n, sigma.len())?;
    Ok(average(&stacked_best_responses(game, sigma), game.n))
}

/// Averaged fixed-point iteration on the aggregate, started from the mean of
/// the set centres.
pub fn solve_equilibrium(game: &GameSpec, cfg: &SolverConfig) -> Result<EquilibriumResult> {
    cfg.validate()?;
    let n = game.n;
    let centres: Vec<f64> = game.agents.iter().flat_map(|a| a.set.center()).collect();
    let mut sigma = average(&centres, n);

    let mut iterations = 0;
    let mut update = f64::INFINITY;
    if game.c.is_zero() {
        // T is constant: its value is the fixed point.
        sigma = aggregation_map(game, &sigma)?;
        iterations = 1;
        update = 0.0;
    } else {
        while iterations < cfg.max_iter {
            let t = aggregation_map(game, &sigma)?;
            iterations += 1;
            let next: Vec<f64> = sigma
                .iter()
                .zip(&t)
                .map(|(s, ts)| (1.0 - cfg.lambda) * s + cfg.lambda * ts)
                .collect();
            update = sigma
                .iter()
                .zip(&next)
                .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()));
            sigma = next;
            if !update.is_finite() {
                break;
            }
            if update <= cfg.tol {
                break;
            }
        }
        if !(update <= cfg.tol) {
            return Err(Error::NoConvergence {
                iterations,
                update_norm: update,
                sigma,
            });
        }
    }

    let xbar = stacked_best_responses(game, &sigma);
    let sigmabar = average(&xbar, n);
    let vi_gap_value = vi_gap(game, &xbar)?;
    Ok(EquilibriumResult {
        xbar,
        sigmabar,
        iterations,
        final_update_norm: update,
        vi_gap_value,
        unique: crate::lyapunov::strictly_monotone(game),
    })
}

/// Per-agent violation `max(0, −min_{z∈Xᵢ} (z − xᵢ)ᵀ(∇fᵢ(xᵢ) + C avg(x)))`.
fn vi_violations(game: &GameSpec, x: &[f64]) -> Result<Vec<f64>> {
    game.check_feasible(x)?;
    let n = game.n;
    let g = game.pseudo_gradient(x)?;
    Ok(parallel::map_agents(game.agent_count(), |i| {
        let xi = &x[i * n..(i + 1) * n];
        let gi = &g[i * n..(i + 1) * n];
        (-game.agents[i].set.min_directional(xi, gi)).max(0.0)
    }))
}

/// Largest per-agent violation of the variational inequality; zero exactly
/// at aggregative equilibria.
pub fn vi_gap(game: &GameSpec, x: &[f64]) -> Result<f64> {
    Ok(vi_violations(game, x)?.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub is_equilibrium: bool,
    pub gap: f64,
    pub worst_agent: usize,
    pub tol: f64,
}

pub fn verify_equilibrium(game: &GameSpec, x: &[f64], tol: f64) -> Result<VerificationReport> {
    let violations = vi_violations(game, x)?;
    let (worst_agent, gap) = violations
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |best, (i, v)| if v > best.1 { (i, v) } else { best });
    Ok(VerificationReport {
        is_equilibrium: gap <= tol,
        gap,
        worst_agent,
        tol,
    })
}

impl EquilibriumResult {
    /// `‖σ̄ − σ‖₂` for a candidate signal.
    pub fn signal_distance(&self, sigma: &[f64]) -> f64 {
        dist2(&self.sigmabar, sigma)
    }

    pub fn decision_distance_inf(&self, x: &[f64]) -> f64 {
        let diff: Vec<f64> = self.xbar.iter().zip(x).map(|(a, b)| a - b).collect();
        norm_inf(&diff)
    }
}
