//! Integral equilibrium-seeking dynamics.
//!
//! Each agent follows its projected negative gradient under the broadcast
//! signal, and the signal integrates the mismatch with the realised average:
//!
//! ```text
//! ẋᵢ = Π_{Xᵢ}(xᵢ, −∇fᵢ(xᵢ) − Cσ)
//! σ̇  = k (avg(x) − σ)
//! ```
//!
//! Trajectories come from projected forward Euler,
//! `xᵢ⁺ = proj_{Xᵢ}(xᵢ + h(−∇fᵢ(xᵢ) − Cσ))`, which keeps every iterate
//! feasible and has the same fixed points as the flow.

use serde::Serialize;

use crate::equilibrium::EquilibriumResult;
use crate::error::{Error, Result};
use crate::linalg::{dist2, norm_inf};
use crate::lyapunov::lyapunov_w;
use crate::model::{average, GameSpec, SystemState};
use crate::parallel;

pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_HORIZON: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorConfig {
    pub h: f64,
    pub horizon: f64,
    pub record_every: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            h: DEFAULT_STEP,
            horizon: DEFAULT_HORIZON,
            record_every: 1,
        }
    }
}

impl IntegratorConfig {
    pub fn new(h: f64, horizon: f64, record_every: usize) -> Result<Self> {
        let cfg = Self {
            h,
            horizon,
            record_every,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Picks `record_every` so that roughly `samples` states are kept.
    pub fn with_target_samples(h: f64, horizon: f64, samples: usize) -> Result<Self> {
        let mut cfg = Self::new(h, horizon, 1)?;
        cfg.record_every = cfg.step_count().div_ceil(samples.max(1)).max(1);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "h",
                message: format!("step size must be positive, got {}", self.h),
            });
        }
        if !(self.horizon.is_finite() && self.horizon >= self.h * (1.0 - 1e-12)) {
            return Err(Error::InvalidParameter {
                name: "T",
                message: format!("horizon {} shorter than one step {}", self.horizon, self.h),
            });
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter {
                name: "record_every",
                message: "must be at least 1".into(),
            });
        }
        Ok(())
    }

    /// `⌈T / h⌉`, ignoring representation error in the ratio.
    pub fn step_count(&self) -> usize {
        let ratio = self.horizon / self.h;
        ((ratio * (1.0 - 1e-12)).ceil() as usize).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub residual: f64,
    /// Lyapunov value against the reference, when one is attached.
    pub w: Option<f64>,
    /// `‖avg(x) − σ̄‖`, when a reference is attached.
    pub dist_avg: Option<f64>,
    /// `‖σ − σ̄‖`, when a reference is attached.
    pub dist_sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SystemState>,
    pub diagnostics: Vec<Diagnostics>,
    pub steps: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &SystemState {
        self.states.last().expect("trajectory always holds the initial state")
    }

    pub fn final_diagnostics(&self) -> &Diagnostics {
        self.diagnostics.last().expect("trajectory always holds the initial state")
    }
}

/// `(ẋ, σ̇)` at a feasible state.
pub fn rhs(game: &GameSpec, state: &SystemState) -> Result<(Vec<f64>, Vec<f64>)> {
    game.check_state(state)?;
    game.check_feasible(&state.x)?;
    Ok(rhs_unchecked(game, state))
}

fn rhs_unchecked(game: &GameSpec, state: &SystemState) -> (Vec<f64>, Vec<f64>) {
    let n = game.n;
    let c_sigma = game.c.mul_vec(&state.sigma);
    let mut xdot = vec![0.0; state.x.len()];
    parallel::for_each_chunk_mut(&mut xdot, n, |i, out| {
        let agent = &game.agents[i];
        let xi = &state.x[i * n..(i + 1) * n];
        let mut drive = vec![0.0; n];
        agent.cost.grad_into(xi, &mut drive);
        for (d, cs) in drive.iter_mut().zip(&c_sigma) {
            *d = -*d - cs;
        }
        agent.set.tangent_project_into(xi, &drive, out);
    });
    let avg = average(&state.x, n);
    let sigmadot = avg
        .iter()
        .zip(&state.sigma)
        .map(|(a, s)| game.k * (a - s))
        .collect();
    (xdot, sigmadot)
}

/// One projected Euler step, written into `next`.
fn advance(game: &GameSpec, cur: &SystemState, h: f64, next: &mut SystemState) {
    let n = game.n;
    let c_sigma = game.c.mul_vec(&cur.sigma);
    next.x.copy_from_slice(&cur.x);
    parallel::for_each_chunk_mut(&mut next.x, n, |i, block| {
        let cost = &game.agents[i].cost;
        for j in 0..n {
            let grad = cost.ell * (block[j] - cost.xstar[j]) + cost.linear[j];
            block[j] += h * (-grad - c_sigma[j]);
        }
        game.agents[i].set.project_in_place(block);
    });
    let avg = average(&cur.x, n);
    for ((s_next, s), a) in next.sigma.iter_mut().zip(&cur.sigma).zip(&avg) {
        *s_next = s + h * game.k * (a - s);
    }
}

/// One projected forward-Euler step of size `h` (`h = 0` leaves the state
/// unchanged).
pub fn step(game: &GameSpec, state: &SystemState, h: f64) -> Result<SystemState> {
    game.check_state(state)?;
    game.check_feasible(&state.x)?;
    if !(h >= 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "h",
            message: format!("step size must be nonnegative, got {h}"),
        });
    }
    let mut next = state.clone();
    if h > 0.0 {
        advance(game, state, h, &mut next);
    }
    Ok(next)
}

/// `max(maxᵢ ‖ẋᵢ‖∞, ‖σ̇‖∞)`; zero exactly at equilibria of the dynamics.
pub fn stationarity_residual(game: &GameSpec, state: &SystemState) -> Result<f64> {
    let (xdot, sigmadot) = rhs(game, state)?;
    Ok(norm_inf(&xdot).max(norm_inf(&sigmadot)))
}

fn diagnose(
    game: &GameSpec,
    state: &SystemState,
    reference: Option<&EquilibriumResult>,
) -> Diagnostics {
    let (xdot, sigmadot) = rhs_unchecked(game, state);
    let residual = norm_inf(&xdot).max(norm_inf(&sigmadot));
    match reference {
        Some(r) => Diagnostics {
            residual,
            w: Some(lyapunov_w(state, r)),
            dist_avg: Some(dist2(&state.average(), &r.sigmabar)),
            dist_sigma: Some(dist2(&state.sigma, &r.sigmabar)),
        },
        None => Diagnostics {
            residual,
            w: None,
            dist_avg: None,
            dist_sigma: None,
        },
    }
}

/// Integrates from `init` (projected onto the sets first) for `⌈T/h⌉` steps,
/// keeping every `record_every`-th state plus the first and last.
pub fn integrate(
    game: &GameSpec,
    init: &SystemState,
    cfg: &IntegratorConfig,
    reference: Option<&EquilibriumResult>,
) -> Result<Trajectory> {
    cfg.validate()?;
    game.check_state(init)?;
    let mut cur = init.clone();
    game.project_stacked(&mut cur.x);
    if !cur.is_finite() {
        return Err(Error::NonFinite { step: 0 });
    }
    let steps = cfg.step_count();
    let capacity = steps / cfg.record_every + 2;
    let mut traj = Trajectory {
        times: Vec::with_capacity(capacity),
        states: Vec::with_capacity(capacity),
        diagnostics: Vec::with_capacity(capacity),
        steps,
    };
    let mut record = |t: f64, s: &SystemState| {
        traj.times.push(t);
        traj.diagnostics.push(diagnose(game, s, reference));
        traj.states.push(s.clone());
    };
    record(0.0, &cur);
    let mut next = cur.clone();
    for s in 1..=steps {
        advance(game, &cur, cfg.h, &mut next);
        std::mem::swap(&mut cur, &mut next);
        if !cur.is_finite() {
            return Err(Error::NonFinite { step: s });
        }
        if s % cfg.record_every == 0 || s == steps {
            record(s as f64 * cfg.h, &cur);
        }
    }
    Ok(traj)
}
