//! Aggregative game data model.
//!
//! Agent `i` picks `xᵢ` in a compact convex set and pays
//! `Jᵢ(xᵢ, σ) = fᵢ(xᵢ) + (Cσ)ᵀxᵢ` on that set (and `+∞` off it), where `σ` is
//! the average decision and `fᵢ(x) = ½ ℓᵢ ‖x − x*ᵢ‖² + bᵢᵀx`.

mod scenario;

pub use scenario::{load_scenario, load_scenario_file, DEMAND_RESPONSE_SCENARIO};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{ConvexSet, MEMBERSHIP_TOL};
use crate::linalg::Matrix;
use crate::parallel;

/// `f(x) = ½·ell·‖x − xstar‖² + linearᵀx`, strongly convex with modulus `ell`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticCost {
    pub ell: f64,
    pub xstar: Vec<f64>,
    pub linear: Vec<f64>,
}

impl QuadraticCost {
    pub fn new(ell: f64, xstar: Vec<f64>, linear: Vec<f64>) -> Result<Self> {
        let cost = Self { ell, xstar, linear };
        cost.validate()?;
        Ok(cost)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ell > 0.0 && self.ell.is_finite()) {
            return Err(Error::scenario(
                "ell",
                format!("must be positive and finite, got {}", self.ell),
            ));
        }
        check_dim("cost linear term", self.xstar.len(), self.linear.len())?;
        if self.xstar.iter().chain(&self.linear).any(|v| !v.is_finite()) {
            return Err(Error::scenario("xstar/linear", "entries must be finite"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.xstar.len()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let mut sq = 0.0;
        let mut lin = 0.0;
        for j in 0..x.len() {
            let d = x[j] - self.xstar[j];
            sq += d * d;
            lin += self.linear[j] * x[j];
        }
        0.5 * self.ell * sq + lin
    }

    pub fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        for j in 0..x.len() {
            out[j] = self.ell * (x[j] - self.xstar[j]) + self.linear[j];
        }
    }

    /// `ell·(x − xstar) + linear`.
    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim("gradient point", self.dim(), x.len())?;
        let mut out = vec![0.0; x.len()];
        self.grad_into(x, &mut out);
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub cost: QuadraticCost,
    pub set: ConvexSet,
}

/// Decisions of all agents (stacked, agent-major) plus the broadcast signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub x: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl SystemState {
    pub fn new(x: Vec<f64>, sigma: Vec<f64>) -> Self {
        Self { x, sigma }
    }

    pub fn dim(&self) -> usize {
        self.sigma.len()
    }

    pub fn agent(&self, i: usize) -> &[f64] {
        let n = self.dim();
        &self.x[i * n..(i + 1) * n]
    }

    pub fn average(&self) -> Vec<f64> {
        average(&self.x, self.dim())
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.sigma).all(|v| v.is_finite())
    }
}

/// Mean of the length-`n` blocks of `x`, summed in index order.
pub fn average(x: &[f64], n: usize) -> Vec<f64> {
    let mut avg = vec![0.0; n];
    let count = x.len() / n;
    for block in x.chunks_exact(n) {
        for (a, v) in avg.iter_mut().zip(block) {
            *a += v;
        }
    }
    for a in &mut avg {
        *a /= count as f64;
    }
    avg
}

/// A fully materialised aggregative game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    pub n: usize,
    pub c: Matrix,
    pub k: f64,
    pub agents: Vec<Agent>,
    /// Seed of the generator that produced the agents (0 for explicit lists).
    pub seed: u64,
    /// Initial state from the scenario, already projected onto the sets.
    pub initial: Option<SystemState>,
}

impl GameSpec {
    /// Builds and validates a game.
    pub fn new(c: Matrix, k: f64, agents: Vec<Agent>) -> Result<Self> {
        let game = Self {
            n: c.rows(),
            c,
            k,
            agents,
            seed: 0,
            initial: None,
        };
        game.validate()?;
        Ok(game)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::scenario("n", "decision dimension must be positive"));
        }
        if self.c.rows() != self.n || self.c.cols() != self.n {
            return Err(Error::scenario(
                "C",
                format!(
                    "expected a {n}x{n} matrix, got {}x{}",
                    self.c.rows(),
                    self.c.cols(),
                    n = self.n
                ),
            ));
        }
        if self.c.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::scenario("C", "entries must be finite"));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::scenario("k", format!("must be positive, got {}", self.k)));
        }
        if self.agents.is_empty() {
            return Err(Error::scenario("agents", "at least one agent is required"));
        }
        for (i, agent) in self.agents.iter().enumerate() {
            let ctx = |e: Error| match e {
                Error::Scenario { field, message } => {
                    Error::scenario(format!("agents[{i}].{field}"), message)
                }
                Error::DimensionMismatch { expected, got, .. } => Error::scenario(
                    format!("agents[{i}]"),
                    format!("dimension mismatch: expected {expected}, got {got}"),
                ),
                other => other,
            };
            agent.cost.validate().map_err(ctx)?;
            agent.set.validate().map_err(ctx)?;
            for (what, dim) in [("xstar", agent.cost.dim()), ("set", agent.set.dim())] {
                if dim != self.n {
                    return Err(Error::scenario(
                        format!("agents[{i}].{what}"),
                        format!("dimension {dim} does not match C ({}x{})", self.n, self.n),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    /// Game-wide strong-convexity modulus: the smallest agent modulus.
    pub fn ell_min(&self) -> f64 {
        self.agents
            .iter()
            .map(|a| a.cost.ell)
            .fold(f64::INFINITY, f64::min)
    }

    /// Copy of the game with a different integral gain.
    pub fn with_gain(&self, k: f64) -> Result<Self> {
        let mut game = self.clone();
        game.k = k;
        game.validate()?;
        Ok(game)
    }

    pub fn check_stacked(&self, x: &[f64]) -> Result<()> {
        check_dim("stacked decisions", self.n * self.agent_count(), x.len())
    }

    pub fn check_state(&self, state: &SystemState) -> Result<()> {
        self.check_stacked(&state.x)?;
        check_dim("signal", self.n, state.sigma.len())
    }

    /// Fails with the first agent whose block lies outside its set.
    pub fn check_feasible(&self, x: &[f64]) -> Result<()> {
        self.check_stacked(x)?;
        for (i, (agent, xi)) in self.agents.iter().zip(x.chunks_exact(self.n)).enumerate() {
            let distance = agent.set.distance(xi);
            if distance > MEMBERSHIP_TOL {
                return Err(Error::OutsideSet { agent: i, distance });
            }
        }
        Ok(())
    }

    /// Projects every agent block onto its set in place.
    pub fn project_stacked(&self, x: &mut [f64]) {
        let n = self.n;
        parallel::for_each_chunk_mut(x, n, |i, block| self.agents[i].set.project_in_place(block));
    }

    /// Each agent at the projection of its own reference decision, with a
    /// zero broadcast signal.
    pub fn default_initial_state(&self) -> SystemState {
        let mut x: Vec<f64> = self
            .agents
            .iter()
            .flat_map(|a| a.cost.xstar.iter().copied())
            .collect();
        self.project_stacked(&mut x);
        SystemState::new(x, vec![0.0; self.n])
    }

    /// Scenario-supplied initial state, else [`default_initial_state`](Self::default_initial_state).
    pub fn initial_state(&self) -> SystemState {
        self.initial
            .clone()
            .unwrap_or_else(|| self.default_initial_state())
    }

    /// `∇fᵢ(x)` for agent `i`.
    pub fn grad_f(&self, i: usize, x: &[f64]) -> Result<Vec<f64>> {
        self.agents[i].cost.grad(x)
    }

    /// `Jᵢ(x, σ)`, with `f64::INFINITY` standing in for the indicator when
    /// `x` is infeasible.
    pub fn cost_j(&self, i: usize, x: &[f64], sigma: &[f64]) -> Result<f64> {
        check_dim("cost point", self.n, x.len())?;
        check_dim("signal", self.n, sigma.len())?;
        let agent = &self.agents[i];
        if !agent.set.contains(x, MEMBERSHIP_TOL) {
            return Ok(f64::INFINITY);
        }
        let c_sigma = self.c.mul_vec(sigma);
        let coupling: f64 = c_sigma.iter().zip(x).map(|(a, b)| a * b).sum();
        Ok(agent.cost.value(x) + coupling)
    }

    /// Pseudo-gradient: block `i` is `∇fᵢ(xᵢ) + C·avg(x)`.
    pub fn pseudo_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_stacked(x)?;
        let n = self.n;
        let c_avg = self.c.mul_vec(&average(x, n));
        let mut out = vec![0.0; x.len()];
        parallel::for_each_chunk_mut(&mut out, n, |i, block| {
            self.agents[i].cost.grad_into(&x[i * n..(i + 1) * n], block);
            for (b, c) in block.iter_mut().zip(&c_avg) {
                *b += c;
            }
        });
        Ok(out)
    }
}
