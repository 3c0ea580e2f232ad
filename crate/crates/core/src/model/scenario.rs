//! Scenario documents (JSON).
//!
//! ```json
//! { "n": 1, "C": [[1.0]], "k": 0.6,
//!   "agents": { "generator": { "count": 100, "ell": 1.5, "linear": [0.5],
//!       "xstar": { "uniform": { "lo": 0.0, "hi": 1.0, "seed": 42 } },
//!       "set": { "box": { "lo": [0.25], "hi": [0.75] } } } },
//!   "init": { "x": [[0.5], ...], "sigma": [0.0] } }
//! ```
//!
//! `agents` may instead be `{"list": [{"ell", "xstar", "linear", "set"}, ...]}`.
//! `init` is optional, as are both of its fields.

use std::path::Path;

use serde::Deserialize;

use super::{Agent, GameSpec, QuadraticCost};
use crate::error::{Error, Result};
use crate::geometry::ConvexSet;
use crate::linalg::Matrix;
use crate::rng::SplitMix64;

/// The 100-agent demand-side-management game, with `k = 0.6`.
pub const DEMAND_RESPONSE_SCENARIO: &str = include_str!("../../scenarios/demand_response.json");

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    n: usize,
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
    k: f64,
    agents: AgentsDoc,
    #[serde(default)]
    init: Option<InitDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
enum AgentsDoc {
    List(Vec<AgentDoc>),
    Generator(GeneratorDoc),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentDoc {
    ell: f64,
    xstar: Vec<f64>,
    linear: Vec<f64>,
    set: ConvexSet,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeneratorDoc {
    count: usize,
    ell: f64,
    linear: Vec<f64>,
    xstar: XstarDoc,
    set: ConvexSet,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
enum XstarDoc {
    Uniform { lo: f64, hi: f64, seed: u64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitDoc {
    #[serde(default)]
    x: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    sigma: Option<Vec<f64>>,
}

/// Parses and validates a scenario document.
pub fn load_scenario(document: &str) -> Result<GameSpec> {
    let doc: ScenarioDoc = serde_json::from_str(document)?;
    if doc.c.len() != doc.n || doc.c.iter().any(|row| row.len() != doc.n) {
        return Err(Error::scenario(
            "C",
            format!("expected a {n}x{n} matrix for n = {n}", n = doc.n),
        ));
    }
    let c = Matrix::from_rows(&doc.c)?;

    let (agents, seed) = match doc.agents {
        AgentsDoc::List(list) => {
            let agents = list
                .into_iter()
                .map(|a| Agent {
                    cost: QuadraticCost {
                        ell: a.ell,
                        xstar: a.xstar,
                        linear: a.linear,
                    },
                    set: a.set,
                })
                .collect();
            (agents, 0)
        }
        AgentsDoc::Generator(generator) => {
            let XstarDoc::Uniform { lo, hi, seed } = generator.xstar;
            if !(lo <= hi) {
                return Err(Error::scenario(
                    "agents.generator.xstar.uniform",
                    format!("lo = {lo} exceeds hi = {hi}"),
                ));
            }
            if generator.count == 0 {
                return Err(Error::scenario("agents.generator.count", "must be positive"));
            }
            let mut rng = SplitMix64::new(seed);
            let agents = (0..generator.count)
                .map(|_| Agent {
                    cost: QuadraticCost {
                        ell: generator.ell,
                        xstar: (0..doc.n).map(|_| rng.uniform(lo, hi)).collect(),
                        linear: generator.linear.clone(),
                    },
                    set: generator.set.clone(),
                })
                .collect();
            (agents, seed)
        }
    };

    let mut game = GameSpec {
        n: doc.n,
        c,
        k: doc.k,
        agents,
        seed,
        initial: None,
    };
    game.validate()?;

    if let Some(init) = doc.init {
        let mut state = game.default_initial_state();
        if let Some(rows) = init.x {
            if rows.len() != game.agent_count() {
                return Err(Error::scenario(
                    "init.x",
                    format!("expected {} agent rows, got {}", game.agent_count(), rows.len()),
                ));
            }
            if let Some(i) = rows.iter().position(|r| r.len() != game.n) {
                return Err(Error::scenario(
                    format!("init.x[{i}]"),
                    format!("expected {} entries", game.n),
                ));
            }
            state.x = rows.concat();
            game.project_stacked(&mut state.x);
        }
        if let Some(sigma) = init.sigma {
            if sigma.len() != game.n {
                return Err(Error::scenario(
                    "init.sigma",
                    format!("expected {} entries", game.n),
                ));
            }
            state.sigma = sigma;
        }
        if !state.is_finite() {
            return Err(Error::scenario("init", "entries must be finite"));
        }
        game.initial = Some(state);
    }
    Ok(game)
}

pub fn load_scenario_file(path: &Path) -> Result<GameSpec> {
    let text = std::fs::read_to_string(path)?;
    load_scenario(&text)
}

impl GameSpec {
    /// The game as an explicit-list scenario document.
    pub fn to_document(&self) -> serde_json::Value {
        let agents: Vec<serde_json::Value> = self
            .agents
            .iter()
            .map(|a| {
                serde_json::json!({
                    "ell": a.cost.ell,
                    "xstar": a.cost.xstar,
                    "linear": a.cost.linear,
                    "set": a.set,
                })
            })
            .collect();
        let mut doc = serde_json::json!({
            "n": self.n,
            "C": self.c.to_rows(),
            "k": self.k,
            "agents": { "list": agents },
        });
        if let Some(init) = &self.initial {
            let n = self.n;
            let rows: Vec<&[f64]> = init.x.chunks_exact(n).collect();
            doc["init"] = serde_json::json!({ "x": rows, "sigma": init.sigma });
        }
        doc
    }
}
