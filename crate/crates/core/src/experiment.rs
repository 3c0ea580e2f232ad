//! Runs and gain sweeps: one reference equilibrium, one trajectory per gain,
//! with certificate and decay reports attached.

use serde::Serialize;

use crate::equilibrium::EquilibriumResult;
use crate::error::{Error, Result};
use crate::flow::{integrate, IntegratorConfig, Trajectory};
use crate::lyapunov::{compare_conditions, decay_report, CertificateReport, DecayReport};
use crate::model::GameSpec;
use crate::parallel::map_tasks;

/// Distance level used for time-to-threshold.
pub const DISTANCE_THRESHOLD: f64 = 1e-2;

/// States kept per run unless told otherwise.
pub const DEFAULT_SAMPLES: usize = 6000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutcome {
    pub k: f64,
    #[serde(skip)]
    pub trajectory: Trajectory,
    pub certificate: CertificateReport,
    pub decay: Option<DecayReport>,
    /// Why `decay` is missing.
    pub decay_note: Option<String>,
    pub time_to_threshold: Option<f64>,
    /// `‖σ − σ̄‖` never grows between samples (1e-9 relative slack). W can
    /// decrease monotonically while the signal overshoots.
    pub dist_sigma_monotone: bool,
    pub final_dist_avg: f64,
    pub final_dist_sigma: f64,
    pub final_residual: f64,
}

/// Earliest sample time from which `dist_avg` stays at or below `threshold`
/// for the rest of the trajectory.
pub fn time_to_threshold(traj: &Trajectory, threshold: f64) -> Option<f64> {
    let mut first = None;
    for (j, d) in traj.diagnostics.iter().enumerate().rev() {
        match d.dist_avg {
            Some(v) if v <= threshold => first = Some(j),
            _ => break,
        }
    }
    first.map(|j| traj.times[j])
}

fn nonincreasing(values: impl Iterator<Item = f64>) -> bool {
    let v: Vec<f64> = values.collect();
    let first = v.first().copied().unwrap_or(0.0);
    v.windows(2).all(|p| p[1] <= p[0] * (1.0 + 1e-9) + 1e-15 * first)
}

/// Integrates `game` from its initial state against `reference`.
pub fn run(game: &GameSpec, reference: &EquilibriumResult, cfg: &IntegratorConfig) -> Result<RunOutcome> {
    let traj = integrate(game, &game.initial_state(), cfg, Some(reference))?;
    let certificate = compare_conditions(game);
    let (decay, decay_note) = match decay_report(&traj, reference, &certificate) {
        Ok(rep) => (Some(rep), None),
        Err(e @ Error::TrajectoryTooShort { .. }) => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    let last = *traj.final_diagnostics();
    Ok(RunOutcome {
        k: game.k,
        time_to_threshold: time_to_threshold(&traj, DISTANCE_THRESHOLD),
        dist_sigma_monotone: nonincreasing(traj.diagnostics.iter().filter_map(|d| d.dist_sigma)),
        final_dist_avg: last.dist_avg.unwrap_or(f64::NAN),
        final_dist_sigma: last.dist_sigma.unwrap_or(f64::NAN),
        final_residual: last.residual,
        trajectory: traj,
        certificate,
        decay,
        decay_note,
    })
}

/// One run per gain, all against the same reference. Runs are independent
/// and execute in parallel; results come back in the order of `gains`.
pub fn sweep(
    game: &GameSpec,
    gains: &[f64],
    reference: &EquilibriumResult,
    cfg: &IntegratorConfig,
) -> Result<Vec<RunOutcome>> {
    map_tasks(gains.len(), |i| run(&game.with_gain(gains[i])?, reference, cfg))
        .into_iter()
        .collect()
}
