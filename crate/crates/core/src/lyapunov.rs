//! Convergence certificates for the integral dynamics.
//!
//! The Lyapunov candidate is `W = ½‖x − x̄‖² + ½‖σ − σ̄‖²`. Along the flow,
//! `Ẇ ≤ −zᵀMz` with `z = (x − x̄, σ − σ̄)` and
//!
//! ```text
//! M = [ ℓ I_{nN}        1_N ⊗ B ]
//!     [ 1_Nᵀ ⊗ Bᵀ      k Iₙ     ]
//! ```
//!
//! Two choices of the coupling block `B` are reported: the `Negated` variant
//! `B = −½(C + (k/N)Iₙ)`, and the `Symmetrized` variant `B = ½(C − (k/N)Iₙ)`
//! obtained by symmetrising the cross terms of `Ẇ` exactly. Only the latter
//! is used to certify decay. Its smallest eigenvalue is computed twice: by a
//! dense eigensolve of the full matrix and from the reduced `2n × 2n` block
//! `[[ℓIₙ, √N·B], [√N·Bᵀ, kIₙ]]` (plus `ℓ` with multiplicity `n(N − 1)`).
//!
//! The sufficient gain condition `min{ℓ, k} > ½‖C‖∞ + ½k/N` is evaluated
//! alongside, but it does not by itself make `M` positive definite: the
//! signal rows of `M` carry `N` copies of `B`. At the demand-response
//! parameters the condition holds while `λ_min(M) < 0`, and reports say so.

use serde::Serialize;

use crate::equilibrium::EquilibriumResult;
use crate::error::{Error, Result};
use crate::flow::Trajectory;
use crate::linalg::{dense_symmetric_eigenvalues, jacobi_eigenvalues, symmetric_part_min_eigenvalue, Matrix};
use crate::model::{GameSpec, SystemState};

/// Dense eigensolves are skipped above this matrix order.
pub const DENSE_LIMIT: usize = 2000;

/// Slack for the storage-function inequality.
pub const STORAGE_SLACK: f64 = 1e-9;

/// Multiplicative slack on the exponential envelope.
pub const ENVELOPE_SLACK: f64 = 1e-2;

/// References with a larger VI gap are not accepted as equilibria.
pub const REFERENCE_GAP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainCondition {
    pub holds: bool,
    pub margin: f64,
}

/// `margin = min{ℓ, k} − ½‖C‖∞ − ½k/N`; holds iff the margin is positive.
pub fn check_gain_condition(ell: f64, k: f64, c: &Matrix, agents: usize) -> GainCondition {
    let margin = ell.min(k) - 0.5 * c.norm_inf() - 0.5 * k / agents as f64;
    GainCondition {
        holds: margin > 0.0,
        margin,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MVariant {
    Negated,
    Symmetrized,
}

/// Coupling block `B` between each agent block and the signal.
pub fn coupling_block(c: &Matrix, k: f64, agents: usize, variant: MVariant) -> Matrix {
    let n = c.rows();
    let kn = Matrix::scaled_identity(n, k / agents as f64);
    match variant {
        MVariant::Negated => c.add(&kn).scale(-0.5),
        MVariant::Symmetrized => c.add(&kn.scale(-1.0)).scale(0.5),
    }
}

/// Full `(nN + n) × (nN + n)` matrix `M`.
pub fn m_matrix(ell: f64, k: f64, c: &Matrix, agents: usize, variant: MVariant) -> Matrix {
    let n = c.rows();
    let b = coupling_block(c, k, agents, variant);
    let dim = n * agents + n;
    let mut m = Matrix::zeros(dim, dim);
    for d in 0..n * agents {
        m[(d, d)] = ell;
    }
    for d in n * agents..dim {
        m[(d, d)] = k;
    }
    for i in 0..agents {
        for r in 0..n {
            for s in 0..n {
                m[(i * n + r, n * agents + s)] = b[(r, s)];
                m[(n * agents + s, i * n + r)] = b[(r, s)];
            }
        }
    }
    m
}

/// `λ_min(M)` from the reduced block, without forming `M`.
pub fn lambda_min_reduced(ell: f64, k: f64, c: &Matrix, agents: usize, variant: MVariant) -> f64 {
    let n = c.rows();
    let b = coupling_block(c, k, agents, variant).scale((agents as f64).sqrt());
    let mut r = Matrix::zeros(2 * n, 2 * n);
    for d in 0..n {
        r[(d, d)] = ell;
        r[(n + d, n + d)] = k;
    }
    for p in 0..n {
        for q in 0..n {
            r[(p, n + q)] = b[(p, q)];
            r[(n + q, p)] = b[(p, q)];
        }
    }
    let block_min = jacobi_eigenvalues(&r)[0];
    if agents > 1 {
        block_min.min(ell)
    } else {
        block_min
    }
}

pub fn lambda_min_dense(m: &Matrix) -> f64 {
    dense_symmetric_eigenvalues(m)[0]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MSpectrum {
    pub variant: MVariant,
    pub order: usize,
    pub lambda_min: f64,
    /// Dense cross-check; absent above [`DENSE_LIMIT`].
    pub lambda_min_dense: Option<f64>,
}

/// Smallest eigenvalue of `M` for the game, using `ℓ = min ℓᵢ`.
pub fn assemble_m(game: &GameSpec, variant: MVariant) -> MSpectrum {
    let (ell, k, agents) = (game.ell_min(), game.k, game.agent_count());
    let order = game.n * agents + game.n;
    let lambda_min = lambda_min_reduced(ell, k, &game.c, agents, variant);
    let lambda_min_dense = (order <= DENSE_LIMIT)
        .then(|| lambda_min_dense(&m_matrix(ell, k, &game.c, agents, variant)));
    MSpectrum {
        variant,
        order,
        lambda_min,
        lambda_min_dense,
    }
}

/// `ℓ + ½λ_min(C + Cᵀ)`; positive means the pseudo-gradient is strictly
/// monotone.
pub fn monotonicity_margin(game: &GameSpec) -> f64 {
    game.ell_min() + symmetric_part_min_eigenvalue(&game.c)
}

pub fn strictly_monotone(game: &GameSpec) -> bool {
    monotonicity_margin(game) > 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub ell: f64,
    pub k: f64,
    pub agents: usize,
    pub norm_c_inf: f64,
    pub norm_c_2: f64,
    pub gain_holds: bool,
    pub gain_margin: f64,
    /// Half the largest row sum of `|c_ij| (j ≠ i) + |c_ii + k/N|`, the bound
    /// used when applying Gershgorin to the decision rows of `M`.
    pub gershgorin_rhs: f64,
    pub prior_holds: bool,
    pub prior_margin: f64,
    pub strictly_monotone: bool,
    pub monotonicity_margin: f64,
    pub lambda_min_negated: f64,
    pub lambda_min_negated_dense: Option<f64>,
    pub lambda_min_symmetrized: f64,
    pub lambda_min_symmetrized_dense: Option<f64>,
}

impl CertificateReport {
    /// Decay rate the Lyapunov matrix certifies, if any.
    pub fn certificate_rate(&self) -> Option<f64> {
        (self.lambda_min_symmetrized > 0.0).then_some(self.lambda_min_symmetrized)
    }

    /// The gain condition holds but the Lyapunov matrix is not positive
    /// definite, so the condition alone certifies nothing.
    pub fn condition_without_certificate(&self) -> bool {
        self.gain_holds && self.lambda_min_symmetrized <= 0.0
    }
}

pub fn compare_conditions(game: &GameSpec) -> CertificateReport {
    let ell = game.ell_min();
    let k = game.k;
    let agents = game.agent_count();
    let c = &game.c;
    let gain = check_gain_condition(ell, k, c, agents);
    let n = game.n;
    let gershgorin_rhs = (0..n)
        .map(|i| {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| c[(i, j)].abs()).sum();
            0.5 * (off + (c[(i, i)] + k / agents as f64).abs())
        })
        .fold(0.0, f64::max);
    let norm_c_2 = c.spectral_norm();
    let negated = assemble_m(game, MVariant::Negated);
    let sym = assemble_m(game, MVariant::Symmetrized);
    let mono = monotonicity_margin(game);
    CertificateReport {
        ell,
        k,
        agents,
        norm_c_inf: c.norm_inf(),
        norm_c_2,
        gain_holds: gain.holds,
        gain_margin: gain.margin,
        gershgorin_rhs,
        prior_holds: ell >= norm_c_2,
        prior_margin: ell - norm_c_2,
        strictly_monotone: mono > 0.0,
        monotonicity_margin: mono,
        lambda_min_negated: negated.lambda_min,
        lambda_min_negated_dense: negated.lambda_min_dense,
        lambda_min_symmetrized: sym.lambda_min,
        lambda_min_symmetrized_dense: sym.lambda_min_dense,
    }
}

/// `½‖x − x̄‖² + ½‖σ − σ̄‖²`.
pub fn lyapunov_w(state: &SystemState, reference: &EquilibriumResult) -> f64 {
    let sq = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum() };
    0.5 * sq(&state.x, &reference.xbar) + 0.5 * sq(&state.sigma, &reference.sigmabar)
}

/// Input `u = −1_N ⊗ (Cσ)` that the signal applies to the agents.
pub fn broadcast_input(game: &GameSpec, sigma: &[f64]) -> Vec<f64> {
    let c_sigma = game.c.mul_vec(sigma);
    c_sigma
        .iter()
        .map(|v| -v)
        .cycle()
        .take(game.n * game.agent_count())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StorageCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Storage-function inequality for `V = ½‖x − x̄‖²`:
///
/// ```text
/// (x − x̄)ᵀ Π_X(x, −∇f(x) + u) ≤ −(x − x̄)ᵀ(∇f(x) − ∇f(x̄) − (u − ū))
/// ```
///
/// with `ū = −1_N ⊗ (Cσ̄)`.
pub fn storage_inequality_check(
    game: &GameSpec,
    state: &SystemState,
    u: &[f64],
    reference: &EquilibriumResult,
) -> Result<StorageCheck> {
    game.check_state(state)?;
    game.check_feasible(&state.x)?;
    game.check_stacked(u)?;
    let n = game.n;
    let u_bar = broadcast_input(game, &reference.sigmabar);
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    let mut drive = vec![0.0; n];
    let mut tangent = vec![0.0; n];
    for (i, agent) in game.agents.iter().enumerate() {
        let blk = i * n..(i + 1) * n;
        let xi = &state.x[blk.clone()];
        let xbar_i = &reference.xbar[blk.clone()];
        let grad = agent.cost.grad(xi)?;
        let grad_bar = agent.cost.grad(xbar_i)?;
        for j in 0..n {
            drive[j] = -grad[j] + u[blk.start + j];
        }
        agent.set.tangent_project_into(xi, &drive, &mut tangent);
        for j in 0..n {
            let e = xi[j] - xbar_i[j];
            lhs += e * tangent[j];
            rhs -= e * (grad[j] - grad_bar[j] - (u[blk.start + j] - u_bar[blk.start + j]));
        }
    }
    Ok(StorageCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + STORAGE_SLACK,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub w0: f64,
    /// W nonincreasing from sample to sample, up to 1e-9 relative.
    pub monotone: bool,
    /// Least-squares decay rate of ln W over the first half-life.
    pub fitted_rate: Option<f64>,
    pub certificate_rate: Option<f64>,
    /// `W(t) ≤ W(0)·exp(−rate·t)·(1 + 1e-2) + floor` at every sample; only
    /// evaluated when a positive certificate rate exists.
    pub certified: Option<bool>,
    /// Largest `W(t) / (W(0)·exp(−rate·t) + floor)` over the samples.
    pub worst_envelope_ratio: Option<f64>,
    /// W cannot resolve distances below the accuracy of the reference, so
    /// the envelope is not checked under this level.
    pub floor: f64,
    pub samples: usize,
}

pub const MIN_DECAY_SAMPLES: usize = 10;

/// Evaluates W along a trajectory and checks it against the exponential
/// envelope `W(0)·exp(−λ_min(M)·t)`.
pub fn decay_report(
    traj: &Trajectory,
    reference: &EquilibriumResult,
    cert: &CertificateReport,
) -> Result<DecayReport> {
    if traj.len() < MIN_DECAY_SAMPLES {
        return Err(Error::TrajectoryTooShort {
            got: traj.len(),
            need: MIN_DECAY_SAMPLES,
        });
    }
    if !(reference.vi_gap_value <= REFERENCE_GAP_TOL) {
        return Err(Error::UnverifiedReference {
            gap: reference.vi_gap_value,
        });
    }
    let w: Vec<f64> = traj.states.iter().map(|s| lyapunov_w(s, reference)).collect();
    let w0 = w[0];
    let monotone = w
        .windows(2)
        .all(|p| p[1] <= p[0] * (1.0 + 1e-9) + 1e-15 * w0);

    let fitted_rate = fit_first_half_life(&traj.times, &w);

    let certificate_rate = cert.certificate_rate();
    let floor = reference_floor(reference);
    let (certified, worst_envelope_ratio) = match certificate_rate {
        Some(rate) if w0 > 0.0 => {
            let worst = traj
                .times
                .iter()
                .zip(&w)
                .map(|(&t, &wt)| wt / (w0 * (-rate * t).exp() + floor))
                .fold(0.0, f64::max);
            (Some(worst <= 1.0 + ENVELOPE_SLACK), Some(worst))
        }
        Some(_) => (Some(true), Some(0.0)),
        None => (None, None),
    };
    Ok(DecayReport {
        w0,
        monotone,
        fitted_rate,
        certificate_rate,
        certified,
        worst_envelope_ratio,
        floor,
        samples: w.len(),
    })
}

/// Value of W at a point that is off by ten fixed-point update norms in
/// every coordinate.
pub fn reference_floor(reference: &EquilibriumResult) -> f64 {
    let dim = (reference.xbar.len() + reference.sigmabar.len()) as f64;
    let delta = 10.0 * reference.final_update_norm.max(f64::EPSILON);
    0.5 * dim * delta * delta
}

/// Negated slope of the least-squares line through `(t, ln W)`, over the
/// samples up to the first one at or below `W(0)/2` (all positive samples
/// when W never halves).
fn fit_first_half_life(times: &[f64], w: &[f64]) -> Option<f64> {
    let w0 = *w.first()?;
    if !(w0 > 0.0) {
        return None;
    }
    let end = w
        .iter()
        .position(|&v| v <= 0.5 * w0)
        .map_or(w.len(), |p| p + 1);
    let pts: Vec<(f64, f64)> = times[..end]
        .iter()
        .zip(&w[..end])
        .filter(|(_, &v)| v > 0.0)
        .map(|(&t, &v)| (t, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm) * (p.0 - tm)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    (sxx > 0.0).then(|| -sxy / sxx)
}
