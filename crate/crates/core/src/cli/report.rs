//! Line-oriented `key = value` reports.

use std::fmt::Display;

use sha2::{Digest, Sha256};

use crate::equilibrium::EquilibriumResult;
use crate::experiment::RunOutcome;
use crate::lyapunov::CertificateReport;
use crate::model::GameSpec;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

fn opt<T: Display>(v: Option<T>) -> String {
    v.map_or_else(|| "none".to_string(), |v| v.to_string())
}

pub(super) fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

/// SHA-256 of the game's canonical explicit-list document (gain included).
pub fn scenario_digest(game: &GameSpec) -> String {
    let doc = serde_json::to_string(&game.to_document()).expect("documents always serialise");
    Sha256::digest(doc.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub(super) fn digest_json(game: &GameSpec) -> serde_json::Value {
    serde_json::json!({
        "digest": scenario_digest(game),
        "seed": game.seed,
        "N": game.agent_count(),
        "n": game.n,
        "k": game.k,
    })
}

pub(super) fn equilibrium_summary(eq: &EquilibriumResult) -> serde_json::Value {
    serde_json::json!({
        "sigmabar": eq.sigmabar,
        "vi_gap": eq.vi_gap_value,
        "iterations": eq.iterations,
        "final_update_norm": eq.final_update_norm,
        "unique": eq.unique,
    })
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, value: impl Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Inverse of [`Report::render`]; lines without ` = ` are skipped.
    pub fn parse(text: &str) -> Self {
        let entries = text
            .lines()
            .filter_map(|l| l.split_once(" = "))
            .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
            .collect();
        Self { entries }
    }

    pub(super) fn scenario(&mut self, scope: &str, game: &GameSpec) {
        self.push(&format!("{scope}scenario.digest"), scenario_digest(game));
        self.push(&format!("{scope}scenario.seed"), game.seed);
        self.push(&format!("{scope}scenario.N"), game.agent_count());
        self.push(&format!("{scope}scenario.n"), game.n);
        self.push(&format!("{scope}scenario.k"), game.k);
    }

    pub(super) fn equilibrium(&mut self, scope: &str, eq: &EquilibriumResult) {
        self.push(&format!("{scope}equilibrium.sigmabar"), join(&eq.sigmabar));
        self.push(&format!("{scope}equilibrium.vi_gap"), eq.vi_gap_value);
        self.push(&format!("{scope}equilibrium.iterations"), eq.iterations);
        self.push(&format!("{scope}equilibrium.final_update_norm"), eq.final_update_norm);
        self.push(&format!("{scope}equilibrium.unique"), eq.unique);
    }

    pub(super) fn certificate(&mut self, scope: &str, c: &CertificateReport) {
        let mut put = |k: &str, v: String| self.push(&format!("{scope}{k}"), v);
        put("gain.holds", c.gain_holds.to_string());
        put("gain.margin", c.gain_margin.to_string());
        put("gain.gershgorin_rhs", c.gershgorin_rhs.to_string());
        put("norm_c_inf", c.norm_c_inf.to_string());
        put("norm_c_2", c.norm_c_2.to_string());
        put("prior.holds", c.prior_holds.to_string());
        put("prior.margin", c.prior_margin.to_string());
        put("monotone.strict", c.strictly_monotone.to_string());
        put("monotone.margin", c.monotonicity_margin.to_string());
        put("lambda_min.negated", c.lambda_min_negated.to_string());
        put("lambda_min.negated_dense", opt(c.lambda_min_negated_dense));
        put("lambda_min.symmetrized", c.lambda_min_symmetrized.to_string());
        put("lambda_min.symmetrized_dense", opt(c.lambda_min_symmetrized_dense));
        put("certificate.rate", opt(c.certificate_rate()));
        put(
            "certificate.condition_without_certificate",
            c.condition_without_certificate().to_string(),
        );
    }

    pub(super) fn outcome(&mut self, scope: &str, o: &RunOutcome) {
        let mut put = |k: &str, v: String| self.push(&format!("{scope}{k}"), v);
        put("run.k", o.k.to_string());
        put("run.samples", o.trajectory.len().to_string());
        put("run.steps", o.trajectory.steps.to_string());
        put("run.final_dist_avg", o.final_dist_avg.to_string());
        put("run.final_dist_sigma", o.final_dist_sigma.to_string());
        put("run.final_residual", o.final_residual.to_string());
        put("run.time_to_threshold", opt(o.time_to_threshold));
        put("run.dist_sigma_monotone", o.dist_sigma_monotone.to_string());
        match &o.decay {
            Some(d) => {
                put("decay.w0", d.w0.to_string());
                put("decay.monotone", d.monotone.to_string());
                put("decay.fitted_rate", opt(d.fitted_rate));
                put("decay.certified", opt(d.certified));
                put("decay.worst_envelope_ratio", opt(d.worst_envelope_ratio));
            }
            None => put("decay", format!("unavailable ({})", opt(o.decay_note.as_deref()))),
        }
    }
}
