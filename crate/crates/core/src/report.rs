//! Machine-readable design report.

use serde::Serialize;

use crate::analysis::{computation_intensity, KernelParams};
use crate::flow::{Exploration, FallbackAttempt};
use crate::model::{Budget, Candidate, ConfigFlag, Variant};

/// Bumped whenever a field is renamed or removed.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct CandidateRow {
    pub rank: usize,
    pub variant: Variant,
    pub k: u32,
    pub s: u32,
    pub total_pes: u32,
    pub hbm_banks_used: u32,
    pub cycles: u64,
    pub rounds: u64,
    pub seconds: f64,
    pub gcells_per_s: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<ConfigFlag>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Intensity {
    /// Exact ops per byte as `numerator/denominator`.
    pub exact: String,
    pub approx: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DesignReport {
    pub schema_version: u32,
    pub kernel: String,
    pub platform: String,
    pub clock_hz: f64,
    pub params: KernelParams,
    pub computation_intensity: Intensity,
    pub budget: Budget,
    pub candidates: Vec<CandidateRow>,
    pub winner: CandidateRow,
    pub rationale: String,
    pub fallback_attempts: Vec<FallbackAttempt>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn row(rank: usize, c: &Candidate, params: &KernelParams, clock_hz: f64) -> CandidateRow {
    CandidateRow {
        rank,
        variant: c.config.variant,
        k: c.config.k,
        s: c.config.s,
        total_pes: c.config.total_pes,
        hbm_banks_used: c.config.hbm_banks_used,
        cycles: c.estimate.cycles,
        rounds: c.estimate.rounds,
        seconds: c.estimate.seconds(clock_hz),
        gcells_per_s: c.estimate.throughput_gcells(params, clock_hz),
        flags: c.config.flags.clone(),
    }
}

impl DesignReport {
    /// `chosen` overrides the model winner (after rejection or a user
    /// override); the rationale then says so.
    pub fn new(expl: &Exploration, chosen: Option<&Candidate>, seed: Option<u64>) -> Self {
        let clock = expl.platform.clock_hz;
        let candidates: Vec<CandidateRow> =
            expl.selection.ranked.iter().enumerate().map(|(i, c)| row(i + 1, c, &expl.params, clock)).collect();
        let model_winner = &expl.selection.winner;
        let (winner, rationale) = match chosen {
            Some(c) if c.config != model_winner.config => {
                let rank = expl.selection.ranked.iter().position(|r| r.config == c.config).map(|i| i + 1).unwrap_or(0);
                (row(rank, c, &expl.params, clock), format!("{} chosen instead of model winner {}", c.config, model_winner.config))
            }
            _ => (candidates[0].clone(), expl.selection.rationale.clone()),
        };
        let ci = computation_intensity(&expl.params);
        DesignReport {
            schema_version: SCHEMA_VERSION,
            kernel: expl.program.kernel_name.clone(),
            platform: expl.platform.name.clone(),
            clock_hz: clock,
            params: expl.params.clone(),
            computation_intensity: Intensity { exact: format!("{}/{}", ci.numer(), ci.denom()), approx: *ci.numer() as f64 / *ci.denom() as f64 },
            budget: expl.budget,
            candidates,
            winner,
            rationale,
            fallback_attempts: expl.attempts.clone(),
            seed,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises") + "\n"
    }
}
