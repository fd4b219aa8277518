//! Analytical latency model and design-space exploration over the five
//! parallelism organisations.

mod explore;
mod latency;
mod platform;

pub use explore::{
    enumerate_configs, fallback_step, rank_order, select_optimal, Budget, Candidate, ConfigFlag, ParallelismConfig, Selection,
    Variant,
};
pub use latency::{
    latency_hybrid_r, latency_hybrid_s, latency_spatial_r, latency_spatial_s, latency_temporal, max_pe, pe_bw, pe_res,
    LatencyEstimate,
};
pub use platform::{PlatformSpec, ResourceVector};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid platform: {0}")]
    InvalidPlatform(String),
    #[error("empty design space: {0}")]
    EmptySpace(String),
    #[error("unsupported config: {0}")]
    UnsupportedConfig(String),
    #[error("fallback exhausted: {max_pe} PEs minus {slr_count} SLRs leaves none")]
    FallbackExhausted { max_pe: u32, slr_count: u32 },
}
