use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::KernelParams;

use super::latency::{self, LatencyEstimate};
use super::platform::PlatformSpec;
use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Temporal,
    SpatialR,
    SpatialS,
    HybridR,
    HybridS,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::Temporal, Variant::SpatialR, Variant::SpatialS, Variant::HybridR, Variant::HybridS];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Temporal => "temporal",
            Variant::SpatialR => "spatial-r",
            Variant::SpatialS => "spatial-s",
            Variant::HybridR => "hybrid-r",
            Variant::HybridS => "hybrid-s",
        }
    }

    /// Tie-break preference; lower wins.
    fn preference(self) -> u8 {
        match self {
            Variant::HybridS => 0,
            Variant::SpatialS => 1,
            Variant::HybridR => 2,
            Variant::SpatialR => 3,
            Variant::Temporal => 4,
        }
    }

    /// True for the border-streaming flavours.
    pub fn streams_borders(self) -> bool {
        matches!(self, Variant::SpatialS | Variant::HybridS)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown variant `{s}`; expected one of temporal, spatial-r, spatial-s, hybrid-r, hybrid-s"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfigFlag {
    /// k * s falls short of the PE budget because no legal k divides it.
    Underfilled,
    /// No SLR-multiple k fits, so any k was admitted.
    SlrRelaxed,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ParallelismConfig {
    pub variant: Variant,
    pub k: u32,
    pub s: u32,
    pub total_pes: u32,
    pub hbm_banks_used: u32,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<ConfigFlag>,
}

impl ParallelismConfig {
    pub fn new(variant: Variant, k: u32, s: u32, banks_per_pe: u32) -> Self {
        ParallelismConfig { variant, k, s, total_pes: k * s, hbm_banks_used: k * banks_per_pe, flags: Vec::new() }
    }

    fn flagged(mut self, flag: Option<ConfigFlag>) -> Self {
        self.flags.extend(flag);
        self
    }

    /// Structural checks independent of any budget.
    pub fn check_shape(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::UnsupportedConfig(format!("{self}: {m}")));
        if self.k == 0 || self.s == 0 {
            return bad("k and s must be at least 1");
        }
        match self.variant {
            Variant::Temporal if self.k != 1 => bad("temporal designs have k = 1"),
            Variant::SpatialR | Variant::SpatialS if self.s != 1 => bad("spatial designs have s = 1"),
            _ => Ok(()),
        }
    }

    pub fn estimate(&self, params: &KernelParams) -> LatencyEstimate {
        match self.variant {
            Variant::Temporal => latency::latency_temporal(params, self.s),
            Variant::SpatialR => latency::latency_spatial_r(params, self.k),
            Variant::SpatialS => latency::latency_spatial_s(params, self.k),
            Variant::HybridR => latency::latency_hybrid_r(params, self.k, self.s),
            Variant::HybridS => latency::latency_hybrid_s(params, self.k, self.s),
        }
    }

    /// File-name stem fragment, e.g. `hybrid-s_k3_s7`.
    pub fn tag(&self) -> String {
        format!("{}_k{}_s{}", self.variant, self.k, self.s)
    }
}

impl fmt::Display for ParallelismConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(k={}, s={})", self.variant, self.k, self.s)
    }
}

/// The caps exploration works under for one kernel on one platform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Budget {
    /// PE budget: the resource cap, possibly lowered by an override or by
    /// fallback steps.
    pub max_pe: u32,
    pub pe_res: u32,
    pub pe_bw: u32,
    pub banks_per_pe: u32,
    pub slr_count: u32,
}

impl Budget {
    pub fn new(params: &KernelParams, platform: &PlatformSpec) -> Self {
        let banks_per_pe = platform.banks_per_pe(params.n_inputs);
        let pe_bw = latency::pe_bw(platform, banks_per_pe);
        // An unconstrained resource budget still cannot use more PEs than
        // there are iterations times bank groups.
        let pe_res = latency::pe_res(platform).unwrap_or_else(|| pe_bw.max(1).saturating_mul(params.iterations));
        Budget { max_pe: pe_res, pe_res, pe_bw, banks_per_pe, slr_count: platform.slr_count }
    }

    pub fn with_max_pe(self, max_pe: u32) -> Self {
        Budget { max_pe: max_pe.min(self.pe_res), ..self }
    }
}

/// Candidate space for a PE budget: one temporal design, one design per
/// spatial flavour, and the hybrid (k, s) splits.
pub fn enumerate_configs(params: &KernelParams, budget: &Budget) -> Result<Vec<ParallelismConfig>, ModelError> {
    let p = budget.max_pe;
    let iter = params.iterations;
    if p == 0 || budget.pe_bw == 0 || iter == 0 {
        return Err(ModelError::EmptySpace(format!("PE budget {p}, bandwidth cap {}, {iter} iterations", budget.pe_bw)));
    }
    let bpp = budget.banks_per_pe;
    let mut out = vec![ParallelismConfig::new(Variant::Temporal, 1, p.min(iter), bpp)];
    let k_spatial = p.min(budget.pe_bw);
    out.push(ParallelismConfig::new(Variant::SpatialR, k_spatial, 1, bpp));
    out.push(ParallelismConfig::new(Variant::SpatialS, k_spatial, 1, bpp));

    let k_cap = p.min(budget.pe_bw);
    let slr = budget.slr_count.max(1);
    // A hybrid with one spatial group is the temporal design, already listed.
    let mut ks: Vec<u32> = (2..=k_cap).filter(|k| k % slr == 0).collect();
    let relaxed = ks.is_empty();
    if relaxed {
        ks = (2..=k_cap).collect();
    }
    let relax_flag = relaxed.then_some(ConfigFlag::SlrRelaxed);
    let exact: Vec<(u32, u32)> = ks.iter().filter(|&&k| p % k == 0 && p / k <= iter).map(|&k| (k, p / k)).collect();
    let (pairs, fill_flag) = if exact.is_empty() {
        (ks.iter().map(|&k| (k, (p / k).min(iter))).collect::<Vec<_>>(), Some(ConfigFlag::Underfilled))
    } else {
        (exact, None)
    };
    for (k, s) in pairs {
        for variant in [Variant::HybridR, Variant::HybridS] {
            out.push(ParallelismConfig::new(variant, k, s, bpp).flagged(relax_flag).flagged(fill_flag));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub config: ParallelismConfig,
    pub estimate: LatencyEstimate,
}

/// Selection order: fewest cycles, then fewest banks, then fewest PEs, then
/// variant preference, then smaller k.
pub fn rank_order(a: &Candidate, b: &Candidate) -> Ordering {
    a.estimate
        .cycles
        .cmp(&b.estimate.cycles)
        .then(a.config.hbm_banks_used.cmp(&b.config.hbm_banks_used))
        .then(a.config.total_pes.cmp(&b.config.total_pes))
        .then(a.config.variant.preference().cmp(&b.config.variant.preference()))
        .then(a.config.k.cmp(&b.config.k))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub winner: Candidate,
    /// Every candidate, best first.
    pub ranked: Vec<Candidate>,
    pub rationale: String,
}

pub fn select_optimal(params: &KernelParams, budget: &Budget) -> Result<Selection, ModelError> {
    let mut ranked: Vec<Candidate> = enumerate_configs(params, budget)?
        .into_iter()
        .map(|config| Candidate { estimate: config.estimate(params), config })
        .collect();
    ranked.sort_by(rank_order);
    let winner = ranked[0].clone();
    let rationale = rationale(&ranked);
    Ok(Selection { winner, ranked, rationale })
}

fn rationale(ranked: &[Candidate]) -> String {
    let w = &ranked[0];
    let mut text = format!("{} has the lowest estimate, {} cycles", w.config, w.estimate.cycles);
    let tied: Vec<&Candidate> = ranked[1..].iter().filter(|c| c.estimate.cycles == w.estimate.cycles).collect();
    if tied.is_empty() {
        if let Some(next) = ranked.get(1) {
            text += &format!("; runner-up {} needs {} cycles", next.config, next.estimate.cycles);
        }
    } else {
        let names: Vec<String> = tied.iter().map(|c| c.config.to_string()).collect();
        text += &format!(
            "; tied with {} and preferred for using {} banks and {} PEs",
            names.join(", "),
            w.config.hbm_banks_used,
            w.config.total_pes
        );
    }
    text
}

/// One step of the build-failure retry loop: drop the PE budget by one PE
/// per SLR.
pub fn fallback_step(max_pe: u32, slr_count: u32) -> Result<u32, ModelError> {
    match max_pe.checked_sub(slr_count) {
        Some(next) if next >= 1 => Ok(next),
        _ => Err(ModelError::FallbackExhausted { max_pe, slr_count }),
    }
}
