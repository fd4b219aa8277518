use serde::Serialize;

use crate::analysis::KernelParams;

use super::platform::PlatformSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LatencyEstimate {
    pub cycles: u64,
    pub rounds: u64,
}

impl LatencyEstimate {
    pub fn seconds(&self, clock_hz: f64) -> f64 {
        self.cycles as f64 / clock_hz
    }

    /// Billions of cell updates per second.
    pub fn throughput_gcells(&self, params: &KernelParams, clock_hz: f64) -> f64 {
        params.cells() as f64 * params.iterations as f64 / self.seconds(clock_hz) / 1e9
    }
}

fn ceil_div(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

fn rows_per_partition(p: &KernelParams, k: u64) -> u64 {
    ceil_div(p.rows as u64, k)
}

/// Cycles to stream `rows` full rows through one PE.
fn stream(p: &KernelParams, rows: u64) -> u64 {
    ceil_div(rows * p.cols as u64, p.unroll as u64)
}

/// Like `stream`, for a row count given in halves.
fn stream_half_rows(p: &KernelParams, half_rows: u64) -> u64 {
    ceil_div(half_rows * p.cols as u64, 2 * p.unroll as u64)
}

fn iters(p: &KernelParams) -> u64 {
    p.iterations as u64
}

/// Cascade of `s` stages over the whole grid.
pub fn latency_temporal(p: &KernelParams, s: u32) -> LatencyEstimate {
    let s = s as u64;
    let rounds = ceil_div(iters(p), s);
    let round = stream(p, p.rows as u64 + p.delay as u64 * (s - 1));
    LatencyEstimate { cycles: round * rounds, rounds }
}

/// Each of `k` partitions carries the average halo of `iter / 2`
/// iterations; the inner product is kept exact before the ceiling.
pub fn latency_spatial_r(p: &KernelParams, k: u32) -> LatencyEstimate {
    let half_rows = 2 * rows_per_partition(p, k as u64) + p.halo as u64 * iters(p);
    LatencyEstimate { cycles: stream_half_rows(p, half_rows) * iters(p), rounds: iters(p) }
}

pub fn latency_spatial_s(p: &KernelParams, k: u32) -> LatencyEstimate {
    let rows = rows_per_partition(p, k as u64) + p.halo as u64;
    LatencyEstimate { cycles: stream(p, rows) * iters(p), rounds: iters(p) }
}

pub fn latency_hybrid_r(p: &KernelParams, k: u32, s: u32) -> LatencyEstimate {
    let rounds = ceil_div(iters(p), s as u64);
    let half_rows = 2 * rows_per_partition(p, k as u64) + p.halo as u64 * iters(p);
    LatencyEstimate { cycles: stream_half_rows(p, half_rows) * rounds, rounds }
}

pub fn latency_hybrid_s(p: &KernelParams, k: u32, s: u32) -> LatencyEstimate {
    let rounds = ceil_div(iters(p), s as u64);
    let rows = rows_per_partition(p, k as u64) + p.halo as u64 * s as u64;
    LatencyEstimate { cycles: stream(p, rows) * rounds, rounds }
}

/// Floor of `alpha * total / per_pe` over the constraining resource
/// classes. `None` when no class constrains.
pub fn pe_res(platform: &PlatformSpec) -> Option<u32> {
    let total = platform.total_resource.classes();
    let per = platform.resource_per_pe.classes();
    total
        .iter()
        .zip(per.iter())
        .filter(|(_, (_, per))| *per > 0)
        .map(|((_, total), (_, per))| {
            // The epsilon absorbs representation error when alpha * total is
            // an exact multiple of per_pe.
            (platform.alpha * *total as f64 / *per as f64 + 1e-9).floor() as u32
        })
        .min()
}

/// Spatial PE groups the memory banks can feed.
pub fn pe_bw(platform: &PlatformSpec, banks_per_pe: u32) -> u32 {
    platform.total_mem_banks / banks_per_pe
}

pub fn max_pe(pe_res: u32, pe_bw: u32, s: u32) -> u32 {
    pe_res.min(pe_bw.saturating_mul(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::platform::ResourceVector;

    fn jacobi(iterations: u32) -> KernelParams {
        KernelParams {
            rows: 9720,
            cols: 1024,
            iterations,
            radius: 1,
            delay: 2,
            halo: 2,
            unroll: 16,
            cell_bytes: 4,
            op_count: 5,
            n_inputs: 1,
        }
    }

    fn platform(total: ResourceVector, per: ResourceVector, banks: u32) -> PlatformSpec {
        PlatformSpec {
            name: String::new(),
            total_mem_banks: banks,
            banks_per_spatial_pe: None,
            total_resource: total,
            resource_per_pe: per,
            alpha: 0.75,
            slr_count: 3,
            bus_width_bits: 512,
            clock_hz: 225e6,
            kernel_resource_per_pe: Default::default(),
        }
    }

    #[test]
    fn equation_examples() {
        assert_eq!(latency_temporal(&jacobi(4), 4).cycles, 622_464);
        assert_eq!(latency_spatial_r(&jacobi(1), 4).cycles, 155_584);
        assert_eq!(latency_spatial_s(&jacobi(1), 12).cycles, 51_968);
        assert_eq!(latency_hybrid_r(&jacobi(64), 3, 4).cycles, 3_383_296);
        assert_eq!(latency_hybrid_s(&jacobi(64), 3, 4).cycles, 3_325_952);
        assert_eq!(latency_temporal(&jacobi(64), 12).rounds, 6);
        assert_eq!(latency_temporal(&jacobi(1), 1).cycles, 9720 * 1024 / 16);
    }

    #[test]
    fn resource_and_bandwidth_caps() {
        let lut = |t, p| platform(ResourceVector { lut: t, ..Default::default() }, ResourceVector { lut: p, ..Default::default() }, 32);
        assert_eq!(pe_res(&lut(1_300_000, 75_000)), Some(13));
        assert_eq!(pe_res(&lut(100_000, 75_000)), Some(1));
        let dsp = platform(
            ResourceVector { lut: 1_303_680, dsp: 9024, ..Default::default() },
            ResourceVector { lut: 1, dsp: 752, ..Default::default() },
            32,
        );
        assert_eq!(pe_res(&dsp), Some(9));
        assert_eq!(pe_res(&lut(10, 0)), None);
        assert_eq!(pe_bw(&dsp, 2), 16);
        assert_eq!(pe_bw(&dsp, 3), 10);
        assert_eq!(pe_bw(&platform(ResourceVector::default(), ResourceVector::default(), 1), 1), 1);
        assert_eq!(max_pe(12, 16, 1), 12);
        assert_eq!(max_pe(12, 3, 4), 12);
        assert_eq!(max_pe(12, 3, 1), 3);
    }

    #[test]
    fn spatial_flavours_agree_at_one_iteration() {
        let p = jacobi(1);
        for k in 1..=16 {
            let diff = latency_spatial_r(&p, k).cycles.abs_diff(latency_spatial_s(&p, k).cycles);
            assert!(diff <= (p.halo * p.cols / p.unroll) as u64);
        }
    }
}
