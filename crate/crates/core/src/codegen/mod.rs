//! HLS-style C++ text for the accelerator and its host driver. The output
//! is a template in a TAPA-like dialect; nothing here compiles or
//! synthesizes it.

mod host;
mod kernel;

pub use host::emit_host;
pub use kernel::emit_kernel;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{flatten, stage_hulls, KernelParams, Reach};
use crate::dsl::{local_order, StageDef, StencilProgram};
use crate::model::{ParallelismConfig, PlatformSpec};
use crate::sim::{check_partition, partition_rows, preload_halo, Partition};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodegenError {
    #[error("unsupported config: {0}")]
    UnsupportedConfig(String),
}

/// Banks one spatial group drives: one per input, then the output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroupBanks {
    pub group: usize,
    pub banks: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct CodegenPlan {
    /// Two-dimensional form of the kernel.
    pub program: StencilProgram,
    pub params: KernelParams,
    pub config: ParallelismConfig,
    pub bank_assignment: Vec<GroupBanks>,
    /// First-round row split, as loaded by the host.
    pub partitions: Vec<Partition>,
    /// Extents before flattening; border tests use them.
    pub extents: Vec<usize>,
    /// Reach of each stage hull, per original dimension.
    pub reach: BTreeMap<String, Reach>,
    /// Locals in dependency order, then the output.
    pub(crate) stage_order: Vec<usize>,
}

impl CodegenPlan {
    pub fn new(program: &StencilProgram, params: &KernelParams, config: &ParallelismConfig, platform: &PlatformSpec) -> Result<Self, CodegenError> {
        let bad = |m: String| Err(CodegenError::UnsupportedConfig(m));
        if program.outputs.len() != 1 {
            return bad(format!("{} output stages; exactly one is required", program.outputs.len()));
        }
        config.check_shape().map_err(|e| CodegenError::UnsupportedConfig(e.to_string()))?;
        let (k, s) = (config.k as usize, config.s as usize);
        let iterations = params.iterations as usize;
        check_partition(config.variant, params.rows, params.radius, k, s, iterations)
            .map_err(|e| CodegenError::UnsupportedConfig(e.to_string()))?;
        let per_group = platform.banks_per_pe(program.inputs.len());
        if per_group < program.inputs.len() as u32 + 1 {
            return bad(format!("{per_group} banks per group cannot hold {} inputs and an output", program.inputs.len()));
        }
        let banks = per_group * config.k;
        if banks > platform.total_mem_banks {
            return bad(format!("{config} needs {banks} banks, platform has {}", platform.total_mem_banks));
        }
        let bank_assignment = (0..k).map(|g| GroupBanks { group: g, banks: (0..per_group).map(|i| g as u32 * per_group + i).collect() }).collect();
        let halo = preload_halo(config.variant, params.radius, s, iterations);
        let mut stage_order = local_order(program).map_err(CodegenError::UnsupportedConfig)?;
        stage_order.push(program.locals.len());
        let reach = stage_hulls(program).into_iter().map(|(t, h)| (t, h.reach())).collect();
        Ok(CodegenPlan {
            program: flatten(program),
            params: params.clone(),
            config: config.clone(),
            bank_assignment,
            partitions: partition_rows(params.rows, k, halo),
            extents: program.extents().to_vec(),
            reach,
            stage_order,
        })
    }

    pub fn rounds(&self) -> u64 {
        self.config.estimate(&self.params).rounds
    }

    /// `<kernel>_<variant>_k<k>_s<s>`, lowercase kernel name.
    pub fn file_stem(&self) -> String {
        format!("{}_{}", self.program.kernel_name.to_lowercase(), self.config.tag())
    }

    /// Every array in bank order: inputs, then the output.
    fn arrays(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.program.inputs.iter().map(|a| a.name.as_str()).collect();
        v.push(&self.program.outputs[0].target);
        v
    }

    /// Stages in evaluation order over the flattened program.
    fn stages(&self) -> Vec<&StageDef> {
        let p = &self.program;
        self.stage_order.iter().map(|&i| p.locals.get(i).unwrap_or(&p.outputs[0])).collect()
    }

    fn top_name(&self) -> String {
        format!("{}_top", ident(&self.program.kernel_name))
    }

    fn is_border_streaming(&self) -> bool {
        self.config.variant.streams_borders() && self.config.k > 1
    }
}

/// C identifier from a kernel name (`BLUR-JACOBI2D` -> `BLUR_JACOBI2D`).
fn ident(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::derive_params;
    use crate::corpus;
    use crate::model::Variant;

    pub(super) fn plan(stem: &str, variant: Variant, k: u32, s: u32) -> CodegenPlan {
        let platform = corpus::u280_like();
        let program = corpus::kernel(stem).unwrap();
        let params = derive_params(&program, &platform).unwrap();
        let config = ParallelismConfig::new(variant, k, s, platform.banks_per_pe(program.inputs.len()));
        CodegenPlan::new(&program, &params, &config, &platform).unwrap()
    }

    fn count(text: &str, needle: &str) -> usize {
        text.lines().filter(|l| l.contains(needle)).count()
    }

    #[test]
    fn temporal_two_stages() {
        let p = plan("jacobi2d", Variant::Temporal, 1, 2);
        let text = emit_kernel(&p);
        assert_eq!(count(&text, ".invoke(PE"), 2);
        assert_eq!(count(&text, "> cascade_"), 1);
        assert_eq!(count(&text, "> border_"), 0);
        assert_eq!(count(&text, "tapa::mmap<pkt_t> bank_"), 2);
        assert!(text.contains("Not guaranteed to synthesize"));
    }

    #[test]
    fn hybrid_s_border_streams() {
        let p = plan("jacobi2d", Variant::HybridS, 3, 2);
        let text = emit_kernel(&p);
        assert_eq!(count(&text, ".invoke(PE"), 6);
        assert_eq!(count(&text, "> border_"), 2);
        assert_eq!(count(&text, "> cascade_"), 3);
        assert_eq!(count(&text, "tapa::mmap<pkt_t> bank_"), 6);
        let r = emit_kernel(&plan("jacobi2d", Variant::HybridR, 3, 2));
        assert_eq!(count(&r, "> border_"), 0);
    }

    #[test]
    fn bank_assignment_is_disjoint() {
        let p = plan("hotspot", Variant::SpatialS, 9, 1);
        let mut all: Vec<u32> = p.bank_assignment.iter().flat_map(|g| g.banks.clone()).collect();
        assert_eq!(all.len(), 27);
        all.dedup();
        assert_eq!(all.len(), 27);
        assert_eq!(p.bank_assignment[1].banks, vec![3, 4, 5]);
    }

    #[test]
    fn rejects_bad_configs() {
        let platform = corpus::u280_like();
        let program = corpus::kernel("jacobi2d").unwrap();
        let params = derive_params(&program, &platform).unwrap();
        let too_wide = ParallelismConfig::new(Variant::SpatialS, 17, 1, 2);
        assert!(CodegenPlan::new(&program, &params, &too_wide, &platform).is_err());
        let bad_shape = ParallelismConfig::new(Variant::Temporal, 2, 2, 2);
        assert!(CodegenPlan::new(&program, &params, &bad_shape, &platform).is_err());
    }

    #[test]
    fn emission_is_deterministic() {
        let a = plan("blur-jacobi2d", Variant::HybridS, 3, 4);
        let b = plan("blur-jacobi2d", Variant::HybridS, 3, 4);
        assert_eq!(emit_kernel(&a), emit_kernel(&b));
        assert_eq!(emit_host(&a), emit_host(&b));
        assert_eq!(a.file_stem(), "blur-jacobi2d_hybrid-s_k3_s4");
    }
}
