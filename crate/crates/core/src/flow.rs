//! The end-to-end flow: derive parameters, explore the design space, retry
//! with smaller PE budgets, and pick a buildable winner.

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{derive_params, AnalysisError, KernelParams};
use crate::codegen::CodegenError;
use crate::dsl::{DslError, StencilProgram};
use crate::model::{fallback_step, select_optimal, Budget, Candidate, ModelError, ParallelismConfig, PlatformSpec, Selection, Variant};
use crate::sim::{check_partition, Grid, SimError, SimResult, Simulator};

#[derive(Debug, Error)]
pub enum FlowError {
    #[error(transparent)]
    Dsl(#[from] DslError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Codegen(#[from] CodegenError),
}

#[derive(Debug, Clone, Default)]
pub struct ExploreOptions {
    pub iterations: Option<u32>,
    pub max_pe: Option<u32>,
    /// Budget reductions to apply before the final exploration, standing in
    /// for that many failed builds.
    pub fallback_steps: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FallbackAttempt {
    pub max_pe: u32,
    pub outcome: String,
}

#[derive(Debug, Clone)]
pub struct Exploration {
    pub program: StencilProgram,
    pub platform: PlatformSpec,
    pub params: KernelParams,
    pub budget: Budget,
    pub selection: Selection,
    pub attempts: Vec<FallbackAttempt>,
}

pub fn explore(program: &StencilProgram, platform: &PlatformSpec, opts: &ExploreOptions) -> Result<Exploration, FlowError> {
    let program = match opts.iterations {
        Some(n) => program.clone().with_iterations(n),
        None => program.clone(),
    };
    let platform = platform.for_kernel(&program.kernel_name);
    let params = derive_params(&program, &platform)?;
    let mut budget = Budget::new(&params, &platform);
    if let Some(m) = opts.max_pe {
        budget = budget.with_max_pe(m);
    }
    let mut attempts = Vec::new();
    for _ in 0..opts.fallback_steps {
        let next = fallback_step(budget.max_pe, budget.slr_count)?;
        attempts.push(FallbackAttempt { max_pe: budget.max_pe, outcome: format!("build assumed failed; budget lowered to {next}") });
        budget = budget.with_max_pe(next);
    }
    let selection = select_optimal(&params, &budget)?;
    Ok(Exploration { program, platform, params, budget, selection, attempts })
}

/// Partition validity at the program's own size.
pub fn buildable(params: &KernelParams, c: &Candidate) -> Result<(), SimError> {
    let cfg = &c.config;
    check_partition(cfg.variant, params.rows, params.radius, cfg.k as usize, cfg.s as usize, params.iterations as usize)
}

/// Walks the ranked list for the first buildable design; when a whole
/// budget is exhausted, lowers it by one PE per SLR and explores again.
pub fn first_buildable(mut expl: Exploration) -> Result<(Exploration, Candidate), FlowError> {
    loop {
        for c in &expl.selection.ranked {
            match buildable(&expl.params, c) {
                Ok(()) => {
                    let c = c.clone();
                    return Ok((expl, c));
                }
                Err(e) => expl.attempts.push(FallbackAttempt { max_pe: expl.budget.max_pe, outcome: format!("rejected {}: {e}", c.config) }),
            }
        }
        let next = fallback_step(expl.budget.max_pe, expl.budget.slr_count)?;
        expl.attempts.push(FallbackAttempt { max_pe: expl.budget.max_pe, outcome: format!("no buildable design; budget lowered to {next}") });
        expl.budget = expl.budget.with_max_pe(next);
        expl.selection = select_optimal(&expl.params, &expl.budget)?;
    }
}

/// One variant run against the oracle and the latency model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimCheck {
    pub variant: Variant,
    pub k: u32,
    pub s: u32,
    pub bit_identical: bool,
    pub mismatched_cells: usize,
    pub measured_cycles: u64,
    pub model_cycles: u64,
    /// `(model - measured) / measured`.
    pub relative_error: f64,
}

impl SimCheck {
    pub fn abs_error(&self) -> f64 {
        self.relative_error.abs()
    }
}

/// Runs `variant` on `sim` and scores it. `params` must describe the
/// simulated grid, not the production size.
pub fn sim_check(sim: &Simulator, expected: &Grid, params: &KernelParams, variant: Variant, k: u32, s: u32) -> Result<(SimCheck, SimResult), SimError> {
    let result = sim.run(variant, k as usize, s as usize)?;
    let model = ParallelismConfig::new(variant, k, s, params.n_inputs as u32 + 1).estimate(params).cycles;
    let measured = result.measured_cycles;
    let check = SimCheck {
        variant,
        k,
        s,
        bit_identical: result.output.bit_identical(expected),
        mismatched_cells: result.output.mismatches(expected),
        measured_cycles: measured,
        model_cycles: model,
        relative_error: (model as f64 - measured as f64) / measured as f64,
    };
    Ok((check, result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::model::Variant;

    #[test]
    fn iteration_override_and_fallback() {
        let p = corpus::kernel("jacobi2d").unwrap();
        let platform = corpus::u280_like();
        let e = explore(&p, &platform, &ExploreOptions { iterations: Some(64), ..Default::default() }).unwrap();
        assert_eq!(e.budget.max_pe, 21);
        let w = &e.selection.winner.config;
        assert_eq!((w.variant, w.k % 3), (Variant::HybridS, 0));

        let e = explore(&p, &platform, &ExploreOptions { iterations: Some(64), fallback_steps: 2, ..Default::default() }).unwrap();
        assert_eq!(e.budget.max_pe, 15);
        assert_eq!(e.attempts.len(), 2);

        let e = explore(&p, &platform, &ExploreOptions { max_pe: Some(6), ..Default::default() }).unwrap();
        assert_eq!(e.budget.max_pe, 6);
        assert!(explore(&p, &platform, &ExploreOptions { max_pe: Some(3), fallback_steps: 1, ..Default::default() }).is_err());
    }

    #[test]
    fn spatial_s_check_on_small_grid() {
        let p = corpus::kernel("jacobi2d").unwrap().with_extents(&[64, 64]);
        let platform = corpus::u280_like();
        let params = derive_params(&p, &platform).unwrap();
        let inputs = crate::sim::random_inputs(&p, &[64, 64], 1).unwrap();
        let want = crate::sim::oracle(&p, &inputs).unwrap();
        let sim = Simulator::new(&p, &inputs, params.unroll).unwrap();
        let (c, _) = sim_check(&sim, &want, &params, Variant::SpatialS, 4, 1).unwrap();
        assert!(c.bit_identical);
        assert!(c.abs_error() <= 0.05, "{c:?}");
    }

    #[test]
    fn rejected_designs_fall_through() {
        let p = corpus::kernel("jacobi2d").unwrap().with_extents(&[20, 64]);
        let e = explore(&p, &corpus::u280_like(), &ExploreOptions { iterations: Some(8), ..Default::default() }).unwrap();
        let (e, c) = first_buildable(e).unwrap();
        assert!(buildable(&e.params, &c).is_ok());
        assert!(!e.attempts.is_empty());
    }
}
