//! Derived kernel parameters, stage-composed access footprints, dimension
//! flattening and computation intensity.

mod footprint;

pub use footprint::{direct_offsets, stage_footprints, stage_hulls, Footprint, Hull, OffsetSet, Reach};

use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

use crate::dsl::StencilProgram;
use crate::model::PlatformSpec;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("unsupported program: {0}")]
    UnsupportedProgram(String),
}

/// Quantities the latency model and simulator are parameterised by. Rows and
/// columns refer to the flattened 2-D view.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KernelParams {
    pub rows: usize,
    pub cols: usize,
    pub iterations: u32,
    pub radius: usize,
    /// Rows between the starts of two cascaded stages; always `2 * radius`.
    pub delay: usize,
    /// Halo rows per iteration, both sides together; always `2 * radius`.
    pub halo: usize,
    /// Cells consumed per cycle by one PE.
    pub unroll: usize,
    pub cell_bytes: usize,
    pub op_count: u64,
    pub n_inputs: usize,
}

impl KernelParams {
    pub fn with_iterations(&self, iterations: u32) -> Self {
        KernelParams { iterations, ..self.clone() }
    }

    pub fn cells(&self) -> u64 {
        (self.rows * self.cols) as u64
    }
}

/// Per-array offsets read by the program, before and after flattening.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccessPattern {
    pub arrays: BTreeMap<String, ArrayAccesses>,
    /// Stage-composed footprint of the output over all inputs.
    pub output_reach: Reach,
    pub radius: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArrayAccesses {
    pub offsets: Vec<Vec<i64>>,
    pub flattened: Vec<(i64, i64)>,
}

pub fn access_pattern(program: &StencilProgram) -> AccessPattern {
    let extents = program.extents();
    let mut arrays: BTreeMap<String, OffsetSet> = BTreeMap::new();
    for stage in program.stages() {
        for (name, set) in direct_offsets(stage) {
            arrays.entry(name).or_default().extend(set);
        }
    }
    let arrays = arrays
        .into_iter()
        .map(|(name, set)| {
            let flattened = set.iter().map(|o| flatten_offset(o, extents)).collect();
            (name, ArrayAccesses { offsets: set.into_iter().collect(), flattened })
        })
        .collect();
    let output_reach = output_reach(program);
    AccessPattern { arrays, radius: output_reach.radius(), output_reach }
}

/// Reach of the output stage's hull. Empty programs have zero reach.
pub fn output_reach(program: &StencilProgram) -> Reach {
    let dims = program.dims();
    let hulls = stage_hulls(program);
    program.outputs.first().and_then(|o| hulls.get(&o.target)).map(|h| h.reach()).unwrap_or_else(|| Reach::zero(dims))
}

/// Maps an N-d offset to (row, column) in the view where every dimension
/// after the first is folded into columns.
pub fn flatten_offset(offset: &[i64], extents: &[usize]) -> (i64, i64) {
    let row = offset.first().copied().unwrap_or(0);
    let mut col = 0i64;
    for (d, &o) in offset.iter().enumerate().skip(1) {
        col = col * extents[d] as i64 + o;
    }
    (row, col)
}

/// 2-D form of a program. Two-dimensional programs come back unchanged.
pub fn flatten(program: &StencilProgram) -> StencilProgram {
    if program.dims() <= 2 {
        return program.clone();
    }
    let extents = program.extents().to_vec();
    let flat_extents = vec![extents[0], extents[1..].iter().product()];
    let mut out = program.clone().with_extents(&flat_extents);
    for stage in out.locals.iter_mut().chain(out.outputs.iter_mut()) {
        stage.lhs_offset = vec![0, 0];
        stage.expr.map_offsets(&mut |off| {
            let (r, c) = flatten_offset(off, &extents);
            *off = vec![r, c];
        });
    }
    out
}

/// Operator nodes evaluated per output cell per iteration, counted stage by
/// stage.
pub fn op_count(program: &StencilProgram) -> u64 {
    program.stages().map(|s| s.expr.binary_op_count()).sum()
}

pub fn derive_params(program: &StencilProgram, platform: &PlatformSpec) -> Result<KernelParams, AnalysisError> {
    if program.outputs.len() != 1 {
        return Err(AnalysisError::UnsupportedProgram(format!(
            "{} output stages; exactly one is required",
            program.outputs.len()
        )));
    }
    let extents = program.extents();
    let rows = extents.first().copied().unwrap_or(0);
    let cols = extents.iter().skip(1).product();
    let radius = output_reach(program).radius();
    if rows <= 2 * radius {
        return Err(AnalysisError::UnsupportedProgram(format!("{rows} rows cannot hold an interior at radius {radius}")));
    }
    let cell_bytes = program.inputs[0].cell_type.bytes() as usize;
    let unroll = platform.unroll_factor(cell_bytes);
    if unroll == 0 {
        return Err(AnalysisError::UnsupportedProgram(format!(
            "bus of {} bits is narrower than one {cell_bytes}-byte cell",
            platform.bus_width_bits
        )));
    }
    Ok(KernelParams {
        rows,
        cols,
        iterations: program.iterations,
        radius,
        delay: 2 * radius,
        halo: 2 * radius,
        unroll,
        cell_bytes,
        op_count: op_count(program),
        n_inputs: program.inputs.len(),
    })
}

/// Operations per byte of off-chip traffic when every input cell is read
/// once and every output cell written once.
pub fn computation_intensity(params: &KernelParams) -> Ratio<u64> {
    let bytes = (params.n_inputs as u64 + 1) * params.cell_bytes as u64;
    Ratio::new(params.op_count * params.iterations as u64, bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    const JACOBI3D: &str = "kernel: JACOBI3D\niteration: 1\ninput float: in(9720, 32, 32)\n\
output float: out(0,0,0) = (in(0,0,0) + in(1,0,0) + in(-1,0,0) + in(0,1,0) + in(0,-1,0) + in(0,0,1) + in(0,0,-1)) / 7\n";

    #[test]
    fn flatten_offsets() {
        assert_eq!(flatten_offset(&[0, 1, 0], &[9720, 32, 32]), (0, 32));
        assert_eq!(flatten_offset(&[1, 0, 0], &[9720, 32, 32]), (1, 0));
        assert_eq!(flatten_offset(&[0, -1, 1], &[9720, 32, 32]), (0, -31));
        assert_eq!(flatten_offset(&[2, -3], &[10, 10]), (2, -3));
    }

    #[test]
    fn flatten_program() {
        let p = parse(JACOBI3D).unwrap();
        let f = flatten(&p);
        assert_eq!(f.extents(), &[9720, 1024]);
        let mut offs = Vec::new();
        f.outputs[0].expr.visit_accesses(&mut |_, o| offs.push(o.to_vec()));
        assert_eq!(offs, vec![vec![0, 0], vec![1, 0], vec![-1, 0], vec![0, 32], vec![0, -32], vec![0, 1], vec![0, -1]]);
        let two_d = flatten(&f);
        assert_eq!(two_d, f);
    }

    #[test]
    fn access_pattern_lists_both_views() {
        let p = parse(JACOBI3D).unwrap();
        let ap = access_pattern(&p);
        assert_eq!(ap.radius, 1);
        let a = &ap.arrays["in"];
        assert_eq!(a.offsets.len(), 7);
        assert!(a.flattened.contains(&(0, 32)));
        assert_eq!(ap.output_reach.lo, vec![1, 1, 1]);
    }

    #[test]
    fn op_count_sums_stages() {
        let p = parse(JACOBI3D).unwrap();
        assert_eq!(op_count(&p), 7);
        let copy = parse("kernel: C\niteration: 3\ninput float: in(8,8)\noutput float: out(0,0) = in(0,0)\n").unwrap();
        assert_eq!(op_count(&copy), 0);
    }
}
