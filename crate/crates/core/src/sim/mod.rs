//! Functional simulation of every parallelism organisation with U-wide
//! cycle accounting, plus the reference oracle the organisations are
//! checked against.

mod engine;
mod grid;
mod kernel;
mod oracle;
mod partition;
mod stream;

pub use engine::{RoundTrace, SimResult, Simulator};
pub use grid::Grid;
pub use oracle::oracle;
pub use partition::{check_partition, partition_rows, preload_halo, Partition};
pub use stream::{FifoReport, StreamReport};

use thiserror::Error;

use crate::dsl::StencilProgram;
use crate::model::Variant;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("grid error: {0}")]
    Grid(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid partition for {variant} k={k} s={s}: {halo_rows} halo rows do not fit in {rows_per_pe} rows per PE")]
    InvalidPartition { variant: Variant, k: usize, s: usize, rows_per_pe: usize, halo_rows: usize },
}

/// Checks that `inputs` fit the program and returns the program over the
/// grids' extents.
pub(crate) fn prepare(program: &StencilProgram, inputs: &[Grid]) -> Result<StencilProgram, SimError> {
    if program.outputs.len() != 1 {
        return Err(SimError::Unsupported(format!("{} output stages; exactly one is required", program.outputs.len())));
    }
    if inputs.len() != program.inputs.len() {
        return Err(SimError::Grid(format!("program has {} inputs, got {} grids", program.inputs.len(), inputs.len())));
    }
    let extents = inputs[0].extents();
    if extents.len() != program.dims() {
        return Err(SimError::Grid(format!("program is {}-D, grid is {}-D", program.dims(), extents.len())));
    }
    if let Some(g) = inputs.iter().find(|g| g.extents() != extents) {
        return Err(SimError::Grid(format!("grid extents differ: {:?} vs {:?}", g.extents(), extents)));
    }
    Ok(program.clone().with_extents(extents))
}

/// Seeded random grids, one per program input, at `extents`.
pub fn random_inputs(program: &StencilProgram, extents: &[usize], seed: u64) -> Result<Vec<Grid>, SimError> {
    (0..program.inputs.len()).map(|i| Grid::random(extents, seed.wrapping_add(i as u64))).collect()
}
