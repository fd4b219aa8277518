use serde::Serialize;

use crate::dsl::StencilProgram;
use crate::model::Variant;

use super::grid::Grid;
use super::kernel::{CompiledKernel, Window};
use super::partition::{check_partition, partition_rows, preload_halo, Partition};
use super::{prepare, SimError};

/// Streamed rows per PE group in one round, after adding each cascaded
/// stage's start lag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundTrace {
    pub round: usize,
    pub stages: usize,
    pub pe_rows: Vec<usize>,
    pub cycles: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub output: Grid,
    pub measured_cycles: u64,
    pub rounds: u64,
    pub round_cycles: Vec<u64>,
    /// Cells streamed through each PE, indexed `group * s + stage`.
    pub per_pe_elements: Vec<u64>,
    pub halo_exchanged_rows: u64,
    pub trace: Vec<RoundTrace>,
}

/// Executes one kernel on fixed input grids under any parallelism
/// organisation, counting U-wide element groups.
pub struct Simulator {
    kernel: CompiledKernel,
    inputs: Vec<Grid>,
    iterations: usize,
    unroll: usize,
}

/// Running totals shared by every organisation.
struct Tally {
    cycles: u64,
    round_cycles: Vec<u64>,
    per_pe: Vec<u64>,
    exchanged: u64,
    trace: Vec<RoundTrace>,
}

impl Tally {
    fn new(pes: usize) -> Self {
        Tally { cycles: 0, round_cycles: Vec::new(), per_pe: vec![0; pes], exchanged: 0, trace: Vec::new() }
    }
}

impl Simulator {
    /// `inputs` follow the program's input order; their extents replace the
    /// declared ones.
    pub fn new(program: &StencilProgram, inputs: &[Grid], unroll: usize) -> Result<Self, SimError> {
        if unroll == 0 {
            return Err(SimError::Unsupported("unroll factor must be at least 1".into()));
        }
        let program = prepare(program, inputs)?;
        let kernel = CompiledKernel::compile(&program)?;
        if kernel.rows <= 2 * kernel.radius {
            return Err(SimError::Unsupported(format!("{} rows cannot hold an interior at radius {}", kernel.rows, kernel.radius)));
        }
        Ok(Simulator { kernel, inputs: inputs.to_vec(), iterations: program.iterations as usize, unroll })
    }

    pub fn radius(&self) -> usize {
        self.kernel.radius
    }

    pub fn rows(&self) -> usize {
        self.kernel.rows
    }

    pub fn cols(&self) -> usize {
        self.kernel.cols
    }

    fn delay(&self) -> usize {
        2 * self.kernel.radius
    }

    fn stream_cycles(&self, rows: usize) -> u64 {
        (rows * self.kernel.cols).div_ceil(self.unroll) as u64
    }

    fn initial_state(&self) -> &[f32] {
        self.inputs[self.kernel.iterated].data()
    }

    fn close_round(&self, t: &mut Tally, stages: usize, pe_rows: Vec<usize>) {
        let rows = pe_rows.iter().copied().max().unwrap_or(0);
        let cycles = self.stream_cycles(rows);
        t.cycles += cycles;
        t.round_cycles.push(cycles);
        t.trace.push(RoundTrace { round: t.trace.len(), stages, pe_rows, cycles });
    }

    fn finish(&self, t: Tally, state: Vec<f32>) -> Result<SimResult, SimError> {
        let extents = self.inputs[self.kernel.iterated].extents();
        Ok(SimResult {
            output: Grid::new(extents, state)?,
            measured_cycles: t.cycles,
            rounds: t.round_cycles.len() as u64,
            round_cycles: t.round_cycles,
            per_pe_elements: t.per_pe,
            halo_exchanged_rows: t.exchanged,
            trace: t.trace,
        })
    }

    fn gather(&self, windows: &[Window], parts: &[Partition], state: &mut [f32]) {
        let c = self.kernel.cols;
        for (w, p) in windows.iter().zip(parts) {
            state[p.lo * c..p.hi * c].copy_from_slice(w.rows(&self.kernel, p.lo, p.hi));
        }
    }

    pub fn run(&self, variant: Variant, k: usize, s: usize) -> Result<SimResult, SimError> {
        match variant {
            Variant::Temporal if k == 1 => self.temporal(s),
            Variant::SpatialR if s == 1 => self.spatial_r(k),
            Variant::SpatialS if s == 1 => self.spatial_s(k),
            Variant::HybridR => self.hybrid_r(k, s),
            Variant::HybridS => self.hybrid_s(k, s),
            _ => Err(SimError::Unsupported(format!("{variant} cannot run with k={k}, s={s}"))),
        }
    }

    /// `s` cascaded stages over the whole grid; stage j starts `j * d` rows
    /// after the first.
    pub fn temporal(&self, s: usize) -> Result<SimResult, SimError> {
        check_partition(Variant::Temporal, self.rows(), self.radius(), 1, s, self.iterations)?;
        let k = &self.kernel;
        let mut w = Window::load(k, self.initial_state(), &self.inputs, 0, k.rows);
        let mut t = Tally::new(s);
        let mut remaining = self.iterations;
        while remaining > 0 {
            let stages = s.min(remaining);
            let mut span = 0;
            for j in 0..stages {
                let streamed = w.step(k);
                t.per_pe[j] += (streamed * k.cols) as u64;
                span = span.max(j * self.delay() + streamed);
            }
            self.close_round(&mut t, stages, vec![span]);
            remaining -= stages;
        }
        let state = w.rows(k, 0, k.rows).to_vec();
        self.finish(t, state)
    }

    /// `k` independent partitions, each pre-loaded with `r * iter` halo rows
    /// per side and never synchronised.
    pub fn spatial_r(&self, k: usize) -> Result<SimResult, SimError> {
        check_partition(Variant::SpatialR, self.rows(), self.radius(), k, 1, self.iterations)?;
        let kern = &self.kernel;
        let parts = partition_rows(kern.rows, k, preload_halo(Variant::SpatialR, self.radius(), 1, self.iterations));
        let mut windows: Vec<Window> = parts
            .iter()
            .map(|p| Window::load(kern, self.initial_state(), &self.inputs, p.resident().start, p.resident().end))
            .collect();
        let mut t = Tally::new(k);
        for _ in 0..self.iterations {
            let mut pe_rows = Vec::with_capacity(k);
            for (i, w) in windows.iter_mut().enumerate() {
                let streamed = w.step(kern);
                t.per_pe[i] += (streamed * kern.cols) as u64;
                pe_rows.push(streamed);
            }
            self.close_round(&mut t, 1, pe_rows);
        }
        let mut state = self.initial_state().to_vec();
        self.gather(&windows, &parts, &mut state);
        self.finish(t, state)
    }

    /// `k` partitions with `r` halo rows per side, refreshed from the
    /// neighbours between iterations.
    pub fn spatial_s(&self, k: usize) -> Result<SimResult, SimError> {
        check_partition(Variant::SpatialS, self.rows(), self.radius(), k, 1, self.iterations)?;
        let kern = &self.kernel;
        let parts = partition_rows(kern.rows, k, self.radius());
        let mut state = self.initial_state().to_vec();
        let mut windows: Vec<Window> =
            parts.iter().map(|p| Window::load(kern, &state, &self.inputs, p.resident().start, p.resident().end)).collect();
        let mut t = Tally::new(k);
        for it in 0..self.iterations {
            if it > 0 {
                self.gather(&windows, &parts, &mut state);
                for (w, p) in windows.iter_mut().zip(&parts) {
                    w.refresh(kern, &state, p.resident().start..p.lo);
                    w.refresh(kern, &state, p.hi..p.resident().end);
                    t.exchanged += (p.halo_lo + p.halo_hi) as u64;
                }
            }
            let mut pe_rows = Vec::with_capacity(k);
            for (i, w) in windows.iter_mut().enumerate() {
                let streamed = w.step(kern);
                t.per_pe[i] += (streamed * kern.cols) as u64;
                pe_rows.push(streamed);
            }
            self.close_round(&mut t, 1, pe_rows);
        }
        self.gather(&windows, &parts, &mut state);
        self.finish(t, state)
    }

    /// `k` groups of `s` cascaded stages, each group pre-loaded once with
    /// `r * iter` halo rows per side; the valid region keeps shrinking
    /// across rounds.
    pub fn hybrid_r(&self, k: usize, s: usize) -> Result<SimResult, SimError> {
        check_partition(Variant::HybridR, self.rows(), self.radius(), k, s, self.iterations)?;
        let kern = &self.kernel;
        let parts = partition_rows(kern.rows, k, preload_halo(Variant::HybridR, self.radius(), s, self.iterations));
        let mut windows: Vec<Window> = parts
            .iter()
            .map(|p| Window::load(kern, self.initial_state(), &self.inputs, p.resident().start, p.resident().end))
            .collect();
        let mut t = Tally::new(k * s);
        let mut remaining = self.iterations;
        while remaining > 0 {
            let stages = s.min(remaining);
            let pe_rows = windows.iter_mut().enumerate().map(|(g, w)| self.cascade(w, g, s, stages, &mut t)).collect();
            self.close_round(&mut t, stages, pe_rows);
            remaining -= stages;
        }
        let mut state = self.initial_state().to_vec();
        self.gather(&windows, &parts, &mut state);
        self.finish(t, state)
    }

    /// `k` groups of `s` cascaded stages; at each round start the first
    /// stages take `r * s` fresh halo rows per side from their neighbours.
    pub fn hybrid_s(&self, k: usize, s: usize) -> Result<SimResult, SimError> {
        check_partition(Variant::HybridS, self.rows(), self.radius(), k, s, self.iterations)?;
        let kern = &self.kernel;
        let mut state = self.initial_state().to_vec();
        let mut t = Tally::new(k * s);
        let mut remaining = self.iterations;
        let mut first = true;
        while remaining > 0 {
            let stages = s.min(remaining);
            let parts = partition_rows(kern.rows, k, self.radius() * stages);
            let mut windows: Vec<Window> =
                parts.iter().map(|p| Window::load(kern, &state, &self.inputs, p.resident().start, p.resident().end)).collect();
            if !first {
                t.exchanged += parts.iter().map(|p| (p.halo_lo + p.halo_hi) as u64).sum::<u64>();
            }
            let pe_rows = windows.iter_mut().enumerate().map(|(g, w)| self.cascade(w, g, s, stages, &mut t)).collect();
            self.close_round(&mut t, stages, pe_rows);
            self.gather(&windows, &parts, &mut state);
            remaining -= stages;
            first = false;
        }
        self.finish(t, state)
    }

    /// Runs `stages` cascaded steps of group `g`; returns its lagged span.
    fn cascade(&self, w: &mut Window, g: usize, s: usize, stages: usize, t: &mut Tally) -> usize {
        let mut span = 0;
        for j in 0..stages {
            let streamed = w.step(&self.kernel);
            t.per_pe[g * s + j] += (streamed * self.kernel.cols) as u64;
            span = span.max(j * self.delay() + streamed);
        }
        span
    }

    pub(crate) fn kernel(&self) -> &CompiledKernel {
        &self.kernel
    }

    pub(crate) fn inputs(&self) -> &[Grid] {
        &self.inputs
    }

    pub(crate) fn unroll(&self) -> usize {
        self.unroll
    }
}
