use std::collections::VecDeque;

use serde::Serialize;

use super::engine::Simulator;
use super::grid::Grid;
use super::kernel::eval_with;

/// One coalesced reuse buffer: the rolling window a stage keeps of one of
/// its source streams.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FifoReport {
    pub stage: usize,
    pub source: usize,
    /// Cells between the lowest and highest linear offset read.
    pub depth: usize,
    pub max_occupancy: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StreamReport {
    #[serde(skip)]
    pub output: Grid,
    /// Input beats: one U-wide group per tick.
    pub measured_cycles: u64,
    /// Ticks until the last output group left the PE.
    pub ticks: u64,
    pub fifos: Vec<FifoReport>,
    pub total_buffered_cells: usize,
}

struct Fifo {
    slot: usize,
    min_off: isize,
    max_off: isize,
    /// Linear index of the front cell.
    head: usize,
    cells: VecDeque<f32>,
    max_occupancy: usize,
}

impl Fifo {
    fn end(&self) -> usize {
        self.head + self.cells.len()
    }

    fn get(&self, idx: usize) -> f32 {
        self.cells[idx - self.head]
    }
}

struct StageState {
    fifos: Vec<Fifo>,
    next: usize,
}

impl Simulator {
    /// One iteration through a single PE fed one U-wide group per tick.
    /// Each stage fires one group of U PUs once every cell its window needs
    /// has arrived, and drops cells no later group can read.
    pub fn single_pe_stream(&self) -> StreamReport {
        let k = self.kernel();
        let inputs = self.inputs();
        let u = self.unroll();
        let n = k.rows * k.cols;
        let input_groups = n.div_ceil(u);

        let mut stages: Vec<StageState> = k
            .stages
            .iter()
            .map(|st| {
                let mut spans: Vec<(usize, isize, isize)> = Vec::new();
                let mut widen = |slot: usize, off: isize| match spans.iter_mut().find(|s| s.0 == slot) {
                    Some(s) => {
                        s.1 = s.1.min(off);
                        s.2 = s.2.max(off);
                    }
                    None => spans.push((slot, off, off)),
                };
                st.loads().for_each(|(slot, off)| widen(slot, off));
                if st.is_output {
                    // Pass-through cells read the centre.
                    widen(k.iterated, 0);
                }
                spans.sort();
                let fifos = spans
                    .into_iter()
                    .map(|(slot, min_off, max_off)| Fifo { slot, min_off, max_off, head: 0, cells: VecDeque::new(), max_occupancy: 0 })
                    .collect();
                StageState { fifos, next: 0 }
            })
            .collect();

        let mut output = inputs[k.iterated].data().to_vec();
        let mut stack = k.new_stack();
        let mut fed = 0;
        let mut ticks = 0u64;
        let out_stage = k.stages.len() - 1;
        while stages[out_stage].next < n {
            ticks += 1;
            if fed < n {
                let end = (fed + u).min(n);
                for st in stages.iter_mut() {
                    for f in st.fifos.iter_mut().filter(|f| f.slot < inputs.len()) {
                        f.cells.extend(&inputs[f.slot].data()[fed..end]);
                    }
                }
                fed = end;
            }
            for (si, def) in k.stages.iter().enumerate() {
                let q = stages[si].next;
                if q >= n {
                    continue;
                }
                let q_end = (q + u).min(n);
                let ready = stages[si].fifos.iter().all(|f| f.end() as isize >= (q_end as isize + f.max_off).min(n as isize));
                if !ready {
                    continue;
                }
                let st = &stages[si];
                let group: Vec<f32> = (q..q_end)
                    .map(|p| {
                        let (row, col) = (p / k.cols, p % k.cols);
                        if def.is_interior(row, col) {
                            eval_with(&def.ops, &mut stack, |slot, off| {
                                let f = st.fifos.iter().find(|f| f.slot == slot).expect("stage reads slot");
                                f.get((p as isize + off) as usize)
                            })
                        } else if def.is_output {
                            st.fifos.iter().find(|f| f.slot == k.iterated).expect("centre fifo").get(p)
                        } else {
                            0.0
                        }
                    })
                    .collect();
                for f in stages[si].fifos.iter_mut() {
                    f.max_occupancy = f.max_occupancy.max(f.cells.len());
                    let keep_from = (q_end as isize + f.min_off).max(0) as usize;
                    while f.head < keep_from && !f.cells.is_empty() {
                        f.cells.pop_front();
                        f.head += 1;
                    }
                }
                stages[si].next = q_end;
                if def.is_output {
                    output[q..q_end].copy_from_slice(&group);
                } else {
                    for st in stages.iter_mut() {
                        for f in st.fifos.iter_mut().filter(|f| f.slot == def.slot) {
                            f.cells.extend(&group);
                        }
                    }
                }
            }
        }

        let fifos: Vec<FifoReport> = stages
            .iter()
            .enumerate()
            .flat_map(|(si, st)| {
                st.fifos.iter().map(move |f| FifoReport {
                    stage: si,
                    source: f.slot,
                    depth: (f.max_off - f.min_off) as usize,
                    max_occupancy: f.max_occupancy,
                })
            })
            .collect();
        let total_buffered_cells = fifos.iter().map(|f| f.depth).sum();
        StreamReport {
            output: Grid::new(inputs[k.iterated].extents(), output).expect("extents unchanged"),
            measured_cycles: input_groups as u64,
            ticks,
            fifos,
            total_buffered_cells,
        }
    }
}
