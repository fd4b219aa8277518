use crate::analysis::{flatten_offset, stage_hulls, Reach};
use crate::dsl::{local_order, BinOp, Expr, StencilProgram};

use super::grid::Grid;
use super::SimError;

#[derive(Debug, Clone, Copy)]
pub(crate) enum Op {
    /// Read `slot` at a linear offset from the current cell.
    Load { slot: usize, off: isize },
    Const(f32),
    Neg,
    Bin(BinOp),
}

#[derive(Debug, Clone)]
pub(crate) struct Stage {
    pub slot: usize,
    pub ops: Vec<Op>,
    /// Signed extremes of the composed row offsets.
    row_min: i64,
    row_max: i64,
    /// Rows whose whole footprint is in bounds.
    interior_rows: (usize, usize),
    /// Per flattened column: whole footprint in bounds along trailing dims.
    interior_cols: Vec<bool>,
    pub is_output: bool,
}

impl Stage {
    pub fn is_interior(&self, row: usize, col: usize) -> bool {
        row >= self.interior_rows.0 && row < self.interior_rows.1 && self.interior_cols[col]
    }

    /// Linear offsets this stage reads from each slot.
    pub fn loads(&self) -> impl Iterator<Item = (usize, isize)> + '_ {
        self.ops.iter().filter_map(|op| match *op {
            Op::Load { slot, off } => Some((slot, off)),
            _ => None,
        })
    }
}

/// A program lowered to postfix code over flattened rows. Array slots are
/// the inputs in declaration order followed by the locals.
#[derive(Debug, Clone)]
pub(crate) struct CompiledKernel {
    pub rows: usize,
    pub cols: usize,
    pub iterated: usize,
    pub radius: usize,
    pub n_slots: usize,
    pub stages: Vec<Stage>,
    stack_depth: usize,
}

impl CompiledKernel {
    pub fn compile(program: &StencilProgram) -> Result<Self, SimError> {
        let extents = program.extents().to_vec();
        let dims = extents.len();
        let rows = extents[0];
        let cols: usize = extents[1..].iter().product();
        let hulls = stage_hulls(program);
        let order = local_order(program).map_err(|c| SimError::Unsupported(format!("cyclic local `{c}`")))?;

        let mut slot_names: Vec<&str> = program.inputs.iter().map(|a| a.name.as_str()).collect();
        slot_names.extend(program.locals.iter().map(|s| s.target.as_str()));
        let slot_of = |name: &str| slot_names.iter().position(|n| *n == name);

        let mut stages = Vec::new();
        let mut stack_depth = 0;
        let stage_list = order.iter().map(|&i| (&program.locals[i], false)).chain(program.outputs.iter().map(|o| (o, true)));
        for (def, is_output) in stage_list {
            let hull = &hulls[&def.target];
            let reach: Reach = hull.reach();
            let (row_min, row_max) = (hull.min[0], hull.max[0]);
            let interior_rows = (reach.lo[0], rows.saturating_sub(reach.hi[0]));
            let interior_cols = (0..cols)
                .map(|j| {
                    let mut rest = j;
                    (1..dims).rev().all(|d| {
                        let c = rest % extents[d];
                        rest /= extents[d];
                        c >= reach.lo[d] && c + reach.hi[d] < extents[d]
                    })
                })
                .collect();
            let mut ops = Vec::new();
            let mut depth = (0, 0);
            lower(&def.expr, &extents, cols, &slot_of, &mut ops, &mut depth)?;
            stack_depth = stack_depth.max(depth.1);
            let slot = if is_output { program.iterated_input() } else { slot_of(&def.target).expect("locals have slots") };
            stages.push(Stage { slot, ops, row_min, row_max, interior_rows, interior_cols, is_output });
        }
        let radius = stages.last().map(|s| s.row_min.unsigned_abs().max(s.row_max.unsigned_abs()) as usize).unwrap_or(0);
        Ok(CompiledKernel { rows, cols, iterated: program.iterated_input(), radius, n_slots: slot_names.len(), stages, stack_depth })
    }

    pub fn new_stack(&self) -> Vec<f32> {
        Vec::with_capacity(self.stack_depth)
    }
}

fn lower(
    e: &Expr,
    extents: &[usize],
    cols: usize,
    slot_of: &impl Fn(&str) -> Option<usize>,
    ops: &mut Vec<Op>,
    depth: &mut (usize, usize),
) -> Result<(), SimError> {
    let mut push = |ops: &mut Vec<Op>, op: Op, delta: isize| {
        ops.push(op);
        depth.0 = (depth.0 as isize + delta) as usize;
        depth.1 = depth.1.max(depth.0);
    };
    match e {
        Expr::Access { array, offset } => {
            let slot = slot_of(array).ok_or_else(|| SimError::Unsupported(format!("`{array}` is not readable")))?;
            let (r, c) = flatten_offset(offset, extents);
            push(ops, Op::Load { slot, off: r as isize * cols as isize + c as isize }, 1);
        }
        Expr::Const { value } => push(ops, Op::Const(*value as f32), 1),
        Expr::Neg { operand } => {
            lower(operand, extents, cols, slot_of, ops, depth)?;
            ops.push(Op::Neg);
        }
        Expr::Binary { op, lhs, rhs } => {
            lower(lhs, extents, cols, slot_of, ops, depth)?;
            lower(rhs, extents, cols, slot_of, ops, depth)?;
            ops.push(Op::Bin(*op));
            depth.0 -= 1;
        }
    }
    Ok(())
}

/// Rows `[lo, hi)` of every array held by one PE. Cells outside every
/// footprint's interior never change, so once loaded they stay correct;
/// `valid` tracks the rows whose interior cells are current.
#[derive(Debug, Clone)]
pub(crate) struct Window {
    pub lo: usize,
    pub hi: usize,
    pub valid: (usize, usize),
    bufs: Vec<Vec<f32>>,
    scratch: Vec<f32>,
    stack: Vec<f32>,
}

impl Window {
    /// Loads rows `[lo, hi)`: the iterated array from `state`, the other
    /// inputs from `inputs`.
    pub fn load(k: &CompiledKernel, state: &[f32], inputs: &[Grid], lo: usize, hi: usize) -> Self {
        let c = k.cols;
        let bufs = (0..k.n_slots)
            .map(|slot| {
                if slot == k.iterated {
                    state[lo * c..hi * c].to_vec()
                } else if slot < inputs.len() {
                    inputs[slot].row_slice(lo, hi).to_vec()
                } else {
                    vec![0.0; (hi - lo) * c]
                }
            })
            .collect();
        Window { lo, hi, valid: (lo, hi), bufs, scratch: Vec::new(), stack: Vec::with_capacity(k.stack_depth) }
    }

    /// Iterated-array rows `[lo, hi)`, which must lie inside the window.
    pub fn rows(&self, k: &CompiledKernel, lo: usize, hi: usize) -> &[f32] {
        let c = k.cols;
        &self.bufs[k.iterated][(lo - self.lo) * c..(hi - self.lo) * c]
    }

    /// Overwrites iterated-array rows from `state` and marks the whole
    /// window valid again.
    pub fn refresh(&mut self, k: &CompiledKernel, state: &[f32], rows: std::ops::Range<usize>) {
        let c = k.cols;
        let dst = &mut self.bufs[k.iterated][(rows.start - self.lo) * c..(rows.end - self.lo) * c];
        dst.copy_from_slice(&state[rows.start * c..rows.end * c]);
        self.valid = (self.lo, self.hi);
    }

    /// Rows a stage can produce from the valid input rows.
    fn producible(&self, k: &CompiledKernel, st: &Stage) -> (usize, usize) {
        let (vl, vh) = self.valid;
        let a = if vl == 0 { 0 } else { (vl as i64 - st.row_min).clamp(self.lo as i64, self.hi as i64) as usize };
        let b = if vh == k.rows { k.rows } else { (vh as i64 - st.row_max).clamp(self.lo as i64, self.hi as i64) as usize };
        (a, b.max(a))
    }

    /// One iteration of every stage. Returns the rows streamed in.
    pub fn step(&mut self, k: &CompiledKernel) -> usize {
        let streamed = self.valid.1 - self.valid.0;
        let c = k.cols;
        for st in &k.stages {
            let (a, b) = self.producible(k, st);
            let mut out = std::mem::take(&mut self.scratch);
            out.clear();
            out.reserve((b - a) * c);
            for x in a..b {
                let row_interior = x >= st.interior_rows.0 && x < st.interior_rows.1;
                let base = (x - self.lo) * c;
                for j in 0..c {
                    let v = if row_interior && st.interior_cols[j] {
                        let bufs = &self.bufs;
                        let at = (base + j) as isize;
                        eval_with(&st.ops, &mut self.stack, |slot, off| bufs[slot][(at + off) as usize])
                    } else if st.is_output {
                        self.bufs[st.slot][base + j]
                    } else {
                        0.0
                    };
                    out.push(v);
                }
            }
            let start = (a - self.lo) * c;
            self.bufs[st.slot][start..start + out.len()].copy_from_slice(&out);
            self.scratch = out;
            if st.is_output {
                self.valid = (a, b);
            }
        }
        streamed
    }
}

/// Evaluates postfix code; `load(slot, off)` supplies array reads.
#[inline]
pub(crate) fn eval_with(ops: &[Op], stack: &mut Vec<f32>, load: impl Fn(usize, isize) -> f32) -> f32 {
    stack.clear();
    for op in ops {
        match *op {
            Op::Load { slot, off } => stack.push(load(slot, off)),
            Op::Const(v) => stack.push(v),
            Op::Neg => {
                let v = stack.last_mut().expect("operand");
                *v = -*v;
            }
            Op::Bin(op) => {
                let b = stack.pop().expect("rhs");
                let a = stack.last_mut().expect("lhs");
                *a = match op {
                    BinOp::Add => *a + b,
                    BinOp::Sub => *a - b,
                    BinOp::Mul => *a * b,
                    BinOp::Div => *a / b,
                };
            }
        }
    }
    stack[0]
}
